#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepiot {

/// Deterministic CSV emission: header row, fixed column order, floats at 9
/// significant digits. Identical (build, config, seed) runs produce
/// byte-identical files.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    }

    static std::string format(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return buf;
    }
    static std::string format(long v) { return std::to_string(v); }
    static std::string format(int v) { return std::to_string(v); }
    static std::string format(unsigned long long v) { return std::to_string(v); }
    static std::string format(const std::string& v) { return v; }
    static std::string format(const char* v) { return v; }

    template <class... Ts>
    void row(const Ts&... cells) {
        std::string line;
        bool first = true;
        ((line += (first ? "" : ","), line += format(cells), first = false), ...);
        out_ << line << '\n';
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

} // namespace deepiot
