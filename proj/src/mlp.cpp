#include "deepiot/mlp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace deepiot {

namespace {

size_t total_params(const std::vector<int>& widths) {
    size_t n = 0;
    for (size_t l = 0; l + 1 < widths.size(); ++l)
        n += static_cast<size_t>(widths[l + 1]) * widths[l] + widths[l + 1];
    return n;
}

} // namespace

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
    for (int w : widths_)
        if (w < 1) throw std::invalid_argument("Mlp: layer widths must be >= 1");
    params_.assign(total_params(widths_), 0.0);
    size_t off = 0;
    for (size_t l = 0; l + 1 < widths_.size(); ++l) {
        layer_offsets_.push_back(off);
        off += static_cast<size_t>(widths_[l + 1]) * widths_[l] + widths_[l + 1];
    }
}

Mlp Mlp::random_init(std::vector<int> widths, Rng& rng) {
    Mlp net(std::move(widths));
    size_t off = 0;
    for (size_t l = 0; l + 1 < net.widths_.size(); ++l) {
        const int fan_in = net.widths_[l];
        const int fan_out = net.widths_[l + 1];
        const double scale = std::sqrt(1.0 / fan_in);
        for (int i = 0; i < fan_out * fan_in; ++i) net.params_[off + i] = rng.uniform(-scale, scale);
        off += static_cast<size_t>(fan_out) * fan_in + fan_out; // biases stay zero
    }
    return net;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
    Workspace ws;
    return forward(x, ws);
}

std::vector<double> Mlp::forward(std::span<const double> x, Workspace& ws) const {
    if (static_cast<int>(x.size()) != input_width()) throw std::invalid_argument("Mlp::forward: input width mismatch");
    ws.layer_in.assign(widths_.size() - 1, {});
    std::vector<double> cur(x.begin(), x.end());
    for (size_t l = 0; l + 1 < widths_.size(); ++l) {
        ws.layer_in[l] = cur;
        const int in = widths_[l];
        const int out = widths_[l + 1];
        const double* W = params_.data() + layer_offsets_[l];
        const double* b = W + static_cast<size_t>(out) * in;
        std::vector<double> next(out);
        for (int i = 0; i < out; ++i) {
            double acc = b[i];
            const double* row = W + static_cast<size_t>(i) * in;
            for (int j = 0; j < in; ++j) acc += row[j] * cur[j];
            next[i] = acc;
        }
        const bool hidden = (l + 2 < widths_.size());
        if (hidden)
            for (double& v : next) v = std::max(0.0, v);
        cur = std::move(next);
    }
    return cur;
}

std::vector<double> Mlp::forward_batch(const std::vector<double>& X, int n) const {
    const int in0 = input_width();
    if (static_cast<size_t>(n) * in0 != X.size()) throw std::invalid_argument("Mlp::forward_batch: shape mismatch");
    std::vector<double> cur = X;
    int cur_w = in0;
    for (size_t l = 0; l + 1 < widths_.size(); ++l) {
        const int in = widths_[l];
        const int out = widths_[l + 1];
        const double* W = params_.data() + layer_offsets_[l];
        const double* b = W + static_cast<size_t>(out) * in;
        std::vector<double> next(static_cast<size_t>(n) * out);
        for (int s = 0; s < n; ++s) {
            const double* xr = cur.data() + static_cast<size_t>(s) * cur_w;
            double* yr = next.data() + static_cast<size_t>(s) * out;
            for (int i = 0; i < out; ++i) {
                double acc = b[i];
                const double* row = W + static_cast<size_t>(i) * in;
                for (int j = 0; j < in; ++j) acc += row[j] * xr[j];
                yr[i] = acc;
            }
        }
        if (l + 2 < widths_.size())
            for (double& v : next) v = std::max(0.0, v);
        cur = std::move(next);
        cur_w = out;
    }
    return cur;
}

void Mlp::backward(const Workspace& ws, std::span<const double> upstream, std::vector<double>& grad,
                   std::vector<double>* dx) const {
    if (static_cast<int>(upstream.size()) != output_width())
        throw std::invalid_argument("Mlp::backward: upstream width mismatch");
    if (grad.size() != params_.size()) throw std::invalid_argument("Mlp::backward: gradient buffer size mismatch");
    if (ws.layer_in.size() != widths_.size() - 1) throw std::invalid_argument("Mlp::backward: stale workspace");

    std::vector<double> delta(upstream.begin(), upstream.end());
    for (size_t l = widths_.size() - 1; l-- > 0;) {
        const int in = widths_[l];
        const int out = widths_[l + 1];
        const double* W = params_.data() + layer_offsets_[l];
        const std::vector<double>& x = ws.layer_in[l];
        double* gW = grad.data() + layer_offsets_[l];
        double* gb = gW + static_cast<size_t>(out) * in;
        // dL/dW = delta x^T, dL/db = delta
        for (int i = 0; i < out; ++i) {
            const double d = delta[i];
            double* grow = gW + static_cast<size_t>(i) * in;
            for (int j = 0; j < in; ++j) grow[j] += d * x[j];
            gb[i] += d;
        }
        if (l == 0 && dx == nullptr) break;
        // propagate to the layer input, through the rectifier of the layer below
        std::vector<double> prev(in, 0.0);
        for (int i = 0; i < out; ++i) {
            const double d = delta[i];
            const double* row = W + static_cast<size_t>(i) * in;
            for (int j = 0; j < in; ++j) prev[j] += d * row[j];
        }
        if (l > 0) {
            for (int j = 0; j < in; ++j)
                if (x[j] <= 0.0) prev[j] = 0.0; // rectifier gate (x is the post-activation)
        }
        delta = std::move(prev);
        if (l == 0 && dx != nullptr) *dx = delta;
    }
}

bool Mlp::finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

void Mlp::save(const std::string& path) const {
    nlohmann::json header;
    header["widths"] = widths_;
    header["count"] = params_.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("Mlp::save: cannot open " + path);
    const std::string h = header.dump();
    out << h << '\n';
    out.write(reinterpret_cast<const char*>(params_.data()),
              static_cast<std::streamsize>(params_.size() * sizeof(double)));
    if (!out) throw std::runtime_error("Mlp::save: write failed for " + path);
}

Mlp Mlp::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("Mlp::load: cannot open " + path);
    std::string header_line;
    std::getline(in, header_line);
    const nlohmann::json header = nlohmann::json::parse(header_line);
    Mlp net(header.at("widths").get<std::vector<int>>());
    const size_t count = header.at("count").get<size_t>();
    if (count != net.params_.size()) throw std::runtime_error("Mlp::load: checkpoint size mismatch");
    in.read(reinterpret_cast<char*>(net.params_.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("Mlp::load: truncated checkpoint " + path);
    return net;
}

namespace {

void check_grad_finite(const std::vector<double>& grad) {
    for (double g : grad)
        if (!std::isfinite(g)) throw std::invalid_argument("optimizer: non-finite gradient rejected");
}

} // namespace

void sgd_step(Mlp& net, const std::vector<double>& grad, double step_size) {
    if (grad.size() != net.parameter_count()) throw std::invalid_argument("sgd_step: size mismatch");
    check_grad_finite(grad);
    auto& p = net.parameters();
    for (size_t i = 0; i < p.size(); ++i) p[i] -= step_size * grad[i];
}

void adam_step(Mlp& net, AdamState& st, const std::vector<double>& grad, double step_size) {
    if (grad.size() != net.parameter_count()) throw std::invalid_argument("adam_step: size mismatch");
    check_grad_finite(grad);
    if (st.m.empty()) {
        st.m.assign(grad.size(), 0.0);
        st.v.assign(grad.size(), 0.0);
    }
    if (st.m.size() != grad.size()) throw std::invalid_argument("adam_step: stale state");
    st.t += 1;
    const double b1t = 1.0 - std::pow(st.beta1, st.t);
    const double b2t = 1.0 - std::pow(st.beta2, st.t);
    auto& p = net.parameters();
    for (size_t i = 0; i < p.size(); ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / b1t;
        const double vhat = st.v[i] / b2t;
        p[i] -= step_size * mhat / (std::sqrt(vhat) + st.eps);
    }
}

std::vector<double> softmax(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("softmax: empty input");
    const double mx = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (double& o : out) o /= sum;
    return out;
}

std::vector<double> masked_softmax(std::span<const double> v, std::span<const char> masked) {
    if (v.size() != masked.size()) throw std::invalid_argument("masked_softmax: size mismatch");
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < v.size(); ++i)
        if (!masked[i]) mx = std::max(mx, v[i]);
    if (!std::isfinite(mx)) throw std::invalid_argument("masked_softmax: every entry is masked");
    std::vector<double> out(v.size(), 0.0);
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        if (masked[i]) continue;
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (double& o : out) o /= sum;
    return out;
}

} // namespace deepiot
