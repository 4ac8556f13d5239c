#include "deepiot/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return deepiot::run_cli(args);
}
