#pragma once

#include <string>
#include <vector>

namespace deepiot {

/// Full CLI entry point (subcommand dispatch, flag parsing, file output).
/// Factored out of main so tests can drive the commands in-process.
int run_cli(const std::vector<std::string>& args);

} // namespace deepiot
