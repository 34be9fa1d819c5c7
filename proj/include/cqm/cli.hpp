#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cqm {

/// "a:b:step" (inclusive of b within step/1e6) or "v1,v2,...".
/// Throws std::invalid_argument on malformed or non-finite input.
std::vector<double> parse_grid(const std::string& text);

/// Entry point of the `cqm` tool: run | sweep | calibrate-delta |
/// exact-reference | variance-report. Failures print a JSON error object to
/// `err` and return non-zero (2 for configuration errors).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cqm
