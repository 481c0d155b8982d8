#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace detsparse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 1;
inline constexpr int kExitIo = 2;

/// Parses `args` (without the program name) and runs one subcommand.
/// Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Help text for the program and every subcommand, as printed by --help-all.
std::string full_help();

/// Runs a validation suite ("moments", "tv", "conditional" or "all").
/// Tests are independent and may run on `threads` workers; the report does
/// not depend on the thread count.
nlohmann::json run_validation(const std::string& suite, std::uint64_t seed, unsigned threads);

}  // namespace detsparse::cli
