#pragma once

#include <ostream>

#include <nlohmann/json.hpp>

namespace jsqd::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,           // unknown subcommand or malformed flags
  kInvalidConfig = 3,   // unreadable or invalid configuration / parameters
  kUnwritableOutput = 4,
  kComputation = 5,     // numerical failure, non-convergence, degenerate run
};

/// Built-in configuration; every key a config file may set.
nlohmann::ordered_json default_config();

/// Runs one subcommand. On failure writes {"error": {...}} to `err`.
///
/// Precedence, lowest to highest: defaults, --config file, environment
/// (JSQD_OUTPUT_DIR, JSQD_THREADS), command-line flags.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jsqd::cli
