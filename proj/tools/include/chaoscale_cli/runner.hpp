#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "chaoscale_cli/config.hpp"

namespace chaoscale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitBlowup = 3;

struct RunOutput {
  std::vector<std::pair<std::string, std::string>> csv_files;  // (file name, content)
  std::string summary_json;
  std::string table;
  std::vector<std::string> warnings;
};

/// Executes the configured workflow in memory.
RunOutput run_experiment(const ExperimentConfig& config);

/// Runs, writes CSV and summary.json into config.output (if set), prints the
/// table to `out` and diagnostics to `err`. Returns the process exit code.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Re-parses a summary and checks its schema and invariants. Throws
/// InvalidArgument describing the first violation.
void validate_summary(const std::string& json_text);

/// Formats a double so that it re-parses to the same value.
std::string format_number(double x);

}  // namespace chaoscale::cli
