#pragma once

// The four artifact stages shared by the CLI and the Python module.

#include <filesystem>
#include <string>
#include <vector>

#include "ossync/errors.hpp"

namespace ossync {

struct StageResult {
  std::vector<std::string> info;   // progress lines
  std::vector<std::string> debug;
  std::vector<std::string> checks; // verify only: one line per check
  bool pass = true;                // verify only
  double seconds = 0.0;
};

/// designs.json, designs.csv and path_<agent>.csv for every EBOSS agent.
StageResult stage_design(const std::filesystem::path& scenario, const std::filesystem::path& out);
/// trace.csv, energy.csv, sync.csv; needs designs.json.
StageResult stage_simulate(const std::filesystem::path& scenario, const std::filesystem::path& out);
/// bounds.csv, verify.csv; needs designs.json, energy.csv and sync.csv.
StageResult stage_verify(const std::filesystem::path& scenario, const std::filesystem::path& out,
                         double tol = 1e-6);
/// report.md (and plots/*.svg).
StageResult stage_report(const std::filesystem::path& scenario, const std::filesystem::path& out,
                         bool plots = false);

/// 0 ok, 1 bad input or missing artifact, 2 infeasible, 3 numerical/other.
int exit_code(ErrorKind kind);

}  // namespace ossync
