#pragma once

// Artifact bundle: CSV tables, the markdown report and SVG plots.
//
//   designs.json   design    full designs (matrices), consumed by later stages
//   designs.csv    design    per-agent summary
//   path_<a>.csv   design    path-following history of EBOSS agents
//   trace.csv      simulate  one row per time step
//   energy.csv     simulate  closed-form vs simulated stationary energies
//   sync.csv       simulate  synchronisation residuals
//   bounds.csv     verify    sampled error-bound suprema
//   verify.csv     verify    pass/fail table against the declared expectations
//   report.md      report    human-readable summary, numbers copied from the CSVs
//   plots/*.svg    report    outputs with tolerance tubes, cumulative energy

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ossync/scenario.hpp"

namespace ossync {

/// Plain CSV table: header plus string cells (no quoting; cells never hold commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  const std::string& cell(std::size_t row, const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
std::string format_number(double v);

CsvTable design_table(const NetworkDesign& nd);

/// Columns: t, ybar_j, then per agent i (1-based) y<i>_<j>, e<i>_<j>, u<i>_<k>,
/// J<i> (cumulative 1/2 int u^T R u), then disagreement.
void write_trace_csv(std::ostream& os, const SimulationRecord& rec);

struct EnergyRow {
  int agent = 0;
  std::string name;
  std::string strategy;
  double closed_form = 0.0;   // T x_bar0^T avg(1/2 Gamma^T R Gamma) x_bar0
  double simulated = 0.0;     // trapezoid along the simulated consensus trajectory
  double input_window = 0.0;  // trapezoid of the agent's own input over the same window
};

std::vector<EnergyRow> energy_rows(const Scenario& sc, const NetworkDesign& nd, const SimulationRecord& rec);
CsvTable energy_table(const std::vector<EnergyRow>& rows);

/// key,value rows: final exosystem disagreement, consensus prediction error,
/// per-agent transition residual.
CsvTable sync_table(const SimulationRecord& rec, const NetworkScenario& ns);

/// One row per (agent, output). EBOSS agents are checked against epsilon, EXS
/// agents against zero; OSS agents carry no bound.
CsvTable bounds_table(const Scenario& sc, const NetworkDesign& nd, double tol, int boundary_samples = 64,
                      int time_points = 2000);

/// check,agent,expected,measured,tolerance,pass
CsvTable verify_table(const Scenario& sc, const NetworkDesign& nd, const CsvTable& energy, const CsvTable& sync,
                      const CsvTable& bounds);
bool all_pass(const CsvTable& verify);

/// Writes report.md (and plots/ when requested) from the CSVs in `dir`.
void write_report(const std::filesystem::path& dir, const Scenario& sc, bool plots);

}  // namespace ossync
