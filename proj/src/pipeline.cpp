#include "ossync/pipeline.hpp"

#include <chrono>
#include <fstream>

#include "ossync/report.hpp"

namespace ossync {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

NetworkDesign load_designs(const fs::path& out, const Scenario& sc) {
  std::ifstream in(out / "designs.json");
  if (!in) throw OssError(ErrorKind::kMissingArtifact, (out / "designs.json").string() + " (run design first)");
  return read_designs(in, sc);
}

void require(const fs::path& p, const char* stage) {
  if (!fs::exists(p)) throw OssError(ErrorKind::kMissingArtifact, p.string() + " (run " + stage + " first)");
}

}  // namespace

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kParseError:
    case ErrorKind::kMissingArtifact:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kDuplicateFrequency:
    case ErrorKind::kIrrationalRatio:
      return 1;
    case ErrorKind::kNoSolution:
    case ErrorKind::kNoFeasibleQ:
    case ErrorKind::kInfeasibleInitialPoint:
    case ErrorKind::kNotStabilizable:
    case ErrorKind::kNoStabilizingSolution:
    case ErrorKind::kNoSpanningTree:
    case ErrorKind::kSigmaTooLarge:
    case ErrorKind::kImaginaryAxisHamiltonian:
      return 2;
    default:
      return 3;
  }
}

StageResult stage_design(const fs::path& scenario, const fs::path& out) {
  const auto t0 = Clock::now();
  StageResult res;
  const Scenario sc = load_scenario(scenario);
  fs::create_directories(out);
  const NetworkDesign nd = design_network(sc);
  {
    std::ofstream os(out / "designs.json");
    write_designs(os, sc, nd);
  }
  write_csv(out / "designs.csv", design_table(nd));
  for (const auto& d : nd.agents) {
    std::string line = d.name + ": " + std::string(to_string(d.strategy)) + " objective " + format_number(d.objective);
    if (d.eboss) {
      std::ofstream os(out / ("path_" + d.name + ".csv"));
      d.eboss->history.write_csv(os);
      line += ", " + std::to_string(d.eboss->history.iterations) + " iterations (" +
              std::string(to_string(d.eboss->history.termination)) + ")";
    }
    res.info.push_back(line);
  }
  res.seconds = seconds_since(t0);
  res.info.push_back("design done in " + format_number(res.seconds) + " s");
  return res;
}

StageResult stage_simulate(const fs::path& scenario, const fs::path& out) {
  const auto t0 = Clock::now();
  StageResult res;
  const Scenario sc = load_scenario(scenario);
  const NetworkDesign nd = load_designs(out, sc);
  const NetworkScenario ns = assemble_network(sc, nd);
  std::vector<Matrix> weights;
  for (const auto& d : nd.agents) weights.push_back(d.r);
  const SimulationRecord rec = simulate(ns, weights);
  res.debug.push_back("simulated " + std::to_string(rec.steps()) + " steps in " + format_number(seconds_since(t0)) + " s");
  {
    std::ofstream os(out / "trace.csv");
    write_trace_csv(os, rec);
  }
  write_csv(out / "energy.csv", energy_table(energy_rows(sc, nd, rec)));
  write_csv(out / "sync.csv", sync_table(rec, ns));
  res.seconds = seconds_since(t0);
  res.info.push_back("simulate done in " + format_number(res.seconds) + " s");
  return res;
}

StageResult stage_verify(const fs::path& scenario, const fs::path& out, double tol) {
  const auto t0 = Clock::now();
  StageResult res;
  const Scenario sc = load_scenario(scenario);
  const NetworkDesign nd = load_designs(out, sc);
  require(out / "energy.csv", "simulate");
  require(out / "sync.csv", "simulate");
  const CsvTable bounds = bounds_table(sc, nd, tol);
  write_csv(out / "bounds.csv", bounds);
  const CsvTable v = verify_table(sc, nd, read_csv(out / "energy.csv"), read_csv(out / "sync.csv"), bounds);
  write_csv(out / "verify.csv", v);
  for (std::size_t r = 0; r < v.rows.size(); ++r) {
    std::string line = v.cell(r, "pass") + "  " + v.cell(r, "check");
    if (!v.cell(r, "agent").empty()) line += " [" + v.cell(r, "agent") + "]";
    line += "  measured " + v.cell(r, "measured") + "  expected " + v.cell(r, "expected");
    res.checks.push_back(line);
  }
  res.pass = all_pass(v);
  res.seconds = seconds_since(t0);
  return res;
}

StageResult stage_report(const fs::path& scenario, const fs::path& out, bool plots) {
  const auto t0 = Clock::now();
  StageResult res;
  const Scenario sc = load_scenario(scenario);
  write_report(out, sc, plots);
  res.seconds = seconds_since(t0);
  res.info.push_back("wrote " + (out / "report.md").string());
  return res;
}

}  // namespace ossync
