#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ossync/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ossync;

namespace {

enum Exit { kOk = 0, kInput = 1, kInfeasible = 2, kNumerical = 3 };

// OSSYNC_LOG: quiet | info (default) | debug
int log_level() {
  const char* v = std::getenv("OSSYNC_LOG");
  if (!v) return 1;
  const std::string s(v);
  if (s == "quiet" || s == "0") return 0;
  if (s == "debug" || s == "2") return 2;
  return 1;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[ossync] " << msg << '\n';
}

void debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[ossync:debug] " << msg << '\n';
}

struct Args {
  fs::path scenario;
  fs::path out;
  bool plots = false;
  double tol = 1e-6;
};

void emit(const StageResult& r) {
  for (const auto& l : r.debug) debug(l);
  for (const auto& l : r.info) info(l);
}

int cmd_verify(const Args& a) {
  const StageResult r = stage_verify(a.scenario, a.out, a.tol);
  for (const auto& l : r.checks) std::cout << l << '\n';
  std::cout << (r.pass ? "verify: PASS" : "verify: FAIL") << '\n';
  return r.pass ? kOk : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal stationary synchronisation of heterogeneous multi-agent networks"};
  app.require_subcommand(1);
  Args args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", args.scenario, "scenario JSON file")->required();
    sub->add_option("--out", args.out, "artifact directory")->required();
  };
  CLI::App* design = app.add_subcommand("design", "synthesise every agent; writes designs.json and path CSVs");
  CLI::App* simulate = app.add_subcommand("simulate", "simulate the network; writes trace/energy/sync CSVs");
  CLI::App* verify = app.add_subcommand("verify", "check bounds and energies against the expectations");
  CLI::App* report = app.add_subcommand("report", "write report.md from the CSV artifacts");
  for (CLI::App* s : {design, simulate, verify, report}) add_common(s);
  verify->add_option("--tol", args.tol, "allowed bound violation")->check(CLI::NonNegativeNumber);
  report->add_flag("--plots", args.plots, "also write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  }

  try {
    if (*verify) return cmd_verify(args);
    if (*design) {
      emit(stage_design(args.scenario, args.out));
    } else if (*simulate) {
      emit(stage_simulate(args.scenario, args.out));
    } else {
      emit(stage_report(args.scenario, args.out, args.plots));
    }
    return kOk;
  } catch (const OssError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
