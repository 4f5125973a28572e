#include "ossync/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ossync {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

const std::string& CsvTable::cell(std::size_t row, const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw OssError(ErrorKind::kParseError, "csv: no column '" + name + "'");
  if (row >= rows.size() || static_cast<std::size_t>(c) >= rows[row].size()) {
    throw OssError(ErrorKind::kParseError, "csv: short row " + std::to_string(row));
  }
  return rows[row][static_cast<std::size_t>(c)];
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& s = cell(row, name);
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw OssError(ErrorKind::kParseError, "csv: '" + s + "' in column " + name + " is not a number");
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

std::string flatten(const Matrix& m) {
  std::vector<std::string> parts;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) parts.push_back(format_number(m(i, k)));
  }
  return join(parts, ";");
}

std::string pass_str(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw OssError(ErrorKind::kMissingArtifact, "cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw OssError(ErrorKind::kParseError, path.string() + ": empty file");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split(line));
  }
  return t;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ofstream os(path);
  if (!os) throw OssError(ErrorKind::kInvalidArgument, "cannot write " + path.string());
  os << join(table.header, ",") << '\n';
  for (const auto& r : table.rows) os << join(r, ",") << '\n';
}

CsvTable design_table(const NetworkDesign& nd) {
  CsvTable t;
  t.header = {"agent", "name", "strategy", "objective", "energy", "exs_residual", "q", "initial_objective",
              "improvement", "iterations", "accepted", "termination", "certificate"};
  for (std::size_t i = 0; i < nd.agents.size(); ++i) {
    const AgentDesign& d = nd.agents[i];
    std::vector<std::string> r = {std::to_string(i + 1), d.name, std::string(to_string(d.strategy)),
                                  format_number(d.objective), format_number(d.energy),
                                  format_number(d.exs_residual), d.q.size() ? flatten(d.q) : ""};
    if (d.eboss) {
      const EbossDesign& e = *d.eboss;
      r.push_back(format_number(e.initial_objective));
      r.push_back(format_number(1.0 - e.objective / e.initial_objective));
      r.push_back(std::to_string(e.history.iterations));
      r.push_back(std::to_string(e.history.accepted));
      r.push_back(std::string(to_string(e.history.termination)));
      r.push_back(e.certificate.holds ? "1" : "0");
    } else {
      r.insert(r.end(), 6, "");
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_trace_csv(std::ostream& os, const SimulationRecord& rec) {
  const std::size_t n = rec.y.size();
  const Eigen::Index p = n ? rec.y[0].rows() : 0;
  os << "t";
  for (Eigen::Index j = 0; j < p; ++j) os << ",ybar_" << j + 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < rec.y[i].rows(); ++j) os << ",y" << i + 1 << '_' << j + 1;
    for (Eigen::Index j = 0; j < rec.error[i].rows(); ++j) os << ",e" << i + 1 << '_' << j + 1;
    for (Eigen::Index k = 0; k < rec.u[i].rows(); ++k) os << ",u" << i + 1 << '_' << k + 1;
    os << ",J" << i + 1;
  }
  os << ",disagreement\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.10g", v);
    os << buf;
  };
  for (Eigen::Index k = 0; k < rec.steps(); ++k) {
    std::snprintf(buf, sizeof buf, "%.10g", rec.time(k));
    os << buf;
    // ybar = y_i - e_i for any agent.
    for (Eigen::Index j = 0; j < p; ++j) put(rec.y[0](j, k) - rec.error[0](j, k));
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < rec.y[i].rows(); ++j) put(rec.y[i](j, k));
      for (Eigen::Index j = 0; j < rec.error[i].rows(); ++j) put(rec.error[i](j, k));
      for (Eigen::Index m = 0; m < rec.u[i].rows(); ++m) put(rec.u[i](m, k));
      put(rec.cumulative_energy[i](k));
    }
    put(rec.exo_disagreement(k));
    os << '\n';
  }
}

std::vector<EnergyRow> energy_rows(const Scenario& sc, const NetworkDesign& nd, const SimulationRecord& rec) {
  std::vector<EnergyRow> rows;
  for (std::size_t i = 0; i < nd.agents.size(); ++i) {
    const AgentDesign& d = nd.agents[i];
    EnergyRow r;
    r.agent = static_cast<int>(i + 1);
    r.name = d.name;
    r.strategy = std::string(to_string(d.strategy));
    r.closed_form = stationary_input_energy(d.gamma, d.r, sc.exo, nd.consensus.xbar0);
    r.simulated = measure_energy(rec, sc.exo, d.gamma, d.r, sc.energy_window_start);
    r.input_window = measure_input_energy(rec, static_cast<int>(i), sc.exo, d.r, sc.energy_window_start);
    rows.push_back(std::move(r));
  }
  return rows;
}

CsvTable energy_table(const std::vector<EnergyRow>& rows) {
  CsvTable t;
  t.header = {"agent", "name", "strategy", "closed_form", "simulated", "input_window"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.agent), r.name, r.strategy, format_number(r.closed_form),
                      format_number(r.simulated), format_number(r.input_window)});
  }
  return t;
}

CsvTable sync_table(const SimulationRecord& rec, const NetworkScenario& ns) {
  CsvTable t;
  t.header = {"key", "value"};
  const Eigen::Index last = rec.steps() - 1;
  t.rows.push_back({"t_end", format_number(rec.time(last))});
  t.rows.push_back({"exo_disagreement", format_number(rec.exo_disagreement(last))});
  double cons = 0.0;
  for (const auto& xb : rec.xbar) cons = std::max(cons, (xb.col(last) - rec.consensus.col(last)).norm());
  t.rows.push_back({"consensus_error", format_number(cons)});
  const auto tr = transition_check(rec, ns);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    t.rows.push_back({"transition_" + std::to_string(i + 1), format_number(tr[i])});
  }
  return t;
}

CsvTable bounds_table(const Scenario& sc, const NetworkDesign& nd, double tol, int boundary_samples,
                      int time_points) {
  CsvTable t;
  t.header = {"agent", "name", "strategy", "output", "epsilon", "sup", "violation", "tol", "pass", "worst_t"};
  for (std::size_t i = 0; i < nd.agents.size(); ++i) {
    const AgentDesign& d = nd.agents[i];
    const Eigen::Index p = d.error.rows();
    Vector eps = Vector::Zero(p);
    if (d.strategy == Strategy::kEboss) eps = sc.agents[i].epsilon;
    const BoundReport b = verify_error_bounds(d.error, sc.exo, eps, boundary_samples, time_points);
    for (Eigen::Index j = 0; j < p; ++j) {
      const bool bounded = d.strategy != Strategy::kOss;
      const double viol = std::max(0.0, b.sup(j) - eps(j));
      t.rows.push_back({std::to_string(i + 1), d.name, std::string(to_string(d.strategy)), std::to_string(j + 1),
                        bounded ? format_number(eps(j)) : "", format_number(b.sup(j)),
                        bounded ? format_number(viol) : "", format_number(tol),
                        bounded ? pass_str(viol <= tol) : "n/a",
                        format_number(b.worst_t[static_cast<std::size_t>(j)])});
    }
  }
  return t;
}

CsvTable verify_table(const Scenario& sc, const NetworkDesign& nd, const CsvTable& energy, const CsvTable& sync,
                      const CsvTable& bounds) {
  CsvTable t;
  t.header = {"check", "agent", "expected", "measured", "tolerance", "pass"};
  auto add = [&](const std::string& check, const std::string& agent, const std::string& expected,
                 const std::string& measured, const std::string& tolerance, bool ok) {
    t.rows.push_back({check, agent, expected, measured, tolerance, pass_str(ok)});
  };
  auto energy_of = [&](int agent, const char* col) {
    for (std::size_t r = 0; r < energy.rows.size(); ++r) {
      if (energy.cell(r, "agent") == std::to_string(agent)) return energy.number(r, col);
    }
    throw OssError(ErrorKind::kMissingArtifact, "energy.csv has no row for agent " + std::to_string(agent));
  };

  for (const auto& e : sc.expectations.energies) {
    for (const char* col : {"closed_form", "simulated"}) {
      const double v = energy_of(e.agent, col);
      add(std::string("energy_") + col, std::to_string(e.agent), format_number(e.value), format_number(v),
          format_number(e.rel_tol), std::abs(v - e.value) <= e.rel_tol * std::abs(e.value));
    }
  }
  for (std::size_t r = 0; r < energy.rows.size(); ++r) {
    const double cf = energy.number(r, "closed_form");
    const double sim = energy.number(r, "simulated");
    const double rel = std::abs(sim - cf) / std::max(std::abs(cf), 1e-12);
    add("energy_consistency", energy.cell(r, "agent"), energy.cell(r, "closed_form"), energy.cell(r, "simulated"),
        "0.005", cf == sim || rel <= 0.005);
  }
  if (sc.expectations.energy_order.size() >= 2) {
    std::vector<std::string> agents, values;
    bool ok = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int a : sc.expectations.energy_order) {
      const double v = energy_of(a, "closed_form");
      ok = ok && v < prev;
      prev = v;
      agents.push_back(std::to_string(a));
      values.push_back(format_number(v));
    }
    add("energy_order", join(agents, ">"), "decreasing", join(values, ">"), "", ok);
  }
  for (std::size_t r = 0; r < bounds.rows.size(); ++r) {
    const std::string& p = bounds.cell(r, "pass");
    if (p == "n/a") continue;
    add("error_bound_y" + bounds.cell(r, "output"), bounds.cell(r, "agent"), bounds.cell(r, "epsilon"),
        bounds.cell(r, "sup"), bounds.cell(r, "tol"), p == "PASS");
  }
  for (std::size_t i = 0; i < nd.agents.size(); ++i) {
    if (nd.agents[i].eboss) {
      add("bound_certificate", std::to_string(i + 1), "1", nd.agents[i].eboss->certificate.holds ? "1" : "0", "",
          nd.agents[i].eboss->certificate.holds);
    }
  }
  for (std::size_t r = 0; r < sync.rows.size(); ++r) {
    const std::string& key = sync.cell(r, "key");
    const double v = sync.number(r, "value");
    if (key.rfind("transition_", 0) == 0) {
      add("transition", key.substr(11), "0", sync.cell(r, "value"), "1e-4", v <= 1e-4);
    } else if (key == "exo_disagreement" || key == "consensus_error") {
      add(key, "", "0", sync.cell(r, "value"), "1e-6", v <= 1e-6);
    }
  }
  return t;
}

bool all_pass(const CsvTable& verify) {
  for (std::size_t r = 0; r < verify.rows.size(); ++r) {
    if (verify.cell(r, "pass") != "PASS") return false;
  }
  return true;
}

namespace {

struct Series {
  std::string label;
  std::string color;
  bool dashed = false;
  std::vector<double> x;
  std::vector<double> y;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

double nice_step(double span) {
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= f * mag) return f * mag;
  }
  return 10.0 * mag;
}

void write_svg(const fs::path& path, const std::string& title, const std::string& ylabel,
               const std::vector<Series>& series) {
  const double w = 760, h = 380, ml = 70, mr = 150, mt = 34, mb = 46;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y0 -= 1, y1 += 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };

  std::ofstream os(path);
  if (!os) throw OssError(ErrorKind::kInvalidArgument, "cannot write " + path.string());
  char buf[64];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
  const double xs = nice_step(x1 - x0), ys = nice_step(y1 - y0);
  for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-12; t += xs) {
    std::snprintf(buf, sizeof buf, "%.1f", px(t));
    os << "<line x1=\"" << buf << "\" x2=\"" << buf << "\" y1=\"" << mt << "\" y2=\"" << h - mb
       << "\" stroke=\"#eee\"/>\n";
    os << "<text x=\"" << buf << "\" y=\"" << h - mb + 14 << "\" text-anchor=\"middle\">" << format_number(t)
       << "</text>\n";
  }
  for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-12; t += ys) {
    std::snprintf(buf, sizeof buf, "%.1f", py(t));
    os << "<line x1=\"" << ml << "\" x2=\"" << w - mr << "\" y1=\"" << buf << "\" y2=\"" << buf
       << "\" stroke=\"#eee\"/>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << buf << "\" text-anchor=\"end\" dy=\"4\">"
       << format_number(std::abs(t) < 1e-12 * ys ? 0.0 : t) << "</text>\n";
  }
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\"" << h - mt - mb
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">t [s]</text>\n";
  os << "<text transform=\"translate(16," << (mt + h - mb) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << ylabel << "</text>\n";
  int legend = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\"";
    if (s.dashed) os << " stroke-dasharray=\"5,3\"";
    os << " points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(s.x[k]), py(s.y[k]));
      os << buf;
    }
    os << "\"/>\n";
    if (s.label.empty()) continue;
    const double ly = mt + 10 + 16 * legend++;
    os << "<line x1=\"" << w - mr + 10 << "\" x2=\"" << w - mr + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
       << "\" stroke=\"" << s.color << "\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    os << "<text x=\"" << w - mr + 34 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

void write_plots(const fs::path& dir, const Scenario& sc, const CsvTable& trace) {
  fs::create_directories(dir / "plots");
  const std::size_t stride = std::max<std::size_t>(1, trace.rows.size() / 2000);
  auto column = [&](const std::string& name) {
    std::vector<double> v;
    const int c = trace.column(name);
    if (c < 0) throw OssError(ErrorKind::kParseError, "trace.csv: no column '" + name + "'");
    for (std::size_t r = 0; r < trace.rows.size(); r += stride) v.push_back(std::stod(trace.rows[r][c]));
    return v;
  };
  const std::vector<double> t = column("t");
  const Eigen::Index p = sc.exo.outputs();
  for (Eigen::Index j = 1; j <= p; ++j) {
    std::vector<Series> series;
    const std::vector<double> ybar = column("ybar_" + std::to_string(j));
    for (std::size_t i = 0; i < sc.agents.size(); ++i) {
      const std::string color = kPalette[i % 8];
      series.push_back({sc.agents[i].name, color, false, t,
                        column("y" + std::to_string(i + 1) + "_" + std::to_string(j))});
      if (sc.agents[i].strategy == Strategy::kEboss) {
        const double eps = sc.agents[i].epsilon(j - 1);
        Series lo{"", color, true, t, ybar}, hi{"", color, true, t, ybar};
        for (auto& v : lo.y) v -= eps;
        for (auto& v : hi.y) v += eps;
        hi.label = sc.agents[i].name + " tube";
        series.push_back(std::move(lo));
        series.push_back(std::move(hi));
      }
    }
    series.push_back({"reference", "#000", false, t, ybar});
    write_svg(dir / "plots" / ("output_" + std::to_string(j) + ".svg"), "Output " + std::to_string(j),
              "y_" + std::to_string(j), series);
  }
  std::vector<Series> energy;
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    energy.push_back({sc.agents[i].name, kPalette[i % 8], false, t, column("J" + std::to_string(i + 1))});
  }
  write_svg(dir / "plots" / "energy.svg", "Cumulative input energy", "1/2 int u^T R u dt", energy);
}

void markdown_table(std::ostream& os, const CsvTable& t, const std::vector<std::string>& cols) {
  os << "| " << join(cols, " | ") << " |\n|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "---|";
  os << '\n';
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    os << "|";
    for (const auto& c : cols) os << ' ' << t.cell(r, c) << " |";
    os << '\n';
  }
}

}  // namespace

void write_report(const fs::path& dir, const Scenario& sc, bool plots) {
  const CsvTable designs = read_csv(dir / "designs.csv");
  const CsvTable energy = read_csv(dir / "energy.csv");
  const CsvTable sync = read_csv(dir / "sync.csv");
  const CsvTable bounds = read_csv(dir / "bounds.csv");
  const CsvTable verify = read_csv(dir / "verify.csv");

  std::ofstream os(dir / "report.md");
  if (!os) throw OssError(ErrorKind::kInvalidArgument, "cannot write report.md");
  os << "# " << (sc.name.empty() ? "Scenario" : sc.name) << "\n\n";
  os << sc.agents.size() << " agents, " << sc.edges.size() << " edges, exosystem order " << sc.exo.order()
     << ", period " << format_number(sc.exo.period) << " s.\n\n";

  os << "## Designs\n\n";
  markdown_table(os, designs, {"agent", "name", "strategy", "objective", "q", "exs_residual"});
  os << "\n`q` lists the output weight row-major. `objective` is trace(Gamma^T R Gamma).\n\n";

  bool any_path = false;
  for (std::size_t r = 0; r < designs.rows.size(); ++r) any_path = any_path || !designs.cell(r, "iterations").empty();
  if (any_path) {
    os << "## Path following\n\n";
    os << "| agent | start objective | final objective | improvement | iterations | accepted | termination | "
          "certificate |\n|---|---|---|---|---|---|---|---|\n";
    for (std::size_t r = 0; r < designs.rows.size(); ++r) {
      if (designs.cell(r, "iterations").empty()) continue;
      os << "| " << designs.cell(r, "name") << " | " << designs.cell(r, "initial_objective") << " | "
         << designs.cell(r, "objective") << " | " << designs.cell(r, "improvement") << " | "
         << designs.cell(r, "iterations") << " | " << designs.cell(r, "accepted") << " | "
         << designs.cell(r, "termination") << " | " << designs.cell(r, "certificate") << " |\n";
    }
    os << "\nFull histories: ";
    std::vector<std::string> files;
    for (std::size_t r = 0; r < designs.rows.size(); ++r) {
      if (!designs.cell(r, "iterations").empty()) files.push_back("`path_" + designs.cell(r, "name") + ".csv`");
    }
    os << join(files, ", ") << ".\n\n";
  }

  os << "## Stationary input energy\n\n";
  markdown_table(os, energy, {"agent", "name", "strategy", "closed_form", "simulated", "input_window"});
  os << "\n`simulated` integrates along the simulated consensus trajectory over one period starting at t = "
     << format_number(sc.energy_window_start) << " s; `input_window` integrates the agent's own input over the "
     << "same window.\n\n";

  os << "## Error bounds\n\n";
  markdown_table(os, bounds, {"agent", "name", "strategy", "output", "epsilon", "sup", "violation", "pass"});
  os << "\nOSS agents carry no bound; EXS agents are checked against zero.\n\n";

  os << "## Synchronisation\n\n";
  markdown_table(os, sync, {"key", "value"});

  os << "\n## Checks\n\n";
  markdown_table(os, verify, {"check", "agent", "expected", "measured", "tolerance", "pass"});
  os << "\nOverall: " << (all_pass(verify) ? "PASS" : "FAIL") << "\n";

  if (plots) {
    write_plots(dir, sc, read_csv(dir / "trace.csv"));
    os << "\n## Plots\n\n";
    for (Eigen::Index j = 1; j <= sc.exo.outputs(); ++j) {
      os << "![output " << j << "](plots/output_" << j << ".svg)\n\n";
    }
    os << "![energy](plots/energy.svg)\n";
  }
}

}  // namespace ossync
