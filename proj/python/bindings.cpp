#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ossync/eboss.hpp"
#include "ossync/massim.hpp"
#include "ossync/pipeline.hpp"
#include "ossync/scenario.hpp"

namespace py = pybind11;
using namespace ossync;

namespace {

void raise_oss_error(const OssError& e) {
  py::object cls = py::module_::import("ossync._ossync").attr("OssError");
  py::object exc = cls(e.what());
  exc.attr("kind") = std::string(to_string(e.kind()));
  exc.attr("exit_code") = exit_code(e.kind());
  if (const auto* ns = dynamic_cast<const NoSolutionError*>(&e)) exc.attr("residual") = ns->residual();
  PyErr_SetObject(cls.ptr(), exc.ptr());
}

py::dict stage_dict(const StageResult& r) {
  py::dict d;
  d["info"] = r.info;
  d["debug"] = r.debug;
  d["checks"] = r.checks;
  d["passed"] = r.pass;
  d["seconds"] = r.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ossync, m) {
  m.doc() = "Optimal stationary synchronisation of heterogeneous multi-agent networks";

  py::exception<OssError>(m, "OssError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const OssError& e) {
      raise_oss_error(e);
    }
  });

  // matkit
  m.def("solve_care", &solve_care, py::arg("a"), py::arg("b"), py::arg("q"), py::arg("r"));
  m.def("solve_sylvester", &solve_sylvester, py::arg("f"), py::arg("g"), py::arg("h"));
  m.def("solve_lyapunov", &solve_lyapunov, py::arg("a"), py::arg("q"));
  m.def("is_hurwitz", py::overload_cast<const Matrix&, double>(&is_hurwitz), py::arg("m"), py::arg("tol") = 1e-9);

  // netgraph
  m.def(
      "laplacian",
      [](int vertices, std::vector<std::pair<int, int>> edges) { return laplacian(DiGraph(vertices, std::move(edges))); },
      py::arg("vertices"), py::arg("edges"));
  m.def("ring_laplacian", [](int n) { return laplacian(DiGraph::ring(n)); }, py::arg("n"));
  m.def("sigma_bound", &sigma_bound, py::arg("l"));
  py::class_<SyncGain>(m, "SyncGain")
      .def_readonly("gain", &SyncGain::gain)
      .def_readonly("sigma", &SyncGain::sigma)
      .def_readonly("riccati", &SyncGain::riccati);
  m.def("sync_gain", &sync_gain, py::arg("a_bar"), py::arg("b_bar"), py::arg("sigma"), py::arg("l"));

  // exocore
  py::class_<Exosystem>(m, "Exosystem")
      .def_readonly("a", &Exosystem::a)
      .def_readonly("c", &Exosystem::c)
      .def_readonly("period", &Exosystem::period)
      .def_readonly("boundary", &Exosystem::boundary)
      .def_property_readonly("order", &Exosystem::order)
      .def_property_readonly("outputs", &Exosystem::outputs)
      .def("spectrum", &Exosystem::spectrum);
  m.def(
      "build_exosystem",
      [](const std::vector<std::pair<double, int>>& freqs, const Matrix& raw_output, const std::vector<double>& amplitudes) {
        std::vector<FrequencySpec> spec;
        for (const auto& [w, mult] : freqs) spec.push_back({w, mult});
        return build_exosystem(std::move(spec), raw_output, amplitudes);
      },
      py::arg("frequencies"), py::arg("raw_output"), py::arg("amplitudes"),
      "frequencies: list of (omega, multiplicity)");
  m.def("period", &period, py::arg("frequencies"));
  m.def("flow", &flow, py::arg("exo"), py::arg("x0"), py::arg("t"));

  // oss-synth
  py::class_<AgentModel>(m, "AgentModel")
      .def(py::init<Matrix, Matrix, Matrix>(), py::arg("a"), py::arg("b"), py::arg("c"))
      .def_readonly("a", &AgentModel::a)
      .def_readonly("b", &AgentModel::b)
      .def_readonly("c", &AgentModel::c);
  py::class_<StationaryPair>(m, "StationaryPair")
      .def_readonly("pi", &StationaryPair::pi)
      .def_readonly("gamma", &StationaryPair::gamma);
  py::class_<OssSolution>(m, "OssSolution")
      .def_readonly("pi", &OssSolution::pi)
      .def_readonly("gamma", &OssSolution::gamma)
      .def_readonly("pi_lambda", &OssSolution::pi_lambda);
  m.def("solve_exs", &solve_exs, py::arg("agent"), py::arg("exo"));
  m.def("solve_oss", &solve_oss, py::arg("agent"), py::arg("exo"), py::arg("q"), py::arg("r"));
  m.def("solve_op1", &solve_op1, py::arg("agent"), py::arg("exo"), py::arg("q"), py::arg("r"));
  m.def("stationary_input_energy", &stationary_input_energy, py::arg("gamma"), py::arg("r"), py::arg("exo"),
        py::arg("x0"));

  // eboss
  py::class_<EbossOptions>(m, "EbossOptions")
      .def(py::init<>())
      .def_readwrite("delta_rel_min", &EbossOptions::delta_rel_min)
      .def_readwrite("k_max", &EbossOptions::k_max)
      .def_readwrite("gamma", &EbossOptions::gamma)
      .def_readwrite("shrink", &EbossOptions::shrink)
      .def_readwrite("alpha0", &EbossOptions::alpha0)
      .def_readwrite("adaptive_backoff", &EbossOptions::adaptive_backoff);
  py::class_<EbossSpec>(m, "EbossSpec")
      .def(py::init<AgentModel, Exosystem, Matrix, Vector, EbossOptions>(), py::arg("agent"), py::arg("exo"),
           py::arg("r"), py::arg("epsilon"), py::arg("options") = EbossOptions{});
  py::class_<Op2Evaluation>(m, "Op2Evaluation")
      .def_readonly("feasible", &Op2Evaluation::feasible)
      .def_readonly("bound_ratio", &Op2Evaluation::bound_ratio)
      .def_readonly("objective", &Op2Evaluation::objective)
      .def_readonly("q", &Op2Evaluation::q)
      .def_readonly("pi", &Op2Evaluation::pi)
      .def_readonly("gamma", &Op2Evaluation::gamma)
      .def_readonly("x", &Op2Evaluation::x)
      .def_readonly("error", &Op2Evaluation::error);
  py::class_<EbossDesign>(m, "EbossDesign")
      .def_readonly("q", &EbossDesign::q)
      .def_readonly("pi", &EbossDesign::pi)
      .def_readonly("gamma", &EbossDesign::gamma)
      .def_readonly("objective", &EbossDesign::objective)
      .def_readonly("initial_objective", &EbossDesign::initial_objective)
      .def_readonly("evaluation", &EbossDesign::evaluation)
      .def_property_readonly("iterations", [](const EbossDesign& d) { return d.history.iterations; })
      .def_property_readonly("accepted", [](const EbossDesign& d) { return d.history.accepted; })
      .def_property_readonly("termination",
                             [](const EbossDesign& d) { return std::string(to_string(d.history.termination)); })
      .def_property_readonly("certified", [](const EbossDesign& d) { return d.certificate.holds; })
      .def_property_readonly("objectives",
                             [](const EbossDesign& d) {
                               std::vector<double> v;
                               for (const auto& p : d.history.points) v.push_back(p.objective);
                               return v;
                             })
      .def("history_csv", [](const EbossDesign& d) {
        std::ostringstream os;
        d.history.write_csv(os);
        return os.str();
      });
  m.def("evaluate_op2", &evaluate_op2_at_q, py::arg("spec"), py::arg("q"));
  m.def("find_initial_q", &find_initial_q, py::arg("spec"));
  m.def("path_following", &path_following, py::arg("spec"), py::arg("q0"));

  // massim
  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("sup", &BoundReport::sup)
      .def_readonly("epsilon", &BoundReport::epsilon)
      .def_readonly("violation", &BoundReport::violation)
      .def_readonly("passed", &BoundReport::pass);
  m.def("verify_error_bounds",
        py::overload_cast<const Matrix&, const Exosystem&, const Vector&, int, int>(&verify_error_bounds),
        py::arg("error"), py::arg("exo"), py::arg("epsilon"), py::arg("boundary_samples") = 64,
        py::arg("time_points") = 2000);

  // scenario and pipeline
  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readonly("vertices", &Scenario::vertices)
      .def_readonly("exo", &Scenario::exo)
      .def_property_readonly("agent_names", [](const Scenario& s) {
        std::vector<std::string> v;
        for (const auto& a : s.agents) v.push_back(a.name);
        return v;
      });
  py::class_<AgentDesign>(m, "AgentDesign")
      .def_readonly("name", &AgentDesign::name)
      .def_property_readonly("strategy", [](const AgentDesign& d) { return std::string(to_string(d.strategy)); })
      .def_readonly("pi", &AgentDesign::pi)
      .def_readonly("gamma", &AgentDesign::gamma)
      .def_readonly("k", &AgentDesign::k)
      .def_readonly("q", &AgentDesign::q)
      .def_readonly("r", &AgentDesign::r)
      .def_readonly("objective", &AgentDesign::objective)
      .def_readonly("energy", &AgentDesign::energy)
      .def_readonly("error", &AgentDesign::error)
      .def_readonly("eboss", &AgentDesign::eboss);
  py::class_<NetworkDesign>(m, "NetworkDesign")
      .def_readonly("laplacian", &NetworkDesign::laplacian)
      .def_readonly("sync", &NetworkDesign::sync)
      .def_property_readonly("consensus_weights", [](const NetworkDesign& d) { return d.consensus.weights; })
      .def_property_readonly("consensus_xbar0", [](const NetworkDesign& d) { return d.consensus.xbar0; })
      .def_readonly("agents", &NetworkDesign::agents);
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("design_network", &design_network, py::arg("scenario"), py::call_guard<py::gil_scoped_release>());

  m.def("design", [](const std::filesystem::path& s, const std::filesystem::path& o) { return stage_dict(stage_design(s, o)); },
        py::arg("scenario"), py::arg("out"));
  m.def("simulate",
        [](const std::filesystem::path& s, const std::filesystem::path& o) { return stage_dict(stage_simulate(s, o)); },
        py::arg("scenario"), py::arg("out"));
  m.def(
      "verify",
      [](const std::filesystem::path& s, const std::filesystem::path& o, double tol) {
        return stage_dict(stage_verify(s, o, tol));
      },
      py::arg("scenario"), py::arg("out"), py::arg("tol") = 1e-6);
  m.def(
      "report",
      [](const std::filesystem::path& s, const std::filesystem::path& o, bool plots) {
        return stage_dict(stage_report(s, o, plots));
      },
      py::arg("scenario"), py::arg("out"), py::arg("plots") = false);
}
