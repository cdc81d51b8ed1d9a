// Python bindings for the triplet screening library.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tripscreen/tripscreen.hpp"

namespace py = pybind11;
using namespace tripscreen;

namespace {

Dataset make_dataset(const MatrixXd& x, const std::vector<int>& y) {
  Dataset d{x, y};
  d.validate();
  return d;
}

py::tuple dataset_tuple(const Dataset& d) { return py::make_tuple(d.features, d.labels); }

SolveConfig solve_config(const std::string& bound, const std::string& rule, bool active_set, double gap_tol,
                         int max_iter, int screen_every) {
  SolveConfig cfg;
  cfg.bound = parse_bound(bound);
  cfg.rule = parse_rule(rule);
  cfg.active_set = active_set;
  cfg.gap_tol = gap_tol;
  cfg.max_iter = max_iter;
  cfg.screen_every = screen_every;
  return cfg;
}

py::dict counts(const Partition& part) {
  py::dict d;
  d["L"] = part.n_l;
  d["C"] = part.n_c;
  d["R"] = part.n_r;
  return d;
}

py::dict solve_dict(const SolveResult& r) {
  py::dict d;
  d["metric"] = r.metric.matrix();
  d["alpha"] = r.alpha;
  d["gap"] = r.gap;
  d["primal"] = r.primal;
  d["dual"] = r.dual;
  d["loss"] = r.loss;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["n_screened_l"] = r.n_screened_l;
  d["n_screened_r"] = r.n_screened_r;
  d["n_unknown"] = r.n_unknown;
  d["wall_time"] = r.wall_time;
  return d;
}

py::dict step_dict(const PathStep& s) {
  py::dict d;
  d["lambda"] = s.lambda;
  d["iterations"] = s.iterations;
  d["gap"] = s.gap;
  d["converged"] = s.converged;
  d["loss"] = s.loss;
  d["n_screened_l"] = s.n_screened_l;
  d["n_screened_r"] = s.n_screened_r;
  d["n_unknown"] = s.n_unknown;
  d["range_hits"] = s.range_hits;
  d["path_rate_total"] = s.path_rate_total;
  d["rate_total"] = s.rate_total;
  d["rate_screenable"] = s.rate_screenable;
  d["wall_time_total"] = s.wall_time_total;
  if (s.metric) d["metric"] = s.metric->matrix();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Safe triplet screening for regularized metric learning";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def(
      "synthetic_gaussian",
      [](Index n, Index d, int classes, std::uint64_t seed, double separation) {
        return dataset_tuple(synthetic_gaussian(n, d, classes, seed, separation));
      },
      py::arg("n"), py::arg("d"), py::arg("classes") = 2, py::arg("seed") = 1, py::arg("separation") = 2.0,
      "Gaussian classes as a (features, labels) tuple.");
  m.def(
      "load_dataset",
      [](const std::string& path, const std::string& format, int label_column) {
        return dataset_tuple(load_dataset(path, parse_format(format), label_column));
      },
      py::arg("path"), py::arg("format") = "auto", py::arg("label_column") = 0);

  py::class_<Problem>(m, "Problem")
      .def(py::init([](const MatrixXd& x, const std::vector<int>& y, int k, double gamma, bool diagonal) {
             const LossSpec spec{gamma};
             spec.validate();
             return Problem(build_triplets(make_dataset(x, y), k), spec, diagonal);
           }),
           py::arg("features"), py::arg("labels"), py::arg("k") = 10, py::arg("gamma") = 0.05,
           py::arg("diagonal") = false)
      .def_property_readonly("n_triplets", &Problem::size)
      .def_property_readonly("dim", &Problem::dim)
      .def_property_readonly("gamma", [](const Problem& p) { return p.loss.gamma; })
      .def("lambda_max", [](const Problem& p) { return lambda_max(p); })
      .def("primal", [](const Problem& p, const MatrixXd& mm, double lam) { return primal_value(p, SymMat(mm), lam); },
           py::arg("metric"), py::arg("lam"))
      .def("gap", [](const Problem& p, const MatrixXd& mm, double lam) {
             const SymMat ms(mm);
             return duality_gap(p, ms, dual_from_primal(p, ms).alpha, lam);
           },
           py::arg("metric"), py::arg("lam"))
      .def("categorize", [](const Problem& p, const MatrixXd& mm) { return counts(categorize(p, SymMat(mm))); },
           py::arg("metric"))
      .def(
          "solve",
          [](const Problem& p, double lam, const std::string& bound, const std::string& rule, bool active_set,
             double gap_tol, int max_iter, int screen_every, std::optional<MatrixXd> init) {
            const SolveConfig cfg = solve_config(bound, rule, active_set, gap_tol, max_iter, screen_every);
            const SymMat start = init ? p.project(SymMat(*init)) : SymMat::zero(p.dim());
            SolveResult r;
            {
              py::gil_scoped_release release;
              r = solve(p, lam, cfg, start);
            }
            return solve_dict(r);
          },
          py::arg("lam"), py::arg("bound") = "rrpb+pgb", py::arg("rule") = "sphere", py::arg("active_set") = false,
          py::arg("gap_tol") = 1e-6, py::arg("max_iter") = 100000, py::arg("screen_every") = 10,
          py::arg("init") = py::none())
      .def(
          "run_path",
          [](const Problem& p, double decay, double stop_threshold, const std::string& bound, const std::string& rule,
             bool active_set, bool range_screening, int max_steps, double gap_tol, bool keep_metrics) {
            PathConfig cfg;
            cfg.decay = decay;
            cfg.stop_threshold = stop_threshold;
            cfg.solve = solve_config(bound, rule, active_set, gap_tol, 100000, 10);
            cfg.use_range_screening = range_screening;
            cfg.max_steps = max_steps;
            cfg.keep_metrics = keep_metrics;
            PathResult r;
            {
              py::gil_scoped_release release;
              r = run_path(p, cfg);
            }
            py::dict out;
            out["lambda_max"] = r.lambda_max;
            out["stopped_by_criterion"] = r.stopped_by_criterion;
            out["failed"] = r.failed;
            out["wall_time"] = r.wall_time;
            py::list steps;
            for (const PathStep& s : r.steps) steps.append(step_dict(s));
            out["steps"] = steps;
            return out;
          },
          py::arg("decay") = 0.9, py::arg("stop_threshold") = 0.01, py::arg("bound") = "rrpb",
          py::arg("rule") = "sphere", py::arg("active_set") = true, py::arg("range_screening") = false,
          py::arg("max_steps") = 1000, py::arg("gap_tol") = 1e-6, py::arg("keep_metrics") = false);

  m.def(
      "rrpb",
      [](const MatrixXd& m0, double eps, double lambda0, double lambda1) {
        const Sphere s = rrpb(SymMat(m0), eps, lambda0, lambda1);
        return py::make_tuple(s.center.matrix(), s.radius);
      },
      py::arg("m0"), py::arg("eps"), py::arg("lambda0"), py::arg("lambda1"),
      "Center and radius of the relaxed regularization path bound.");
  m.def(
      "project_psd", [](const MatrixXd& a) { return project_psd(SymMat(a)).matrix(); }, py::arg("a"));
}
