#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rigidity/circle.hpp"
#include "rigidity/conjugacy.hpp"
#include "rigidity/dynamics.hpp"
#include "rigidity/experiment.hpp"
#include "rigidity/linear_models.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/regularity.hpp"
#include "rigidity/surd.hpp"

namespace py = pybind11;
using namespace rigidity;

namespace {

py::tuple vec(const Vec2& v) { return py::make_tuple(v.x, v.y); }

IMat2 to_imat(const std::vector<std::vector<std::int64_t>>& m) {
  if (m.size() != 2 || m[0].size() != 2 || m[1].size() != 2) {
    throw Error(ErrorCode::InvalidArgument, "expected a 2x2 integer matrix");
  }
  return IMat2{{{m[0][0], m[0][1]}, {m[1][0], m[1][1]}}};
}

py::dict linear_dict(const HyperbolicAutomorphism& a) {
  py::dict d;
  d["mu_unstable"] = a.mu_unstable;
  d["mu_stable"] = a.mu_stable;
  d["e_unstable"] = vec(a.e_unstable);
  d["e_stable"] = vec(a.e_stable);
  d["lambda_u"] = a.unstable_log_volume;
  d["determinant"] = a.determinant;
  return d;
}

py::object loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conjugacy, holonomy and circle-map computations for perturbed cat maps";

  py::register_exception<Error>(m, "RigidityError", PyExc_RuntimeError);

  m.def("set_thread_count", &set_thread_count, py::arg("threads"));
  m.def("thread_count", &thread_count);

  m.def(
      "analyze_linear",
      [](const std::vector<std::vector<std::int64_t>>& matrix) {
        const HyperbolicAutomorphism a = analyze_automorphism(to_imat(matrix));
        py::dict d = linear_dict(a);
        const QuadraticSurd alpha = linear_rotation_number(a);
        d["alpha"] = alpha.value();
        d["alpha_surd"] = alpha.to_string();
        const CFExpansion cf = surd_cf(alpha.fractional_part());
        d["cf_preperiod"] = cf.preperiod;
        d["cf_period"] = cf.period;
        std::vector<std::int64_t> counts;
        for (int n = 1; n <= 4; ++n) counts.push_back(lattice_fixed_count(a, n));
        d["fixed_counts"] = counts;
        return d;
      },
      py::arg("matrix") = std::vector<std::vector<std::int64_t>>{{2, 1}, {1, 1}});

  m.def(
      "continued_fraction",
      [](std::int64_t p, std::int64_t d, std::int64_t q) {
        const CFExpansion cf = surd_cf(QuadraticSurd::make(p, d, q));
        return py::make_tuple(cf.preperiod, cf.period);
      },
      py::arg("p"), py::arg("d"), py::arg("q"), "Expansion of (p + sqrt(d)) / q.");

  py::class_<PerturbedMap>(m, "PerturbedMap")
      .def_static("default_family", &PerturbedMap::default_family, py::arg("epsilon"))
      .def_property_readonly("epsilon", &PerturbedMap::amplitude)
      .def("__call__",
           [](const PerturbedMap& f, double x, double y) { return vec(f.evaluate({x, y})); })
      .def("jacobian", [](const PerturbedMap& f, double x, double y) {
        const Mat2 j = f.derivative({x, y});
        return py::make_tuple(py::make_tuple(j.a, j.b), py::make_tuple(j.c, j.d));
      });

  m.def(
      "verify_anosov",
      [](const PerturbedMap& f, int grid) {
        const ConeCertificate c = verify_anosov(f, grid);
        py::dict d;
        d["expansion_factor"] = c.expansion_factor;
        d["contraction_factor"] = c.contraction_factor;
        d["margin"] = c.margin;
        d["det_min"] = c.det_min;
        d["det_max"] = c.det_max;
        return d;
      },
      py::arg("map"), py::arg("grid") = 256);

  py::class_<ConjugacyMap>(m, "Conjugacy")
      .def("__call__", [](const ConjugacyMap& h, double x, double y) { return vec(h.apply({x, y})); })
      .def("inverse", [](const ConjugacyMap& h, double x, double y) { return vec(h.apply_inverse({x, y})); })
      .def("residual", [](const ConjugacyMap& h, int samples, std::uint64_t seed) {
        return conjugacy_residual(h, samples, seed);
      }, py::arg("samples") = 1000, py::arg("seed") = 1);

  m.def(
      "solve_conjugacy",
      [](const PerturbedMap& f, int grid, double tol, bool verify) {
        const auto fwd = solve_conjugacy(f, grid, tol, verify);
        const auto inv = solve_inverse_conjugacy(f, grid, tol, false);
        py::dict stats;
        stats["iterations"] = fwd.stats.iterations;
        stats["observed_ratio"] = fwd.stats.observed_ratio;
        stats["contraction_bound"] = fwd.stats.contraction_bound;
        stats["verification_residual"] = fwd.stats.verification_residual;
        stats["sup_norm"] = fwd.field.sup_norm();
        return py::make_tuple(ConjugacyMap(f, fwd.field, inv.field), stats);
      },
      py::arg("map"), py::arg("grid") = 128, py::arg("tol") = 1e-12, py::arg("verify") = false);

  m.def(
      "periodic_orbits",
      [](const PerturbedMap& f, int max_period) {
        const PeriodicDataReport r = periodic_data_report(f, max_period);
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict d;
          d["period"] = row.period;
          d["point"] = vec(row.point);
          d["prime_period"] = row.prime_period;
          d["exponent"] = row.exponent;
          d["deviation"] = row.deviation;
          rows.append(d);
        }
        return py::make_tuple(r.counts, rows);
      },
      py::arg("map"), py::arg("max_period") = 3);

  py::class_<RotationResult>(m, "RotationResult")
      .def_readonly("rho", &RotationResult::rho)
      .def_readonly("error_estimate", &RotationResult::error_estimate)
      .def_readonly("iterations", &RotationResult::iterations)
      .def_readonly("periodic", &RotationResult::periodic)
      .def_readonly("p", &RotationResult::p)
      .def_readonly("q", &RotationResult::q);

  m.def("rotation_number", &rotation_number, py::arg("lift"), py::arg("tol") = 1e-8,
        py::arg("max_iterations") = 1000000, py::arg("x0") = 0.0);

  m.def(
      "holder_exponent",
      [](const std::vector<double>& samples, double noise_floor) {
        const HolderEstimate h = holder_exponent(samples, noise_floor);
        return py::make_tuple(h.exponent, h.saturated);
      },
      py::arg("samples"), py::arg("noise_floor") = 0.0);
  m.def("ac_diagnostic", &ac_diagnostic, py::arg("samples"), py::arg("shift") = 1.0);

  m.def(
      "circle_map",
      [](const std::function<double(double)>& lift, int samples) {
        const CircleMapLift t = sample_circle_map(lift, samples);
        return py::make_tuple(t.values, t.d1, t.d2);
      },
      py::arg("lift"), py::arg("samples") = 1024,
      "Samples of T, T' and T'' on i / samples.");

  m.def(
      "ko_report",
      [](const std::function<double(double)>& lift, int samples, std::int64_t p, std::int64_t d,
         std::int64_t q, double exponent) {
        const CircleMapLift t = sample_circle_map(lift, samples);
        const RegularityReport r = ko_condition_report(t, QuadraticSurd::make(p, d, q), exponent);
        py::dict out;
        out["lp_norm"] = r.lp_norm;
        out["refinement_delta"] = r.refinement_delta;
        out["ac_score"] = r.ac_score;
        out["degree_two"] = r.degree_two;
        out["derivative_holder"] = r.derivative_holder.exponent;
        out["tags"] = r.tags;
        return out;
      },
      py::arg("lift"), py::arg("samples"), py::arg("p"), py::arg("d"), py::arg("q"),
      py::arg("exponent") = 2.0, "Rotation number given as the surd (p + sqrt(d)) / q.");

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("epsilon", &ExperimentConfig::epsilon)
      .def_readwrite("grid", &ExperimentConfig::grid)
      .def_readwrite("max_period", &ExperimentConfig::max_period)
      .def_readwrite("circle_samples", &ExperimentConfig::circle_samples)
      .def_readwrite("gluing_order", &ExperimentConfig::gluing_order)
      .def_readwrite("holonomy_points", &ExperimentConfig::holonomy_points)
      .def_readwrite("holonomy_triples", &ExperimentConfig::holonomy_triples)
      .def_readwrite("holonomy_tol", &ExperimentConfig::holonomy_tol)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_property(
          "output", [](const ExperimentConfig& c) { return c.output.string(); },
          [](ExperimentConfig& c, const std::string& p) { c.output = p; })
      .def("canonical", &canonical_config);

  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");
  m.def("load_config", [](const std::string& path) { return load_config(path); }, py::arg("path"));

  m.def(
      "run",
      [](const std::string& subcommand, const ExperimentConfig& config, bool write) {
        RunOutcome r;
        {
          py::gil_scoped_release release;
          r = run_experiment(parse_subcommand(subcommand), config, write);
        }
        py::dict out;
        out["report"] = loads(r.report_json);
        out["report_json"] = r.report_json;
        out["exit_code"] = r.exit_code;
        out["directory"] = r.directory.string();
        return out;
      },
      py::arg("subcommand"), py::arg("config"), py::arg("write") = false);

  m.def(
      "aggregate",
      [](const std::string& root) {
        const AggregateOutcome a = aggregate_reports(root);
        return loads(a.summary_json);
      },
      py::arg("root"));

  m.attr("SCHEMA") = kReportSchema;
}
