// Python bindings for the main operations: geometry helpers, the controller
// families' algebra, embeddings, descent checks, and the scenario runner.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "geosmc/scenario.hpp"

namespace py = pybind11;
using namespace geosmc;

namespace {

AffineGroupAction action_for(const std::string& manifold) {
  const ManifoldId id = manifold_from_string(manifold);
  if (id == ManifoldId::Cylinder) return cylinder_action();
  if (id == ManifoldId::Mobius) return mobius_action();
  throw Unsupported("group actions are defined for cylinder and mobius");
}

py::dict report_to_dict(const DescentReport& r) {
  py::dict out;
  out["passed"] = r.passed;
  out["max_violation"] = r.max_violation;
  out["witness_sample"] = r.witness.sample;
  out["witness_z"] = r.witness.z;
  return out;
}

}  // namespace

PYBIND11_MODULE(_geosmc, m) {
  m.doc() = "Sliding-mode control simulation on non-Euclidean state spaces";

  py::register_exception<Error>(m, "GeosmcError");

  // so(3) helpers
  m.def("hat", &hat, py::arg("w"), "Skew matrix of a 3-vector");
  m.def("vex", &vex, py::arg("W"), py::arg("tol") = 1e-9,
        "Inverse of hat; raises on non-skew input");

  // Controller algebra
  m.def(
      "so3_alpha",
      [](const Mat3& r, const Mat3& r_d) { return so3_alpha(r, r_d); },
      py::arg("R"), py::arg("R_d"));
  m.def("s2_alpha", &s2_alpha, py::arg("L"), py::arg("L_d"));
  m.def(
      "s2_terminal_alpha",
      [](const Vec3& l, const Vec3& l_d) { return s2_terminal_alpha(l, l_d); },
      py::arg("L"), py::arg("L_d"));
  m.def("terminal_theta_star", &terminal_theta_star);
  m.def(
      "terminal_gamma",
      [](double theta) { return terminal_gamma(theta); }, py::arg("theta"));
  m.def(
      "terminal_delta",
      [](double theta) { return terminal_delta(theta); }, py::arg("theta"));
  m.def("mobius_s", &mobius_s, py::arg("theta"), py::arg("omega"),
        py::arg("theta_star"));
  m.def("mobius_u", &mobius_u, py::arg("theta"), py::arg("omega"),
        py::arg("theta_star"));
  m.def("mobius_sliding_rhs", &mobius_sliding_rhs, py::arg("theta"),
        py::arg("theta_star"));
  m.def("twisting_u", &twisting_u, py::arg("theta"), py::arg("omega"),
        py::arg("k1"), py::arg("k2"));
  m.def("sliding_order", &sliding_order, py::arg("n"), py::arg("m"),
        py::arg("dim_s"));

  // Quotient geometry
  m.def(
      "act",
      [](const std::string& manifold, long z, const Vec& d) {
        return action_for(manifold).act(z, d);
      },
      py::arg("manifold"), py::arg("z"), py::arg("d"));
  m.def(
      "canonicalize",
      [](const std::string& manifold, const Vec& d) {
        return QuotientManifold(action_for(manifold)).canonicalize(d);
      },
      py::arg("manifold"), py::arg("d"));
  m.def(
      "orbit_distance",
      [](const std::string& manifold, const Vec& a, const Vec& b) {
        return QuotientManifold(action_for(manifold)).orbit_distance(a, b);
      },
      py::arg("manifold"), py::arg("a"), py::arg("b"));

  // Descent checks over a sampled box with the library generator.
  m.def(
      "check_function_descends",
      [](const std::string& manifold, const std::function<Vec(const Vec&)>& f,
         const Vec& box_lo, const Vec& box_hi, int count, int z_range,
         std::uint64_t seed) {
        const auto samples = sample_box(box_lo, box_hi, count, seed);
        return report_to_dict(
            check_function_descends(action_for(manifold), f, samples, z_range));
      },
      py::arg("manifold"), py::arg("f"), py::arg("box_lo"), py::arg("box_hi"),
      py::arg("count") = 1000, py::arg("z_range") = 3, py::arg("seed") = 42);
  m.def(
      "check_field_descends",
      [](const std::string& manifold, const std::function<Vec(const Vec&)>& f,
         const Vec& box_lo, const Vec& box_hi, int count, int z_range,
         std::uint64_t seed) {
        const auto samples = sample_box(box_lo, box_hi, count, seed);
        return report_to_dict(
            check_field_descends(action_for(manifold), f, samples, z_range));
      },
      py::arg("manifold"), py::arg("f"), py::arg("box_lo"), py::arg("box_hi"),
      py::arg("count") = 1000, py::arg("z_range") = 3, py::arg("seed") = 42);

  // Embeddings
  m.def("mobius_embed", &mobius_embed, py::arg("theta"), py::arg("omega"));
  m.def("cylinder_embed", &cylinder_embed, py::arg("theta"), py::arg("omega"));

  // Scenario runner
  m.def(
      "run_scenario",
      [](const std::string& config_path, const std::string& out_dir, bool quiet) {
        const Scenario sc = Scenario::load(config_path);
        const RunResult r = run_scenario(sc, out_dir, quiet);
        py::dict out;
        out["exit_code"] = r.exit_code;
        out["files"] = r.files;
        py::list summaries;
        for (const RunSummary& s : r.summaries) {
          py::dict d;
          d["run_index"] = s.run_index;
          d["reaching_time"] =
              s.reaching_time ? py::object(py::float_(*s.reaching_time))
                              : py::object(py::none());
          d["terminal_error"] = s.terminal_error;
          d["max_drift"] = s.max_drift;
          d["stop_reason"] = s.stop_reason;
          d["t_final"] = s.t_final;
          d["final_state"] = s.final_state;
          summaries.append(d);
        }
        out["summaries"] = summaries;
        return out;
      },
      py::arg("config_path"), py::arg("out_dir"), py::arg("quiet") = true);
}
