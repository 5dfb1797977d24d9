#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geosmc/integrator.hpp"
#include "geosmc/toml_lite.hpp"

namespace geosmc {

enum class ManifoldId { So3, S2, Cylinder, Mobius, Line };

ManifoldId manifold_from_string(const std::string& name);
const char* to_string(ManifoldId id);

/// Controller family selection plus every family parameter that can appear
/// in a scenario file.  Validation happens at load time so malformed
/// configs fail before any run starts.
struct ControllerConfig {
  std::string family;
  RigidBodyParams body;
  Mat3 r_desired = Mat3::Identity();
  Vec3 l_desired = Vec3(0, 0, 1);
  double theta_star = 1.0;
  double k1 = 5.0;
  double k2 = 2.0;
  double bias = 0.5;
  double k_max = 1e3;
  std::optional<double> boundary_layer;
};

struct GridSpec {
  double theta_min = 0.0, theta_max = 0.0;
  int theta_count = 0;
  double omega_min = 0.0, omega_max = 0.0;
  int omega_count = 0;
};

struct InitialSpec {
  std::vector<Vec> states;          // explicit states
  std::optional<GridSpec> grid;     // 2-D quotient manifolds only
  std::vector<Vec> extra;           // appended to the grid
  int random_count = 0;             // random(seed, count); 0 = none
  Vec random_lo, random_hi;         // sampling box
};

struct OutputSpec {
  bool trajectory_csv = true;
  bool embedding_csv = true;  // quotient manifolds only
  bool summary_json = true;
};

/// Descent-check request: which object to test and on what sample grid.
struct DescentSpec {
  std::string target;  // sliding-variable | closed-loop-field | embedding
  int z_range = 3;
  int samples = 1000;
  Vec box_lo, box_hi;
};

struct Scenario {
  std::string name;
  ManifoldId manifold = ManifoldId::Line;
  ControllerConfig controller;
  DisturbanceSpec disturbance;
  InitialSpec initial;
  double t_start = 0.0;
  double t_end = 1.0;
  IntegratorOptions integrator;
  OutputSpec outputs;
  std::uint64_t seed = 0;
  std::optional<DescentSpec> descent;

  static Scenario load(const std::string& path);
  static Scenario from_toml(const toml::Value& root);

  SystemModel build_system() const;
  /// Explicit states validated (retraction correction <= 1e-6), grid and
  /// random states generated on-manifold.
  std::vector<Vec> resolve_initial_states() const;
  /// Full resolved configuration, embedded in every summary.
  std::string echo_json() const;
};

struct RunSummary {
  int run_index = 0;
  std::optional<double> reaching_time;
  double terminal_error = 0.0;
  double max_drift = 0.0;
  std::optional<double> max_abs_s_after_reaching;
  std::vector<std::pair<std::string, int>> event_counts;
  std::string stop_reason;
  double t_final = 0.0;
  Vec final_state;
};

RunSummary summarize_run(const SystemModel& model, const Trajectory& traj,
                         int run_index);

struct RunResult {
  int exit_code = 0;  // 0 ok, 3 budget/degeneracy
  std::vector<std::string> files;
  std::vector<RunSummary> summaries;
};

/// Simulates every initial condition of the scenario, writing per-run
/// trajectory CSVs, embedding CSVs for quotient manifolds, and a summary
/// JSON with the full configuration echo.
RunResult run_scenario(const Scenario& sc, const std::string& out_dir,
                       bool quiet = false);

/// Multi-run phase portrait for 2-D quotient manifolds: one combined CSV
/// plus overlay metadata (switching-set polylines and probe-classified
/// equilibria).  Throws Unsupported for other manifolds.
RunResult run_portrait(const Scenario& sc, const std::string& out_dir,
                       bool quiet = false);

/// Runs the descent checkers named by the scenario's [descent] table and
/// writes a report JSON.  Exit code 0 also when the check fails; the
/// verdict lives in the report.
RunResult run_check_descent(const Scenario& sc, const std::string& out_dir,
                            bool quiet = false);

// ---------------------------------------------------------------------------
// Embeddings into R^3 for visualization

/// Half-twisted band surface: constant on the Z-orbits of the Moebius
/// action.
Vec3 mobius_embed(double theta, double omega);

/// Unit-radius tube (cos theta, sin theta, omega).
Vec3 cylinder_embed(double theta, double omega);

/// Maps the theta/omega columns of a CSV through the manifold embedding.
/// Columns are located by header name; a t column passes through.
void embed_csv(ManifoldId manifold, const std::string& csv_in,
               const std::string& csv_out);

/// Round-trip decimal formatting (17 significant digits) used for every
/// CSV and JSON number the tool emits.
std::string format_double(double v);

}  // namespace geosmc
