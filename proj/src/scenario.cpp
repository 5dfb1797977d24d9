#include "geosmc/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "geosmc/rng.hpp"

namespace geosmc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ManifoldId manifold_from_string(const std::string& name) {
  if (name == "so3") return ManifoldId::So3;
  if (name == "s2") return ManifoldId::S2;
  if (name == "cylinder") return ManifoldId::Cylinder;
  if (name == "mobius") return ManifoldId::Mobius;
  if (name == "line") return ManifoldId::Line;
  throw ConfigError("unknown manifold '" + name +
                    "' (expected so3|s2|cylinder|mobius|line)");
}

const char* to_string(ManifoldId id) {
  switch (id) {
    case ManifoldId::So3: return "so3";
    case ManifoldId::S2: return "s2";
    case ManifoldId::Cylinder: return "cylinder";
    case ManifoldId::Mobius: return "mobius";
    case ManifoldId::Line: return "line";
  }
  return "unknown";
}

namespace {

int state_dim(ManifoldId id) {
  switch (id) {
    case ManifoldId::So3: return 12;
    case ManifoldId::S2: return 6;
    case ManifoldId::Cylinder:
    case ManifoldId::Mobius: return 2;
    case ManifoldId::Line: return 1;
  }
  return 0;
}

std::vector<std::string> state_column_names(ManifoldId id) {
  switch (id) {
    case ManifoldId::So3:
      return {"r11", "r12", "r13", "r21", "r22", "r23",
              "r31", "r32", "r33", "w1",  "w2",  "w3"};
    case ManifoldId::S2:
      return {"l1", "l2", "l3", "w1", "w2", "w3"};
    case ManifoldId::Cylinder:
    case ManifoldId::Mobius:
      return {"theta", "omega"};
    case ManifoldId::Line:
      return {"x"};
  }
  return {};
}

Vec vec_from_numbers(const std::vector<double>& nums) {
  Vec v(static_cast<int>(nums.size()));
  for (std::size_t i = 0; i < nums.size(); ++i) v[static_cast<int>(i)] = nums[i];
  return v;
}

Mat3 mat3_from_toml(const toml::Value& v) {
  const auto& rows = v.as_array();
  if (rows.size() != 3) throw ConfigError("expected a 3x3 matrix", v.line);
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const auto cols = rows[r].as_number_array();
    if (cols.size() != 3) throw ConfigError("expected a 3x3 matrix", v.line);
    for (int c = 0; c < 3; ++c) m(r, c) = cols[c];
  }
  return m;
}

DisturbanceTerm term_from_toml(const toml::Value& v) {
  DisturbanceTerm term;
  term.channel = static_cast<int>(v.int_or("channel", 0));
  const std::string kind = v.at("kind").as_string();
  if (kind == "constant") {
    term.kind = DisturbanceTerm::Kind::Constant;
    term.amplitude = v.find("offset") ? v.at("offset").as_double()
                                      : v.at("amplitude").as_double();
  } else if (kind == "sine") {
    term.kind = DisturbanceTerm::Kind::Sine;
    term.amplitude = v.at("amplitude").as_double();
    term.frequency = v.at("frequency").as_double();
    term.phase = v.number_or("phase", 0.0);
  } else if (kind == "sin_of_cos") {
    term.kind = DisturbanceTerm::Kind::SineOfCosine;
    term.amplitude = v.at("amplitude").as_double();
    term.inner_frequency = v.at("inner_frequency").as_double();
  } else {
    throw ConfigError("unknown disturbance term kind '" + kind +
                          "' (expected constant|sine|sin_of_cos)",
                      v.line);
  }
  return term;
}

const char* disturbance_kind_name(DisturbanceTerm::Kind kind) {
  switch (kind) {
    case DisturbanceTerm::Kind::Constant: return "constant";
    case DisturbanceTerm::Kind::Sine: return "sine";
    case DisturbanceTerm::Kind::SineOfCosine: return "sin_of_cos";
  }
  return "unknown";
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loading and validation

Scenario Scenario::load(const std::string& path) {
  return from_toml(toml::parse_file(path));
}

Scenario Scenario::from_toml(const toml::Value& root) {
  Scenario sc;
  sc.name = root.at("name").as_string();
  sc.manifold = manifold_from_string(root.at("manifold").as_string());
  sc.seed = static_cast<std::uint64_t>(root.int_or("seed", 0));

  if (const toml::Value* span = root.find("t_span")) {
    const auto nums = span->as_number_array();
    if (nums.size() != 2 || !(nums[1] > nums[0]) || !std::isfinite(nums[0]) ||
        !std::isfinite(nums[1]))
      throw ConfigError("t_span must be [t0, t1] with t1 > t0", span->line);
    sc.t_start = nums[0];
    sc.t_end = nums[1];
  } else if (!root.find("descent")) {
    throw ConfigError("missing required key 't_span'", root.line);
  }

  const toml::Value& ctrl = root.at("controller");
  ControllerConfig& cc = sc.controller;
  cc.family = ctrl.at("family").as_string();

  const auto expect_family = [&](std::initializer_list<const char*> allowed) {
    for (const char* f : allowed)
      if (cc.family == f) return;
    std::string msg = "controller family '" + cc.family +
                      "' does not match manifold '" + to_string(sc.manifold) + "'";
    throw ConfigError(msg, ctrl.line);
  };

  switch (sc.manifold) {
    case ManifoldId::So3: expect_family({"so3_first_order"}); break;
    case ManifoldId::S2: expect_family({"s2_first_order", "s2_terminal"}); break;
    case ManifoldId::Mobius: expect_family({"mobius_smc"}); break;
    case ManifoldId::Cylinder: expect_family({"cylinder_twisting"}); break;
    case ManifoldId::Line: expect_family({"line"}); break;
  }

  if (const toml::Value* j = ctrl.find("inertia")) cc.body.inertia = mat3_from_toml(*j);
  cc.body.d_bar = ctrl.number_or("d_bar", 0.0);
  cc.body.eta = ctrl.number_or("eta", 0.1);
  cc.theta_star = ctrl.number_or("theta_star", 1.0);
  cc.k1 = ctrl.number_or("k1", 5.0);
  cc.k2 = ctrl.number_or("k2", 2.0);
  cc.bias = ctrl.number_or("bias", 0.5);
  cc.k_max = ctrl.number_or("k_max", 1e3);
  if (const toml::Value* bl = ctrl.find("boundary_layer")) {
    if (bl->as_double() <= 0.0)
      throw ConfigError("boundary_layer must be positive", bl->line);
    cc.boundary_layer = bl->as_double();
  }
  if (const toml::Value* des = ctrl.find("desired")) {
    if (sc.manifold == ManifoldId::So3) {
      cc.r_desired = mat3_from_toml(*des);
    } else if (sc.manifold == ManifoldId::S2) {
      const auto nums = des->as_number_array();
      if (nums.size() != 3) throw ConfigError("desired must be a 3-vector", des->line);
      cc.l_desired = Vec3(nums[0], nums[1], nums[2]);
    } else {
      throw ConfigError("'desired' applies to the so3/s2 families", des->line);
    }
  }

  if (sc.manifold == ManifoldId::Cylinder && !(cc.k1 > cc.k2 && cc.k2 > 0.0))
    throw ConfigError("twisting gains must satisfy K1 > K2 > 0 (got K1 = " +
                          format_double(cc.k1) + ", K2 = " + format_double(cc.k2) + ")",
                      ctrl.line);

  if (const toml::Value* dist = root.find("disturbance")) {
    sc.disturbance.dim = sc.manifold == ManifoldId::So3 || sc.manifold == ManifoldId::S2
                             ? 3
                             : 1;
    if (const toml::Value* terms = dist->find("terms")) {
      for (const toml::Value& tv : terms->as_array()) {
        DisturbanceTerm term = term_from_toml(tv);
        if (term.channel < 0 || term.channel >= sc.disturbance.dim)
          throw ConfigError("disturbance channel out of range", tv.line);
        sc.disturbance.terms.push_back(term);
      }
    }
  }

  if (const toml::Value* init = root.find("initial")) {
    if (const toml::Value* states = init->find("states")) {
      for (const toml::Value& sv : states->as_array()) {
        const auto nums = sv.as_number_array();
        if (static_cast<int>(nums.size()) != state_dim(sc.manifold))
          throw ConfigError("initial state has wrong dimension (expected " +
                                std::to_string(state_dim(sc.manifold)) + ")",
                            sv.line);
        sc.initial.states.push_back(vec_from_numbers(nums));
      }
    }
    if (const toml::Value* grid = init->find("grid")) {
      if (sc.manifold != ManifoldId::Cylinder && sc.manifold != ManifoldId::Mobius)
        throw ConfigError("grids of initial conditions apply to the 2-D quotient manifolds",
                          grid->line);
      GridSpec g;
      const auto th = grid->at("theta").as_number_array();
      const auto om = grid->at("omega").as_number_array();
      if (th.size() != 3 || om.size() != 3)
        throw ConfigError("grid axis must be [min, max, count]", grid->line);
      g.theta_min = th[0]; g.theta_max = th[1]; g.theta_count = static_cast<int>(th[2]);
      g.omega_min = om[0]; g.omega_max = om[1]; g.omega_count = static_cast<int>(om[2]);
      if (g.theta_count < 1 || g.omega_count < 1)
        throw ConfigError("grid counts must be at least 1", grid->line);
      sc.initial.grid = g;
    }
    if (const toml::Value* extra = init->find("extra")) {
      for (const toml::Value& sv : extra->as_array())
        sc.initial.extra.push_back(vec_from_numbers(sv.as_number_array()));
    }
    if (const toml::Value* rnd = init->find("random")) {
      sc.initial.random_count = static_cast<int>(rnd->at("count").as_int());
      const auto& box = rnd->at("box").as_array();
      if (box.size() != 2) throw ConfigError("random box must be [lo, hi]", rnd->line);
      sc.initial.random_lo = vec_from_numbers(box[0].as_number_array());
      sc.initial.random_hi = vec_from_numbers(box[1].as_number_array());
      if (sc.initial.random_lo.size() != state_dim(sc.manifold) ||
          sc.initial.random_hi.size() != state_dim(sc.manifold))
        throw ConfigError("random box has wrong dimension", rnd->line);
    }
  }

  if (const toml::Value* integ = root.find("integrator")) {
    IntegratorOptions& io = sc.integrator;
    io.step = integ->number_or("step", io.step);
    io.tol_event = integ->number_or("tol_event", io.tol_event);
    io.tol_surface = integ->number_or("tol_surface", io.tol_surface);
    io.lambda_margin = integ->number_or("lambda_margin", io.lambda_margin);
    io.max_steps = integ->int_or("max_steps", io.max_steps);
    io.equilibrium_threshold =
        integ->number_or("equilibrium_threshold", io.equilibrium_threshold);
    io.equilibrium_steps =
        static_cast<int>(integ->int_or("equilibrium_steps", io.equilibrium_steps));
    try {
      io.validate();
    } catch (const Error& err) {
      throw ConfigError(err.what(), integ->line);
    }
  }

  if (const toml::Value* out = root.find("output")) {
    sc.outputs.trajectory_csv = out->bool_or("trajectory_csv", true);
    sc.outputs.embedding_csv = out->bool_or("embedding_csv", true);
    sc.outputs.summary_json = out->bool_or("summary_json", true);
  }

  if (const toml::Value* des = root.find("descent")) {
    DescentSpec d;
    d.target = des->at("target").as_string();
    if (d.target != "sliding-variable" && d.target != "closed-loop-field" &&
        d.target != "embedding")
      throw ConfigError(
          "descent target must be sliding-variable|closed-loop-field|embedding",
          des->line);
    d.z_range = static_cast<int>(des->int_or("z_range", 3));
    d.samples = static_cast<int>(des->int_or("samples", 1000));
    if (d.z_range < 1 || d.z_range > kZMaxDefault)
      throw ConfigError("z_range must be in [1, 8]", des->line);
    if (d.samples < 1) throw ConfigError("samples must be positive", des->line);
    const auto& box = des->at("box").as_array();
    if (box.size() != 2) throw ConfigError("descent box must be [lo, hi]", des->line);
    d.box_lo = vec_from_numbers(box[0].as_number_array());
    d.box_hi = vec_from_numbers(box[1].as_number_array());
    if (d.box_lo.size() != 2 || d.box_hi.size() != 2)
      throw ConfigError("descent box must be 2-dimensional", des->line);
    sc.descent = d;
    if (sc.manifold != ManifoldId::Cylinder && sc.manifold != ManifoldId::Mobius)
      throw ConfigError("descent checks apply to the quotient manifolds", des->line);
    if (sc.manifold == ManifoldId::Cylinder && d.target == "sliding-variable")
      throw ConfigError("the twisting family defines no sliding variable to check",
                        des->line);
  }

  // Build the closed loop once so constructor-time gain checks run at load.
  try {
    sc.build_system();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& err) {
    throw ConfigError(err.what());
  }
  return sc;
}

SystemModel Scenario::build_system() const {
  const ControllerConfig& cc = controller;
  switch (manifold) {
    case ManifoldId::Line:
      return make_line_system(cc.bias);
    case ManifoldId::So3:
      return make_so3_system(cc.body, cc.r_desired, disturbance, cc.boundary_layer);
    case ManifoldId::S2:
      return make_s2_system(cc.body, cc.l_desired,
                            cc.family == "s2_terminal" ? S2AlphaKind::Terminal
                                                       : S2AlphaKind::FirstOrder,
                            disturbance, cc.boundary_layer, cc.k_max);
    case ManifoldId::Mobius:
      return make_mobius_system(cc.theta_star, cc.boundary_layer, disturbance);
    case ManifoldId::Cylinder:
      return make_twisting_system(cc.k1, cc.k2, disturbance);
  }
  throw Error("unreachable");
}

std::vector<Vec> Scenario::resolve_initial_states() const {
  const SystemModel model = build_system();
  const StateSpace& space = *model.space;
  std::vector<Vec> out;

  for (const Vec& x : initial.states) {
    const Vec r = space.retract(x);
    if ((r - x).norm() > 1e-6)
      throw ConfigError("initial state is off the manifold by " +
                        format_double((r - x).norm()) +
                        " (correction must be <= 1e-6)");
    out.push_back(r);
  }
  if (initial.grid) {
    const GridSpec& g = *initial.grid;
    for (int i = 0; i < g.theta_count; ++i) {
      const double th =
          g.theta_count == 1
              ? g.theta_min
              : g.theta_min + (g.theta_max - g.theta_min) * i / (g.theta_count - 1);
      for (int j = 0; j < g.omega_count; ++j) {
        const double om =
            g.omega_count == 1
                ? g.omega_min
                : g.omega_min + (g.omega_max - g.omega_min) * j / (g.omega_count - 1);
        Vec x(2);
        x << th, om;
        out.push_back(x);
      }
    }
  }
  for (const Vec& x : initial.extra) {
    if (x.size() != state_dim(manifold))
      throw ConfigError("extra initial state has wrong dimension");
    out.push_back(space.retract(x));
  }
  if (initial.random_count > 0) {
    const auto cloud = sample_box(initial.random_lo, initial.random_hi,
                                  initial.random_count, seed);
    for (const Vec& x : cloud) out.push_back(space.retract(x));
  }
  return out;
}

std::string Scenario::echo_json() const {
  json j;
  j["name"] = name;
  j["manifold"] = to_string(manifold);
  j["seed"] = seed;
  j["t_span"] = {t_start, t_end};

  json ctrl;
  ctrl["family"] = controller.family;
  if (manifold == ManifoldId::So3 || manifold == ManifoldId::S2) {
    json inertia = json::array();
    for (int r = 0; r < 3; ++r)
      inertia.push_back({controller.body.inertia(r, 0), controller.body.inertia(r, 1),
                         controller.body.inertia(r, 2)});
    ctrl["inertia"] = inertia;
    ctrl["d_bar"] = controller.body.d_bar;
    ctrl["eta"] = controller.body.eta;
    if (manifold == ManifoldId::So3) {
      json rd = json::array();
      for (int r = 0; r < 3; ++r)
        rd.push_back({controller.r_desired(r, 0), controller.r_desired(r, 1),
                      controller.r_desired(r, 2)});
      ctrl["desired"] = rd;
    } else {
      ctrl["desired"] = {controller.l_desired[0], controller.l_desired[1],
                         controller.l_desired[2]};
      ctrl["k_max"] = controller.k_max;
    }
  }
  if (manifold == ManifoldId::Mobius) ctrl["theta_star"] = controller.theta_star;
  if (manifold == ManifoldId::Cylinder) {
    ctrl["k1"] = controller.k1;
    ctrl["k2"] = controller.k2;
  }
  if (manifold == ManifoldId::Line) ctrl["bias"] = controller.bias;
  if (controller.boundary_layer) ctrl["boundary_layer"] = *controller.boundary_layer;
  j["controller"] = ctrl;

  json terms = json::array();
  for (const DisturbanceTerm& t : disturbance.terms) {
    json tj;
    tj["channel"] = t.channel;
    tj["kind"] = disturbance_kind_name(t.kind);
    tj["amplitude"] = t.amplitude;
    if (t.kind == DisturbanceTerm::Kind::Sine) {
      tj["frequency"] = t.frequency;
      tj["phase"] = t.phase;
    }
    if (t.kind == DisturbanceTerm::Kind::SineOfCosine)
      tj["inner_frequency"] = t.inner_frequency;
    terms.push_back(tj);
  }
  j["disturbance"] = {{"terms", terms}, {"sup_bound", disturbance.sup_bound()}};

  json init;
  json states = json::array();
  for (const Vec& x : resolve_initial_states()) states.push_back(vec_to_json(x));
  init["resolved_states"] = states;
  j["initial"] = init;

  j["integrator"] = {{"step", integrator.step},
                     {"tol_event", integrator.tol_event},
                     {"tol_surface", integrator.tol_surface},
                     {"lambda_margin", integrator.lambda_margin},
                     {"max_steps", integrator.max_steps},
                     {"equilibrium_threshold", integrator.equilibrium_threshold},
                     {"equilibrium_steps", integrator.equilibrium_steps}};
  j["output"] = {{"trajectory_csv", outputs.trajectory_csv},
                 {"embedding_csv", outputs.embedding_csv},
                 {"summary_json", outputs.summary_json}};
  if (descent) {
    j["descent"] = {{"target", descent->target},
                    {"z_range", descent->z_range},
                    {"samples", descent->samples},
                    {"box", {vec_to_json(descent->box_lo), vec_to_json(descent->box_hi)}}};
  }
  j["tolerances"] = {{"tol_mfd", kTolMfd},
                     {"tol_descent", kTolDescent},
                     {"tol_lie", kTolLie},
                     {"tol_tan", kTolTan},
                     {"z_max", kZMaxDefault}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Summaries and trajectory output

RunSummary summarize_run(const SystemModel& model, const Trajectory& traj,
                         int run_index) {
  RunSummary s;
  s.run_index = run_index;
  s.reaching_time = traj.first_event_time(EventKind::SlidingEntry);
  s.stop_reason = to_string(traj.stop);
  const TrajectorySample& last = traj.samples.back();
  s.t_final = last.t;
  s.final_state = last.x;
  s.terminal_error = model.target_error ? model.target_error(last.x) : 0.0;
  for (const TrajectorySample& sample : traj.samples) {
    s.max_drift = std::max(s.max_drift, sample.drift);
    if (s.reaching_time && sample.t >= *s.reaching_time) {
      const double sn = sample.s.size() ? sample.s.norm() : 0.0;
      s.max_abs_s_after_reaching =
          std::max(s.max_abs_s_after_reaching.value_or(0.0), sn);
    }
  }
  std::map<std::string, int> counts;
  for (const TrajectoryEvent& e : traj.events) ++counts[to_string(e.kind)];
  s.event_counts.assign(counts.begin(), counts.end());
  return s;
}

namespace {

json summary_to_json(const RunSummary& s) {
  json j;
  j["run_index"] = s.run_index;
  if (s.reaching_time)
    j["reaching_time"] = *s.reaching_time;
  else
    j["reaching_time"] = nullptr;
  j["terminal_error"] = s.terminal_error;
  j["max_drift"] = s.max_drift;
  if (s.max_abs_s_after_reaching)
    j["max_abs_s_after_reaching"] = *s.max_abs_s_after_reaching;
  else
    j["max_abs_s_after_reaching"] = nullptr;
  json counts;
  for (const auto& [kind, n] : s.event_counts) counts[kind] = n;
  j["event_counts"] = counts;
  j["stop_reason"] = s.stop_reason;
  j["t_final"] = s.t_final;
  j["final_state"] = vec_to_json(s.final_state);
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << text;
}

std::string trajectory_csv(const Scenario& sc, const Trajectory& traj) {
  std::ostringstream out;
  out << "t";
  for (const std::string& c : state_column_names(sc.manifold)) out << "," << c;
  out << ",mode";
  const int s_dim = traj.samples.front().s.size();
  const int u_dim = traj.samples.front().u.size();
  for (int i = 0; i < s_dim; ++i) out << ",s" << i;
  for (int i = 0; i < u_dim; ++i) out << ",u" << i;
  out << ",drift\n";
  for (const TrajectorySample& s : traj.samples) {
    out << format_double(s.t);
    for (int i = 0; i < s.x.size(); ++i) out << "," << format_double(s.x[i]);
    out << "," << to_string(s.mode);
    for (int i = 0; i < s_dim; ++i) out << "," << format_double(s.s[i]);
    for (int i = 0; i < u_dim; ++i)
      out << "," << format_double(i < s.u.size() ? s.u[i] : 0.0);
    out << "," << format_double(s.drift) << "\n";
  }
  return out.str();
}

std::string embedding_csv_text(const Scenario& sc, const Trajectory& traj) {
  std::ostringstream out;
  out << "t,k1,k2,k3\n";
  for (const TrajectorySample& s : traj.samples) {
    const Vec3 k = sc.manifold == ManifoldId::Mobius
                       ? mobius_embed(s.x[0], s.x[1])
                       : cylinder_embed(s.x[0], s.x[1]);
    out << format_double(s.t) << "," << format_double(k[0]) << ","
        << format_double(k[1]) << "," << format_double(k[2]) << "\n";
  }
  return out.str();
}

bool is_quotient(ManifoldId id) {
  return id == ManifoldId::Cylinder || id == ManifoldId::Mobius;
}

}  // namespace

RunResult run_scenario(const Scenario& sc, const std::string& out_dir, bool quiet) {
  const SystemModel model = sc.build_system();
  const std::vector<Vec> states = sc.resolve_initial_states();
  if (states.empty()) throw ConfigError("scenario has no initial conditions");
  fs::create_directories(out_dir);

  RunResult result;
  json summaries = json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Trajectory traj = model.regularized
                                ? integrate_regularized(model, states[i], sc.t_start,
                                                        sc.t_end, sc.integrator)
                                : integrate(model, states[i], sc.t_start, sc.t_end,
                                            sc.integrator);
    if (traj.stop != StopReason::Completed) result.exit_code = 3;
    const RunSummary summary = summarize_run(model, traj, static_cast<int>(i));
    result.summaries.push_back(summary);
    summaries.push_back(summary_to_json(summary));

    if (sc.outputs.trajectory_csv) {
      const std::string path =
          (fs::path(out_dir) / (sc.name + "_run" + std::to_string(i) + ".csv")).string();
      write_text_file(path, trajectory_csv(sc, traj));
      result.files.push_back(path);
    }
    if (sc.outputs.embedding_csv && is_quotient(sc.manifold)) {
      const std::string path =
          (fs::path(out_dir) / (sc.name + "_run" + std::to_string(i) + "_embedding.csv"))
              .string();
      write_text_file(path, embedding_csv_text(sc, traj));
      result.files.push_back(path);
    }
    if (!quiet)
      std::cout << sc.name << " run " << i << ": stop=" << summary.stop_reason
                << " terminal_error=" << format_double(summary.terminal_error)
                << "\n";
  }

  if (sc.outputs.summary_json) {
    json doc;
    doc["scenario"] = sc.name;
    doc["runs"] = summaries;
    doc["config"] = json::parse(sc.echo_json());
    const std::string path =
        (fs::path(out_dir) / (sc.name + "_summary.json")).string();
    write_text_file(path, doc.dump(2) + "\n");
    result.files.push_back(path);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Phase portraits

namespace {

/// Probe-based classification: simulate short runs from a ring of
/// perturbed starts.  Attraction in every direction is stable and a mix of
/// attraction and repulsion is a saddle.  When every probe escapes, the
/// finite-difference linearization of the locally active smooth field
/// separates a saddle (eigenvalues of both signs) from a plain repeller.
std::string classify_equilibrium(const SystemModel& model, const Vec& point,
                                 const IntegratorOptions& base_opts) {
  const QuotientManifold& q = *model.quotient;
  IntegratorOptions opts = base_opts;
  opts.max_steps = std::min<long>(base_opts.max_steps, 200000);
  const double radius = 1e-2;
  const double horizon = 2.0;

  int grown = 0, shrunk = 0;
  for (int d = 0; d < 8; ++d) {
    const double angle = d * M_PI / 4.0;
    Vec x0 = point;
    x0[0] += radius * std::cos(angle);
    x0[1] += radius * std::sin(angle);
    const Trajectory traj = integrate(model, x0, 0.0, horizon, opts);
    const double dist = q.orbit_distance(traj.back().x, point);
    if (dist > 2.0 * radius) ++grown;
    if (dist < 0.5 * radius) ++shrunk;
  }
  if (grown == 0 && shrunk == 8) return "stable";
  if (grown > 0 && shrunk > 0) return "saddle";
  if (grown == 8) {
    const auto signs = model.field.signs_at(point, 0.0);
    const FieldFn& f = model.field.region(model.field.region_index(signs)).f;
    const double h = 1e-6 * (1.0 + point.norm());
    Mat jac(2, 2);
    for (int c = 0; c < 2; ++c) {
      Vec hi = point, lo = point;
      hi[c] += h;
      lo[c] -= h;
      jac.col(c) = (f(hi, 0.0) - f(lo, 0.0)) / (2.0 * h);
    }
    const Eigen::EigenSolver<Mat> eig(jac);
    const auto re = eig.eigenvalues().real();
    const bool mixed = re.maxCoeff() > 1e-6 && re.minCoeff() < -1e-6;
    return mixed ? "saddle" : "unstable";
  }
  return "unclassified";
}

json polyline_json(const std::string& name, const std::vector<Vec3>& points) {
  json pts = json::array();
  for (const Vec3& p : points) pts.push_back({p[0], p[1], p[2]});
  return json{{"name", name}, {"points", pts}};
}

}  // namespace

RunResult run_portrait(const Scenario& sc, const std::string& out_dir, bool quiet) {
  if (!is_quotient(sc.manifold))
    throw Unsupported("phase portraits are available for the 2-D quotient manifolds");
  const SystemModel model = sc.build_system();
  const std::vector<Vec> states = sc.resolve_initial_states();
  if (states.empty())
    throw ConfigError("portrait scenario has an empty initial-condition grid");
  fs::create_directories(out_dir);

  auto embed = [&](double th, double om) {
    return sc.manifold == ManifoldId::Mobius ? mobius_embed(th, om)
                                             : cylinder_embed(th, om);
  };

  RunResult result;
  std::ostringstream csv;
  csv << "run,t,theta,omega,mode,drift,e1,e2,e3\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Trajectory traj =
        integrate(model, states[i], sc.t_start, sc.t_end, sc.integrator);
    if (traj.stop != StopReason::Completed) result.exit_code = 3;
    result.summaries.push_back(summarize_run(model, traj, static_cast<int>(i)));
    for (const TrajectorySample& s : traj.samples) {
      const Vec3 k = embed(s.x[0], s.x[1]);
      csv << i << "," << format_double(s.t) << "," << format_double(s.x[0]) << ","
          << format_double(s.x[1]) << "," << to_string(s.mode) << ","
          << format_double(s.drift) << "," << format_double(k[0]) << ","
          << format_double(k[1]) << "," << format_double(k[2]) << "\n";
    }
    if (!quiet)
      std::cout << sc.name << " portrait run " << i
                << ": stop=" << result.summaries.back().stop_reason << "\n";
  }

  // Overlay metadata: switching sets as embedded polylines plus equilibria.
  const double omega_span =
      sc.initial.grid ? std::max(std::abs(sc.initial.grid->omega_min),
                                 std::abs(sc.initial.grid->omega_max)) + 0.5
                      : 2.0;
  constexpr int kLineSamples = 201;
  json polylines = json::array();
  auto sample_line = [&](const std::string& name, auto point_at) {
    std::vector<Vec3> pts;
    for (int i = 0; i < kLineSamples; ++i) {
      const auto [th, om] = point_at(static_cast<double>(i) / (kLineSamples - 1));
      pts.push_back(embed(th, om));
    }
    polylines.push_back(polyline_json(name, pts));
  };

  std::vector<std::pair<Vec, std::string>> equilibria;
  const QuotientManifold& q = *model.quotient;
  if (sc.manifold == ManifoldId::Mobius) {
    const double ts = sc.controller.theta_star;
    sample_line("S1", [&](double u) {
      return std::pair(M_PI, -omega_span + 2.0 * omega_span * u);
    });
    sample_line("S2", [&](double u) {
      const double th = -M_PI + 2.0 * M_PI * u;
      return std::pair(th, -std::sin((th - ts) / 2.0));
    });
    Vec stable(2);
    stable << ts, 0.0;
    equilibria.emplace_back(q.canonicalize(stable), "");
    Vec saddle_a(2);
    saddle_a << M_PI, -std::sin((M_PI - ts) / 2.0);
    equilibria.emplace_back(q.canonicalize(saddle_a), "");
    // Equilibria of u on the invariant vertical line: h(pi, w) = sign(g).
    const double c1 = std::cos(M_PI - ts / 2.0);
    for (double side : {1.0, -1.0}) {
      const double disc = c1 * c1 + 8.0 * side;
      if (disc < 0.0) continue;
      for (double root_sign : {1.0, -1.0}) {
        const double w = (c1 + root_sign * std::sqrt(disc)) / 2.0;
        const double g = w + std::sin((M_PI - ts) / 2.0);
        if (g * side <= 0.0) continue;
        Vec p(2);
        p << M_PI, w;
        equilibria.emplace_back(q.canonicalize(p), "");
      }
    }
  } else {
    sample_line("sin_theta_zero_a", [&](double u) {
      return std::pair(0.0, -omega_span + 2.0 * omega_span * u);
    });
    sample_line("sin_theta_zero_b", [&](double u) {
      return std::pair(M_PI, -omega_span + 2.0 * omega_span * u);
    });
    sample_line("omega_zero", [&](double u) {
      return std::pair(-M_PI + 2.0 * M_PI * u, 0.0);
    });
    Vec origin = Vec::Zero(2);
    equilibria.emplace_back(origin, "");
    Vec antipode(2);
    antipode << M_PI, 0.0;
    equilibria.emplace_back(q.canonicalize(antipode), "");
  }

  json eq_json = json::array();
  for (auto& [point, kind] : equilibria) {
    kind = classify_equilibrium(model, point, sc.integrator);
    const Vec3 k = embed(point[0], point[1]);
    eq_json.push_back({{"chart", {point[0], point[1]}},
                       {"embedded", {k[0], k[1], k[2]}},
                       {"kind", kind}});
    if (!quiet)
      std::cout << "equilibrium (" << format_double(point[0]) << ", "
                << format_double(point[1]) << "): " << kind << "\n";
  }

  const std::string csv_path =
      (fs::path(out_dir) / (sc.name + "_portrait.csv")).string();
  write_text_file(csv_path, csv.str());
  result.files.push_back(csv_path);

  json meta;
  meta["scenario"] = sc.name;
  meta["switching_polylines"] = polylines;
  meta["equilibria"] = eq_json;
  meta["config"] = json::parse(sc.echo_json());
  const std::string meta_path =
      (fs::path(out_dir) / (sc.name + "_portrait.json")).string();
  write_text_file(meta_path, meta.dump(2) + "\n");
  result.files.push_back(meta_path);
  return result;
}

// ---------------------------------------------------------------------------
// Descent checks

RunResult run_check_descent(const Scenario& sc, const std::string& out_dir,
                            bool quiet) {
  if (!sc.descent) throw ConfigError("scenario has no [descent] table");
  const DescentSpec& d = *sc.descent;
  const AffineGroupAction action = sc.manifold == ManifoldId::Mobius
                                       ? mobius_action()
                                       : cylinder_action();
  const std::vector<Vec> samples =
      sample_box(d.box_lo, d.box_hi, d.samples, sc.seed);

  DescentReport report;
  const double ts = sc.controller.theta_star;
  if (d.target == "sliding-variable") {
    report = check_function_descends(
        action,
        [ts](const Vec& x) {
          Vec s(1);
          s << mobius_s(x[0], x[1], ts);
          return s;
        },
        samples, d.z_range);
  } else if (d.target == "closed-loop-field") {
    const SystemModel model = sc.build_system();
    report = check_field_descends(
        action,
        [&model](const Vec& x) {
          const auto signs = model.field.signs_at(x, 0.0);
          return model.field.region(model.field.region_index(signs)).f(x, 0.0);
        },
        samples, d.z_range);
  } else {  // embedding
    report = check_function_descends(
        action,
        [&sc](const Vec& x) {
          const Vec3 k = sc.manifold == ManifoldId::Mobius
                             ? mobius_embed(x[0], x[1])
                             : cylinder_embed(x[0], x[1]);
          return Vec(k);
        },
        samples, d.z_range);
  }

  fs::create_directories(out_dir);
  json doc;
  doc["scenario"] = sc.name;
  doc["manifold"] = to_string(sc.manifold);
  doc["target"] = d.target;
  doc["passed"] = report.passed;
  doc["max_violation"] = report.max_violation;
  doc["witness"] = {{"sample", vec_to_json(report.witness.sample)},
                    {"z", report.witness.z}};
  doc["z_range"] = d.z_range;
  doc["samples"] = d.samples;
  doc["seed"] = sc.seed;
  doc["tol_descent"] = kTolDescent;
  doc["config"] = json::parse(sc.echo_json());

  const std::string path =
      (fs::path(out_dir) / (sc.name + "_descent.json")).string();
  write_text_file(path, doc.dump(2) + "\n");
  if (!quiet)
    std::cout << sc.name << " descent check (" << d.target
              << "): " << (report.passed ? "passed" : "FAILED")
              << " max_violation=" << format_double(report.max_violation) << "\n";

  RunResult result;
  result.files.push_back(path);
  return result;
}

// ---------------------------------------------------------------------------
// Embeddings

Vec3 mobius_embed(double theta, double omega) {
  const double half = 0.5 * omega * std::cos(0.5 * theta);
  return Vec3((1.0 + half) * std::cos(theta), (1.0 + half) * std::sin(theta),
              0.5 * omega * std::sin(0.5 * theta));
}

Vec3 cylinder_embed(double theta, double omega) {
  return Vec3(std::cos(theta), std::sin(theta), omega);
}

void embed_csv(ManifoldId manifold, const std::string& csv_in,
               const std::string& csv_out) {
  if (!is_quotient(manifold))
    throw Unsupported("embedding is defined for the quotient manifolds");
  std::ifstream in(csv_in);
  if (!in) throw ConfigError("cannot open CSV '" + csv_in + "'");
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("empty CSV '" + csv_in + "'");

  std::vector<std::string> columns;
  std::stringstream hs(header);
  std::string col;
  while (std::getline(hs, col, ',')) columns.push_back(col);
  int theta_idx = -1, omega_idx = -1, t_idx = -1;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == "theta") theta_idx = static_cast<int>(i);
    if (columns[i] == "omega") omega_idx = static_cast<int>(i);
    if (columns[i] == "t") t_idx = static_cast<int>(i);
  }
  if (theta_idx < 0 || omega_idx < 0)
    throw ConfigError("CSV must have 'theta' and 'omega' columns");

  std::ostringstream out;
  out << (t_idx >= 0 ? "t,k1,k2,k3\n" : "k1,k2,k3\n");
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) <= std::max(theta_idx, omega_idx))
      throw ConfigError("CSV row has too few columns", line_no);
    const double th = std::stod(cells[theta_idx]);
    const double om = std::stod(cells[omega_idx]);
    const Vec3 k = manifold == ManifoldId::Mobius ? mobius_embed(th, om)
                                                  : cylinder_embed(th, om);
    if (t_idx >= 0) out << cells[t_idx] << ",";
    out << format_double(k[0]) << "," << format_double(k[1]) << ","
        << format_double(k[2]) << "\n";
  }
  write_text_file(csv_out, out.str());
}

}  // namespace geosmc
