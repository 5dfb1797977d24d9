#include "geosmc/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace geosmc {

void IntegratorOptions::validate() const {
  if (step <= 0.0) throw Error("integrator: step must be positive");
  if (tol_event <= 0.0 || tol_surface <= 0.0)
    throw Error("integrator: tolerances must be positive");
  if (!(lambda_margin > 0.0 && lambda_margin < 0.5))
    throw Error("integrator: lambda margin must lie in (0, 0.5)");
  if (max_steps <= 0) throw Error("integrator: max_steps must be positive");
}

Vec rk4_step(const FieldFn& f, const Vec& x, double t, double dt) {
  const Vec k1 = f(x, t);
  const Vec k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt);
  const Vec k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt);
  const Vec k4 = f(x + dt * k3, t + dt);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::optional<double> Trajectory::first_event_time(EventKind kind) const {
  for (const TrajectoryEvent& e : events)
    if (e.kind == kind) return e.t;
  return std::nullopt;
}

std::string to_string(const Mode& mode) {
  switch (mode.kind) {
    case ModeKind::Free: return "free:" + std::to_string(mode.id);
    case ModeKind::Sliding: return "sliding:" + std::to_string(mode.id);
    case ModeKind::Equilibrium: return "equilibrium";
  }
  return "unknown";
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::SurfaceHit: return "surface-hit";
    case EventKind::SlidingEntry: return "sliding-entry";
    case EventKind::SlidingExit: return "sliding-exit";
    case EventKind::EquilibriumReached: return "equilibrium-reached";
  }
  return "unknown";
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Completed: return "completed";
    case StopReason::Budget: return "budget";
    case StopReason::Degenerate: return "degenerate";
  }
  return "unknown";
}

namespace {

/// Distance from the origin to the convex hull of a small 2-D point set.
/// Zero when the origin lies inside.
double origin_hull_distance_2d(const std::vector<Vec>& points) {
  // Inside test via angular coverage: the origin lies in the hull iff no
  // open half-plane through the origin contains every point.
  std::vector<double> angles;
  double min_norm = std::numeric_limits<double>::infinity();
  for (const Vec& p : points) {
    min_norm = std::min(min_norm, p.norm());
    if (p.norm() > 0.0) angles.push_back(std::atan2(p[1], p[0]));
  }
  if (angles.empty()) return 0.0;  // all points are the origin
  std::sort(angles.begin(), angles.end());
  double max_gap = 2.0 * M_PI - (angles.back() - angles.front());
  for (std::size_t i = 1; i < angles.size(); ++i)
    max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  if (max_gap <= M_PI + 1e-12) return 0.0;
  // Outside: distance to the nearest segment between any two points.
  double best = min_norm;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const Vec& a = points[i];
      const Vec d = points[j] - a;
      const double len2 = d.squaredNorm();
      const double u = len2 > 0.0 ? std::clamp(-a.dot(d) / len2, 0.0, 1.0) : 0.0;
      best = std::min(best, (a + u * d).norm());
    }
  }
  return best;
}

class Run {
 public:
  Run(const SystemModel& model, const IntegratorOptions& opts, double t0,
      double t1)
      : model_(model), opts_(opts), space_(*model.space), t0_(t0), t1_(t1) {}

  Trajectory go(const Vec& x0) {
    opts_.validate();
    x_ = space_.retract(x0);
    t_ = t0_;
    resolve_initial_mode();
    record_sample(true);
    long next_k = 1;
    long stalled_events = 0;
    while (t_ < t1_ - 1e-14 && traj_.stop == StopReason::Completed) {
      if (++steps_used_ > opts_.max_steps) {
        traj_.stop = StopReason::Budget;
        break;
      }
      const double grid_t = t0_ + static_cast<double>(next_k) * opts_.step;
      const double target = std::min(grid_t, t1_);
      if (target <= t_ + 0.5 * opts_.tol_event) {
        ++next_k;
        continue;
      }
      const double t_before = t_;
      switch (mode_.kind) {
        case ModeKind::Equilibrium:
          t_ = target;
          break;
        case ModeKind::Free:
          step_free(target);
          break;
        case ModeKind::Sliding:
          step_sliding(target);
          break;
      }
      if (traj_.stop != StopReason::Completed) {
        record_sample(false);
        break;
      }
      const bool on_grid = t_ >= target - 0.5 * opts_.tol_event;
      if (on_grid && target == grid_t) ++next_k;
      record_sample(on_grid);
      // Zeno guard: persistent events with no time progress.
      if (t_ - t_before < opts_.tol_event) {
        if (++stalled_events > 10000) {
          traj_.stop = StopReason::Budget;
          break;
        }
      } else {
        stalled_events = 0;
      }
    }
    return std::move(traj_);
  }

 private:
  bool scalar_switched() const { return model_.field.num_switches() > 0; }
  bool regular_form() const { return model_.regular_surface.has_value(); }

  const FieldFn& region_field() const {
    return model_.field.region(mode_.id).f;
  }

  Vec flow(const FieldFn& f, double dt) const {
    return space_.retract(rk4_step(f, x_, t_, dt));
  }

  void log_event(EventKind kind, int surface) {
    traj_.events.push_back({t_, kind, surface});
  }

  void record_sample(bool on_grid) {
    if (!traj_.samples.empty() && t_ <= traj_.samples.back().t) return;
    TrajectorySample s;
    s.t = t_;
    s.x = x_;
    s.mode = mode_;
    s.s = model_.s_value ? model_.s_value(x_, t_) : Vec();
    if (mode_.kind == ModeKind::Sliding && model_.sliding_control)
      s.u = model_.sliding_control(x_, t_);
    else if (mode_.kind == ModeKind::Equilibrium)
      s.u = Vec::Zero(model_.sliding_control ? model_.sliding_control(x_, t_).size()
                                             : (model_.control ? model_.control(x_, t_).size() : 0));
    else if (model_.control)
      s.u = model_.control(x_, t_);
    s.drift = space_.drift(x_);
    s.on_grid = on_grid;
    traj_.samples.push_back(std::move(s));
  }

  // -- initialization ------------------------------------------------------

  void resolve_initial_mode() {
    mode_ = {ModeKind::Free, 0};
    if (model_.regularized) return;
    if (regular_form()) {
      const Vec s = model_.regular_surface->s(x_, t_);
      if (s.norm() <= opts_.tol_surface) {
        log_event(EventKind::SurfaceHit, 0);
        enter_regular_sliding();
      }
      return;
    }
    if (!scalar_switched()) return;
    pattern_ = model_.field.signs_at(x_, t_, 0.0);
    const auto active = model_.field.active_switches(x_, t_, opts_.tol_surface);
    if (active.size() >= 2) {
      check_corner(active);
      return;
    }
    if (active.size() == 1) {
      log_event(EventKind::SurfaceHit, active.front());
      resolve_surface(active.front());
    }
    if (mode_.kind == ModeKind::Free)
      mode_.id = model_.field.region_index(pattern_);
  }

  // -- free phase ----------------------------------------------------------

  void step_free(double target) {
    if (model_.regularized || (!scalar_switched() && !regular_form())) {
      x_ = flow(region_field(), target - t_);
      t_ = target;
      return;
    }
    if (regular_form())
      step_free_regular(target);
    else
      step_free_scalar(target);
  }

  void step_free_scalar(double target) {
    mode_.id = model_.field.region_index(pattern_);
    const FieldFn& f = region_field();
    const double dt_full = target - t_;
    const Vec trial = flow(f, dt_full);

    // Crossing detection against the committed sign pattern.
    std::vector<int> crossed;
    for (int j = 0; j < model_.field.num_switches(); ++j) {
      const double sj = model_.field.switching(j).value(trial, target);
      if (sj * pattern_[j] < 0.0 && std::abs(sj) > 1e-14) crossed.push_back(j);
    }
    if (crossed.empty()) {
      x_ = trial;
      t_ = target;
      const auto active = model_.field.active_switches(x_, t_, opts_.tol_surface);
      if (active.size() >= 2) check_corner(active);
      return;
    }

    // Earliest crossing among the flagged switches, localized to tol_event.
    double best_dt = dt_full;
    int best_j = crossed.front();
    for (int j : crossed) {
      double lo = 0.0, hi = dt_full;
      while (hi - lo > opts_.tol_event) {
        const double mid = 0.5 * (lo + hi);
        const Vec xm = flow(f, mid);
        const double sj = model_.field.switching(j).value(xm, t_ + mid);
        if (sj * pattern_[j] < 0.0 && std::abs(sj) > 0.0)
          hi = mid;
        else
          lo = mid;
      }
      if (hi < best_dt) {
        best_dt = hi;
        best_j = j;
      }
    }
    x_ = flow(f, best_dt);
    t_ += best_dt;
    log_event(EventKind::SurfaceHit, best_j);

    const auto active = model_.field.active_switches(x_, t_, opts_.tol_surface);
    if (active.size() >= 2) {
      if (!check_corner(active)) {
        // Not a stationary corner: commit the factual side of the crossed
        // switch and carry on, so progress does not stall at the corner.
        const double sj = model_.field.switching(best_j).value(x_, t_);
        pattern_[best_j] = sj != 0.0 ? (sj > 0.0 ? 1 : -1) : -pattern_[best_j];
        mode_.id = model_.field.region_index(pattern_);
      }
      return;
    }
    resolve_surface(best_j);
    if (mode_.kind == ModeKind::Free)
      mode_.id = model_.field.region_index(pattern_);
  }

  /// Classify an arrival at surface j and transition accordingly.
  void resolve_surface(int j) {
    SlidingClassification c;
    try {
      c = classify(model_.field, j, x_, t_, opts_.tol_surface);
    } catch (const UnsupportedCorner&) {
      check_corner(model_.field.active_switches(x_, t_, opts_.tol_surface));
      return;
    }
    switch (c.kind) {
      case SlidingKind::AttractiveSliding:
        project_onto_surface(j);
        log_event(EventKind::SlidingEntry, j);
        mode_ = {ModeKind::Sliding, j};
        eq_counter_ = 0;
        break;
      case SlidingKind::Crossing:
        pattern_[j] = c.lie_plus > 0.0 ? 1 : -1;
        break;
      case SlidingKind::RepulsiveSliding:
      case SlidingKind::Tangential: {
        // Keep the side the state actually sits on; a graze leaves the
        // committed sign unchanged when the value is still ambiguous.
        const double s = model_.field.switching(j).value(x_, t_);
        if (std::abs(s) > 0.0) pattern_[j] = s > 0.0 ? 1 : -1;
        break;
      }
      case SlidingKind::Degenerate:
        traj_.stop = StopReason::Degenerate;
        break;
    }
  }

  void step_free_regular(double target) {
    const FieldFn& f = region_field();
    const auto& surf = *model_.regular_surface;
    const double dt_full = target - t_;
    const Vec s0 = surf.s(x_, t_);
    const double n0 = s0.norm();
    const Vec trial = flow(f, dt_full);
    const Vec s1 = surf.s(trial, target);

    auto crossed = [&](const Vec& s) {
      return s.norm() <= opts_.tol_surface || (n0 > 0.0 && s0.dot(s) < 0.0);
    };
    if (crossed(s1)) {
      double lo = 0.0, hi = dt_full;
      while (hi - lo > opts_.tol_event) {
        const double mid = 0.5 * (lo + hi);
        if (crossed(surf.s(flow(f, mid), t_ + mid)))
          hi = mid;
        else
          lo = mid;
      }
      x_ = flow(f, hi);
      t_ += hi;
      log_event(EventKind::SurfaceHit, 0);
      enter_regular_sliding();
      return;
    }
    // Near the finite-time crossing the Runge-Kutta stages straddle the
    // discontinuity and ||s|| settles into an O(step) chattering band that
    // the endpoint tests above never see.  Accept the entry once the
    // remaining distance is within one step's travel.
    const double rate = (s1 - s0).norm() / dt_full;
    const double band =
        std::max(opts_.tol_surface, std::min(dt_full * rate, opts_.entry_band_cap));
    if (s1.norm() <= band) {
      x_ = trial;
      t_ = target;
      log_event(EventKind::SurfaceHit, 0);
      enter_regular_sliding();
      return;
    }
    x_ = trial;
    t_ = target;
  }

  void enter_regular_sliding() {
    x_ = space_.retract(model_.regular_surface->pin(x_));
    log_event(EventKind::SlidingEntry, 0);
    mode_ = {ModeKind::Sliding, 0};
    eq_counter_ = 0;
  }

  // -- sliding phase -------------------------------------------------------

  void step_sliding(double target) {
    if (regular_form())
      step_sliding_regular(target);
    else
      step_sliding_scalar(target);
  }

  void step_sliding_regular(double target) {
    const auto& surf = *model_.regular_surface;
    x_ = space_.retract(rk4_step(surf.sliding_field, x_, t_, target - t_));
    x_ = surf.pin(x_);
    t_ = target;
    check_equilibrium(surf.sliding_field(x_, t_).norm());
  }

  void step_sliding_scalar(double target) {
    const int k = mode_.id;
    const auto& pf = model_.field;
    FieldFn f = [&pf, k](const Vec& x, double t) {
      return sliding_combination(pf, k, x, t).second;
    };
    Vec trial = space_.retract(rk4_step(f, x_, t_, target - t_));
    // One Newton correction along the analytic s-gradient.
    const SwitchingFunction& sw = pf.switching(k);
    if (sw.gradient) {
      const Vec g = sw.gradient(trial, target);
      const double g2 = g.squaredNorm();
      if (g2 > 0.0) trial -= sw.value(trial, target) / g2 * g;
      trial = space_.retract(trial);
    }
    x_ = trial;
    t_ = target;

    // Exit hysteresis on lambda*.  lambda* -> 1 means f+ is turning
    // tangential, so the exit releases the state into the + region (and
    // symmetrically for lambda* -> 0).
    const SlidingClassification c = classify(pf, k, x_, t_, opts_.tol_surface);
    const bool sliding_kind = c.kind == SlidingKind::AttractiveSliding ||
                              c.kind == SlidingKind::RepulsiveSliding;
    if (!sliding_kind || c.lambda_star < opts_.lambda_margin ||
        c.lambda_star > 1.0 - opts_.lambda_margin) {
      log_event(EventKind::SlidingExit, k);
      pattern_ = pf.signs_at(x_, t_, opts_.tol_surface, &pattern_);
      if (!sliding_kind)
        pattern_[k] = c.lie_plus >= 0.0 ? 1 : -1;
      else
        pattern_[k] = c.lambda_star >= 0.5 ? 1 : -1;
      mode_ = {ModeKind::Free, pf.region_index(pattern_)};
      return;
    }
    check_equilibrium(f(x_, t_).norm());
  }

  void project_onto_surface(int j) {
    const SwitchingFunction& sw = model_.field.switching(j);
    if (!sw.gradient) return;
    const Vec g = sw.gradient(x_, t_);
    const double g2 = g.squaredNorm();
    if (g2 > 0.0) x_ -= sw.value(x_, t_) / g2 * g;
    x_ = space_.retract(x_);
  }

  // -- corner and equilibrium handling --------------------------------------

  /// Intersections of switching surfaces are not given a Filippov hull;
  /// the integrator only decides whether the corner is stationary (the
  /// hull of the adjacent region fields meets zero) and freezes there.
  /// Returns true when the equilibrium mode was entered.
  bool check_corner(const std::vector<int>& active) {
    if (active.size() < 2) return false;
    std::vector<Vec> values;
    for (int r = 0; r < model_.field.num_regions(); ++r)
      values.push_back(model_.field.region(r).f(x_, t_));
    bool stationary = true;
    for (const Vec& v : values)
      if (v.norm() >= opts_.equilibrium_threshold) stationary = false;
    if (!stationary && x_.size() == 2)
      stationary = origin_hull_distance_2d(values) <=
                   10.0 * opts_.equilibrium_threshold;
    if (stationary) {
      log_event(EventKind::EquilibriumReached, active.front());
      mode_ = {ModeKind::Equilibrium, 0};
    }
    return stationary;
  }

  void check_equilibrium(double field_norm) {
    if (field_norm < opts_.equilibrium_threshold) {
      if (++eq_counter_ >= opts_.equilibrium_steps) {
        log_event(EventKind::EquilibriumReached, mode_.id);
        mode_ = {ModeKind::Equilibrium, 0};
      }
    } else {
      eq_counter_ = 0;
    }
  }

  const SystemModel& model_;
  IntegratorOptions opts_;
  const StateSpace& space_;
  double t0_, t1_;
  Trajectory traj_;
  long steps_used_ = 0;

  Vec x_;
  double t_ = 0.0;
  Mode mode_;
  std::vector<int> pattern_;
  int eq_counter_ = 0;
};

}  // namespace

Trajectory integrate(const SystemModel& model, const Vec& x0, double t0,
                     double t1, const IntegratorOptions& opts) {
  if (!(t1 > t0)) throw Error("integrate: t_span must have positive length");
  return Run(model, opts, t0, t1).go(x0);
}

Trajectory integrate_regularized(const SystemModel& model, const Vec& x0,
                                 double t0, double t1,
                                 const IntegratorOptions& opts) {
  if (!model.regularized)
    throw Error("integrate_regularized requires a boundary-layer model");
  return integrate(model, x0, t0, t1, opts);
}

double orbit_equivalence_check(const SystemModel& model, const Vec& d0, long z,
                               double t0, double t1,
                               const IntegratorOptions& opts) {
  if (!model.quotient)
    throw Error("orbit equivalence check needs a quotient state space");
  const QuotientManifold& q = *model.quotient;
  const Trajectory a = integrate(model, d0, t0, t1, opts);
  const Trajectory b = integrate(model, q.action().act(z, d0), t0, t1, opts);

  std::vector<const TrajectorySample*> ga, gb;
  for (const auto& s : a.samples)
    if (s.on_grid) ga.push_back(&s);
  for (const auto& s : b.samples)
    if (s.on_grid) gb.push_back(&s);
  const std::size_t n = std::min(ga.size(), gb.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    worst = std::max(worst, q.orbit_distance(ga[i]->x, gb[i]->x));
  return worst;
}

}  // namespace geosmc
