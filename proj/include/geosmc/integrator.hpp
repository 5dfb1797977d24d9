#pragma once

#include <vector>

#include "geosmc/systems.hpp"

namespace geosmc {

struct IntegratorOptions {
  double step = 1e-3;           // fixed macro step
  double tol_event = 1e-10;     // event localization tolerance (in time)
  double tol_surface = 1e-7;    // sliding entry band / surface membership
  double lambda_margin = 0.02;  // sliding exit hysteresis on lambda*
  long max_steps = 5'000'000;
  double equilibrium_threshold = 1e-9;  // sliding-field norm
  int equilibrium_steps = 3;            // consecutive steps below threshold
  // Vector-valued (regular-form) surfaces: a finite-time crossing whose
  // last stretch hides inside one macro step is also accepted as an entry
  // when ||s|| drops within one step's travel of zero.  Cap on that
  // adaptive band.
  double entry_band_cap = 5e-3;

  void validate() const;
};

enum class ModeKind { Free, Sliding, Equilibrium };

struct Mode {
  ModeKind kind = ModeKind::Free;
  int id = 0;  // region index (Free) or surface index (Sliding)
};

std::string to_string(const Mode& mode);

enum class EventKind { SurfaceHit, SlidingEntry, SlidingExit, EquilibriumReached };

const char* to_string(EventKind kind);

enum class StopReason { Completed, Budget, Degenerate };

const char* to_string(StopReason reason);

struct TrajectorySample {
  double t = 0.0;
  Vec x;
  Mode mode;
  Vec s;
  Vec u;
  double drift = 0.0;
  bool on_grid = true;  // sample at a t0 + k*h grid time
};

struct TrajectoryEvent {
  double t = 0.0;
  EventKind kind = EventKind::SurfaceHit;
  int surface = 0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<TrajectoryEvent> events;
  StopReason stop = StopReason::Completed;

  /// Time of the first event of the given kind, if any.
  std::optional<double> first_event_time(EventKind kind) const;
  const TrajectorySample& back() const { return samples.back(); }
};

/// Classical 4th-order step of f from (t, x) over dt (no retraction).
Vec rk4_step(const FieldFn& f, const Vec& x, double t, double dt);

/// Event-driven hybrid integration of a closed-loop system.  Free phases
/// run fixed-step RK4 on the active region field with per-step manifold
/// retraction; switching-surface crossings are localized by bisection to
/// tol_event and classified; attractive surfaces switch to sliding-phase
/// integration with per-step surface projection.  Regularized models run
/// as a single smooth phase.
Trajectory integrate(const SystemModel& model, const Vec& x0, double t0,
                     double t1, const IntegratorOptions& opts = {});

/// Single-mode integration for boundary-layer models.  Requires
/// model.regularized.
Trajectory integrate_regularized(const SystemModel& model, const Vec& x0,
                                 double t0, double t1,
                                 const IntegratorOptions& opts = {});

/// Runs the system from d0 and from act(z, d0) and returns the maximum
/// quotient (orbit) distance between the two states over the shared grid
/// times.  Requires a quotient presentation on the model.
double orbit_equivalence_check(const SystemModel& model, const Vec& d0, long z,
                               double t0, double t1,
                               const IntegratorOptions& opts = {});

}  // namespace geosmc
