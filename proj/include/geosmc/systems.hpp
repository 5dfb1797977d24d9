#pragma once

#include <memory>
#include <optional>
#include <string>

#include "geosmc/controllers.hpp"
#include "geosmc/fields.hpp"

namespace geosmc {

/// Regular-form switching surface with a vector-valued sliding variable
/// s = x2 - alpha(x1).  Entry is detected on ||s||; the sliding phase
/// integrates the reduced dynamics with x2 pinned to alpha(x1).
struct RegularFormSurface {
  int control_dim = 0;
  std::function<Vec(const Vec&, double)> s;
  std::function<Vec(const Vec&)> pin;  // exact projection onto {s = 0}
  FieldFn sliding_field;               // ambient dynamics restricted to S
};

/// Closed-loop system handed to the integrator: state space, piecewise
/// field, the sliding variable reported in trajectory records, the control
/// for logging, and the optional quotient presentation.
struct SystemModel {
  std::string family;
  std::shared_ptr<const StateSpace> space;
  PiecewiseField field;  // single smooth region when regularized
  std::optional<RegularFormSurface> regular_surface;
  std::optional<QuotientManifold> quotient;

  std::function<Vec(const Vec&, double)> s_value;  // recorded s components
  std::function<Vec(const Vec&, double)> control;  // recorded u components
  /// Equivalent control on the sliding surface, for records.
  std::function<Vec(const Vec&, double)> sliding_control;

  bool regularized = false;
  /// Geodesic / Euclidean error to the target configuration, for summaries.
  std::function<double(const Vec&)> target_error;
};

/// The scalar motivating example on the real line:
/// xdot = -sign(x) + bias, |bias| < 1.
SystemModel make_line_system(double bias);

/// Rigid-body attitude on SO(3) x R^3 with the unit-vector controller.
/// State layout: 9 rotation entries (row-major) followed by omega.
SystemModel make_so3_system(const RigidBodyParams& params, const Mat3& r_d,
                            DisturbanceSpec disturbance,
                            std::optional<double> boundary_layer = {});

/// Reduced attitude on S^2 x R^3, first-order or terminal virtual control.
/// State layout: L followed by omega.
SystemModel make_s2_system(const RigidBodyParams& params, const Vec3& l_d,
                           S2AlphaKind kind, DisturbanceSpec disturbance,
                           std::optional<double> boundary_layer = {},
                           double k_max = 1e3);

/// Moebius-bundle controller, integrated upstairs in R^2.  The switching
/// surface handed to the integrator is the sliding branch
/// { omega + sin((theta - theta*)/2) = 0 }, where the closed loop is
/// discontinuous; the recorded sliding variable is s~.  A nonzero
/// disturbance must stay below the unit reaching gain.
SystemModel make_mobius_system(double theta_star,
                               std::optional<double> boundary_layer = {},
                               DisturbanceSpec disturbance = {});

/// Twisting controller on the cylinder, integrated upstairs in R^2 with
/// switching surfaces { sin(theta) = 0 } and { omega = 0 }.  A nonzero
/// disturbance requires the gain dominance K2 > sup|d| and
/// K1 - K2 > sup|d|.
SystemModel make_twisting_system(double k1, double k2,
                                 DisturbanceSpec disturbance = {});

}  // namespace geosmc
