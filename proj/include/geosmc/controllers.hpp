#pragma once

#include <optional>
#include <vector>

#include "geosmc/geometry.hpp"

namespace geosmc {

// ---------------------------------------------------------------------------
// so(3) helpers

/// Skew-symmetric matrix of omega: hat(w) v = w x v.
Mat3 hat(const Vec3& w);

/// Inverse of hat.  Throws NotSkew when ||W + W^T|| exceeds tolerance.
Vec3 vex(const Mat3& w, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Shared parameters

/// Inertia, disturbance bound and gain margin for the attitude families.
struct RigidBodyParams {
  Mat3 inertia = Mat3::Identity();
  double d_bar = 0.0;  // uniform bound on ||d(t)||
  double eta = 0.1;    // gain margin above the required lower bound

  void validate() const;
  double inertia_norm() const;  // spectral norm (symmetric psd)
};

/// Matched disturbance given as a per-channel sum of terms:
/// constant offsets, amplitude*sin(frequency*t + phase), and
/// amplitude*sin(cos(inner_frequency*t)).
struct DisturbanceTerm {
  enum class Kind { Constant, Sine, SineOfCosine };
  Kind kind = Kind::Constant;
  int channel = 0;
  double amplitude = 0.0;  // or the constant offset
  double frequency = 0.0;
  double phase = 0.0;
  double inner_frequency = 0.0;
};

struct DisturbanceSpec {
  int dim = 0;
  std::vector<DisturbanceTerm> terms;

  Vec eval(double t) const;
  /// Analytic upper bound on sup_t ||d(t)||: channel-wise sums of
  /// amplitudes combined in the Euclidean norm.
  double sup_bound() const;
  bool empty() const { return terms.empty(); }
};

// ---------------------------------------------------------------------------
// First-order family on T SO(3) = SO(3) x R^3

/// Virtual control alpha(R) = -1/2 vex(Rd^T R - R^T Rd).  Vanishes exactly
/// at R = Rd; ||alpha|| <= 1 everywhere.
Vec3 so3_alpha(const Mat3& r, const Mat3& r_d, double tol_mfd = kTolMfd);

/// d/dt alpha along Rdot = R hat(w).
Vec3 so3_lie_alpha(const Mat3& r, const Vec3& w, const Mat3& r_d);

/// Gain K(w) = ||J|| ||w||^2 + d_bar + eta.
double so3_gain(const RigidBodyParams& p, const Vec3& w);

/// Unit-vector control u = -K(w) s/||s|| with s = w - alpha(R).  With a
/// boundary layer, s/||s|| becomes s/(||s|| + epsilon).  Throws
/// OnSwitchingManifold at s = 0 in the unregularized mode.
Vec3 so3_control(const Mat3& r, const Vec3& w, const RigidBodyParams& p,
                 const Mat3& r_d, std::optional<double> boundary_layer = {});

// ---------------------------------------------------------------------------
// Sphere families on S^2 x R^3

/// First-order virtual control alpha(L) = -L x Ld.
Vec3 s2_alpha(const Vec3& l, const Vec3& l_d);

/// d/dt alpha along Ldot = L x w: -(L x w) x Ld.
Vec3 s2_lie_alpha(const Vec3& l, const Vec3& w, const Vec3& l_d);

/// Root of tan(theta) = 2 theta in (0, pi/2), bisected to 1e-12.  This is
/// the branch point at which the terminal sliding speed delta is C^1.
double terminal_theta_star();

/// Branch gain: sin(theta*)/sin(theta) sqrt(theta/theta*) below theta*,
/// 1 at and above.  gamma(theta*) = 1 exactly.
double terminal_gamma(double theta, double theta_star = terminal_theta_star());

/// dgamma/dtheta on the open branches (one-sided limit from below at
/// theta*).
double terminal_gamma_prime(double theta, double theta_star = terminal_theta_star());

/// Sliding speed delta(theta) = gamma(theta) sin(theta).
double terminal_delta(double theta, double theta_star = terminal_theta_star());

/// Terminal virtual control alpha(L) = -gamma(theta) L x Ld, extended
/// continuously by 0 at theta = 0.
Vec3 s2_terminal_alpha(const Vec3& l, const Vec3& l_d,
                       double theta_star = terminal_theta_star());

/// d/dt alpha for the terminal family; the off-surface gain user clamps
/// the norm to k_max against the theta -> 0 singularity.
Vec3 s2_terminal_lie_alpha(const Vec3& l, const Vec3& w, const Vec3& l_d,
                           double theta_star = terminal_theta_star());

enum class S2AlphaKind { FirstOrder, Terminal };

/// u = -(Jw) x w - K s/||s|| with K = ||J L_f alpha|| + d_bar + eta and
/// s = w - alpha(L).  Shared by the first-order and terminal variants.
/// k_max clamps ||J L_f alpha|| for the terminal branch.
Vec3 s2_control(const Vec3& l, const Vec3& w, const RigidBodyParams& p,
                const Vec3& l_d, S2AlphaKind kind,
                std::optional<double> boundary_layer = {},
                double k_max = 1e3);

// ---------------------------------------------------------------------------
// Moebius-bundle controller (Example with the half-twisted plane quotient)

/// Sliding variable s~(theta, w) = cos(theta/2) (w + sin((theta - theta*)/2)).
/// Invariant under the half-twist action, so it descends to the bundle.
double mobius_s(double theta, double omega, double theta_star);

/// Discontinuous feedback
/// u = w^2/2 sin(theta/2) - w/2 cos(theta - theta*/2)
///     - sign(cos(theta/2)) sign(s~),
/// which gives L_f s~ = -|cos(theta/2)| sign(s~) in closed loop.
double mobius_u(double theta, double omega, double theta_star);

/// Portion of u that is continuous across the sliding set.
double mobius_u_smooth(double theta, double omega, double theta_star);

/// Sliding dynamics on the sliding branch pushed to the circle:
/// -cos(theta/2) sin((theta - theta*)/2).
double mobius_sliding_rhs(double theta, double theta_star);

// ---------------------------------------------------------------------------
// Twisting controller on the cylinder

/// u = -K1 sign(sin theta) - K2 sign(omega), K1 > K2 > 0 (checked).
/// 2 pi-periodic in theta, so it descends to the cylinder.
double twisting_u(double theta, double omega, double k1, double k2);

/// Throws InvalidGains unless K1 > K2 > 0.
void check_twisting_gains(double k1, double k2);

}  // namespace geosmc
