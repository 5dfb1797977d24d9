#include "geosmc/controllers.hpp"

#include <cmath>

namespace geosmc {

namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Angle between unit vectors via atan2; stable near 0 and pi.
double sphere_angle(const Vec3& l, const Vec3& l_d) {
  return std::atan2(l.cross(l_d).norm(), l.dot(l_d));
}

}  // namespace

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w[2], w[1],
       w[2], 0.0, -w[0],
       -w[1], w[0], 0.0;
  return m;
}

Vec3 vex(const Mat3& w, double tol) {
  if ((w + w.transpose()).norm() > tol)
    throw NotSkew("vex of a matrix with symmetric part of norm " +
                  std::to_string((w + w.transpose()).norm()));
  return Vec3(w(2, 1), w(0, 2), w(1, 0));
}

void RigidBodyParams::validate() const {
  if ((inertia - inertia.transpose()).norm() > 1e-12)
    throw Error("inertia matrix must be symmetric");
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw Error("inertia matrix must be positive definite");
  if (d_bar < 0.0) throw Error("disturbance bound must be nonnegative");
  if (eta <= 0.0) throw Error("gain margin eta must be positive");
}

double RigidBodyParams::inertia_norm() const {
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Vec DisturbanceSpec::eval(double t) const {
  Vec d = Vec::Zero(dim);
  for (const DisturbanceTerm& term : terms) {
    double v = 0.0;
    switch (term.kind) {
      case DisturbanceTerm::Kind::Constant: v = term.amplitude; break;
      case DisturbanceTerm::Kind::Sine:
        v = term.amplitude * std::sin(term.frequency * t + term.phase);
        break;
      case DisturbanceTerm::Kind::SineOfCosine:
        v = term.amplitude * std::sin(std::cos(term.inner_frequency * t));
        break;
    }
    d[term.channel] += v;
  }
  return d;
}

double DisturbanceSpec::sup_bound() const {
  Vec per_channel = Vec::Zero(dim);
  for (const DisturbanceTerm& term : terms)
    per_channel[term.channel] += std::abs(term.amplitude);
  return per_channel.norm();
}

// ---------------------------------------------------------------------------
// SO(3)

Vec3 so3_alpha(const Mat3& r, const Mat3& r_d, double tol_mfd) {
  // The gate is two decades above the integration drift so that
  // Runge-Kutta stage points (off the manifold by O(step^2)) still
  // evaluate the smooth extension; genuinely non-orthogonal inputs fail.
  const double gate = std::max(1e-4, tol_mfd);
  if ((r.transpose() * r - Mat3::Identity()).norm() > gate ||
      (r_d.transpose() * r_d - Mat3::Identity()).norm() > gate)
    throw NotOnManifold("so3_alpha: input is not a rotation matrix");
  const Mat3 a = r_d.transpose() * r - r.transpose() * r_d;
  return -0.5 * Vec3(a(2, 1), a(0, 2), a(1, 0));
}

Vec3 so3_lie_alpha(const Mat3& r, const Vec3& w, const Mat3& r_d) {
  const Mat3 r_dot = r * hat(w);
  const Mat3 a = r_d.transpose() * r_dot - r_dot.transpose() * r_d;
  return -0.5 * Vec3(a(2, 1), a(0, 2), a(1, 0));
}

double so3_gain(const RigidBodyParams& p, const Vec3& w) {
  return p.inertia_norm() * w.squaredNorm() + p.d_bar + p.eta;
}

Vec3 so3_control(const Mat3& r, const Vec3& w, const RigidBodyParams& p,
                 const Mat3& r_d, std::optional<double> boundary_layer) {
  const Vec3 s = w - so3_alpha(r, r_d);
  const double k = so3_gain(p, w);
  const double n = s.norm();
  if (boundary_layer) return -k / (n + *boundary_layer) * s;
  if (n == 0.0)
    throw OnSwitchingManifold("so3_control: s = 0, unit vector undefined");
  return -k / n * s;
}

// ---------------------------------------------------------------------------
// Sphere

Vec3 s2_alpha(const Vec3& l, const Vec3& l_d) { return -l.cross(l_d); }

Vec3 s2_lie_alpha(const Vec3& l, const Vec3& w, const Vec3& l_d) {
  return -(l.cross(w)).cross(l_d);
}

double terminal_theta_star() {
  static const double value = [] {
    double lo = 1.0, hi = 1.3;  // tan - 2*theta changes sign in here
    auto f = [](double th) { return std::tan(th) - 2.0 * th; };
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }();
  return value;
}

double terminal_gamma(double theta, double theta_star) {
  if (theta >= theta_star) return 1.0;
  if (theta <= 0.0) return 0.0;  // only the product gamma * L x Ld matters
  return std::sin(theta_star) / std::sin(theta) * std::sqrt(theta / theta_star);
}

double terminal_gamma_prime(double theta, double theta_star) {
  if (theta >= theta_star) return 0.0;
  if (theta <= 0.0) return 0.0;
  const double s = std::sin(theta);
  return std::sin(theta_star) / std::sqrt(theta_star) *
         (0.5 / std::sqrt(theta) * s - std::sqrt(theta) * std::cos(theta)) /
         (s * s);
}

double terminal_delta(double theta, double theta_star) {
  if (theta >= theta_star) return std::sin(theta);
  if (theta <= 0.0) return 0.0;
  return std::sin(theta_star) * std::sqrt(theta / theta_star);
}

Vec3 s2_terminal_alpha(const Vec3& l, const Vec3& l_d, double theta_star) {
  const Vec3 e = l.cross(l_d);
  const double theta = sphere_angle(l, l_d);
  if (theta <= 0.0) return Vec3::Zero();
  return -terminal_gamma(theta, theta_star) * e;
}

Vec3 s2_terminal_lie_alpha(const Vec3& l, const Vec3& w, const Vec3& l_d,
                           double theta_star) {
  const Vec3 e = l.cross(l_d);
  const double sin_theta = e.norm();
  const double theta = sphere_angle(l, l_d);
  const Vec3 l_dot = l.cross(w);
  const double gamma = terminal_gamma(theta, theta_star);
  if (sin_theta < 1e-12) return -gamma * l_dot.cross(l_d);
  const double theta_dot = -l_dot.dot(l_d) / sin_theta;
  return -terminal_gamma_prime(theta, theta_star) * theta_dot * e -
         gamma * l_dot.cross(l_d);
}

Vec3 s2_control(const Vec3& l, const Vec3& w, const RigidBodyParams& p,
                const Vec3& l_d, S2AlphaKind kind,
                std::optional<double> boundary_layer, double k_max) {
  Vec3 alpha, lie_alpha;
  if (kind == S2AlphaKind::FirstOrder) {
    alpha = s2_alpha(l, l_d);
    lie_alpha = s2_lie_alpha(l, w, l_d);
  } else {
    alpha = s2_terminal_alpha(l, l_d);
    lie_alpha = s2_terminal_lie_alpha(l, w, l_d);
  }
  const Vec3 s = w - alpha;
  const double k =
      std::min((p.inertia * lie_alpha).norm(), k_max) + p.d_bar + p.eta;
  const Vec3 feedforward = -(p.inertia * w).cross(w);
  const double n = s.norm();
  if (boundary_layer) return feedforward - k / (n + *boundary_layer) * s;
  if (n == 0.0)
    throw OnSwitchingManifold("s2_control: s = 0, unit vector undefined");
  return feedforward - k / n * s;
}

// ---------------------------------------------------------------------------
// Moebius bundle

double mobius_s(double theta, double omega, double theta_star) {
  return std::cos(theta / 2.0) *
         (omega + std::sin((theta - theta_star) / 2.0));
}

double mobius_u_smooth(double theta, double omega, double theta_star) {
  return omega * omega / 2.0 * std::sin(theta / 2.0) -
         omega / 2.0 * std::cos(theta - theta_star / 2.0);
}

double mobius_u(double theta, double omega, double theta_star) {
  return mobius_u_smooth(theta, omega, theta_star) -
         sign0(std::cos(theta / 2.0)) * sign0(mobius_s(theta, omega, theta_star));
}

double mobius_sliding_rhs(double theta, double theta_star) {
  return -std::cos(theta / 2.0) * std::sin((theta - theta_star) / 2.0);
}

// ---------------------------------------------------------------------------
// Twisting

void check_twisting_gains(double k1, double k2) {
  if (!(k1 > k2 && k2 > 0.0))
    throw InvalidGains("twisting gains must satisfy K1 > K2 > 0 (got K1 = " +
                       std::to_string(k1) + ", K2 = " + std::to_string(k2) + ")");
}

double twisting_u(double theta, double omega, double k1, double k2) {
  check_twisting_gains(k1, k2);
  return -k1 * sign0(std::sin(theta)) - k2 * sign0(omega);
}

}  // namespace geosmc
