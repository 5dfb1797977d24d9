#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "geosmc/errors.hpp"

namespace geosmc {

using Vec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat = Eigen::MatrixXd;

// Library-wide tolerances.
inline constexpr double kTolMfd = 1e-9;      // manifold membership
inline constexpr double kTolDescent = 1e-8;  // descent-condition checks
inline constexpr double kTolTan = 1e-8;      // tangency of field values
inline constexpr double kTolLie = 1e-8;      // Lie-derivative sign decisions
inline constexpr double kTolSurface = 1e-7;  // switching-surface membership
inline constexpr int kZMaxDefault = 8;       // group-element range

/// State space realized as an embedded submanifold of R^p.  Each concrete
/// space ships its own constraint map, orthogonal tangent projector, and
/// nearest-point style retraction; nothing is derived automatically.
class StateSpace {
 public:
  virtual ~StateSpace() = default;

  virtual int ambient_dim() const = 0;
  virtual int intrinsic_dim() const = 0;
  virtual std::string name() const = 0;

  /// Constraint map R^p -> R^k with k = p - n; zero on the manifold.
  virtual Vec constraint(const Vec& x) const = 0;

  /// Orthogonal projection of an ambient vector onto T_x M.
  virtual Vec tangent_project(const Vec& x, const Vec& v) const = 0;

  /// Nearest-point style retraction of a raw ambient vector onto the
  /// manifold.  Identity (up to tolerance) for points already on it.
  virtual Vec retract(const Vec& y) const = 0;

  /// Scalar drift measure used in trajectory records: ||R^T R - I||_F for
  /// the rotation group, | ||L|| - 1 | for the sphere, 0 in flat factors.
  virtual double drift(const Vec& x) const;

  bool on_manifold(const Vec& x, double tol = kTolMfd) const;
};

/// R^n with the trivial geometry.  Also the upstairs space of the quotient
/// state spaces, which are integrated in coordinates and canonicalized for
/// reporting.
class EuclideanSpace final : public StateSpace {
 public:
  explicit EuclideanSpace(int n) : n_(n) {}
  int ambient_dim() const override { return n_; }
  int intrinsic_dim() const override { return n_; }
  std::string name() const override { return "euclidean"; }
  Vec constraint(const Vec&) const override { return Vec::Zero(0); }
  Vec tangent_project(const Vec&, const Vec& v) const override { return v; }
  Vec retract(const Vec& y) const override { return y; }

 private:
  int n_;
};

/// The unit sphere S^2 in R^3.
class UnitSphere final : public StateSpace {
 public:
  int ambient_dim() const override { return 3; }
  int intrinsic_dim() const override { return 2; }
  std::string name() const override { return "s2"; }
  Vec constraint(const Vec& x) const override;
  Vec tangent_project(const Vec& x, const Vec& v) const override;
  Vec retract(const Vec& y) const override;  // y / ||y||
  double drift(const Vec& x) const override;
};

/// The rotation group SO(3) embedded in R^{3x3}, stored row-major as R^9.
/// The retraction iterates R <- R (3I - R^T R)/2 to a fixed point and then
/// checks the determinant sign.
class RotationGroup final : public StateSpace {
 public:
  int ambient_dim() const override { return 9; }
  int intrinsic_dim() const override { return 3; }
  std::string name() const override { return "so3"; }
  Vec constraint(const Vec& x) const override;  // 6 entries of R^T R - I
  Vec tangent_project(const Vec& x, const Vec& v) const override;
  Vec retract(const Vec& y) const override;
  double drift(const Vec& x) const override;  // ||R^T R - I||_F

  static Mat3 to_matrix(const Vec& x9);
  static Vec to_vector(const Mat3& m);
};

/// Cartesian product of factor spaces with block-stacked coordinates.
class ProductSpace final : public StateSpace {
 public:
  explicit ProductSpace(std::vector<std::shared_ptr<const StateSpace>> factors);
  int ambient_dim() const override { return ambient_dim_; }
  int intrinsic_dim() const override { return intrinsic_dim_; }
  std::string name() const override;
  Vec constraint(const Vec& x) const override;
  Vec tangent_project(const Vec& x, const Vec& v) const override;
  Vec retract(const Vec& y) const override;
  double drift(const Vec& x) const override;  // max over factors

  const StateSpace& factor(int i) const { return *factors_[i]; }
  int factor_offset(int i) const { return offsets_[i]; }

 private:
  std::vector<std::shared_ptr<const StateSpace>> factors_;
  std::vector<int> offsets_;
  int ambient_dim_ = 0;
  int intrinsic_dim_ = 0;
};

/// Action of the integers on R^n generated by d -> A d + b.  Acting by z
/// applies the generator (or its inverse) |z| times; the linear part of
/// acting by z is A^z.
class AffineGroupAction {
 public:
  AffineGroupAction(Mat generator, Vec offset, int z_max = kZMaxDefault);

  /// Apply the group element z.  Throws RangeExceeded for |z| > z_max.
  Vec act(long z, const Vec& d) const;

  /// Linear part (pushforward) of acting by z.
  Mat linear_part(long z) const;

  int dim() const { return static_cast<int>(offset_.size()); }
  int z_max() const { return z_max_; }
  const Mat& generator() const { return generator_; }
  const Vec& offset() const { return offset_; }

 private:
  Mat generator_;
  Mat generator_inv_;
  Vec offset_;
  int z_max_;
};

/// z . (theta, omega) = (theta + 2 pi z, omega)
AffineGroupAction cylinder_action(int z_max = kZMaxDefault);
/// z . (theta, omega) = (theta + 2 pi z, (-1)^z omega)
AffineGroupAction mobius_action(int z_max = kZMaxDefault);

/// Quotient R^n / Z presented by an affine action together with a
/// fundamental-domain representative map (theta in [-pi, pi)).
class QuotientManifold {
 public:
  QuotientManifold(AffineGroupAction action) : action_(std::move(action)) {}

  const AffineGroupAction& action() const { return action_; }
  int ambient_dim() const { return action_.dim(); }

  /// Representative with theta in [-pi, pi).  Idempotent; orbit-equal
  /// inputs map to the same representative up to floating rounding.
  Vec canonicalize(const Vec& d) const;

  /// Distance in the quotient: min over |z| <= z_max of ||a - act(z, b)||.
  double orbit_distance(const Vec& a, const Vec& b) const;

 private:
  AffineGroupAction action_;
};

struct DescentWitness {
  Vec sample;
  long z = 0;
};

/// Outcome of a sampling-based descent check (function or vector field).
struct DescentReport {
  bool passed = false;
  double max_violation = 0.0;
  DescentWitness witness;
};

using VectorFn = std::function<Vec(const Vec&)>;

/// Checks that f is constant along orbits: max over samples and
/// 0 < |z| <= z_range of ||f(d) - f(act(z, d))||.
DescentReport check_function_descends(const AffineGroupAction& action,
                                      const VectorFn& f,
                                      const std::vector<Vec>& samples,
                                      int z_range,
                                      double tol = kTolDescent);

/// Checks the pushforward condition for an affine action:
/// max of ||A_z f(d) - f(act(z, d))|| with A_z the linear part of z.
DescentReport check_field_descends(const AffineGroupAction& action,
                                   const VectorFn& f,
                                   const std::vector<Vec>& samples,
                                   int z_range,
                                   double tol = kTolDescent);

/// Uniform sample cloud in a box, driven by the splitmix64 generator.
std::vector<Vec> sample_box(const Vec& lo, const Vec& hi, int count,
                            std::uint64_t seed);

}  // namespace geosmc
