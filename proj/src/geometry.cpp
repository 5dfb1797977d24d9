#include "geosmc/geometry.hpp"

#include <cmath>

#include "geosmc/rng.hpp"

namespace geosmc {

double StateSpace::drift(const Vec& x) const {
  const Vec c = constraint(x);
  return c.size() == 0 ? 0.0 : c.norm();
}

bool StateSpace::on_manifold(const Vec& x, double tol) const {
  const Vec c = constraint(x);
  return c.size() == 0 || c.norm() <= tol;
}

// ---------------------------------------------------------------------------
// UnitSphere

Vec UnitSphere::constraint(const Vec& x) const {
  Vec c(1);
  c[0] = x.norm() - 1.0;
  return c;
}

Vec UnitSphere::tangent_project(const Vec& x, const Vec& v) const {
  // I - L L^T at unit L.
  return v - x * (x.dot(v));
}

Vec UnitSphere::retract(const Vec& y) const {
  const double n = y.norm();
  if (n == 0.0) throw DegenerateRetraction("sphere retraction of zero vector");
  return y / n;
}

double UnitSphere::drift(const Vec& x) const { return std::abs(x.norm() - 1.0); }

// ---------------------------------------------------------------------------
// RotationGroup

Mat3 RotationGroup::to_matrix(const Vec& x9) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = x9[3 * r + c];
  return m;
}

Vec RotationGroup::to_vector(const Mat3& m) {
  Vec x(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) x[3 * r + c] = m(r, c);
  return x;
}

Vec RotationGroup::constraint(const Vec& x) const {
  const Mat3 r = to_matrix(x);
  const Mat3 e = r.transpose() * r - Mat3::Identity();
  Vec c(6);  // upper triangle of the symmetric residual
  c << e(0, 0), e(0, 1), e(0, 2), e(1, 1), e(1, 2), e(2, 2);
  return c;
}

Vec RotationGroup::tangent_project(const Vec& x, const Vec& v) const {
  // T_R SO(3) = { R W : W skew }; projection V -> R skew(R^T V).
  const Mat3 r = to_matrix(x);
  const Mat3 w = r.transpose() * to_matrix(v);
  return to_vector(r * (w - w.transpose()) * 0.5);
}

Vec RotationGroup::retract(const Vec& y) const {
  Mat3 r = to_matrix(y);
  if (std::abs(r.determinant()) < 1e-12)
    throw DegenerateRetraction("rank-deficient input to SO(3) retraction");
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-12;
  for (int i = 0; i < kMaxIter; ++i) {
    const Mat3 e = Mat3::Identity() * 3.0 - r.transpose() * r;
    const Mat3 next = r * e * 0.5;
    if ((next - r).norm() <= kTol) {
      r = next;
      break;
    }
    r = next;
  }
  if ((r.transpose() * r - Mat3::Identity()).norm() > 1e-6)
    throw DegenerateRetraction("SO(3) orthogonalization did not converge");
  if (r.determinant() < 0.0)
    throw DegenerateRetraction("input retracts onto the det = -1 component");
  return to_vector(r);
}

double RotationGroup::drift(const Vec& x) const {
  const Mat3 r = to_matrix(x);
  return (r.transpose() * r - Mat3::Identity()).norm();
}

// ---------------------------------------------------------------------------
// ProductSpace

ProductSpace::ProductSpace(std::vector<std::shared_ptr<const StateSpace>> factors)
    : factors_(std::move(factors)) {
  for (const auto& f : factors_) {
    offsets_.push_back(ambient_dim_);
    ambient_dim_ += f->ambient_dim();
    intrinsic_dim_ += f->intrinsic_dim();
  }
}

std::string ProductSpace::name() const {
  std::string s;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) s += "x";
    s += factors_[i]->name();
  }
  return s;
}

Vec ProductSpace::constraint(const Vec& x) const {
  std::vector<Vec> parts;
  int total = 0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    parts.push_back(
        factors_[i]->constraint(x.segment(offsets_[i], factors_[i]->ambient_dim())));
    total += static_cast<int>(parts.back().size());
  }
  Vec c(total);
  int at = 0;
  for (const Vec& p : parts) {
    c.segment(at, p.size()) = p;
    at += static_cast<int>(p.size());
  }
  return c;
}

Vec ProductSpace::tangent_project(const Vec& x, const Vec& v) const {
  Vec out(ambient_dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const int o = offsets_[i];
    const int d = factors_[i]->ambient_dim();
    out.segment(o, d) = factors_[i]->tangent_project(x.segment(o, d), v.segment(o, d));
  }
  return out;
}

Vec ProductSpace::retract(const Vec& y) const {
  Vec out(ambient_dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const int o = offsets_[i];
    const int d = factors_[i]->ambient_dim();
    out.segment(o, d) = factors_[i]->retract(y.segment(o, d));
  }
  return out;
}

double ProductSpace::drift(const Vec& x) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const int o = offsets_[i];
    const int d = factors_[i]->ambient_dim();
    worst = std::max(worst, factors_[i]->drift(x.segment(o, d)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// AffineGroupAction

AffineGroupAction::AffineGroupAction(Mat generator, Vec offset, int z_max)
    : generator_(std::move(generator)), offset_(std::move(offset)), z_max_(z_max) {
  if (generator_.rows() != generator_.cols() ||
      generator_.rows() != offset_.size())
    throw Error("affine action: generator/offset dimension mismatch");
  const Eigen::FullPivLU<Mat> lu(generator_);
  if (!lu.isInvertible()) throw Error("affine action: generator not invertible");
  generator_inv_ = lu.inverse();
}

Vec AffineGroupAction::act(long z, const Vec& d) const {
  if (std::labs(z) > z_max_)
    throw RangeExceeded("group element " + std::to_string(z) +
                        " outside z_max = " + std::to_string(z_max_));
  Vec out = d;
  if (z >= 0) {
    for (long i = 0; i < z; ++i) out = generator_ * out + offset_;
  } else {
    for (long i = 0; i < -z; ++i) out = generator_inv_ * (out - offset_);
  }
  return out;
}

Mat AffineGroupAction::linear_part(long z) const {
  if (std::labs(z) > z_max_)
    throw RangeExceeded("group element " + std::to_string(z) +
                        " outside z_max = " + std::to_string(z_max_));
  Mat a = Mat::Identity(dim(), dim());
  const Mat& step = z >= 0 ? generator_ : generator_inv_;
  for (long i = 0; i < std::labs(z); ++i) a = step * a;
  return a;
}

AffineGroupAction cylinder_action(int z_max) {
  Mat a = Mat::Identity(2, 2);
  Vec b(2);
  b << 2.0 * M_PI, 0.0;
  return AffineGroupAction(std::move(a), std::move(b), z_max);
}

AffineGroupAction mobius_action(int z_max) {
  Mat a = Mat::Identity(2, 2);
  a(1, 1) = -1.0;
  Vec b(2);
  b << 2.0 * M_PI, 0.0;
  return AffineGroupAction(std::move(a), std::move(b), z_max);
}

// ---------------------------------------------------------------------------
// QuotientManifold

Vec QuotientManifold::canonicalize(const Vec& d) const {
  const long z = static_cast<long>(std::floor((d[0] + M_PI) / (2.0 * M_PI)));
  if (z == 0) return d;
  // Walk back by single generator steps so orbit-equal inputs retrace the
  // same floating-point operations.
  Vec out = d;
  const long steps = std::labs(z);
  for (long i = 0; i < steps; ++i) out = action_.act(z > 0 ? -1 : 1, out);
  return out;
}

double QuotientManifold::orbit_distance(const Vec& a, const Vec& b) const {
  double best = std::numeric_limits<double>::infinity();
  for (long z = -action_.z_max(); z <= action_.z_max(); ++z)
    best = std::min(best, (a - action_.act(z, b)).norm());
  return best;
}

// ---------------------------------------------------------------------------
// Descent checks

namespace {

DescentReport run_descent_check(const std::vector<Vec>& samples, int z_range,
                                double tol,
                                const std::function<double(const Vec&, long)>& violation) {
  if (samples.empty()) throw Error("descent check needs at least one sample");
  DescentReport report;
  report.witness.sample = samples.front();
  for (const Vec& d : samples) {
    for (long z = -z_range; z <= z_range; ++z) {
      if (z == 0) continue;
      const double v = violation(d, z);
      if (v > report.max_violation) {
        report.max_violation = v;
        report.witness = {d, z};
      }
    }
  }
  report.passed = report.max_violation <= tol;
  return report;
}

}  // namespace

DescentReport check_function_descends(const AffineGroupAction& action,
                                      const VectorFn& f,
                                      const std::vector<Vec>& samples,
                                      int z_range, double tol) {
  return run_descent_check(samples, z_range, tol, [&](const Vec& d, long z) {
    return (f(d) - f(action.act(z, d))).norm();
  });
}

DescentReport check_field_descends(const AffineGroupAction& action,
                                   const VectorFn& f,
                                   const std::vector<Vec>& samples,
                                   int z_range, double tol) {
  return run_descent_check(samples, z_range, tol, [&](const Vec& d, long z) {
    const Mat a_z = action.linear_part(z);
    return (a_z * f(d) - f(action.act(z, d))).norm();
  });
}

std::vector<Vec> sample_box(const Vec& lo, const Vec& hi, int count,
                            std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Vec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec d(lo.size());
    for (int j = 0; j < lo.size(); ++j) d[j] = rng.uniform(lo[j], hi[j]);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace geosmc
