#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geosmc/geometry.hpp"

namespace geosmc {

/// Time-dependent ambient vector field.
using FieldFn = std::function<Vec(const Vec& x, double t)>;
using ScalarFn = std::function<double(const Vec& x, double t)>;
using GradientFn = std::function<Vec(const Vec& x, double t)>;

/// Scalar sliding variable whose zero set is a switching surface.  Carries
/// an analytic gradient when the controller supplies one; otherwise Lie
/// derivatives fall back to central differences along the field direction.
struct SwitchingFunction {
  std::string name;
  ScalarFn value;
  GradientFn gradient;  // may be null

  double lie_derivative(const FieldFn& f, const Vec& x, double t) const;
};

/// One smooth region of a piecewise field, keyed by the signs of the
/// switching functions (+1 / -1 per function).  Region fields are smooth
/// extensions, callable up to and across the boundary.
struct Region {
  std::vector<int> signs;
  FieldFn f;
};

/// Piecewise-smooth vector field partitioned by switching-function signs.
class PiecewiseField {
 public:
  PiecewiseField() = default;
  PiecewiseField(std::vector<SwitchingFunction> switches, std::vector<Region> regions);

  int num_switches() const { return static_cast<int>(switches_.size()); }
  int num_regions() const { return static_cast<int>(regions_.size()); }
  const SwitchingFunction& switching(int i) const { return switches_[i]; }
  const Region& region(int i) const { return regions_[i]; }

  /// Region index for an explicit sign pattern.
  int region_index(const std::vector<int>& signs) const;

  /// Sign pattern at x, using strict signs of the switching values.  Values
  /// within tol of zero keep the sign of `fallback` when provided.
  std::vector<int> signs_at(const Vec& x, double t, double tol = 0.0,
                            const std::vector<int>* fallback = nullptr) const;

  /// Indices of switching functions with |s_i(x,t)| <= tol.
  std::vector<int> active_switches(const Vec& x, double t, double tol) const;

 private:
  std::vector<SwitchingFunction> switches_;
  std::vector<Region> regions_;
};

/// Filippov set at a point, restricted to the two-region codimension-1
/// case: either a singleton (continuity point) or the segment
/// { lambda f_plus + (1 - lambda) f_minus : lambda in [0, 1] }.
struct FilippovSet {
  bool singleton = true;
  Vec f_minus;  // value on the s < 0 side (or the unique value)
  Vec f_plus;   // value on the s > 0 side

  Vec at(double lambda) const { return lambda * f_plus + (1.0 - lambda) * f_minus; }
};

/// F(x,t) with region fields evaluated as smooth extensions up to the
/// boundary.  Throws UnsupportedCorner when more than one switching
/// function is active at x.
FilippovSet filippov_set(const PiecewiseField& pf, const Vec& x, double t,
                         double tol_surface = kTolSurface);

enum class SlidingKind {
  Crossing,
  AttractiveSliding,
  RepulsiveSliding,
  Tangential,
  Degenerate,
};

const char* to_string(SlidingKind kind);

struct SlidingClassification {
  SlidingKind kind = SlidingKind::Degenerate;
  double lambda_star = 0.0;  // meaningful for the sliding kinds
  double lie_plus = 0.0;     // L_{f+} s
  double lie_minus = 0.0;    // L_{f-} s
};

/// Classifies the surface {s_k = 0} at an on-surface point from the signs
/// of the one-sided Lie derivatives:
///   attractive:  L_{f+}s < 0 < L_{f-}s
///   repulsive:   L_{f+}s > 0 > L_{f-}s
///   crossing:    both derivatives share a sign
///   tangential:  exactly one within kTolLie of zero
///   degenerate:  both within kTolLie of zero
/// lambda_star = L_{f-}s / (L_{f-}s - L_{f+}s) for the sliding kinds.
SlidingClassification classify(const PiecewiseField& pf, int switch_index,
                               const Vec& x, double t,
                               double tol_surface = kTolSurface,
                               double tol_lie = kTolLie);

/// Convex combination lambda* f_plus + (1 - lambda*) f_minus annihilating
/// L s.  Requires an attractive or repulsive classification with
/// lambda* in (0, 1); throws NotSliding otherwise.
Vec sliding_field(const PiecewiseField& pf, int switch_index, const Vec& x,
                  double t, double tol_surface = kTolSurface,
                  double tol_lie = kTolLie);

/// lambda* and the convex combination computed from the one-sided Lie
/// derivatives without asserting surface membership.  The integrator uses
/// this to evaluate the sliding field at Runge-Kutta stage points, which
/// sit within O(h^2) of the surface rather than on it.
std::pair<double, Vec> sliding_combination(const PiecewiseField& pf,
                                           int switch_index, const Vec& x,
                                           double t);

/// Order r of a sliding mode with state dimension n, affine-hull dimension
/// m of F on S, and dim S: r = (n - dim S) / m.  Throws
/// NotWellDefinedOrder when the quotient is not an integer.
int sliding_order(int n, int m, int dim_s);

}  // namespace geosmc
