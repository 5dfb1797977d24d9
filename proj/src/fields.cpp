#include "geosmc/fields.hpp"

#include <algorithm>
#include <cmath>

namespace geosmc {

double SwitchingFunction::lie_derivative(const FieldFn& f, const Vec& x,
                                         double t) const {
  const Vec v = f(x, t);
  if (gradient) return gradient(x, t).dot(v);
  // Central difference along the field direction; the switching functions
  // here are time-independent, so no partial-t term.
  const double speed = v.norm();
  if (speed == 0.0) return 0.0;
  const double h = 1e-6 * (1.0 + x.norm());
  const Vec dir = v / speed;
  return (value(x + h * dir, t) - value(x - h * dir, t)) / (2.0 * h) * speed;
}

PiecewiseField::PiecewiseField(std::vector<SwitchingFunction> switches,
                               std::vector<Region> regions)
    : switches_(std::move(switches)), regions_(std::move(regions)) {
  for (const Region& r : regions_)
    if (r.signs.size() != switches_.size())
      throw Error("piecewise field: region sign pattern length mismatch");
}

int PiecewiseField::region_index(const std::vector<int>& signs) const {
  for (int i = 0; i < num_regions(); ++i)
    if (regions_[i].signs == signs) return i;
  throw Error("piecewise field: no region for the requested sign pattern");
}

std::vector<int> PiecewiseField::signs_at(const Vec& x, double t, double tol,
                                          const std::vector<int>* fallback) const {
  std::vector<int> signs(switches_.size());
  for (std::size_t i = 0; i < switches_.size(); ++i) {
    const double s = switches_[i].value(x, t);
    if (std::abs(s) <= tol && fallback)
      signs[i] = (*fallback)[i];
    else
      signs[i] = s >= 0.0 ? 1 : -1;
  }
  return signs;
}

std::vector<int> PiecewiseField::active_switches(const Vec& x, double t,
                                                 double tol) const {
  std::vector<int> active;
  for (int i = 0; i < num_switches(); ++i)
    if (std::abs(switches_[i].value(x, t)) <= tol) active.push_back(i);
  return active;
}

namespace {

// Fields of the two regions adjacent across switching surface k at x, with
// the other switching signs frozen at their current values.
std::pair<const Region*, const Region*> adjacent_regions(
    const PiecewiseField& pf, int k, const Vec& x, double t) {
  std::vector<int> signs = pf.signs_at(x, t);
  signs[k] = 1;
  const Region* plus = &pf.region(pf.region_index(signs));
  signs[k] = -1;
  const Region* minus = &pf.region(pf.region_index(signs));
  return {plus, minus};
}

}  // namespace

FilippovSet filippov_set(const PiecewiseField& pf, const Vec& x, double t,
                         double tol_surface) {
  const std::vector<int> active = pf.active_switches(x, t, tol_surface);
  if (active.size() > 1)
    throw UnsupportedCorner("Filippov set at an intersection of " +
                            std::to_string(active.size()) +
                            " switching surfaces");
  FilippovSet set;
  if (active.empty()) {
    const Vec v = pf.region(pf.region_index(pf.signs_at(x, t))).f(x, t);
    set.singleton = true;
    set.f_minus = v;
    set.f_plus = v;
    return set;
  }
  const auto [plus, minus] = adjacent_regions(pf, active.front(), x, t);
  set.f_plus = plus->f(x, t);
  set.f_minus = minus->f(x, t);
  set.singleton = (set.f_plus - set.f_minus).norm() == 0.0;
  return set;
}

SlidingClassification classify(const PiecewiseField& pf, int switch_index,
                               const Vec& x, double t, double tol_surface,
                               double tol_lie) {
  const SwitchingFunction& sw = pf.switching(switch_index);
  if (std::abs(sw.value(x, t)) > tol_surface)
    throw Error("classify: point is not on switching surface '" + sw.name + "'");
  for (int other : pf.active_switches(x, t, tol_surface))
    if (other != switch_index)
      throw UnsupportedCorner("classify at an intersection of surfaces '" +
                              sw.name + "' and '" +
                              pf.switching(other).name + "'");

  const auto [plus, minus] = adjacent_regions(pf, switch_index, x, t);
  SlidingClassification c;
  c.lie_plus = sw.lie_derivative(plus->f, x, t);
  c.lie_minus = sw.lie_derivative(minus->f, x, t);

  const bool plus_zero = std::abs(c.lie_plus) <= tol_lie;
  const bool minus_zero = std::abs(c.lie_minus) <= tol_lie;
  if (plus_zero && minus_zero) {
    c.kind = SlidingKind::Degenerate;
    return c;
  }
  if (plus_zero || minus_zero) {
    c.kind = SlidingKind::Tangential;
    return c;
  }
  if (c.lie_plus < 0.0 && c.lie_minus > 0.0)
    c.kind = SlidingKind::AttractiveSliding;
  else if (c.lie_plus > 0.0 && c.lie_minus < 0.0)
    c.kind = SlidingKind::RepulsiveSliding;
  else
    c.kind = SlidingKind::Crossing;
  if (c.kind == SlidingKind::AttractiveSliding ||
      c.kind == SlidingKind::RepulsiveSliding)
    c.lambda_star = c.lie_minus / (c.lie_minus - c.lie_plus);
  return c;
}

Vec sliding_field(const PiecewiseField& pf, int switch_index, const Vec& x,
                  double t, double tol_surface, double tol_lie) {
  const SlidingClassification c =
      classify(pf, switch_index, x, t, tol_surface, tol_lie);
  if (c.kind != SlidingKind::AttractiveSliding &&
      c.kind != SlidingKind::RepulsiveSliding)
    throw NotSliding("no sliding field: surface classified as " +
                     std::string(to_string(c.kind)));
  if (!(c.lambda_star > 0.0 && c.lambda_star < 1.0))
    throw NotSliding("lambda* outside (0, 1)");
  const auto [plus, minus] = adjacent_regions(pf, switch_index, x, t);
  return c.lambda_star * plus->f(x, t) + (1.0 - c.lambda_star) * minus->f(x, t);
}

std::pair<double, Vec> sliding_combination(const PiecewiseField& pf,
                                           int switch_index, const Vec& x,
                                           double t) {
  const SwitchingFunction& sw = pf.switching(switch_index);
  const auto [plus, minus] = adjacent_regions(pf, switch_index, x, t);
  const double lie_plus = sw.lie_derivative(plus->f, x, t);
  const double lie_minus = sw.lie_derivative(minus->f, x, t);
  const double denom = lie_minus - lie_plus;
  if (denom == 0.0) throw NotSliding("equal one-sided Lie derivatives");
  const double lambda = lie_minus / denom;
  return {lambda, lambda * plus->f(x, t) + (1.0 - lambda) * minus->f(x, t)};
}

int sliding_order(int n, int m, int dim_s) {
  if (!(n > dim_s && dim_s >= 0 && m >= 1))
    throw NotWellDefinedOrder("sliding order requires n > dim S >= 0, m >= 1");
  if ((n - dim_s) % m != 0)
    throw NotWellDefinedOrder("(n - dim S) = " + std::to_string(n - dim_s) +
                              " is not a multiple of m = " + std::to_string(m));
  return (n - dim_s) / m;
}

const char* to_string(SlidingKind kind) {
  switch (kind) {
    case SlidingKind::Crossing: return "crossing";
    case SlidingKind::AttractiveSliding: return "attractive-sliding";
    case SlidingKind::RepulsiveSliding: return "repulsive-sliding";
    case SlidingKind::Tangential: return "tangential";
    case SlidingKind::Degenerate: return "degenerate";
  }
  return "unknown";
}

}  // namespace geosmc
