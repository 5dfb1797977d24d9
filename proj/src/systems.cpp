#include "geosmc/systems.hpp"

#include <cmath>

namespace geosmc {

namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Vec scalar_vec(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Real line

SystemModel make_line_system(double bias) {
  if (std::abs(bias) >= 1.0)
    throw Error("line system: |bias| must be < 1 for a sliding mode at 0");
  SystemModel m;
  m.family = "line";
  m.space = std::make_shared<EuclideanSpace>(1);

  SwitchingFunction sw{
      "x",
      [](const Vec& x, double) { return x[0]; },
      [](const Vec&, double) { return scalar_vec(1.0); },
  };
  Region plus{{1}, [bias](const Vec&, double) { return scalar_vec(-1.0 + bias); }};
  Region minus{{-1}, [bias](const Vec&, double) { return scalar_vec(1.0 + bias); }};
  m.field = PiecewiseField({sw}, {plus, minus});

  m.s_value = [](const Vec& x, double) { return scalar_vec(x[0]); };
  m.control = [](const Vec& x, double) { return scalar_vec(-sign0(x[0])); };
  m.sliding_control = [bias](const Vec&, double) { return scalar_vec(-bias); };
  m.target_error = [](const Vec& x) { return std::abs(x[0]); };
  return m;
}

// ---------------------------------------------------------------------------
// SO(3) x R^3

SystemModel make_so3_system(const RigidBodyParams& params, const Mat3& r_d,
                            DisturbanceSpec disturbance,
                            std::optional<double> boundary_layer) {
  params.validate();
  if ((r_d.transpose() * r_d - Mat3::Identity()).norm() > 1e-6)
    throw NotOnManifold("desired rotation is not in SO(3)");
  if (!disturbance.empty() && disturbance.sup_bound() > params.d_bar + 1e-12)
    throw Error("disturbance bound exceeds d_bar");

  SystemModel m;
  m.family = "so3_first_order";
  m.space = std::make_shared<ProductSpace>(
      std::vector<std::shared_ptr<const StateSpace>>{
          std::make_shared<RotationGroup>(), std::make_shared<EuclideanSpace>(3)});
  m.regularized = boundary_layer.has_value();

  const Mat3 j = params.inertia;
  const Mat3 j_inv = j.inverse();

  auto split = [](const Vec& x) {
    return std::pair<Mat3, Vec3>(RotationGroup::to_matrix(x.head(9)),
                                 Vec3(x.segment(3 * 3, 3)));
  };
  auto control = [params, r_d, boundary_layer](const Mat3& r, const Vec3& w) {
    return so3_control(r, w, params, r_d, boundary_layer);
  };

  FieldFn free_field = [split, control, j, j_inv, disturbance](const Vec& x,
                                                               double t) {
    const auto [r, w] = split(x);
    const Vec3 u = control(r, w);
    const Vec3 d = disturbance.empty() ? Vec3::Zero() : Vec3(disturbance.eval(t));
    const Mat3 r_dot = r * hat(w);
    const Vec3 w_dot = j_inv * ((j * w).cross(w) + u + d);
    Vec out(12);
    out.head(9) = RotationGroup::to_vector(r_dot);
    out.tail(3) = w_dot;
    return out;
  };
  m.field = PiecewiseField({}, {Region{{}, free_field}});

  RegularFormSurface surf;
  surf.control_dim = 3;
  surf.s = [split, r_d](const Vec& x, double) -> Vec {
    const auto [r, w] = split(x);
    return w - so3_alpha(r, r_d);
  };
  surf.pin = [split, r_d](const Vec& x) {
    const auto [r, w] = split(x);
    Vec out = x;
    out.tail(3) = so3_alpha(r, r_d);
    return out;
  };
  surf.sliding_field = [split, r_d](const Vec& x, double) {
    const auto [r, w_unused] = split(x);
    const Vec3 a = so3_alpha(r, r_d);
    Vec out(12);
    out.head(9) = RotationGroup::to_vector(r * hat(a));
    out.tail(3) = so3_lie_alpha(r, a, r_d);
    return out;
  };
  m.regular_surface = std::move(surf);

  m.s_value = m.regular_surface->s;
  m.control = [split, control](const Vec& x, double) -> Vec {
    const auto [r, w] = split(x);
    return control(r, w);
  };
  m.sliding_control = [split, r_d, j](const Vec& x, double) -> Vec {
    // Nominal equivalent control keeping sdot = 0 (disturbance unknown).
    const auto [r, w] = split(x);
    return j * so3_lie_alpha(r, w, r_d) - (j * w).cross(w);
  };
  m.target_error = [split, r_d](const Vec& x) {
    const auto [r, w_unused] = split(x);
    const double c = ((r_d.transpose() * r).trace() - 1.0) / 2.0;
    return std::acos(std::clamp(c, -1.0, 1.0));
  };
  return m;
}

// ---------------------------------------------------------------------------
// S^2 x R^3

SystemModel make_s2_system(const RigidBodyParams& params, const Vec3& l_d,
                           S2AlphaKind kind, DisturbanceSpec disturbance,
                           std::optional<double> boundary_layer, double k_max) {
  params.validate();
  if (std::abs(l_d.norm() - 1.0) > 1e-9)
    throw NotOnManifold("desired reduced attitude is not a unit vector");
  if (!disturbance.empty() && disturbance.sup_bound() > params.d_bar + 1e-12)
    throw Error("disturbance bound exceeds d_bar");

  SystemModel m;
  m.family = kind == S2AlphaKind::FirstOrder ? "s2_first_order" : "s2_terminal";
  m.space = std::make_shared<ProductSpace>(
      std::vector<std::shared_ptr<const StateSpace>>{
          std::make_shared<UnitSphere>(), std::make_shared<EuclideanSpace>(3)});
  m.regularized = boundary_layer.has_value();

  const Mat3 j = params.inertia;
  const Mat3 j_inv = j.inverse();

  auto alpha = [kind, l_d](const Vec3& l) {
    return kind == S2AlphaKind::FirstOrder ? s2_alpha(l, l_d)
                                           : s2_terminal_alpha(l, l_d);
  };
  auto lie_alpha = [kind, l_d](const Vec3& l, const Vec3& w) {
    return kind == S2AlphaKind::FirstOrder ? s2_lie_alpha(l, w, l_d)
                                           : s2_terminal_lie_alpha(l, w, l_d);
  };
  auto control = [params, l_d, kind, boundary_layer, k_max](const Vec3& l,
                                                            const Vec3& w) {
    return s2_control(l, w, params, l_d, kind, boundary_layer, k_max);
  };

  FieldFn free_field = [control, j, j_inv, disturbance](const Vec& x, double t) {
    const Vec3 l = x.head(3);
    const Vec3 w = x.tail(3);
    const Vec3 u = control(l, w);
    const Vec3 d = disturbance.empty() ? Vec3::Zero() : Vec3(disturbance.eval(t));
    Vec out(6);
    out.head(3) = l.cross(w);
    out.tail(3) = j_inv * ((j * w).cross(w) + u + d);
    return out;
  };
  m.field = PiecewiseField({}, {Region{{}, free_field}});

  RegularFormSurface surf;
  surf.control_dim = 3;
  surf.s = [alpha](const Vec& x, double) -> Vec {
    const Vec3 l = x.head(3);
    const Vec3 w = x.tail(3);
    return w - alpha(l);
  };
  surf.pin = [alpha](const Vec& x) {
    Vec out = x;
    out.tail(3) = alpha(Vec3(x.head(3)));
    return out;
  };
  surf.sliding_field = [alpha, lie_alpha](const Vec& x, double) {
    const Vec3 l = x.head(3);
    const Vec3 a = alpha(l);
    Vec out(6);
    out.head(3) = l.cross(a);
    out.tail(3) = lie_alpha(l, a);
    return out;
  };
  m.regular_surface = std::move(surf);

  m.s_value = m.regular_surface->s;
  m.control = [control](const Vec& x, double) -> Vec {
    return control(Vec3(x.head(3)), Vec3(x.tail(3)));
  };
  m.sliding_control = [lie_alpha, j](const Vec& x, double) -> Vec {
    const Vec3 l = x.head(3);
    const Vec3 w = x.tail(3);
    return j * lie_alpha(l, w) - (j * w).cross(w);
  };
  m.target_error = [l_d](const Vec& x) {
    const Vec3 l = x.head(3);
    return std::atan2(l.cross(l_d).norm(), l.dot(l_d));
  };
  return m;
}

// ---------------------------------------------------------------------------
// Moebius bundle

SystemModel make_mobius_system(double theta_star,
                               std::optional<double> boundary_layer,
                               DisturbanceSpec disturbance) {
  const double c = std::cos(theta_star / 2.0);
  if (std::abs(c) < 1e-9)
    throw Error("theta* must avoid the invariant lines theta = pi + 2 pi z");
  if (!disturbance.empty() && disturbance.sup_bound() >= 1.0)
    throw InvalidGains("moebius reaching gain 1 does not dominate sup|d| = " +
                       std::to_string(disturbance.sup_bound()));

  SystemModel m;
  m.family = "mobius_smc";
  m.space = std::make_shared<EuclideanSpace>(2);
  m.quotient = QuotientManifold(mobius_action());
  m.regularized = boundary_layer.has_value();

  // The closed loop is discontinuous exactly on the sliding branch
  // { g = 0 } with g = omega + sin((theta - theta*)/2): away from the
  // invariant vertical lines, sign(cos(theta/2)) sign(s~) = sign(g).
  SwitchingFunction sw{
      "mobius_branch",
      [theta_star](const Vec& x, double) {
        return x[1] + std::sin((x[0] - theta_star) / 2.0);
      },
      [theta_star](const Vec& x, double) {
        Vec g(2);
        g << 0.5 * std::cos((x[0] - theta_star) / 2.0), 1.0;
        return g;
      },
  };

  auto region_field = [theta_star, disturbance](double side) {
    return [theta_star, side, disturbance](const Vec& x, double t) {
      Vec out(2);
      out[0] = x[1] * std::cos(x[0] / 2.0);
      out[1] = mobius_u_smooth(x[0], x[1], theta_star) - side +
               (disturbance.empty() ? 0.0 : disturbance.eval(t)[0]);
      return out;
    };
  };

  if (boundary_layer) {
    const double eps = *boundary_layer;
    FieldFn smooth = [theta_star, eps, disturbance](const Vec& x, double t) {
      const double s = mobius_s(x[0], x[1], theta_star);
      const double u = mobius_u_smooth(x[0], x[1], theta_star) -
                       sign0(std::cos(x[0] / 2.0)) * s / (std::abs(s) + eps);
      Vec out(2);
      out[0] = x[1] * std::cos(x[0] / 2.0);
      out[1] = u + (disturbance.empty() ? 0.0 : disturbance.eval(t)[0]);
      return out;
    };
    m.field = PiecewiseField({}, {Region{{}, smooth}});
  } else {
    m.field = PiecewiseField(
        {sw}, {Region{{1}, region_field(1.0)}, Region{{-1}, region_field(-1.0)}});
  }

  m.s_value = [theta_star](const Vec& x, double) {
    return scalar_vec(mobius_s(x[0], x[1], theta_star));
  };
  m.control = [theta_star](const Vec& x, double) {
    return scalar_vec(mobius_u(x[0], x[1], theta_star));
  };
  m.sliding_control = [theta_star](const Vec& x, double) {
    return scalar_vec(mobius_u_smooth(x[0], x[1], theta_star));
  };
  m.target_error = [theta_star, q = *m.quotient](const Vec& x) {
    Vec target(2);
    target << theta_star, 0.0;
    return q.orbit_distance(q.canonicalize(x), target);
  };
  return m;
}

// ---------------------------------------------------------------------------
// Twisting on the cylinder

SystemModel make_twisting_system(double k1, double k2,
                                 DisturbanceSpec disturbance) {
  check_twisting_gains(k1, k2);
  if (!disturbance.empty()) {
    const double bound = disturbance.sup_bound();
    if (!(k2 > bound && k1 - k2 > bound))
      throw InvalidGains(
          "twisting gains do not dominate the disturbance: need "
          "K2 > sup|d| and K1 - K2 > sup|d|");
  }

  SystemModel m;
  m.family = "cylinder_twisting";
  m.space = std::make_shared<EuclideanSpace>(2);
  m.quotient = QuotientManifold(cylinder_action());

  SwitchingFunction s_theta{
      "sin_theta",
      [](const Vec& x, double) { return std::sin(x[0]); },
      [](const Vec& x, double) {
        Vec g(2);
        g << std::cos(x[0]), 0.0;
        return g;
      },
  };
  SwitchingFunction s_omega{
      "omega",
      [](const Vec& x, double) { return x[1]; },
      [](const Vec&, double) {
        Vec g(2);
        g << 0.0, 1.0;
        return g;
      },
  };

  std::vector<Region> regions;
  for (int p1 : {1, -1})
    for (int p2 : {1, -1})
      regions.push_back(
          Region{{p1, p2}, [k1, k2, p1, p2, disturbance](const Vec& x, double t) {
                   Vec out(2);
                   out[0] = x[1];
                   out[1] = -k1 * p1 - k2 * p2 +
                            (disturbance.empty() ? 0.0 : disturbance.eval(t)[0]);
                   return out;
                 }});
  m.field = PiecewiseField({s_theta, s_omega}, std::move(regions));

  m.s_value = [](const Vec& x, double) {
    Vec s(2);
    s << std::sin(x[0]), x[1];
    return s;
  };
  m.control = [k1, k2](const Vec& x, double) {
    return scalar_vec(twisting_u(x[0], x[1], k1, k2));
  };
  m.sliding_control = [](const Vec&, double) { return scalar_vec(0.0); };
  m.target_error = [q = *m.quotient](const Vec& x) {
    Vec target = Vec::Zero(2);
    return q.orbit_distance(q.canonicalize(x), target);
  };
  return m;
}

}  // namespace geosmc
