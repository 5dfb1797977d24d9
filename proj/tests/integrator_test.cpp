#include <doctest.h>

#include <cmath>

#include "geosmc/integrator.hpp"

using namespace geosmc;

namespace {

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec sphere_state(double theta, S2AlphaKind kind, const Vec3& l_d) {
  const Vec3 l(std::sin(theta), 0.0, std::cos(theta));
  const Vec3 w = kind == S2AlphaKind::FirstOrder ? s2_alpha(l, l_d)
                                                 : s2_terminal_alpha(l, l_d);
  Vec x(6);
  x.head(3) = l;
  x.tail(3) = w;
  return x;
}

RigidBodyParams unit_body() {
  RigidBodyParams p;
  p.inertia = Mat3::Identity();
  p.d_bar = 0.3;
  p.eta = 0.1;
  return p;
}

double sphere_theta(const Vec& x, const Vec3& l_d) {
  const Vec3 l = x.head(3);
  return std::atan2(l.cross(l_d).norm(), l.dot(l_d));
}

}  // namespace

TEST_CASE("scalar example follows the piecewise closed form") {
  const SystemModel m = make_line_system(0.5);
  const Trajectory traj = integrate(m, vec1(1.0), 0.0, 4.0);
  CHECK(traj.stop == StopReason::Completed);

  double max_err = 0.0;
  for (const TrajectorySample& s : traj.samples) {
    const double expected = s.t < 2.0 ? -0.5 * s.t + 1.0 : 0.0;
    max_err = std::max(max_err, std::abs(s.x[0] - expected));
  }
  CHECK(max_err <= 1e-6);

  const auto entry = traj.first_event_time(EventKind::SlidingEntry);
  REQUIRE(entry.has_value());
  CHECK(std::abs(*entry - 2.0) <= 1e-6);

  // Event ordering: the entry is preceded by a surface hit at the same time.
  const auto hit = traj.first_event_time(EventKind::SurfaceHit);
  REQUIRE(hit.has_value());
  CHECK(*hit <= *entry);
  CHECK(*entry - *hit <= 1e-10);
}

TEST_CASE("sliding residency and strictly increasing samples") {
  const SystemModel m = make_line_system(0.5);
  const Trajectory traj = integrate(m, vec1(0.3), 0.0, 2.0);
  double prev = -1.0;
  for (const TrajectorySample& s : traj.samples) {
    CHECK(s.t > prev);
    prev = s.t;
    if (s.mode.kind == ModeKind::Sliding) CHECK(std::abs(s.s[0]) <= 1e-7);
    CHECK(s.drift <= 1e-8);
  }
}

TEST_CASE("sphere sliding phase follows the great-circle closed form") {
  const Vec3 l_d(0, 0, 1);
  const SystemModel m =
      make_s2_system(unit_body(), l_d, S2AlphaKind::FirstOrder, {});
  for (double theta0 : {0.5, M_PI / 2.0, 3.0}) {
    const Trajectory traj =
        integrate(m, sphere_state(theta0, S2AlphaKind::FirstOrder, l_d), 0.0, 5.0);
    CHECK(traj.stop == StopReason::Completed);
    double max_err = 0.0, max_drift = 0.0;
    for (const TrajectorySample& s : traj.samples) {
      const double expected =
          2.0 * std::atan(std::exp(-s.t) * std::tan(theta0 / 2.0));
      max_err = std::max(max_err, std::abs(sphere_theta(s.x, l_d) - expected));
      max_drift = std::max(max_drift, s.drift);
    }
    CHECK(max_err <= 1e-5);
    CHECK(max_drift <= 1e-8);
  }
}

TEST_CASE("terminal sliding phase reaches the target in finite time and stays") {
  const Vec3 l_d(0, 0, 1);
  const SystemModel m =
      make_s2_system(unit_body(), l_d, S2AlphaKind::Terminal, {});
  IntegratorOptions opts;
  opts.step = 1e-4;  // resolves the square-root approach to the reach time
  const double ts = terminal_theta_star();

  for (double theta0 : {0.25, 1.0}) {
    const double t_star = 2.0 * std::sqrt(theta0 * ts) / std::sin(ts);
    const Trajectory traj = integrate(
        m, sphere_state(theta0, S2AlphaKind::Terminal, l_d), 0.0, t_star + 1.0,
        opts);
    double reach = -1.0;
    double stay_max = 0.0;
    for (const TrajectorySample& s : traj.samples) {
      const double theta = sphere_theta(s.x, l_d);
      if (reach < 0.0 && theta <= 1e-7) reach = s.t;
      if (reach >= 0.0 && s.t >= reach) stay_max = std::max(stay_max, theta);
    }
    REQUIRE(reach >= 0.0);
    CHECK(std::abs(reach - t_star) <= 1e-3);
    CHECK(stay_max <= 1e-6);
  }
}

TEST_CASE("unit-vector reaching: V decreases strictly until sliding entry") {
  const Vec3 l_d(0, 0, 1);
  DisturbanceSpec dist;
  dist.dim = 3;
  dist.terms.push_back({DisturbanceTerm::Kind::SineOfCosine, 0, 0.1, 0, 0, 4.0});
  dist.terms.push_back({DisturbanceTerm::Kind::Constant, 1, 0.2, 0, 0, 0});
  dist.terms.push_back({DisturbanceTerm::Kind::Sine, 2, 0.2, 6.0, 0, 0});
  const SystemModel m =
      make_s2_system(unit_body(), l_d, S2AlphaKind::FirstOrder, dist);

  Vec x0(6);
  x0 << 1, 0, 0, 0, 1, 1;
  const Trajectory traj = integrate(m, x0, 0.0, 10.0);
  const auto entry = traj.first_event_time(EventKind::SlidingEntry);
  REQUIRE(entry.has_value());

  double v_prev = std::numeric_limits<double>::infinity();
  for (const TrajectorySample& s : traj.samples) {
    if (s.t >= *entry) break;
    const double v = s.s.squaredNorm();  // J = I
    CHECK(v < v_prev);
    v_prev = v;
  }
  // After entry the state is pinned to the surface.
  for (const TrajectorySample& s : traj.samples)
    if (s.t > *entry) CHECK(s.s.norm() <= 1e-7);
}

TEST_CASE("regularized sphere run settles near the target") {
  const Vec3 l_d(0, 0, 1);
  const SystemModel m =
      make_s2_system(unit_body(), l_d, S2AlphaKind::Terminal, {}, 1e-3);
  Vec x0(6);
  x0 << 1, 0, 0, 0, 1, 1;
  const Trajectory traj = integrate_regularized(m, x0, 0.0, 10.0);
  CHECK(traj.events.empty());
  CHECK(sphere_theta(traj.back().x, l_d) <= 1e-2);
  CHECK_THROWS(integrate_regularized(
      make_s2_system(unit_body(), l_d, S2AlphaKind::Terminal, {}), x0, 0.0, 1.0));
}

TEST_CASE("regularized run from a stationary on-surface state stays put") {
  const Vec3 l_d(0, 0, 1);
  RigidBodyParams p = unit_body();
  p.d_bar = 0.0;  // no disturbance at all
  const SystemModel m = make_s2_system(p, l_d, S2AlphaKind::FirstOrder, {}, 1e-3);
  Vec x0(6);
  x0 << 0, 0, 1, 0, 0, 0;  // L = Ld, omega = alpha = 0
  const Trajectory traj = integrate_regularized(m, x0, 0.0, 1.0);
  CHECK((traj.back().x - x0).norm() <= 1e-12);
}

TEST_CASE("halving the boundary layer shrinks the terminal s-band") {
  const Vec3 l_d(0, 0, 1);
  DisturbanceSpec dist;
  dist.dim = 3;
  dist.terms.push_back({DisturbanceTerm::Kind::Sine, 2, 0.2, 6.0, 0, 0});
  RigidBodyParams p = unit_body();
  p.d_bar = 0.2;
  Vec x0(6);
  x0 << 1, 0, 0, 0, 1, 1;

  IntegratorOptions opts;
  opts.step = 5e-5;  // keep the boundary-layer dynamics well resolved
  auto band = [&](double eps) {
    const SystemModel m =
        make_s2_system(p, l_d, S2AlphaKind::FirstOrder, dist, eps);
    const Trajectory traj = integrate_regularized(m, x0, 0.0, 5.0, opts);
    double worst = 0.0;
    for (const TrajectorySample& s : traj.samples)
      if (s.t >= 4.0) worst = std::max(worst, s.s.norm());
    return worst;
  };
  const double wide = band(1e-3);
  const double narrow = band(5e-4);
  const double factor = wide / narrow;
  CHECK(factor >= 1.5);
  CHECK(factor <= 2.5);
}

TEST_CASE("orbit equivalence of quotient closed loops") {
  const SystemModel twisting = make_twisting_system(5.0, 2.0);
  CHECK(orbit_equivalence_check(twisting, vec2(2.0, 0.0), 0, 0.0, 5.0) == 0.0);
  CHECK(orbit_equivalence_check(twisting, vec2(2.0, 0.0), 3, 0.0, 5.0) <= 1e-6);

  const SystemModel mob = make_mobius_system(1.0);
  CHECK(orbit_equivalence_check(mob, vec2(1.0, 0.5), 1, 0.0, 10.0) <= 1e-6);
}

TEST_CASE("twisting: monotone initial divergence from the antipodal corner") {
  const SystemModel m = make_twisting_system(5.0, 2.0);
  const QuotientManifold& q = *m.quotient;
  Vec antipode = vec2(M_PI, 0.0);
  const Trajectory traj = integrate(m, vec2(M_PI + 1e-3, 0.0), 0.0, 0.5);
  double prev = -1.0;
  for (const TrajectorySample& s : traj.samples) {
    const double dist = q.orbit_distance(s.x, antipode);
    CHECK(dist > prev);
    prev = dist;
  }
  CHECK(prev > 1.0);  // it is well away after half a time unit
}

TEST_CASE("twisting: the exact corner is a stationary second-order point") {
  const SystemModel m = make_twisting_system(5.0, 2.0);
  const Trajectory traj = integrate(m, vec2(M_PI, 0.0), 0.0, 1.0);
  CHECK(traj.first_event_time(EventKind::EquilibriumReached).has_value());
  CHECK((traj.back().x - vec2(M_PI, 0.0)).norm() <= 1e-12);
}

TEST_CASE("sliding exit through the lambda* hysteresis margin") {
  // Crafted planar system: s = x2, f+ = (1, 2 x1 - 1), f- = (1, 1).
  // Sliding starts attractive at the origin with lambda* = 1/(2 - 2 x1)
  // and the + field turns tangential as x1 -> 1/2.
  SwitchingFunction sw{"x2", [](const Vec& x, double) { return x[1]; },
                       [](const Vec&, double) { return vec2(0.0, 1.0); }};
  PiecewiseField pf(
      {sw},
      {Region{{1}, [](const Vec& x, double) { return vec2(1.0, 2.0 * x[0] - 1.0); }},
       Region{{-1}, [](const Vec&, double) { return vec2(1.0, 1.0); }}});
  SystemModel m;
  m.family = "synthetic";
  m.space = std::make_shared<EuclideanSpace>(2);
  m.field = pf;
  m.s_value = [](const Vec& x, double) { return vec1(x[1]); };

  const Trajectory traj = integrate(m, vec2(0.0, 0.0), 0.0, 1.5);
  const auto exit = traj.first_event_time(EventKind::SlidingExit);
  REQUIRE(exit.has_value());
  // Exit fires when lambda* = 1/(2 - 2 x1) reaches 1 - margin, i.e.
  // x1 = (1 - 2 margin) / (2 - 2 margin) with the default margin 0.02.
  CHECK(*exit == doctest::Approx(0.4898).epsilon(1e-2));
  // After the tangency the trajectory leaves the surface for good.
  CHECK(traj.back().x[1] > 0.1);
}

TEST_CASE("every sliding entry is preceded by a surface hit at the same time") {
  const Vec3 l_d(0, 0, 1);
  std::vector<std::pair<SystemModel, Vec>> runs;
  runs.emplace_back(make_line_system(0.5), vec1(1.0));
  runs.emplace_back(make_s2_system(unit_body(), l_d, S2AlphaKind::FirstOrder, {}),
                    sphere_state(0.8, S2AlphaKind::FirstOrder, l_d));
  Vec off_surface(6);
  off_surface << 1, 0, 0, 0, 1, 1;
  runs.emplace_back(make_s2_system(unit_body(), l_d, S2AlphaKind::FirstOrder, {}),
                    off_surface);
  runs.emplace_back(make_mobius_system(1.0), vec2(1.0, 0.5));

  for (const auto& [m, x0] : runs) {
    const Trajectory traj = integrate(m, x0, 0.0, 3.0);
    for (std::size_t i = 0; i < traj.events.size(); ++i) {
      if (traj.events[i].kind != EventKind::SlidingEntry) continue;
      REQUIRE(i > 0);
      CHECK(traj.events[i - 1].kind == EventKind::SurfaceHit);
      CHECK(traj.events[i].t - traj.events[i - 1].t <= 1e-10);
    }
    CHECK(traj.first_event_time(EventKind::SlidingEntry).has_value());
  }
}

TEST_CASE("budget stop returns a partial trajectory") {
  const SystemModel m = make_line_system(0.5);
  IntegratorOptions opts;
  opts.max_steps = 10;
  const Trajectory traj = integrate(m, vec1(1.0), 0.0, 4.0, opts);
  CHECK(traj.stop == StopReason::Budget);
  CHECK(traj.samples.size() >= 2);
  CHECK(traj.back().t < 4.0);
}

TEST_CASE("degenerate classification halts with a partial trajectory") {
  SwitchingFunction sw{"x2", [](const Vec& x, double) { return x[1]; },
                       [](const Vec&, double) { return vec2(0.0, 1.0); }};
  // Both one-sided fields are tangent to the surface: nothing to decide.
  PiecewiseField pf(
      {sw}, {Region{{1}, [](const Vec&, double) { return vec2(1.0, 0.0); }},
             Region{{-1}, [](const Vec&, double) { return vec2(1.0, 0.0); }}});
  SystemModel m;
  m.family = "synthetic";
  m.space = std::make_shared<EuclideanSpace>(2);
  m.field = pf;
  m.s_value = [](const Vec& x, double) { return vec1(x[1]); };

  const Trajectory traj = integrate(m, vec2(0.0, 0.0), 0.0, 1.0);
  CHECK(traj.stop == StopReason::Degenerate);
}

TEST_CASE("step halving improves smooth-phase accuracy by the rk4 rate") {
  const Vec3 l_d(0, 0, 1);
  const SystemModel m =
      make_s2_system(unit_body(), l_d, S2AlphaKind::FirstOrder, {});
  const double theta0 = M_PI / 2.0;

  auto max_err = [&](double step) {
    IntegratorOptions opts;
    opts.step = step;
    const Trajectory traj =
        integrate(m, sphere_state(theta0, S2AlphaKind::FirstOrder, l_d), 0.0,
                  5.0, opts);
    double worst = 0.0;
    for (const TrajectorySample& s : traj.samples) {
      const double expected =
          2.0 * std::atan(std::exp(-s.t) * std::tan(theta0 / 2.0));
      worst = std::max(worst, std::abs(sphere_theta(s.x, l_d) - expected));
    }
    return worst;
  };
  const double coarse = max_err(4e-3);
  const double fine = max_err(2e-3);
  CHECK(coarse / fine >= 8.0);
}
