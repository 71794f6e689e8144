#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dualflow/planar.hpp"
#include "dualflow/stats.hpp"

using namespace dualflow;
using doctest::Approx;
using std::numbers::pi;

TEST_CASE("uniform planar sampling") {
  const auto e = make_ellipse(2.0, 1.0, 512);
  const PlanarDomain dom(e);
  const Vec2 box = dom.box_max() - dom.box_min();
  CHECK(dom.area() / (box.x * box.y) == Approx(pi / 4).epsilon(1e-4));

  RandomStream rng(3, 0);
  const int n = 100000;
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec2 p = sample_uniform_planar(dom, rng);
    sx += p.x;
    sy += p.y;
  }
  // sd of x is a/2 = 1 and of y is b/2 = 0.5 for a uniform ellipse.
  CHECK(std::abs(sx / n) < 4.0 * 1.0 / std::sqrt(n));
  CHECK(std::abs(sy / n) < 4.0 * 0.5 / std::sqrt(n));

  // A superellipse close to the square [-1,1]^2 fills its box.
  const PlanarDomain square(DiscreteCurve(superellipse_nodes(1.0, 1.0, 40.0, 1024)));
  CHECK(square.area() / 4.0 > 0.97);
}

TEST_CASE("distance cdf is uniformizing") {
  const auto e = make_ellipse(2.0, 1.0, 1024);
  CHECK(distance_cdf(e, 0.0) == 0.0);
  CHECK(distance_cdf(e, 1.0) == Approx(1.0));
  // Thin boundary strip: area ~ perimeter * s.
  const double s = 1e-4;
  CHECK(distance_cdf(e, s) == Approx(e.base().perimeter() * s / (2 * pi)).epsilon(1e-3));
  const auto disk = make_circle(1.0, 1024);
  CHECK(distance_cdf(disk, 0.5) == Approx(0.75).epsilon(1e-5));

  RandomStream rng(9, 0);
  const PlanarDomain dom(e);
  std::vector<double> u;
  for (int i = 0; i < 5000; ++i) {
    const Vec2 p = sample_uniform_planar(dom, rng);
    u.push_back(distance_cdf(e, foot_point(p, dom).distance));
  }
  CHECK(ks_one_sample(EmpiricalSample::from_unsorted(u), uniform01_cdf) < 0.025);
}

TEST_CASE("extended theta") {
  const auto e = make_ellipse(2.0, 1.0, 1024);
  const auto sk = medial_axis(e);
  const PlanarDomain dom(e);
  // Beyond the skeleton end on the axis.
  CHECK(extended_theta(foot_point({1.8, 0.0}, dom), sk, sk.half_length) == 0.0);
  // Above the centre: vertical normal line, meets the skeleton at a right angle.
  CHECK(extended_theta(foot_point({0.0, 0.5}, dom), sk, sk.half_length) ==
        Approx(pi / 2).epsilon(1e-3));
  // Constant along normal lines.
  const auto f1 = foot_point({1.0, 0.5}, dom);
  const Vec2 further = f1.foot + 0.5 * f1.distance * f1.inward_normal;
  CHECK(extended_theta(foot_point(further, dom), sk, sk.half_length) ==
        Approx(extended_theta(f1, sk, sk.half_length)).epsilon(1e-3));
}

TEST_CASE("endpoint law on the ellipse") {
  // h'' at the vertex of x^2/a^2 + y^2/b^2 = 1 is -3a(a^2 - b^2)/b^6 and
  // rho = b^2/a, so dx*/dt = rho^2 h'' / 2 = -2.25 for a = 2, b = 1.
  const auto e = make_ellipse(2.0, 1.0, 4096);
  CHECK(skeleton_endpoint_speed(e) == Approx(-2.25).epsilon(1e-3));

  // Finite-difference oracle: one deterministic step, re-extract x*.
  const double dt = 1e-5;
  const auto next = deterministic_flow_step(e, dt, false);
  REQUIRE(next.has_value());
  const double rate = (medial_axis(*next, 2).half_length - medial_axis(e, 2).half_length) / dt;
  CHECK(std::abs(rate / skeleton_endpoint_speed(e) - 1.0) <= 0.02);
}

TEST_CASE("deterministic flow keeps convexity and shrinks the skeleton") {
  auto c = make_ellipse(2.0, 1.0, 256);
  double x_prev = medial_axis(c, 2).half_length;
  int steps = 0;
  for (; steps < 3000; ++steps) {
    const auto next = deterministic_flow_step(c, 1e-3);
    if (!next) break;
    c = *next;
    CHECK(is_strictly_convex(c.nodes()));
    if (steps % 10 == 9) {
      const double x = medial_axis(c, 2).half_length;
      CHECK(x <= x_prev + 1e-9);
      x_prev = x;
    }
  }
  CHECK(steps > 100);
}

TEST_CASE("planar step with zero noise is a deterministic normal flow") {
  const auto e = make_ellipse(2.0, 1.0, 1024);
  PlanarOptions opt;
  opt.resample = false;
  opt.implicit_curvature = false;
  auto st = make_planar_state(e, {1.8, 0.0}, opt);
  const double dt = 1e-4;
  const PlanarDomain before(e);
  const auto info = planar_step(st, {0.0, 0.0}, dt, 0.01, opt);
  REQUIRE(info.stop == StopReason::none);
  CHECK(info.level_curvature == Approx(10.0 / 3.0).epsilon(0.01));
  CHECK(info.theta == 0.0);
  CHECK(info.local_time == 0.0);
  const auto& c = before.component(0);
  for (std::size_t i = 0; i < e.size(); i += 37) {
    const double moved = dot(st.domain.nodes()[i] - c.nodes[i], c.normals[i]);
    CHECK(moved == Approx((0.5 * c.curvature[i] - info.level_curvature) * dt).epsilon(1e-9));
  }
}

TEST_CASE("implicit curvature step matches the explicit one to first order") {
  const auto e = make_ellipse(2.0, 1.0, 1024);
  PlanarOptions opt;
  opt.resample = false;
  auto st = make_planar_state(e, {1.8, 0.0}, opt);
  const double dt = 1e-4;
  const PlanarDomain before(e);
  const auto info = planar_step(st, {0.0, 0.0}, dt, 0.01, opt);
  REQUIRE(info.stop == StopReason::none);
  const auto& c = before.component(0);
  for (std::size_t i = 0; i < e.size(); i += 37) {
    const double moved = dot(st.domain.nodes()[i] - c.nodes[i], c.normals[i]);
    CHECK(moved == Approx((0.5 * c.curvature[i] - info.level_curvature) * dt).epsilon(2e-3));
  }
}

TEST_CASE("implicit curvature step stays symmetric where the explicit one blows up") {
  // dt = 1e-3 is ten times the squared node spacing at 1024 nodes.
  const auto e = make_ellipse(2.0, 1.0, 1024);
  for (const bool implicit : {true, false}) {
    PlanarOptions opt;
    opt.implicit_curvature = implicit;
    auto st = make_planar_state(e, {0.4, 0.3}, opt);
    RandomStream rng(1, 0);
    StopReason stop = StopReason::none;
    for (int k = 0; k < 30 && stop == StopReason::none; ++k) {
      const Vec2 dx{rng.normal(std::sqrt(1e-3)), rng.normal(std::sqrt(1e-3))};
      stop = planar_step(st, dx, 1e-3, std::sqrt(1e-3), opt).stop;
    }
    if (implicit) {
      CHECK(stop == StopReason::none);
      CHECK(symmetry_defect(st.domain.nodes()) < 1e-12);
    } else {
      CHECK(stop != StopReason::none);
    }
  }
}

TEST_CASE("planar step: co-vertex motion for X on the axis past the skeleton") {
  const std::size_t n = 2048;
  const auto e = make_ellipse(2.0, 1.0, n);
  PlanarOptions opt;
  opt.resample = false;
  auto st = make_planar_state(e, {1.8, 0.0}, opt);
  const double dt = 1e-5, dx1 = 0.003;
  const auto info = planar_step(st, {dx1, 0.0}, dt, 0.01, opt);
  REQUIRE(info.stop == StopReason::none);
  CHECK(info.drive == Approx(dx1));
  // Co-vertex (0, 1): inward normal (0, -1), curvature 1/4.
  const Vec2 top = st.domain.nodes()[n / 4];
  const double inward = 1.0 - top.y;
  CHECK(inward == Approx(-dx1 + (0.125 - 10.0 / 3.0) * dt).epsilon(0.01));
}

TEST_CASE("planar step preserves symmetry and commutes with reflections") {
  const auto e = make_ellipse(2.0, 1.0, 256);
  RandomStream rng(21, 0);
  const double dt = 1e-4, bw = std::sqrt(dt);
  auto a = make_planar_state(e, {0.4, 0.3});
  auto b = make_planar_state(e, {-0.4, -0.3});
  for (int k = 0; k < 200; ++k) {
    const Vec2 dx{rng.normal(std::sqrt(dt)), rng.normal(std::sqrt(dt))};
    const auto ia = planar_step(a, dx, dt, bw);
    const auto ib = planar_step(b, -dx, dt, bw);
    REQUIRE(ia.stop == StopReason::none);
    REQUIRE(ib.stop == StopReason::none);
    CHECK(symmetry_defect(a.domain.nodes()) <= 1e-9);
    double diff = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
      diff = std::max(diff, norm(a.domain.nodes()[i] - b.domain.nodes()[i]));
    CHECK(diff <= 1e-9);
  }
}

TEST_CASE("planar state validation") {
  const auto e = make_ellipse(2.0, 1.0, 256);
  CHECK_THROWS_AS(make_planar_state(e, {3.0, 0.0}), DomainError);
}

TEST_CASE("frozen planar record away from the skeleton") {
  // Near the top co-vertex the distance is smooth; the residual is the
  // Ito discretization error only.
  const auto e = make_ellipse(2.0, 1.0, 1024);
  const TimeGrid grid(1e-3, 100);
  RandomStream rng(8, 0);
  const auto rec = frozen_planar_record(e, {0.0, 0.8}, grid, rng, bandwidth_for(grid.dt()));
  REQUIRE(rec.has_value());
  CHECK(rec->grid().n_steps() == 100);
  CHECK(rec->channel(kDistanceChannel).front() == Approx(0.2).epsilon(1e-4));
  for (double v : rec->channel(kLocalTimeChannel)) CHECK(v == 0.0);
  CHECK(tanaka_path_residual(*rec) < 2e-3);
  CHECK_THROWS_AS(frozen_planar_record(e, {3.0, 0.0}, grid, rng, 0.1), DomainError);
}

TEST_CASE("frozen planar record stops before leaving the domain") {
  const auto e = make_ellipse(2.0, 1.0, 512);
  const TimeGrid grid(1.0, 1000);
  RandomStream rng(9, 0);
  const auto rec = frozen_planar_record(e, {1.99, 0.0}, grid, rng, 0.03);
  if (rec) {
    CHECK(rec->grid().n_steps() < 1000);
    for (double v : rec->channel(kDistanceChannel)) CHECK(v > 0.0);
  }
}
