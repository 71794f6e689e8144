#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dualflow/geometry.hpp"

using namespace dualflow;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

// Minimum distance from q to the analytic ellipse by dense parametric
// sampling; returns the minimizing point.
Vec2 dense_ellipse_foot(double a, double b, Vec2 q, double* dist = nullptr) {
  const int n = 2000000;
  double best = 1e300;
  Vec2 arg;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * kPi * k / n;
    const Vec2 p{a * std::cos(t), b * std::sin(t)};
    const double d = norm2(q - p);
    if (d < best) {
      best = d;
      arg = p;
    }
  }
  if (dist) *dist = std::sqrt(best);
  return arg;
}

ScalarField field(int which) {
  switch (which) {
    case 0:
      return {[](Vec2) { return 1.0; }, [](Vec2) { return Vec2{0.0, 0.0}; }};
    case 1:
      return {[](Vec2 p) { return p.x; }, [](Vec2) { return Vec2{1.0, 0.0}; }};
    case 2:
      return {[](Vec2 p) { return p.x * p.x + 2.0; }, [](Vec2 p) { return Vec2{2.0 * p.x, 0.0}; }};
    default:
      return {[](Vec2 p) { return std::exp(p.x / 4.0); },
              [](Vec2 p) { return Vec2{0.25 * std::exp(p.x / 4.0), 0.0}; }};
  }
}

}  // namespace

TEST_CASE("circumcurvature") {
  CHECK(circumcurvature({1, 0}, {0, 1}, {-1, 0}) == Approx(1.0));
  CHECK(circumcurvature({-1, 0}, {0, 1}, {1, 0}) == Approx(-1.0));
  CHECK(circumcurvature({0, 0}, {1, 0}, {2, 0}) == 0.0);
}

TEST_CASE("curve validation") {
  CHECK_THROWS_AS(DiscreteCurve(circle_nodes(1.0, 8)), InvariantError);
  auto cw = circle_nodes(1.0, 32);
  std::reverse(cw.begin(), cw.end());
  CHECK_THROWS_AS(DiscreteCurve{cw}, InvariantError);

  // Swapping two nearby nodes makes edges (2,5) and (3,6) cross.
  auto eight = circle_nodes(1.0, 32);
  std::swap(eight[3], eight[5]);
  CHECK_THROWS_AS(DiscreteCurve{eight}, InvariantError);

  auto asym = ellipse_nodes(2.0, 1.0, 64);
  asym[5].x += 1e-6;
  CHECK_THROWS_AS(SymmetricConvexCurve{asym}, InvariantError);

  // Dent at the co-vertex breaks convexity but not symmetry.
  auto dented = ellipse_nodes(2.0, 1.0, 64);
  dented[16].y = 0.8;
  dented[48].y = -0.8;
  CHECK_THROWS_AS(SymmetricConvexCurve{dented}, InvariantError);

  CHECK_NOTHROW(SymmetricConvexCurve(ellipse_nodes(2.0, 1.0, 64)));
  CHECK_THROWS_AS(ellipse_nodes(2.0, 1.0, 66), ConfigError);
}

TEST_CASE("ellipse nodes are equally spaced and on the ellipse") {
  const auto nodes = ellipse_nodes(3.0, 1.0, 256);
  const double h0 = norm(nodes[1] - nodes[0]);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec2 p = nodes[i];
    CHECK(p.x * p.x / 9.0 + p.y * p.y == Approx(1.0).epsilon(1e-12));
    CHECK(norm(nodes[(i + 1) % nodes.size()] - p) == Approx(h0).epsilon(1e-4));
  }
  CHECK(symmetry_defect(nodes) == 0.0);
}

TEST_CASE("curvature at nodes") {
  const auto circle = make_circle(2.0, 1024);
  for (std::size_t i : {0u, 1u, 100u, 511u, 777u}) CHECK(curvature_at(circle, i) == Approx(0.5).epsilon(1e-6));

  const auto e = make_ellipse(2.0, 1.0, 2048);
  CHECK(std::abs(curvature_at(e, 0) - 2.0) <= 1e-3);
  CHECK(std::abs(curvature_at(e, 512) - 0.25) <= 1e-3);
  const Vec2 n0 = inward_normal_at(e.base(), 0);
  CHECK(n0.x == Approx(-1.0));
  CHECK(std::abs(n0.y) < 1e-12);
}

TEST_CASE("foot points") {
  const auto unit = make_circle(1.0, 1024);
  auto fp = foot_point({0.5, 0.0}, unit);
  CHECK(fp.foot.x == Approx(1.0));
  CHECK(fp.foot.y == Approx(0.0));
  CHECK(fp.distance == Approx(0.5));
  CHECK(fp.inward_normal.x == Approx(-1.0));

  auto center = foot_point({0.0, 0.0}, unit);
  CHECK(center.distance == Approx(1.0));
  CHECK(center.node_index == 0);
  CHECK(center.foot.x == Approx(1.0));

  const auto e = make_ellipse(2.0, 1.0, 2048);
  double dd = 0.0;
  const Vec2 oracle = dense_ellipse_foot(2.0, 1.0, {1.8, 0.0}, &dd);
  auto fe = foot_point({1.8, 0.0}, e);
  CHECK(fe.distance == Approx(dd).epsilon(1e-7));
  CHECK(fe.foot.x == Approx(oracle.x).epsilon(1e-7));
  CHECK(fe.distance == Approx(0.2).epsilon(1e-7));

  // Off-axis query against the dense oracle.
  const Vec2 q{0.7, 0.45};
  const Vec2 o2 = dense_ellipse_foot(2.0, 1.0, q, &dd);
  auto f2 = foot_point(q, e);
  CHECK(f2.distance == Approx(dd).epsilon(1e-6));
  CHECK(norm(f2.foot - o2) < 1e-5);
  CHECK(f2.distance == Approx(norm(q - f2.foot)).epsilon(1e-14));

  CHECK_THROWS_AS(foot_point({2.5, 0.0}, e), DomainError);
  CHECK_THROWS_AS(foot_point({2.0, 0.0}, e), DomainError);
}

TEST_CASE("level curvature") {
  const auto disk = make_circle(1.0, 2048);
  CHECK(level_curvature({0.75, 0.0}, disk) == Approx(4.0 / 3.0).epsilon(1e-6));
  const auto e = make_ellipse(2.0, 1.0, 2048);
  CHECK(level_curvature({1.8, 0.0}, e) == Approx(10.0 / 3.0).epsilon(0.01));
  // Boundary limit.
  CHECK(level_curvature({0.0, 1.0 - 1e-9}, e) == Approx(0.25).epsilon(1e-3));

  // Offset identity 1/h = 1/kappa - s.
  const PlanarDomain dom(e);
  for (Vec2 q : {Vec2{1.0, 0.5}, Vec2{-0.3, -0.8}, Vec2{1.6, 0.1}, Vec2{0.2, 0.2}}) {
    const auto fp = foot_point(q, dom);
    const double h = level_curvature(fp);
    CHECK(1.0 / h == Approx(1.0 / fp.curvature - fp.distance).epsilon(0.01));
  }

  FootPointResult focal;
  focal.distance = 1.0;
  focal.curvature = 2.0;
  CHECK_THROWS_AS(level_curvature(focal), DomainError);
}

TEST_CASE("medial axis") {
  const auto e = make_ellipse(2.0, 1.0, 2048);
  const auto seg = medial_axis(e);
  CHECK(std::abs(seg.half_length - 1.5) <= 1e-3);
  CHECK(seg.theta_at(0.0) == Approx(kPi / 2.0).epsilon(1e-6));
  CHECK(seg.theta_at(seg.half_length) == 0.0);
  CHECK(seg.theta_at(1.7) == 0.0);
  for (std::size_t k = 1; k < seg.theta.size(); ++k) CHECK(seg.theta[k] <= seg.theta[k - 1] + 1e-12);

  // Brute-force medial test: the largest axis abscissa whose nearest
  // analytic boundary point is not the vertex.
  double lo = 1.0, hi = 1.99;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vec2 f = dense_ellipse_foot(2.0, 1.0, {mid, 0.0});
    (std::abs(f.y) > 1e-6 ? lo : hi) = mid;
  }
  CHECK(std::abs(seg.half_length - lo) < 2e-3);

  const auto c = medial_axis(make_circle(1.0, 1024));
  CHECK(c.half_length == 0.0);
}

TEST_CASE("medial axis converges under refinement") {
  const double x1 = medial_axis(make_ellipse(2.0, 1.0, 256), 2).half_length;
  const double x2 = medial_axis(make_ellipse(2.0, 1.0, 512), 2).half_length;
  const double x3 = medial_axis(make_ellipse(2.0, 1.0, 1024), 2).half_length;
  CHECK(std::abs(x2 - x3) <= std::abs(x1 - x2));
}

TEST_CASE("tube integration areas") {
  TubeOptions fine;
  fine.ray_step = 1e-4;
  const auto disk = make_circle(1.0, 2048);
  const double a = tube_integrate(disk.base(), [](Vec2) { return 1.0; }, fine);
  CHECK(std::abs(a / kPi - 1.0) <= 1e-4);
  const double mx = tube_integrate(disk.base(), [](Vec2 p) { return p.x; }, fine);
  CHECK(std::abs(mx) <= 1e-6);

  const auto e = make_ellipse(2.0, 1.0, 2048);
  const double ae = tube_integrate(e.base(), [](Vec2) { return 1.0; });
  CHECK(std::abs(ae / (2.0 * kPi) - 1.0) <= 1e-3);
  // int (x^2 + 2) over the ellipse = pi a b (a^2/4 + 2).
  const double ge = tube_integrate(e.base(), [](Vec2 p) { return p.x * p.x + 2.0; });
  CHECK(ge == Approx(6.0 * kPi).epsilon(1e-3));

  const auto annulus = make_annulus(1.0, 2.0, 1024);
  const auto rays = trace_normal_rays(annulus);
  for (const auto& r : rays) CHECK(r.tau == Approx(0.5).epsilon(1e-6));
  CHECK(tube_integrate(annulus, [](Vec2) { return 1.0; }) == Approx(3.0 * kPi).epsilon(1e-4));

  TubeOptions bad;
  bad.ray_step = 0.0;
  CHECK_THROWS_AS(tube_integrate(disk.base(), [](Vec2) { return 1.0; }, bad), ResolutionError);
}

TEST_CASE("tube area matches shoelace area") {
  std::vector<PlanarDomain> shapes;
  shapes.emplace_back(make_circle(1.0, 1024));
  shapes.emplace_back(make_ellipse(2.0, 1.0, 1024));
  shapes.emplace_back(make_ellipse(3.0, 1.0, 1024));
  shapes.push_back(make_annulus(1.0, 2.0, 1024));
  shapes.emplace_back(SymmetricConvexCurve(superellipse_nodes(1.0, 1.0, 4.0, 1024)));
  for (const auto& d : shapes) {
    const double t = tube_integrate(d, [](Vec2) { return 1.0; });
    CHECK(std::abs(t / d.area() - 1.0) <= 1e-3);
  }
}

TEST_CASE("key formula closed forms") {
  const auto disk = make_circle(1.0, 2048);
  const auto r = stokes_identity_residual(disk, field(0));
  CHECK(r.lhs == Approx(2.0 * kPi).epsilon(1e-3));
  CHECK(r.skeleton_term == 0.0);
  CHECK(r.residual <= 1e-3);

  const auto annulus = make_annulus(1.0, 2.0, 2048);
  const auto rays = trace_normal_rays(annulus);
  const auto skel = traced_skeleton_quadrature(rays, 0);
  const auto ra = stokes_identity_residual(annulus, skel, field(0));
  CHECK(std::abs(ra.lhs) <= 1e-3);
  CHECK(ra.boundary_term == Approx(6.0 * kPi).epsilon(1e-5));
  CHECK(ra.skeleton_term == Approx(6.0 * kPi).epsilon(1e-5));
  CHECK(ra.residual <= 1e-3);
}

TEST_CASE("key formula corpus") {
  for (int g = 0; g < 4; ++g) {
    CAPTURE(g);
    for (double a : {1.0, 2.0, 3.0}) {
      CAPTURE(a);
      const auto curve = make_ellipse(a, 1.0, 2048);
      CHECK(stokes_identity_residual(curve, field(g)).residual <= 1e-3);
    }
    const auto annulus = make_annulus(1.0, 2.0, 2048);
    const auto skel = traced_skeleton_quadrature(trace_normal_rays(annulus), 0);
    CHECK(stokes_identity_residual(annulus, skel, field(g)).residual <= 1e-3);
  }
}

TEST_CASE("key formula terms against independent quadrature") {
  // Boundary integral of x^2 + 2 over the ellipse (2, 1) by Gauss-Legendre
  // in the angular parameter.
  const auto f = field(2);
  double boundary = 0.0;
  const int panels = 4000;
  const double xg[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  const double wg[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  for (int p = 0; p < panels; ++p) {
    const double t0 = 2.0 * kPi * p / panels, h = 2.0 * kPi / panels;
    for (int k = 0; k < 3; ++k) {
      const double t = t0 + 0.5 * h * (1.0 + xg[k]);
      const Vec2 q{2.0 * std::cos(t), std::sin(t)};
      boundary += 0.5 * h * wg[k] * f.value(q) * std::hypot(2.0 * std::sin(t), std::cos(t));
    }
  }
  const auto r = stokes_identity_residual(make_ellipse(2.0, 1.0, 2048), f);
  CHECK(r.boundary_term == Approx(boundary).epsilon(1e-5));
  CHECK(r.residual <= 1e-3);
}

TEST_CASE("skeleton motion") {
  const auto zero = skeleton_motion({0, 1}, {0, -1}, {0, 0}, {0.3, {0, 0}, 0.3}, kPi / 2);
  CHECK(norm(zero.normal) == 0.0);
  CHECK(norm(zero.tangential) == 0.0);

  // Annulus A(1, 2) under H = h/2: skeleton circle radius 1.5 shrinks at 0.375.
  const auto v = skeleton_motion({2, 0}, {1, 0}, {1.5, 0}, {0.25, {0, 0}, -0.5}, kPi / 2);
  CHECK(v.normal.x == Approx(-0.375).epsilon(1e-12));
  CHECK(std::abs(v.normal.y) < 1e-15);
  CHECK(norm(v.tangential) < 1e-15);

  // The normal part is odd in the speed jump H(y1) - H(y2) and unchanged
  // when the two feet are relabelled together with their data.
  const Vec2 y1{0.3, 1.1}, y2{0.3, -1.1}, x{0.8, 0.0};
  const double th = std::acos(std::abs((x - y1).x) / norm(x - y1));
  const auto a = skeleton_motion(y1, y2, x, {0.7, {0.1, 0.2}, 0.2}, th);
  const auto flipped = skeleton_motion(y1, y2, x, {0.2, {0.1, 0.2}, 0.7}, th);
  const auto relabelled = skeleton_motion(y2, y1, x, {0.2, {0.0, 0.0}, 0.7}, th);
  CHECK(a.normal.y == Approx(-flipped.normal.y));
  CHECK(std::abs(a.normal.y) > 0.1);
  CHECK(a.normal.y == Approx(relabelled.normal.y));
  CHECK(std::abs(a.normal.x) < 1e-15);
  CHECK_THROWS_AS(skeleton_motion({0, 1}, {0, -2}, {0, 0}, {}, 1.0), DomainError);
  CHECK_THROWS_AS(skeleton_motion({0, 1}, {0, -1}, {0, 0}, {}, 0.0), DomainError);
}

TEST_CASE("equal arc length resampling") {
  // Ellipse sampled at equal angular parameter, redistributed.
  std::vector<Vec2> raw;
  for (int k = 0; k < 400; ++k) {
    const double t = 2.0 * kPi * k / 400;
    raw.push_back({2.0 * std::cos(t), std::sin(t)});
  }
  const auto out = resample_equal_arclength(raw, 256);
  REQUIRE(out.size() == 256);
  CHECK(out[0] == raw[0]);
  const double h0 = norm(out[1] - out[0]);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].x * out[i].x / 4.0 + out[i].y * out[i].y == Approx(1.0).epsilon(1e-6));
    CHECK(norm(out[(i + 1) % out.size()] - out[i]) == Approx(h0).epsilon(1e-3));
  }
  // Symmetric input stays symmetric.
  const auto sym = resample_equal_arclength(ellipse_nodes(2.0, 1.0, 512), 512);
  CHECK(symmetry_defect(sym) < 1e-12);
}

TEST_CASE("curve file round trip") {
  const auto nodes = ellipse_nodes(2.0, 1.0, 64);
  std::stringstream ss;
  write_curve(ss, nodes);
  const auto back = read_curve(ss);
  CHECK(back == nodes);

  std::stringstream bad("1 2\n3\n");
  CHECK_THROWS_AS(read_curve(bad), ConfigError);
}

TEST_CASE("domain membership and area") {
  const auto annulus = make_annulus(1.0, 2.0, 512);
  CHECK(annulus.contains({1.5, 0.0}));
  CHECK_FALSE(annulus.contains({0.0, 0.0}));
  CHECK_FALSE(annulus.contains({2.5, 0.0}));
  CHECK(annulus.component(1).curvature[0] == Approx(-1.0).epsilon(1e-6));
  CHECK(annulus.component(1).normals[0].x == Approx(1.0));
  CHECK(signed_distance({1.25, 0.0}, annulus) == Approx(0.25).epsilon(1e-9));
  CHECK(signed_distance({0.5, 0.0}, annulus) < 0.0);
}
