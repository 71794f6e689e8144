#include "dualflow/planar.hpp"

#include <algorithm>
#include <cmath>

#include "dualflow/errors.hpp"
#include "dualflow/stats.hpp"

namespace dualflow {

namespace {

double max_coordinate(const std::vector<Vec2>& nodes) {
  double m = 0.0;
  for (const auto& p : nodes) m = std::max({m, std::abs(p.x), std::abs(p.y)});
  return m;
}

// Validates an evolved node set; returns the reason it cannot be a
// symmetric convex curve, or none.
StopReason classify(const std::vector<Vec2>& nodes, double symmetry_tolerance) {
  for (const auto& p : nodes)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return StopReason::convexity_breakdown;
  if (!is_strictly_convex(nodes)) return StopReason::convexity_breakdown;
  if (!(symmetry_defect(nodes) <= symmetry_tolerance * std::max(1.0, max_coordinate(nodes))) ||
      !(nodes[0].x > 0.0))
    return StopReason::symmetry_loss;
  return StopReason::none;
}

// Degenerate polygons (collapsed nodes near extinction) are caught before
// the spline resampler sees them.
StopReason finish_nodes(std::vector<Vec2>& nodes, bool resample, double symmetry_tolerance) {
  if (resample) {
    for (const auto& p : nodes)
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) return StopReason::convexity_breakdown;
    if (!is_strictly_convex(nodes)) return StopReason::convexity_breakdown;
    nodes = resample_equal_arclength(nodes, nodes.size());
  }
  return classify(nodes, symmetry_tolerance);
}

}  // namespace

PlanarDualState make_planar_state(SymmetricConvexCurve domain, Vec2 x,
                                  const PlanarOptions& options) {
  if (options.skeleton_every == 0) throw ConfigError("skeleton_every must be positive");
  if (!domain.base().contains(x)) throw DomainError("particle must start inside the domain");
  auto skeleton = medial_axis(domain, options.profile_points);
  const double rate = skeleton_endpoint_speed(domain);
  const double half = skeleton.half_length;
  return PlanarDualState{x, std::move(domain), std::move(skeleton), half, rate};
}

double extended_theta(const FootPointResult& foot, const SkeletonSegment& skeleton,
                      double half_length) {
  const Vec2 n = foot.inward_normal;
  if (std::abs(n.y) < 1e-15) return 0.0;
  const double t = -foot.foot.y / n.y;
  const double xa = std::abs(foot.foot.x + t * n.x);
  if (!(xa < half_length)) return 0.0;
  return skeleton.theta_at(std::min(xa, skeleton.half_length));
}

double skeleton_endpoint_speed(const SymmetricConvexCurve& curve) {
  const auto n = static_cast<std::ptrdiff_t>(curve.size());
  double k[5];
  for (std::ptrdiff_t j = -2; j <= 2; ++j)
    k[j + 2] = curvature_at(curve, static_cast<std::size_t>((j + n) % n));
  double s = 0.0;
  for (std::ptrdiff_t j = -2; j < 2; ++j) s += norm(curve.node(j + 1) - curve.node(j));
  s /= 4.0;
  const double kss = (-k[0] + 16.0 * k[1] - 30.0 * k[2] + 16.0 * k[3] - k[4]) / (12.0 * s * s);
  const double rho = 1.0 / k[2];
  return 0.5 * rho * rho * kss;
}

PlanarStepInfo planar_step(PlanarDualState& state, Vec2 dx, double dt, double bandwidth,
                           const PlanarOptions& options) {
  PlanarStepInfo info;
  const PlanarDomain dom(state.domain);
  const FootPointResult foot = foot_point(state.x, dom);
  try {
    info.level_curvature = level_curvature(foot);
  } catch (const DomainError&) {
    info.stop = StopReason::focal_crossing;
    return info;
  }
  const Vec2 x = state.x;
  info.theta = extended_theta(foot, state.skeleton, state.half_length);
  const double st = std::sin(info.theta), ct = std::cos(info.theta);
  info.drive = sign0(x.x) * ct * dx.x + sign0(x.y) * st * dx.y;
  if (std::abs(x.x) < state.half_length)
    info.local_time = occupation_local_time_step(x.y, 0.0, dx.y * dx.y, bandwidth);

  const auto& comp = dom.component(0);
  const double common = -info.drive - info.level_curvature * dt - 2.0 * st * info.local_time;
  std::vector<Vec2> nodes(comp.nodes.size());
  const double explicit_part = options.implicit_curvature ? 0.0 : 0.5 * dt;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    nodes[i] = comp.nodes[i] + (common + explicit_part * comp.curvature[i]) * comp.normals[i];
  if (options.implicit_curvature) nodes = implicit_curve_diffusion(nodes, 0.5 * dt);
  info.stop = finish_nodes(nodes, options.resample, options.symmetry_tolerance);
  if (info.stop != StopReason::none) return info;

  SymmetricConvexCurve next(std::move(nodes), options.symmetry_tolerance);
  Vec2 xn = x + dx;
  const PlanarDomain next_dom(next);
  if (!next_dom.contains(xn)) {
    const auto nb = nearest_boundary_point(next_dom, xn);
    state.max_violation = std::max(state.max_violation, nb.distance);
    xn = nb.foot + options.repair_offset * nb.inward_normal;
    // At a polygon vertex the normal offset can land outside; the center of a
    // symmetric convex domain is interior, so shrinking toward it always works.
    for (double f = options.repair_offset; !next_dom.contains(xn) && f < 1.0; f *= 10.0)
      xn = (1.0 - f) * nb.foot;
    ++state.repairs;
    info.repaired = true;
  }
  state.x = xn;
  state.domain = std::move(next);
  state.local_time += info.local_time;
  ++state.steps;
  if (state.steps % options.skeleton_every == 0) {
    state.skeleton = medial_axis(state.domain, options.profile_points);
    state.half_length = state.skeleton.half_length;
    state.endpoint_rate = skeleton_endpoint_speed(state.domain);
  } else {
    state.half_length = std::max(0.0, state.half_length + state.endpoint_rate * dt);
  }
  return info;
}

std::optional<SymmetricConvexCurve> deterministic_flow_step(const SymmetricConvexCurve& curve,
                                                            double dt, bool resample,
                                                            double symmetry_tolerance,
                                                            bool implicit_curvature) {
  std::vector<Vec2> nodes;
  if (implicit_curvature) {
    nodes = implicit_curve_diffusion(curve.nodes(), 0.5 * dt);
  } else {
    const PlanarDomain dom(curve);
    const auto& comp = dom.component(0);
    nodes.resize(comp.nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
      nodes[i] = comp.nodes[i] + 0.5 * comp.curvature[i] * dt * comp.normals[i];
  }
  if (finish_nodes(nodes, resample, symmetry_tolerance) != StopReason::none) return std::nullopt;
  return SymmetricConvexCurve(std::move(nodes), symmetry_tolerance);
}

std::optional<PathRecord> frozen_planar_record(const SymmetricConvexCurve& domain, Vec2 x0,
                                               const TimeGrid& grid, RandomStream& rng,
                                               double bandwidth, std::size_t profile_points) {
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
  const PlanarDomain dom(domain);
  if (!dom.contains(x0)) throw DomainError("particle must start inside the domain");
  const auto skeleton = medial_axis(domain, profile_points);
  const double sd = std::sqrt(grid.dt());
  std::vector<double> d, dn, h, st, dl;
  Vec2 x = x0;
  FootPointResult foot = foot_point(x, dom);
  d.push_back(foot.distance);
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    double hk;
    try {
      hk = level_curvature(foot);
    } catch (const DomainError&) {
      break;
    }
    const Vec2 dx{rng.normal(sd), rng.normal(sd)};
    const Vec2 xn = x + dx;
    if (!dom.contains(xn)) break;
    const double sk = std::sin(extended_theta(foot, skeleton, skeleton.half_length));
    dn.push_back(dot(foot.inward_normal, dx));
    h.push_back(hk);
    st.push_back(sk);
    dl.push_back(std::abs(x.x) < skeleton.half_length
                     ? occupation_local_time_step(x.y, 0.0, dx.y * dx.y, bandwidth)
                     : 0.0);
    x = xn;
    foot = foot_point(x, dom);
    d.push_back(foot.distance);
  }
  const std::size_t n = dn.size();
  if (n == 0) return std::nullopt;
  d.resize(n + 1);
  PathRecord rec(TimeGrid(grid.time_at(n), n));
  for (auto* v : {&dn, &h, &st, &dl}) v->push_back(0.0);
  rec.add_channel(kDistanceChannel, std::move(d));
  rec.add_channel(kNormalIncrementChannel, std::move(dn));
  rec.add_channel(kCurvatureChannel, std::move(h));
  rec.add_channel(kSinThetaChannel, std::move(st));
  rec.add_channel(kLocalTimeChannel, std::move(dl));
  return rec;
}

Vec2 sample_uniform_planar(const PlanarDomain& domain, RandomStream& rng) {
  const Vec2 lo = domain.box_min(), hi = domain.box_max();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double u = rng.uniform(), v = rng.uniform();
    const Vec2 p{lo.x + u * (hi.x - lo.x), lo.y + v * (hi.y - lo.y)};
    if (domain.contains(p)) return p;
  }
  throw DomainError("10^4 consecutive rejections: degenerate domain");
}

Vec2 sample_uniform_planar(const SymmetricConvexCurve& curve, RandomStream& rng) {
  return sample_uniform_planar(PlanarDomain(curve), rng);
}

double distance_cdf(const SymmetricConvexCurve& curve, double s) {
  const PlanarDomain dom(curve);
  const auto& c = dom.component(0);
  auto inner_area = [&](double d) {
    double g = 0.0;
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
      const Vec2 y = c.nodes[i], n = c.normals[i];
      const double k = c.curvature[i];
      double tau = (y.y != 0.0 && y.y * n.y < 0.0) ? -y.y / n.y : 1.0 / k;
      if (k > 0.0) tau = std::min(tau, 1.0 / k);
      if (d < tau) g += c.weight[i] * ((tau - d) - 0.5 * k * (tau * tau - d * d));
    }
    return g;
  };
  if (s <= 0.0) return 0.0;
  return std::clamp(1.0 - inner_area(s) / inner_area(0.0), 0.0, 1.0);
}

}  // namespace dualflow
