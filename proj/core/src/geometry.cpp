#include "dualflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace dualflow {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

double shoelace(const std::vector<Vec2>& p) {
  double s = 0.0;
  for (std::size_t i = 0, n = p.size(); i < n; ++i) s += cross(p[i], p[(i + 1) % n]);
  return 0.5 * s;
}

bool crossing_inside(const std::vector<Vec2>& p, Vec2 q) {
  bool inside = false;
  for (std::size_t i = 0, n = p.size(), j = n - 1; i < n; j = i++) {
    if ((p[i].y > q.y) != (p[j].y > q.y)) {
      const double xc = p[j].x + (q.y - p[j].y) * (p[i].x - p[j].x) / (p[i].y - p[j].y);
      if (q.x < xc) inside = !inside;
    }
  }
  return inside;
}

int orient(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 q) {
  return std::min(a.x, b.x) <= q.x && q.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= q.y && q.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool is_simple(const std::vector<Vec2>& p) {
  const std::size_t n = p.size();
  std::vector<Vec2> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p[i], b = p[(i + 1) % n];
    lo[i] = {std::min(a.x, b.x), std::min(a.y, b.y)};
    hi[i] = {std::max(a.x, b.x), std::max(a.y, b.y)};
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // share node 0
      if (hi[i].x < lo[j].x || hi[j].x < lo[i].x || hi[i].y < lo[j].y ||
          hi[j].y < lo[i].y)
        continue;
      if (segments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n])) return false;
    }
  }
  return true;
}

// Offset from b to the circumcenter of (a, b, c); false when collinear.
bool circumcenter_offset(Vec2 a, Vec2 b, Vec2 c, Vec2& offset) {
  const Vec2 u = a - b, v = c - b;
  const double d = 2.0 * cross(u, v);
  if (std::abs(d) <= 1e-14 * norm(u) * norm(v)) return false;
  const double uu = norm2(u), vv = norm2(v);
  offset = {(uu * v.y - vv * u.y) / d, (vv * u.x - uu * v.x) / d};
  return true;
}

Vec2 node_normal(Vec2 a, Vec2 b, Vec2 c) {
  Vec2 off;
  if (circumcenter_offset(a, b, c, off)) {
    const double k = circumcurvature(a, b, c);
    if (k != 0.0) return (k > 0.0 ? 1.0 : -1.0) * normalized(off);
  }
  return perp_left(normalized(c - a));
}

void check_finite(const std::vector<Vec2>& nodes) {
  for (const Vec2& p : nodes)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw InvariantError("curve node is not finite");
}

double max_coordinate(const std::vector<Vec2>& nodes) {
  double m = 0.0;
  for (const Vec2& p : nodes) m = std::max({m, std::abs(p.x), std::abs(p.y)});
  return m;
}

// Fills the full node list from the first quadrant q[0..n/4] (q[0] on the
// positive x-axis, q[n/4] on the positive y-axis).
std::vector<Vec2> mirror_quadrant(const std::vector<Vec2>& q) {
  const std::size_t m = q.size() - 1;
  std::vector<Vec2> out(4 * m);
  for (std::size_t k = 0; k <= m; ++k) {
    out[k] = q[k];
    out[2 * m - k] = {-q[k].x, q[k].y};
  }
  for (std::size_t k = 1; k <= m; ++k) {
    out[2 * m + k] = {-q[k].x, -q[k].y};
    if (k < m) out[4 * m - k] = {q[k].x, -q[k].y};
  }
  return out;
}

void require_quarter_count(std::size_t n) {
  if (n < DiscreteCurve::kMinNodes || n % 4 != 0)
    throw ConfigError("node count must be a multiple of 4 and at least 16");
}

// 5-point Gauss-Legendre on [a, b].
template <class F>
double gauss5(F&& f, double a, double b) {
  static constexpr std::array<double, 5> x = {0.0, 0.5384693101056831, -0.5384693101056831,
                                              0.9061798459386640, -0.9061798459386640};
  static constexpr std::array<double, 5> w = {0.5688888888888889, 0.4786286704993665,
                                              0.4786286704993665, 0.2369268850561891,
                                              0.2369268850561891};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < 5; ++i) s += w[i] * f(c + h * x[i]);
  return h * s;
}

// Solves the cyclic tridiagonal system with sub-diagonal a, diagonal b,
// super-diagonal c; a[0] and c[n-1] are the corner entries.
std::vector<double> solve_cyclic(const std::vector<double>& a, const std::vector<double>& b,
                                 const std::vector<double>& c, const std::vector<double>& r) {
  const std::size_t n = b.size();
  auto tridiag = [&](const std::vector<double>& diag, const std::vector<double>& rhs) {
    std::vector<double> cp(n), x(n);
    double den = diag[0];
    cp[0] = c[0] / den;
    x[0] = rhs[0] / den;
    for (std::size_t i = 1; i < n; ++i) {
      den = diag[i] - a[i] * cp[i - 1];
      cp[i] = c[i] / den;
      x[i] = (rhs[i] - a[i] * x[i - 1]) / den;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
    return x;
  };
  const double alpha = c[n - 1], beta = a[0], gamma = -b[0];
  std::vector<double> bb = b;
  bb[0] = b[0] - gamma;
  bb[n - 1] = b[n - 1] - alpha * beta / gamma;
  const std::vector<double> x = tridiag(bb, r);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  const std::vector<double> z = tridiag(bb, u);
  const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
  return out;
}

// Second derivatives of the periodic cubic spline through v at knot gaps h.
std::vector<double> periodic_spline_moments(const std::vector<double>& v,
                                            const std::vector<double>& h) {
  const std::size_t n = v.size();
  std::vector<double> a(n), b(n), c(n), r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hp = h[(i + n - 1) % n], hn = h[i];
    a[i] = hp;
    b[i] = 2.0 * (hp + hn);
    c[i] = hn;
    r[i] = 6.0 * ((v[(i + 1) % n] - v[i]) / hn - (v[i] - v[(i + n - 1) % n]) / hp);
  }
  return solve_cyclic(a, b, c, r);
}

struct NodeIndex {
  std::size_t component;
  std::size_t node;
};

// v - 1/kappa, with rounding-level values (a discretized circle) snapped
// to an empty segment.
double skeleton_half_length(double vertex, double kappa) {
  const double x = vertex - 1.0 / kappa;
  return x > 1e-9 * vertex ? x : 0.0;
}

// Nearest node, ties to the lowest (component, index).
NodeIndex nearest_node(const PlanarDomain& domain, Vec2 q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < domain.component_count(); ++c)
    for (const Vec2& p : domain.component(c).nodes) best = std::min(best, norm2(q - p));
  const double cut = best * (1.0 + 1e-12);
  for (std::size_t c = 0; c < domain.component_count(); ++c) {
    const auto& nodes = domain.component(c).nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (norm2(q - nodes[i]) <= cut) return {c, i};
  }
  return {0, 0};
}

}  // namespace

double circumcurvature(Vec2 a, Vec2 b, Vec2 c) {
  const double den = norm(b - a) * norm(c - b) * norm(c - a);
  if (den == 0.0) return 0.0;
  return 2.0 * cross(b - a, c - b) / den;
}

// ---------------------------------------------------------------------------
// Curves

DiscreteCurve::DiscreteCurve(std::vector<Vec2> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < kMinNodes)
    throw InvariantError("a curve needs at least 16 nodes, got " +
                         std::to_string(nodes_.size()));
  check_finite(nodes_);
  if (!(shoelace(nodes_) > 0.0))
    throw InvariantError("curve is not counterclockwise (signed area <= 0)");
  if (!is_simple(nodes_)) throw InvariantError("curve self-intersects");
}

DiscreteCurve::DiscreteCurve(std::vector<Vec2> nodes, Trusted) : nodes_(std::move(nodes)) {}

Vec2 DiscreteCurve::node(std::ptrdiff_t i) const { return nodes_[wrap(i, nodes_.size())]; }

double DiscreteCurve::signed_area() const { return shoelace(nodes_); }

double DiscreteCurve::perimeter() const {
  double s = 0.0;
  for (std::size_t i = 0, n = nodes_.size(); i < n; ++i)
    s += norm(nodes_[(i + 1) % n] - nodes_[i]);
  return s;
}

bool DiscreteCurve::contains(Vec2 q) const { return crossing_inside(nodes_, q); }

double curvature_at(const DiscreteCurve& curve, std::size_t i) {
  const auto k = static_cast<std::ptrdiff_t>(i);
  return circumcurvature(curve.node(k - 1), curve.node(k), curve.node(k + 1));
}

Vec2 inward_normal_at(const DiscreteCurve& curve, std::size_t i) {
  const auto k = static_cast<std::ptrdiff_t>(i);
  return node_normal(curve.node(k - 1), curve.node(k), curve.node(k + 1));
}

double symmetry_defect(const std::vector<Vec2>& nodes) {
  const std::size_t n = nodes.size();
  if (n == 0 || n % 4 != 0) return std::numeric_limits<double>::infinity();
  double worst = std::abs(nodes[0].y);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 p = nodes[k];
    worst = std::max(worst, norm(nodes[(n - k) % n] - Vec2{p.x, -p.y}));
    worst = std::max(worst, norm(nodes[(n / 2 + n - k) % n] - Vec2{-p.x, p.y}));
  }
  return worst;
}

bool is_strictly_convex(const std::vector<Vec2>& nodes) {
  const std::size_t n = nodes.size();
  if (n < 3) return false;
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = nodes[i] - nodes[(i + n - 1) % n];
    const Vec2 e1 = nodes[(i + 1) % n] - nodes[i];
    const double cr = cross(e0, e1);
    if (!(cr > 0.0)) return false;
    turning += std::atan2(cr, dot(e0, e1));
  }
  return std::abs(turning - 2.0 * kPi) < 1e-6;
}

SymmetricConvexCurve::SymmetricConvexCurve(std::vector<Vec2> nodes, double tolerance)
    : base_(std::vector<Vec2>{}, DiscreteCurve::Trusted{}) {
  if (nodes.size() < DiscreteCurve::kMinNodes || nodes.size() % 4 != 0)
    throw InvariantError("symmetric curve needs a multiple of 4 nodes (>= 16)");
  check_finite(nodes);
  const double scale = std::max(1.0, max_coordinate(nodes));
  if (!(nodes[0].x > 0.0)) throw InvariantError("node 0 must lie on the positive x-axis");
  const double defect = symmetry_defect(nodes);
  if (!(defect <= tolerance * scale))
    throw InvariantError("curve is not symmetric about both axes (defect " +
                         std::to_string(defect) + ")");
  // Strict convexity with total turning 2 pi implies a simple
  // counterclockwise curve, so the quadratic simplicity test is skipped.
  if (!is_strictly_convex(nodes)) throw InvariantError("curve is not strictly convex");
  base_ = DiscreteCurve(std::move(nodes), DiscreteCurve::Trusted{});
}

double curvature_at(const SymmetricConvexCurve& curve, std::size_t i) {
  return curvature_at(curve.base(), i);
}

// ---------------------------------------------------------------------------
// Domains

PlanarDomain::PlanarDomain(std::vector<BoundaryComponent> components) {
  build(std::move(components));
}

PlanarDomain::PlanarDomain(const DiscreteCurve& outer) {
  build({BoundaryComponent{outer, false}});
}

PlanarDomain::PlanarDomain(const SymmetricConvexCurve& outer) {
  build({BoundaryComponent{outer.base(), false}});
}

void PlanarDomain::build(std::vector<BoundaryComponent> components) {
  if (components.empty()) throw ConfigError("domain needs at least one boundary component");
  if (components[0].hole) throw ConfigError("first boundary component must be the outer one");
  for (std::size_t c = 1; c < components.size(); ++c) {
    if (!components[c].hole) throw ConfigError("only one outer boundary is supported");
    if (!components[0].curve.contains(components[c].curve.nodes()[0]))
      throw InvariantError("hole lies outside the outer boundary");
  }
  lo_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  hi_ = -lo_;
  components_.clear();
  for (const auto& bc : components) {
    const auto& src = bc.curve.nodes();
    const std::size_t n = src.size();
    Component comp;
    comp.hole = bc.hole;
    comp.nodes.resize(n);
    for (std::size_t k = 0; k < n; ++k) comp.nodes[k] = bc.hole ? src[(n - k) % n] : src[k];
    comp.normals.resize(n);
    comp.curvature.resize(n);
    comp.weight.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 a = comp.nodes[(k + n - 1) % n], b = comp.nodes[k], c = comp.nodes[(k + 1) % n];
      comp.curvature[k] = circumcurvature(a, b, c);
      comp.normals[k] = node_normal(a, b, c);
      comp.weight[k] = 0.5 * (norm(b - a) + norm(c - b));
      lo_ = {std::min(lo_.x, b.x), std::min(lo_.y, b.y)};
      hi_ = {std::max(hi_.x, b.x), std::max(hi_.y, b.y)};
    }
    components_.push_back(std::move(comp));
  }
}

std::size_t PlanarDomain::total_nodes() const {
  std::size_t n = 0;
  for (const auto& c : components_) n += c.nodes.size();
  return n;
}

bool PlanarDomain::contains(Vec2 q) const {
  if (!crossing_inside(components_[0].nodes, q)) return false;
  for (std::size_t c = 1; c < components_.size(); ++c)
    if (crossing_inside(components_[c].nodes, q)) return false;
  return true;
}

double PlanarDomain::area() const {
  double a = 0.0;
  for (const auto& c : components_) a += shoelace(c.nodes);
  return a;
}

// ---------------------------------------------------------------------------
// Foot points

FootPointResult nearest_boundary_point(const PlanarDomain& domain, Vec2 q) {
  const NodeIndex ni = nearest_node(domain, q);
  const auto& comp = domain.component(ni.component);
  const std::size_t n = comp.nodes.size();
  const std::size_t i = ni.node;
  const std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;

  FootPointResult res;
  res.component = ni.component;

  auto finish_on_segment = [&](std::size_t j, double t, Vec2 foot, Vec2 normal) {
    const std::size_t j1 = (j + 1) % n;
    res.foot = foot;
    res.node_index = j;
    res.offset = t;
    res.inward_normal = normal;
    res.curvature = (1.0 - t) * comp.curvature[j] + t * comp.curvature[j1];
    res.distance = norm(q - foot);
    if (res.distance == 0.0) {
      res.signed_distance = 0.0;
    } else {
      res.signed_distance = dot(q - foot, normal) >= 0.0 ? res.distance : -res.distance;
    }
  };
  auto project = [&](std::size_t j, double& t) {
    const Vec2 a = comp.nodes[j], b = comp.nodes[(j + 1) % n];
    const Vec2 e = b - a;
    const double ee = norm2(e);
    t = ee > 0.0 ? std::clamp(dot(q - a, e) / ee, 0.0, 1.0) : 0.0;
    return a + t * e;
  };

  // Osculating circle through the node and its neighbours.
  const double kappa = comp.curvature[i];
  Vec2 off;
  if (kappa != 0.0 && circumcenter_offset(comp.nodes[im], comp.nodes[i], comp.nodes[ip], off)) {
    const Vec2 center = comp.nodes[i] + off;
    const double radius = norm(off);
    const Vec2 d = q - center;
    const double dn = norm(d);
    if (dn <= 1e-9 * radius) {
      // Query at the center: every arc point is equidistant, keep the node.
      finish_on_segment(i, 0.0, comp.nodes[i], comp.normals[i]);
      return res;
    }
    const Vec2 f = center + (radius / dn) * d;
    const Vec2 va = comp.nodes[im] - center, vb = comp.nodes[ip] - center;
    const Vec2 vm = comp.nodes[i] - center, vf = f - center;
    const double s = cross(va, vb) >= 0.0 ? 1.0 : -1.0;
    if (s * cross(va, vf) >= 0.0 && s * cross(vf, vb) >= 0.0 && dot(vf, vm) > 0.0) {
      const Vec2 normal = (kappa > 0.0 ? -1.0 : 1.0) * (vf / radius);
      const Vec2 ahead = comp.nodes[ip] - comp.nodes[i];
      if (dot(f - comp.nodes[i], ahead) >= 0.0) {
        const double t = std::clamp(dot(f - comp.nodes[i], ahead) / norm2(ahead), 0.0, 1.0);
        finish_on_segment(i, t, f, normal);
      } else {
        const Vec2 behind = comp.nodes[i] - comp.nodes[im];
        const double t = std::clamp(dot(f - comp.nodes[im], behind) / norm2(behind), 0.0, 1.0);
        finish_on_segment(im, t, f, normal);
      }
      return res;
    }
  }

  double t0 = 0.0, t1 = 0.0;
  const Vec2 f0 = project(im, t0);
  const Vec2 f1 = project(i, t1);
  const bool first = norm2(q - f0) < norm2(q - f1);
  const std::size_t j = first ? im : i;
  const double t = first ? t0 : t1;
  const Vec2 normal =
      normalized((1.0 - t) * comp.normals[j] + t * comp.normals[(j + 1) % n]);
  finish_on_segment(j, t, first ? f0 : f1, normal);
  return res;
}

FootPointResult foot_point(Vec2 q, const PlanarDomain& domain) {
  if (!domain.contains(q)) throw DomainError("query point is not inside the domain");
  FootPointResult r = nearest_boundary_point(domain, q);
  if (!(r.signed_distance > 0.0))
    throw DomainError("query point is on or outside the boundary");
  return r;
}

FootPointResult foot_point(Vec2 q, const DiscreteCurve& curve) {
  return foot_point(q, PlanarDomain(curve));
}

FootPointResult foot_point(Vec2 q, const SymmetricConvexCurve& curve) {
  return foot_point(q, PlanarDomain(curve));
}

double signed_distance(Vec2 q, const PlanarDomain& domain) {
  return nearest_boundary_point(domain, q).signed_distance;
}

double level_curvature(const FootPointResult& foot) {
  const double den = 1.0 - foot.distance * foot.curvature;
  if (!(den > 0.0)) throw DomainError("query lies beyond the focal distance of its foot point");
  return foot.curvature / den;
}

double level_curvature(Vec2 q, const PlanarDomain& domain) {
  return level_curvature(foot_point(q, domain));
}

double level_curvature(Vec2 q, const DiscreteCurve& curve) {
  return level_curvature(foot_point(q, curve));
}

double level_curvature(Vec2 q, const SymmetricConvexCurve& curve) {
  return level_curvature(foot_point(q, curve));
}

// ---------------------------------------------------------------------------
// Rays

std::vector<NormalRay> trace_normal_rays(const PlanarDomain& domain, const TubeOptions& options) {
  if (!(options.march_fraction > 0.0) || !(options.cutoff_tolerance > 0.0))
    throw ConfigError("tube options must be positive");
  const double diam = domain.diameter();
  const double tol = options.cutoff_tolerance * diam;
  const double march = options.march_fraction * diam;

  // Flattened node list for the consistency scans.
  std::vector<Vec2> pts;
  std::vector<std::size_t> comp_of, idx_of;
  for (std::size_t c = 0; c < domain.component_count(); ++c) {
    const auto& nodes = domain.component(c).nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      pts.push_back(nodes[i]);
      comp_of.push_back(c);
      idx_of.push_back(i);
    }
  }

  std::vector<NormalRay> rays;
  rays.reserve(pts.size());
  for (std::size_t c = 0; c < domain.component_count(); ++c) {
    const auto& comp = domain.component(c);
    const std::size_t n = comp.nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
      NormalRay ray{comp.nodes[i], comp.normals[i], comp.curvature[i], comp.weight[i], 0.0, c, i};
      auto consistent = [&](double r) {
        const Vec2 p = ray.origin + r * ray.normal;
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
          const double d = norm2(p - pts[k]);
          if (d < best) {
            best = d;
            arg = k;
          }
        }
        if (comp_of[arg] != c) return false;
        const std::size_t j = idx_of[arg];
        const std::size_t gap = std::min((j + n - i) % n, (i + n - j) % n);
        return gap <= options.consistency_window;
      };
      double cap = diam;
      if (ray.curvature > 0.0) cap = std::min(cap, (1.0 - 1e-9) / ray.curvature);

      double lo = 0.0, hi = cap;
      bool bracketed = false;
      for (double r = march; r < cap; r += march) {
        if (!consistent(r)) {
          hi = r;
          bracketed = true;
          break;
        }
        lo = r;
      }
      if (!bracketed && consistent(cap)) {
        ray.tau = cap;
      } else {
        while (hi - lo > tol) {
          const double mid = 0.5 * (lo + hi);
          (consistent(mid) ? lo : hi) = mid;
        }
        ray.tau = 0.5 * (lo + hi);
      }
      rays.push_back(ray);
    }
  }
  return rays;
}

double integrate_along_rays(const std::vector<NormalRay>& rays,
                            const std::function<double(const RaySample&)>& f,
                            double ray_step) {
  if (!(ray_step > 0.0) || !std::isfinite(ray_step))
    throw ResolutionError("ray step must be positive and finite");
  double total = 0.0;
  for (const NormalRay& ray : rays) {
    if (!(ray.tau > 0.0)) continue;
    auto m = static_cast<std::size_t>(std::ceil(ray.tau / (2.0 * ray_step)));
    const std::size_t intervals = 2 * std::max<std::size_t>(m, 1);
    const double h = ray.tau / static_cast<double>(intervals);
    double s = 0.0;
    for (std::size_t k = 0; k <= intervals; ++k) {
      const double r = h * static_cast<double>(k);
      // Along a normal ray the level curvature is kappa / (1 - r kappa);
      // its integral gives the closed-form area factor 1 - r kappa.
      const double jac = 1.0 - r * ray.curvature;
      RaySample sample{ray.origin + r * ray.normal, r, ray.curvature / jac, jac, &ray};
      const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      s += w * f(sample);
    }
    total += ray.weight * s * h / 3.0;
  }
  return total;
}

namespace {

void check_ray_step(const PlanarDomain& domain, const TubeOptions& options) {
  if (!(options.ray_step > 0.0) || !std::isfinite(options.ray_step))
    throw ResolutionError("ray step must be positive and finite");
  if (options.ray_step < options.cutoff_tolerance * domain.diameter())
    throw ResolutionError("ray step is below the cutoff tolerance and cannot resolve tau");
}

}  // namespace

double tube_integrate(const PlanarDomain& domain, const std::function<double(Vec2)>& g,
                      const TubeOptions& options) {
  check_ray_step(domain, options);
  const auto rays = trace_normal_rays(domain, options);
  return integrate_along_rays(
      rays, [&](const RaySample& s) { return g(s.point) * s.jacobian; }, options.ray_step);
}

double tube_integrate(const DiscreteCurve& curve, const std::function<double(Vec2)>& g,
                      const TubeOptions& options) {
  return tube_integrate(PlanarDomain(curve), g, options);
}

// ---------------------------------------------------------------------------
// Skeleton

double SkeletonSegment::theta_at(double x) const {
  const double ax = std::abs(x);
  if (abscissa.empty() || ax >= half_length) return 0.0;
  if (abscissa.size() == 1) return theta.front();
  const double step = abscissa[1] - abscissa[0];
  const double pos = ax / step;
  const auto k = std::min(static_cast<std::size_t>(pos), abscissa.size() - 2);
  const double t = pos - static_cast<double>(k);
  return (1.0 - t) * theta[k] + t * theta[k + 1];
}

double skeleton_angle(const PlanarDomain& domain, double x) {
  const FootPointResult fp = nearest_boundary_point(domain, {x, 0.0});
  return std::acos(std::clamp(std::abs(fp.inward_normal.x), 0.0, 1.0));
}

SkeletonSegment medial_axis(const SymmetricConvexCurve& curve, std::size_t profile_points) {
  if (profile_points < 2) throw ConfigError("medial axis profile needs at least 2 points");
  const double kv = curvature_at(curve, 0);
  if (!(kv > 0.0)) throw InvariantError("vertex curvature must be positive");
  SkeletonSegment seg;
  seg.half_length = skeleton_half_length(curve.vertex_abscissa(), kv);
  if (seg.half_length == 0.0) {
    seg.abscissa = {0.0};
    seg.theta = {kPi / 2.0};
    return seg;
  }
  const PlanarDomain domain(curve);
  seg.abscissa.resize(profile_points);
  seg.theta.resize(profile_points);
  for (std::size_t k = 0; k < profile_points; ++k) {
    const double x = seg.half_length * static_cast<double>(k) /
                     static_cast<double>(profile_points - 1);
    seg.abscissa[k] = x;
    seg.theta[k] = k + 1 == profile_points ? 0.0 : skeleton_angle(domain, x);
  }
  return seg;
}

SkeletonQuadrature skeleton_quadrature(const SymmetricConvexCurve& curve, std::size_t intervals) {
  if (intervals < 2) throw ConfigError("skeleton quadrature needs at least 2 intervals");
  if (intervals % 2 != 0) ++intervals;
  SkeletonQuadrature q;
  const double kv = curvature_at(curve, 0);
  const double xs = skeleton_half_length(curve.vertex_abscissa(), kv);
  if (xs == 0.0) return q;
  const PlanarDomain domain(curve);
  const double h = 1.0 / static_cast<double>(intervals);
  for (std::size_t k = 1; k <= intervals; ++k) {  // u = 0 is the endpoint, weight 0
    const double u = h * static_cast<double>(k);
    const double simpson = (k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    const double w = simpson * h / 3.0 * 2.0 * xs * u;
    const double x = xs * (1.0 - u * u);
    const double st = std::sin(skeleton_angle(domain, x));
    for (double sgn : {1.0, -1.0}) {
      q.points.push_back({sgn * x, 0.0});
      q.weights.push_back(w);
      q.sin_theta.push_back(st);
    }
  }
  return q;
}

SkeletonQuadrature traced_skeleton_quadrature(const std::vector<NormalRay>& rays,
                                              std::size_t component) {
  std::vector<const NormalRay*> sel;
  for (const auto& r : rays)
    if (r.component == component) sel.push_back(&r);
  std::sort(sel.begin(), sel.end(),
            [](const NormalRay* a, const NormalRay* b) { return a->node < b->node; });
  SkeletonQuadrature q;
  const std::size_t n = sel.size();
  if (n < 3) return q;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 zp = sel[(i + n - 1) % n]->end(), z = sel[i]->end(), zn = sel[(i + 1) % n]->end();
    q.points.push_back(z);
    q.weights.push_back(0.5 * (norm(z - zp) + norm(zn - z)));
    const Vec2 t = zn - zp;
    const double tl = norm(t);
    q.sin_theta.push_back(tl > 0.0 ? std::min(1.0, std::abs(cross(sel[i]->normal, t / tl))) : 0.0);
  }
  return q;
}

StokesResult stokes_identity_residual(const PlanarDomain& domain,
                                      const SkeletonQuadrature& skeleton, const ScalarField& g,
                                      const TubeOptions& options) {
  if (!g.value || !g.gradient) throw ConfigError("scalar field needs value and gradient");
  check_ray_step(domain, options);
  const auto rays = trace_normal_rays(domain, options);
  StokesResult r;
  r.lhs = integrate_along_rays(
      rays,
      [&](const RaySample& s) { return g.value(s.point) * s.level_curvature * s.jacobian; },
      options.ray_step);
  for (const auto& ray : rays) r.boundary_term += ray.weight * g.value(ray.origin);
  for (std::size_t k = 0; k < skeleton.points.size(); ++k)
    r.skeleton_term += 2.0 * skeleton.weights[k] * g.value(skeleton.points[k]) * skeleton.sin_theta[k];
  r.gradient_term = integrate_along_rays(
      rays,
      [&](const RaySample& s) { return dot(g.gradient(s.point), s.ray->normal) * s.jacobian; },
      options.ray_step);
  r.rhs = r.boundary_term - r.skeleton_term + r.gradient_term;
  r.residual = std::abs(r.lhs - r.rhs) / std::max(1.0, std::abs(r.lhs));
  return r;
}

StokesResult stokes_identity_residual(const SymmetricConvexCurve& curve, const ScalarField& g,
                                      const TubeOptions& options) {
  return stokes_identity_residual(PlanarDomain(curve), skeleton_quadrature(curve), g, options);
}

// ---------------------------------------------------------------------------
// Skeleton motion

SkeletonVelocity skeleton_motion(Vec2 y1, Vec2 y2, Vec2 x, const BoundarySpeed& speed,
                                 double theta, double tolerance) {
  if (!(theta > 0.0)) throw DomainError("skeleton angle must be positive");
  if (theta > kPi / 2.0 + 1e-12) throw DomainError("skeleton angle must not exceed pi/2");
  const double r1 = norm(x - y1), r2 = norm(x - y2);
  if (std::abs(r1 - r2) > tolerance * std::max(1.0, r1))
    throw DomainError("skeleton point is not equidistant from its two feet");
  const Vec2 n1 = (x - y1) / r1, n2 = (x - y2) / r2;
  const double s = std::sin(theta);
  const double jump = (speed.h1 - speed.h2) / (4.0 * s * s);

  SkeletonVelocity v;
  v.normal = jump * (n1 - n2);

  // Flat-space Jacobi field at the skeleton end: -rho * tangential grad H.
  const Vec2 grad_t = speed.grad1 - dot(speed.grad1, n1) * n1;
  const Vec2 jac = -r1 * grad_t;
  const Vec2 ns = normalized(n1 - n2);
  const Vec2 proj = jac - dot(jac, ns) * ns;
  v.tangential = proj + (-dot(jac, ns) / (2.0 * s) + jump) * (n1 + n2);
  return v;
}

// ---------------------------------------------------------------------------
// Shapes, resampling, I/O

std::vector<Vec2> circle_nodes(double radius, std::size_t n, Vec2 center) {
  if (!(radius > 0.0)) throw ConfigError("circle radius must be positive");
  if (n < 3) throw ConfigError("circle needs at least 3 nodes");
  std::vector<Vec2> out;
  if (n % 4 == 0) {
    const std::size_t m = n / 4;
    std::vector<Vec2> q(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
      const double t = 0.5 * kPi * static_cast<double>(k) / static_cast<double>(m);
      q[k] = {radius * std::cos(t), radius * std::sin(t)};
    }
    q[0] = {radius, 0.0};
    q[m] = {0.0, radius};
    out = mirror_quadrant(q);
  } else {
    out.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
      out[k] = {radius * std::cos(t), radius * std::sin(t)};
    }
  }
  for (auto& p : out) p += center;
  return out;
}

std::vector<Vec2> ellipse_nodes(double a, double b, std::size_t n) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("ellipse semi-axes must be positive");
  require_quarter_count(n);
  const std::size_t m = n / 4;
  auto speed = [&](double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); };
  const std::size_t panels = 64 * m;
  const double dt = 0.5 * kPi / static_cast<double>(panels);
  std::vector<double> cum(panels + 1, 0.0);
  for (std::size_t p = 0; p < panels; ++p)
    cum[p + 1] = cum[p] + gauss5(speed, dt * static_cast<double>(p), dt * static_cast<double>(p + 1));
  const double quarter = cum[panels];

  std::vector<Vec2> q(m + 1);
  q[0] = {a, 0.0};
  q[m] = {0.0, b};
  std::size_t p = 0;
  for (std::size_t k = 1; k < m; ++k) {
    const double target = quarter * static_cast<double>(k) / static_cast<double>(m);
    while (p + 1 < panels && cum[p + 1] < target) ++p;
    const double t0 = dt * static_cast<double>(p);
    double t = t0 + dt * (target - cum[p]) / (cum[p + 1] - cum[p]);
    for (int it = 0; it < 8; ++it) {
      const double f = cum[p] + gauss5(speed, t0, t) - target;
      t = std::clamp(t - f / speed(t), t0, t0 + dt);
    }
    q[k] = {a * std::cos(t), b * std::sin(t)};
  }
  return mirror_quadrant(q);
}

std::vector<Vec2> superellipse_nodes(double a, double b, double p, std::size_t n) {
  if (!(a > 0.0) || !(b > 0.0) || !(p >= 2.0))
    throw ConfigError("superellipse needs positive semi-axes and exponent >= 2");
  require_quarter_count(n);
  const std::size_t m = n / 4;
  std::vector<Vec2> q(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    const double t = 0.5 * kPi * static_cast<double>(k) / static_cast<double>(m);
    q[k] = {a * std::pow(std::cos(t), 2.0 / p), b * std::pow(std::sin(t), 2.0 / p)};
  }
  q[0] = {a, 0.0};
  q[m] = {0.0, b};
  return mirror_quadrant(q);
}

SymmetricConvexCurve make_circle(double radius, std::size_t n) {
  require_quarter_count(n);
  return SymmetricConvexCurve(circle_nodes(radius, n));
}

SymmetricConvexCurve make_ellipse(double a, double b, std::size_t n) {
  return SymmetricConvexCurve(ellipse_nodes(a, b, n));
}

PlanarDomain make_annulus(double r_in, double r_out, std::size_t n) {
  if (!(r_in > 0.0) || !(r_out > r_in)) throw ConfigError("annulus needs 0 < r_in < r_out");
  return PlanarDomain({BoundaryComponent{DiscreteCurve(circle_nodes(r_out, n)), false},
                       BoundaryComponent{DiscreteCurve(circle_nodes(r_in, n)), true}});
}

std::vector<Vec2> implicit_curve_diffusion(const std::vector<Vec2>& nodes, double tau) {
  const std::size_t n = nodes.size();
  if (n < 3) throw DomainError("diffusion needs at least three nodes");
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = norm(nodes[(i + 1) % n] - nodes[i]);
  std::vector<double> a(n), b(n), c(n), rx(n), ry(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hp = h[(i + n - 1) % n], hn = h[i];
    const double lo = 2.0 / (hp * (hp + hn)), up = 2.0 / (hn * (hp + hn));
    a[i] = -tau * lo;
    c[i] = -tau * up;
    b[i] = 1.0 + tau * (lo + up);
    rx[i] = nodes[i].x;
    ry[i] = nodes[i].y;
  }
  const auto x = solve_cyclic(a, b, c, rx);
  const auto y = solve_cyclic(a, b, c, ry);
  std::vector<Vec2> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {x[i], y[i]};
  return out;
}

std::vector<Vec2> resample_equal_arclength(const std::vector<Vec2>& nodes, std::size_t n) {
  const std::size_t m = nodes.size();
  if (m < 4) throw ConfigError("resampling needs at least 4 nodes");
  if (n < 3) throw ConfigError("resampling target needs at least 3 nodes");
  std::vector<double> h(m), xs(m), ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    h[i] = norm(nodes[(i + 1) % m] - nodes[i]);
    if (!(h[i] > 0.0)) throw InvariantError("resampling input has repeated nodes");
    xs[i] = nodes[i].x;
    ys[i] = nodes[i].y;
  }
  const auto mx = periodic_spline_moments(xs, h);
  const auto my = periodic_spline_moments(ys, h);

  // Segment i on local parameter u in [0, h_i].
  auto eval = [&](std::size_t i, double u) {
    const std::size_t j = (i + 1) % m;
    const double hi = h[i], a = (hi - u) / hi, b = u / hi;
    auto comp = [&](const std::vector<double>& v, const std::vector<double>& mm) {
      return a * v[i] + b * v[j] + ((a * a * a - a) * mm[i] + (b * b * b - b) * mm[j]) * hi * hi / 6.0;
    };
    return Vec2{comp(xs, mx), comp(ys, my)};
  };
  auto speed = [&](std::size_t i, double u) {
    const std::size_t j = (i + 1) % m;
    const double hi = h[i], a = (hi - u) / hi, b = u / hi;
    auto der = [&](const std::vector<double>& v, const std::vector<double>& mm) {
      return (v[j] - v[i]) / hi + (-(3.0 * a * a - 1.0) * mm[i] + (3.0 * b * b - 1.0) * mm[j]) * hi / 6.0;
    };
    return std::hypot(der(xs, mx), der(ys, my));
  };

  std::vector<double> cum(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    cum[i + 1] = cum[i] + gauss5([&](double u) { return speed(i, u); }, 0.0, h[i]);
  const double total = cum[m];

  std::vector<Vec2> out(n);
  out[0] = nodes[0];
  std::size_t i = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(n);
    while (i + 1 < m && cum[i + 1] < target) ++i;
    double u = h[i] * (target - cum[i]) / (cum[i + 1] - cum[i]);
    for (int it = 0; it < 6; ++it) {
      const double f = cum[i] + gauss5([&](double v) { return speed(i, v); }, 0.0, u) - target;
      if (std::abs(f) <= 1e-15 * total) break;
      u = std::clamp(u - f / speed(i, u), 0.0, h[i]);
    }
    out[k] = eval(i, u);
  }
  return out;
}

void write_curve(std::ostream& out, const std::vector<Vec2>& nodes) {
  char buf[64];
  for (const Vec2& p : nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    out << buf;
  }
}

std::vector<Vec2> read_curve(std::istream& in) {
  std::vector<Vec2> nodes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Vec2 p;
    std::string extra;
    if (!(ls >> p.x >> p.y) || (ls >> extra))
      throw ConfigError("malformed curve line " + std::to_string(lineno) + ": '" + line + "'");
    nodes.push_back(p);
  }
  return nodes;
}

void save_curve(const std::string& path, const std::vector<Vec2>& nodes) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  write_curve(out, nodes);
}

std::vector<Vec2> load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open curve file '" + path + "'");
  return read_curve(in);
}

}  // namespace dualflow
