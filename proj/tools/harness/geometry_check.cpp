#include "harness/geometry_check.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "dualflow/errors.hpp"
#include "dualflow/geometry.hpp"
#include "dualflow/planar.hpp"
#include "harness/config.hpp"

namespace dualflow::harness {

namespace {

using std::numbers::pi;

struct Shape {
  std::string kind;  // disk, ellipse, annulus, file
  double p = 1.0, q = 1.0;
  std::string path;
  std::string label;
};

std::vector<double> parse_numbers(const std::string& desc, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || !(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("");
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("shape '" + desc + "': expected positive numbers");
    }
  }
  return out;
}

Shape parse_shape(const std::string& desc) {
  Shape s;
  s.label = desc;
  const auto colon = desc.find(':');
  s.kind = desc.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : desc.substr(colon + 1);
  if (s.kind == "file") {
    if (args.empty()) throw ConfigError("shape '" + desc + "': missing curve path");
    s.path = args;
    return s;
  }
  const auto v = args.empty() ? std::vector<double>{} : parse_numbers(desc, args);
  if (s.kind == "disk" && v.size() <= 1) {
    s.p = v.empty() ? 1.0 : v[0];
  } else if (s.kind == "ellipse" && v.size() == 2) {
    s.p = v[0];
    s.q = v[1];
  } else if (s.kind == "annulus" && v.size() == 2 && v[0] < v[1]) {
    s.p = v[0];
    s.q = v[1];
  } else {
    throw ConfigError("shape '" + desc +
                      "': expected disk[:R], ellipse:a,b, annulus:r1,r2 (r1 < r2) or file:<path>");
  }
  return s;
}

ScalarField make_field(const std::string& name) {
  if (name == "one") return {[](Vec2) { return 1.0; }, [](Vec2) { return Vec2{}; }};
  if (name == "x") return {[](Vec2 p) { return p.x; }, [](Vec2) { return Vec2{1.0, 0.0}; }};
  if (name == "x2p2")
    return {[](Vec2 p) { return p.x * p.x + 2.0; }, [](Vec2 p) { return Vec2{2.0 * p.x, 0.0}; }};
  if (name == "expx4")
    return {[](Vec2 p) { return std::exp(p.x / 4.0); },
            [](Vec2 p) { return Vec2{0.25 * std::exp(p.x / 4.0), 0.0}; }};
  throw ConfigError("field '" + name + "': expected one, x, x2p2 or expx4");
}

// Endpoint speed against re-extracting x* after one explicit normal-flow step.
void skeleton_endpoint_check(StatReport& rep, const SymmetricConvexCurve& fine,
                             const GeometryCheckOptions& o) {
  const double law = skeleton_endpoint_speed(fine);
  const auto next = deterministic_flow_step(fine, o.skeleton_dt, false, 1e-9, false);
  if (!next) throw ResolutionError("deterministic flow step lost convexity");
  const double fd =
      (medial_axis(*next, 2).half_length - medial_axis(fine, 2).half_length) / o.skeleton_dt;
  rep.metrics.emplace_back("endpoint_speed", law);
  rep.metrics.emplace_back("endpoint_speed_oracle", fd);
  rep.checks.push_back({"skeleton_speed_rel_error", std::abs(law / fd - 1.0), o.skeleton_tolerance});
}

StatReport check_shape(const Shape& s, const std::vector<std::string>& fields,
                       const GeometryCheckOptions& o) {
  StatReport rep;
  rep.name = "geometry " + s.label;
  std::optional<PlanarDomain> dom;
  std::optional<SymmetricConvexCurve> curve;
  SkeletonQuadrature skel;
  double exact_area = NAN;
  if (s.kind == "annulus") {
    dom = make_annulus(s.p, s.q, o.nodes);
    skel = traced_skeleton_quadrature(trace_normal_rays(*dom), 0);
    exact_area = pi * (s.q * s.q - s.p * s.p);
  } else {
    if (s.kind == "disk") {
      curve = make_circle(s.p, o.nodes);
      exact_area = pi * s.p * s.p;
    } else if (s.kind == "ellipse") {
      curve = make_ellipse(s.p, s.q, o.nodes);
      exact_area = pi * s.p * s.q;
    } else {
      curve = load_symmetric_curve(s.path);
    }
    dom.emplace(*curve);
  }
  rep.samples = dom->component(0).nodes.size();

  for (const auto& f : fields) {
    const auto g = make_field(f);
    const auto r = curve ? stokes_identity_residual(*curve, g)
                         : stokes_identity_residual(*dom, skel, g);
    rep.checks.push_back({"key_formula." + f, r.residual, o.tolerance});
    rep.metrics.emplace_back("key_formula." + f + ".lhs", r.lhs);
    rep.metrics.emplace_back("key_formula." + f + ".rhs", r.rhs);
  }

  const double tube = tube_integrate(*dom, [](Vec2) { return 1.0; });
  const double ref = std::isnan(exact_area) ? dom->area() : exact_area;
  rep.checks.push_back({"tube_area_rel_error", std::abs(tube / ref - 1.0), o.tolerance});
  rep.metrics.emplace_back("tube_area", tube);

  if (s.kind == "annulus") {
    // Under H = h/2 the outer circle moves in at 1/(2 r2) and the inner one
    // out of the domain at 1/(2 r1); the skeleton circle follows the mean.
    const double mid = 0.5 * (s.p + s.q);
    const auto v = skeleton_motion({s.q, 0.0}, {s.p, 0.0}, {mid, 0.0},
                                   {0.5 / s.q, {0.0, 0.0}, -0.5 / s.p}, pi / 2);
    const double exact = -0.25 * (1.0 / s.p + 1.0 / s.q);
    rep.metrics.emplace_back("skeleton_normal_speed", v.normal.x);
    rep.checks.push_back({"skeleton_speed_abs_error", std::abs(v.normal.x - exact), 1e-10});
  } else if (s.kind == "ellipse") {
    skeleton_endpoint_check(rep, make_ellipse(s.p, s.q, o.skeleton_nodes), o);
  } else if (s.kind == "file") {
    skeleton_endpoint_check(rep, *curve, o);
  }
  return rep;
}

}  // namespace

std::vector<StatReport> geometry_check(const GeometryCheckOptions& options) {
  std::vector<std::string> shapes = options.shapes;
  if (shapes.empty()) shapes = {"disk", "ellipse:2,1", "ellipse:3,1", "annulus:1,2"};
  std::vector<std::string> fields = options.fields;
  if (fields.empty()) fields = {"one", "x", "x2p2", "expx4"};
  for (const auto& f : fields) make_field(f);
  if (options.nodes < 16 || options.nodes % 4 != 0)
    throw ConfigError("nodes: need a multiple of 4, at least 16");
  std::vector<Shape> parsed;
  for (const auto& s : shapes) parsed.push_back(parse_shape(s));
  const auto fp = geometry_fingerprint(options);
  std::vector<StatReport> out;
  for (const auto& s : parsed) {
    out.push_back(check_shape(s, fields, options));
    out.back().fingerprint = fp;
  }
  return out;
}

SymmetricConvexCurve load_symmetric_curve(const std::string& path, double tolerance) {
  auto nodes = load_curve(path);
  try {
    return SymmetricConvexCurve(std::move(nodes), tolerance);
  } catch (const std::logic_error& e) {
    throw ConfigError("curve file '" + path + "': " + e.what());
  }
}

std::string geometry_fingerprint(const GeometryCheckOptions& o) {
  std::string text = "geometry-check\n";
  for (const auto& s : o.shapes) text += "shape = " + s + "\n";
  for (const auto& f : o.fields) text += "field = " + f + "\n";
  text += "nodes = " + std::to_string(o.nodes) + "\n";
  text += "tolerance = " + format_number(o.tolerance) + "\n";
  text += "skeleton_tolerance = " + format_number(o.skeleton_tolerance) + "\n";
  text += "skeleton_nodes = " + std::to_string(o.skeleton_nodes) + "\n";
  text += "skeleton_dt = " + format_number(o.skeleton_dt) + "\n";
  return fnv1a_hex(text);
}

}  // namespace dualflow::harness
