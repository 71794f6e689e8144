#pragma once

// Closed planar polygons approximating smooth boundaries: curvature,
// normals, foot points, normal rays and the quadratures built on them.
//
// Orientation convention: every boundary component is stored so that the
// domain lies on its left. Outer boundaries are counterclockwise; holes are
// traversed clockwise, which makes their curvature negative.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dualflow/errors.hpp"
#include "dualflow/vec2.hpp"

namespace dualflow {

/// Signed curvature of the circle through a, b, c (positive when the turn
/// a -> b -> c is counterclockwise). Collinear triples give 0.
double circumcurvature(Vec2 a, Vec2 b, Vec2 c);

/// Closed, simple, counterclockwise polygon with at least 16 nodes.
class DiscreteCurve {
 public:
  static constexpr std::size_t kMinNodes = 16;

  /// Validates node count, simplicity (pairwise segment test) and
  /// counterclockwise orientation.
  explicit DiscreteCurve(std::vector<Vec2> nodes);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  /// Cyclic access; any integer index is accepted.
  Vec2 node(std::ptrdiff_t i) const;

  double signed_area() const;
  double perimeter() const;
  /// Crossing-number membership test.
  bool contains(Vec2 q) const;

 private:
  struct Trusted {};
  DiscreteCurve(std::vector<Vec2> nodes, Trusted);
  friend class SymmetricConvexCurve;

  std::vector<Vec2> nodes_;
};

/// Discrete curvature at node i (circumscribed circle of i-1, i, i+1).
double curvature_at(const DiscreteCurve& curve, std::size_t i);
/// Unit inward normal at node i: toward the circumcenter on convex arcs,
/// left normal of the chord (i-1, i+1) when the triple is collinear.
Vec2 inward_normal_at(const DiscreteCurve& curve, std::size_t i);

/// Strictly convex curve symmetric about both coordinate axes. Node 0 sits
/// on the positive x-axis and N is a multiple of 4, so node N/4 is on the
/// positive y-axis.
class SymmetricConvexCurve {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  /// `tolerance` is relative to the largest node coordinate.
  explicit SymmetricConvexCurve(std::vector<Vec2> nodes,
                                double tolerance = kSymmetryTolerance);

  const DiscreteCurve& base() const { return base_; }
  std::size_t size() const { return base_.size(); }
  const std::vector<Vec2>& nodes() const { return base_.nodes(); }
  Vec2 node(std::ptrdiff_t i) const { return base_.node(i); }
  /// Abscissa of the right horizontal vertex (node 0).
  double vertex_abscissa() const { return base_.nodes()[0].x; }

 private:
  DiscreteCurve base_;
};

double curvature_at(const SymmetricConvexCurve& curve, std::size_t i);

/// Largest mismatch between the node set and its two axis reflections.
double symmetry_defect(const std::vector<Vec2>& nodes);
/// True when every turn is strictly counterclockwise.
bool is_strictly_convex(const std::vector<Vec2>& nodes);

struct BoundaryComponent {
  DiscreteCurve curve;  // counterclockwise as stored
  bool hole = false;
};

/// Bounded domain given by one outer boundary and any number of holes.
/// Per-node normals, curvatures and quadrature weights are computed once,
/// on construction, in the domain-on-the-left orientation.
class PlanarDomain {
 public:
  struct Component {
    std::vector<Vec2> nodes;      // domain on the left
    std::vector<Vec2> normals;    // unit, pointing into the domain
    std::vector<double> curvature;
    std::vector<double> weight;   // half the two adjacent edge lengths
    bool hole = false;
  };

  explicit PlanarDomain(std::vector<BoundaryComponent> components);
  explicit PlanarDomain(const DiscreteCurve& outer);
  explicit PlanarDomain(const SymmetricConvexCurve& outer);

  std::size_t component_count() const { return components_.size(); }
  const Component& component(std::size_t c) const { return components_.at(c); }
  std::size_t total_nodes() const;

  bool contains(Vec2 q) const;
  /// Shoelace area (outer minus holes).
  double area() const;
  Vec2 box_min() const { return lo_; }
  Vec2 box_max() const { return hi_; }
  double diameter() const { return norm(hi_ - lo_); }

 private:
  void build(std::vector<BoundaryComponent> components);

  std::vector<Component> components_;
  Vec2 lo_, hi_;
};

struct FootPointResult {
  Vec2 foot;
  double distance = 0.0;
  /// Positive inside the domain.
  double signed_distance = 0.0;
  Vec2 inward_normal;
  /// Boundary curvature at the foot (domain-on-the-left sign).
  double curvature = 0.0;
  std::size_t component = 0;
  /// The foot lies on segment (node_index, node_index + 1) at parameter
  /// `offset` in [0, 1], or on the osculating arc around node_index.
  std::size_t node_index = 0;
  double offset = 0.0;
};

/// Nearest boundary point of an arbitrary query (inside or outside).
/// Nearest-node scan with ties going to the lowest (component, index),
/// then refinement on the two adjacent segments and on the circle through
/// the node and its neighbours.
FootPointResult nearest_boundary_point(const PlanarDomain& domain, Vec2 q);

/// Nearest boundary point of a query strictly inside the domain.
FootPointResult foot_point(Vec2 q, const PlanarDomain& domain);
FootPointResult foot_point(Vec2 q, const DiscreteCurve& curve);
FootPointResult foot_point(Vec2 q, const SymmetricConvexCurve& curve);

double signed_distance(Vec2 q, const PlanarDomain& domain);

/// Curvature of the distance level set through q: kappa / (1 - s kappa)
/// with kappa the boundary curvature at the foot and s the distance.
double level_curvature(Vec2 q, const PlanarDomain& domain);
double level_curvature(Vec2 q, const DiscreteCurve& curve);
double level_curvature(Vec2 q, const SymmetricConvexCurve& curve);
/// Same formula applied to an already computed foot point.
double level_curvature(const FootPointResult& foot);

// ---------------------------------------------------------------------------
// Normal rays and tube quadrature

struct TubeOptions {
  /// Maximum Simpson step along each ray.
  double ray_step = 1e-3;
  /// Bisection tolerance for the ray cutoff, relative to the domain size.
  double cutoff_tolerance = 1e-12;
  /// The ray point is still governed by its origin while its nearest node
  /// stays within this many nodes of the origin node.
  std::size_t consistency_window = 2;
  /// Coarse march used to bracket the cutoff, as a fraction of the
  /// domain diameter.
  double march_fraction = 1.0 / 256.0;
};

/// Inward normal ray from one boundary node, with cutoff tau: the distance
/// at which the ray point stops having its origin as nearest boundary
/// point (capped just before the focal point 1/kappa).
struct NormalRay {
  Vec2 origin;
  Vec2 normal;
  double curvature = 0.0;
  double weight = 0.0;
  double tau = 0.0;
  std::size_t component = 0;
  std::size_t node = 0;

  Vec2 end() const { return origin + tau * normal; }
};

std::vector<NormalRay> trace_normal_rays(const PlanarDomain& domain,
                                         const TubeOptions& options = {});

struct RaySample {
  Vec2 point;
  double r = 0.0;
  /// Curvature of the level set through the sample.
  double level_curvature = 0.0;
  /// Area factor exp(-int_0^r level_curvature) = 1 - r kappa.
  double jacobian = 1.0;
  const NormalRay* ray = nullptr;
};

/// sum over rays of weight * int_0^tau f(sample) dr, composite Simpson with
/// steps no longer than ray_step. The area factor is not applied: callers
/// include sample.jacobian themselves.
double integrate_along_rays(const std::vector<NormalRay>& rays,
                            const std::function<double(const RaySample&)>& f,
                            double ray_step);

/// Integral of g over the domain through the normal-ray parametrization.
double tube_integrate(const PlanarDomain& domain,
                      const std::function<double(Vec2)>& g,
                      const TubeOptions& options = {});
double tube_integrate(const DiscreteCurve& curve,
                      const std::function<double(Vec2)>& g,
                      const TubeOptions& options = {});

// ---------------------------------------------------------------------------
// Skeleton of symmetric convex domains

/// Horizontal skeleton [-x*, x*] x {0} with the geodesic angle profile.
struct SkeletonSegment {
  double half_length = 0.0;
  std::vector<double> abscissa;  // uniform grid on [0, half_length]
  std::vector<double> theta;     // angle in (0, pi/2], 0 at the endpoint

  /// Profile value at |x| (linear interpolation), 0 outside the segment.
  double theta_at(double x) const;
};

/// x* = v - 1/kappa(vertex); the angle profile is sampled on
/// `profile_points` abscissae.
SkeletonSegment medial_axis(const SymmetricConvexCurve& curve,
                            std::size_t profile_points = 257);

/// Angle between the horizontal axis and the geodesic from the boundary to
/// the axis point (x, 0).
double skeleton_angle(const PlanarDomain& domain, double x);

struct SkeletonQuadrature {
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::vector<double> sin_theta;
};

/// Quadrature of the skeleton segment. The substitution x = x*(1 - u^2)
/// concentrates nodes near the endpoints, where sin(theta) has a square
/// root singularity.
SkeletonQuadrature skeleton_quadrature(const SymmetricConvexCurve& curve,
                                       std::size_t intervals = 512);

/// Skeleton reached by the rays of one boundary component, for domains in
/// which each skeleton point is the endpoint of exactly one such ray (an
/// annulus traced from its outer circle). Angles come from the polyline of
/// ray endpoints.
SkeletonQuadrature traced_skeleton_quadrature(const std::vector<NormalRay>& rays,
                                              std::size_t component);

struct ScalarField {
  std::function<double(Vec2)> value;
  std::function<Vec2(Vec2)> gradient;
};

struct StokesResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double boundary_term = 0.0;
  double skeleton_term = 0.0;
  double gradient_term = 0.0;
};

/// Both sides of
///   int_D g h = int_{dD} g - 2 int_S g sin(theta) + int_D <grad g, N>
/// with residual |lhs - rhs| / max(1, |lhs|).
StokesResult stokes_identity_residual(const PlanarDomain& domain,
                                      const SkeletonQuadrature& skeleton,
                                      const ScalarField& g,
                                      const TubeOptions& options = {});
StokesResult stokes_identity_residual(const SymmetricConvexCurve& curve,
                                      const ScalarField& g,
                                      const TubeOptions& options = {});

// ---------------------------------------------------------------------------
// Skeleton motion in the flat plane

/// Boundary speed data: H and its tangential gradient at y1, H at y2.
struct BoundarySpeed {
  double h1 = 0.0;
  Vec2 grad1;
  double h2 = 0.0;
};

struct SkeletonVelocity {
  Vec2 normal;
  Vec2 tangential;
};

/// Velocity of the regular skeleton point x with feet y1, y2 when the
/// boundary moves along its inward normal at speed H.
SkeletonVelocity skeleton_motion(Vec2 y1, Vec2 y2, Vec2 x, const BoundarySpeed& speed,
                                 double theta, double tolerance = 1e-9);

// ---------------------------------------------------------------------------
// Construction, resampling and I/O

std::vector<Vec2> circle_nodes(double radius, std::size_t n, Vec2 center = {});
/// Ellipse x^2/a^2 + y^2/b^2 = 1 with nodes at equal arc length, node 0 at
/// (a, 0). n must be a multiple of 4; the quarter is mirrored exactly.
std::vector<Vec2> ellipse_nodes(double a, double b, std::size_t n);
/// |x/a|^p + |y/b|^p = 1, sampled at equal angular parameter.
std::vector<Vec2> superellipse_nodes(double a, double b, double p, std::size_t n);

SymmetricConvexCurve make_circle(double radius, std::size_t n);
SymmetricConvexCurve make_ellipse(double a, double b, std::size_t n);
/// Annulus r_in < |x| < r_out as an outer circle and a hole.
PlanarDomain make_annulus(double r_in, double r_out, std::size_t n);

/// Redistributes a closed polygon to n nodes at equal arc length of its
/// periodic cubic spline (chord-length parametrization); node 0 is kept.
std::vector<Vec2> resample_equal_arclength(const std::vector<Vec2>& nodes,
                                           std::size_t n);

/// Backward-Euler step of y_t = tau * y_ss on a closed polygon: solves
/// (I - tau L) y' = nodes with the nonuniform three-point arc-length
/// Laplacian L. Moves convex nodes inward by about tau * curvature.
std::vector<Vec2> implicit_curve_diffusion(const std::vector<Vec2>& nodes, double tau);

/// One "x y" pair per line, 17 significant digits, no header.
void write_curve(std::ostream& out, const std::vector<Vec2>& nodes);
std::vector<Vec2> read_curve(std::istream& in);
void save_curve(const std::string& path, const std::vector<Vec2>& nodes);
std::vector<Vec2> load_curve(const std::string& path);

}  // namespace dualflow
