#pragma once

// Planar dual: a Brownian particle coupled to a symmetric convex domain whose
// boundary nodes move along their normals.

#include <cstddef>
#include <optional>

#include "dualflow/geometry.hpp"
#include "dualflow/sde.hpp"
#include "dualflow/stop.hpp"

namespace dualflow {

struct PlanarOptions {
  std::size_t skeleton_every = 10;   // steps between medial-axis recomputes
  std::size_t profile_points = 65;   // theta profile resolution
  double symmetry_tolerance = 1e-9;  // relative to the largest coordinate
  double repair_offset = 1e-10;      // inward offset after a containment repair
  bool resample = true;              // equal arc length after every step
  // Backward Euler for the curvature term. The explicit update needs
  // dt below the squared node spacing.
  bool implicit_curvature = true;
};

struct PlanarDualState {
  Vec2 x;
  SymmetricConvexCurve domain;
  SkeletonSegment skeleton;    // last recomputed medial axis
  double half_length = 0.0;    // current x*, advanced between recomputes
  double endpoint_rate = 0.0;  // dx*/dt at the last recompute
  double local_time = 0.0;
  std::size_t steps = 0;
  std::size_t repairs = 0;
  double max_violation = 0.0;  // largest exit distance before repair
};

/// Builds a state and its skeleton. Throws DomainError if x is not inside.
PlanarDualState make_planar_state(SymmetricConvexCurve domain, Vec2 x,
                                  const PlanarOptions& options = {});

/// theta at a point, read on the skeleton where the inward normal line
/// through its foot point meets the horizontal axis; 0 beyond +-x*.
double extended_theta(const FootPointResult& foot, const SkeletonSegment& skeleton,
                      double half_length);

/// Rate dx*/dt = rho^2 / 2 * h'' at the horizontal vertex under the
/// deterministic boundary speed h / 2 (rho = 1 / kappa at the vertex).
double skeleton_endpoint_speed(const SymmetricConvexCurve& curve);

struct PlanarStepInfo {
  StopReason stop = StopReason::none;
  double theta = 0.0;
  double drive = 0.0;       // sign(X1) cos(theta) dX1 + sign(X2) sin(theta) dX2
  double local_time = 0.0;  // skeleton local-time increment
  double level_curvature = 0.0;
  bool repaired = false;
};

/// One step. Each node y moves along its inward normal by
/// -dW + (h(y)/2 - h(X)) dt - 2 sin(theta) dL, then X += dX. On a typed stop
/// the state is left unchanged.
PlanarStepInfo planar_step(PlanarDualState& state, Vec2 dx, double dt, double bandwidth,
                           const PlanarOptions& options = {});

/// Boundary moved by h/2 dt along inward normals (no particle terms).
/// Returns nullopt if convexity is lost.
std::optional<SymmetricConvexCurve> deterministic_flow_step(const SymmetricConvexCurve& curve,
                                                            double dt, bool resample = true,
                                                            double symmetry_tolerance = 1e-9,
                                                            bool implicit_curvature = true);

/// Planar Brownian X from x0 in a fixed domain, recorded with the channels
/// read by tanaka_path_residual: distance to the boundary, <N, dX> with N the
/// inward normal at the foot point, level-set curvature, sin(theta) and the
/// skeleton local time (occupation of X2 at 0 while |X1| < x*). The record
/// ends before the first exit; nullopt if X leaves on the first step.
std::optional<PathRecord> frozen_planar_record(const SymmetricConvexCurve& domain, Vec2 x0,
                                               const TimeGrid& grid, RandomStream& rng,
                                               double bandwidth,
                                               std::size_t profile_points = 65);

/// Rejection sampling in the bounding box. Throws DomainError after 10^4
/// consecutive rejections.
Vec2 sample_uniform_planar(const PlanarDomain& domain, RandomStream& rng);
Vec2 sample_uniform_planar(const SymmetricConvexCurve& curve, RandomStream& rng);

/// Fraction of the domain area within distance s of the boundary, from the
/// tube formula with rays ending on the horizontal axis. Uniform points have
/// uniformly distributed distance_cdf(curve, d(X)).
double distance_cdf(const SymmetricConvexCurve& curve, double s);

}  // namespace dualflow
