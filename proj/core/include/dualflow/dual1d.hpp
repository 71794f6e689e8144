#pragma once

// Interval duals of a one-dimensional Brownian motion.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dualflow/sde.hpp"
#include "dualflow/stop.hpp"

namespace dualflow {

/// R = |X| + L, L the discrete Tanaka residual of X at 0. Requires X_0 = 0.
std::vector<double> symmetric_dual(std::span<const double> x);

/// R = X - 2 min_{s<=t} X_s. Requires X_0 = 0.
std::vector<double> pitman_dual(std::span<const double> x);

/// How the local-time terms at the moving ends of an interval are realized.
enum class BoundaryPush {
  /// Smallest push that keeps the particle inside (discrete Skorokhod map).
  regulator,
  /// Occupation estimator of each gap at 0 with the gap's own quadratic
  /// variation, then clipping.
  occupation,
};

struct MirrorOptions {
  double bandwidth = 0.01;
  BoundaryPush push = BoundaryPush::regulator;
};

struct MirrorPath {
  std::vector<double> r;
  std::size_t push_steps = 0;   // steps where an end had to be pushed
  std::size_t clip_steps = 0;   // steps where R was clipped at 0
  double max_violation = 0.0;   // max(|X| - R, 0) over nodes
};

/// Euler co-simulation of
///   dR = -sign(X) dX - 2 dL(X) + 2 dL(R - X) + 2 dL(R + X),  R_0 = 0,
/// with the local time of X at 0 from the occupation estimator.
MirrorPath mirror_dual(std::span<const double> x, const MirrorOptions& options);

struct FreeDualOptions {
  double bandwidth = 0.01;
  /// The path stops once b - a < 2 * collar.
  double collar = 1e-3;
  BoundaryPush push = BoundaryPush::regulator;
};

struct FreeDualPath {
  std::vector<double> a, b;
  double local_time = 0.0;       // total boundary push
  std::size_t push_steps = 0;
  double max_violation = 0.0;
  StopReason stop = StopReason::none;
  std::size_t steps_done = 0;    // nodes a[0..steps_done] are valid
};

/// Interval [a, b] driven by a noise W independent of X:
///   da = dW - dL,  db = -dW + dL,
/// L the local time of X on the moving boundary, credited to the endpoint
/// nearer to X at the start of the step (split evenly on a tie).
FreeDualPath free_dual(std::span<const double> x, std::span<const double> w, double a0,
                       double b0, const FreeDualOptions& options);

/// Brownian X from x0 in the fixed interval [-R, R], recorded with the
/// channels read by tanaka_path_residual: distance R - |X|, normal increment
/// -sign(X) dX, zero curvature, sin(theta) = 1 and the occupation local time
/// of X at 0. The record ends before the first exit; nullopt if X leaves on
/// the first step.
std::optional<PathRecord> frozen_interval_record(double half_width, double x0,
                                                 const TimeGrid& grid, RandomStream& rng,
                                                 double bandwidth);

/// P(|B_t| <= x) for a 3-dimensional Brownian motion from the origin.
double bessel3_cdf(double x, double t);

}  // namespace dualflow
