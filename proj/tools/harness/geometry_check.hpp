#pragma once

// Deterministic geometry identities over a shape corpus: the key formula,
// tube-formula areas and skeleton motion.

#include <string>
#include <vector>

#include "dualflow/geometry.hpp"
#include "dualflow/stats.hpp"

namespace dualflow::harness {

struct GeometryCheckOptions {
  /// disk, disk:R, ellipse:a,b, annulus:r1,r2 or file:<path>. Empty: the
  /// corpus disk, ellipse:2,1, ellipse:3,1, annulus:1,2.
  std::vector<std::string> shapes;
  /// Subset of one, x, x2p2, expx4; empty means all four.
  std::vector<std::string> fields;
  std::size_t nodes = 2048;
  double tolerance = 1e-3;
  /// Relative tolerance of the endpoint speed against a finite-difference
  /// oracle, with its resolution and step.
  double skeleton_tolerance = 0.02;
  std::size_t skeleton_nodes = 4096;
  double skeleton_dt = 1e-5;
};

/// One report per shape. Throws ConfigError for unknown shapes or fields and
/// for unreadable curve files.
std::vector<StatReport> geometry_check(const GeometryCheckOptions& options);

/// Reads a curve file as a symmetric convex curve; every problem with the
/// file is reported as a ConfigError.
SymmetricConvexCurve load_symmetric_curve(const std::string& path,
                                          double tolerance = SymmetricConvexCurve::kSymmetryTolerance);

std::string geometry_fingerprint(const GeometryCheckOptions& options);

}  // namespace dualflow::harness
