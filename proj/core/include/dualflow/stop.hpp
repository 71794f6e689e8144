#pragma once

#include <string_view>

namespace dualflow {

/// Why a simulated path stopped before the end of its grid.
enum class StopReason {
  none,
  explosion,            // a radius left (0, inf)
  ordering,             // particle crossed the domain boundary
  collapse_to_disk,     // inner annulus radius reached 0
  collar,               // annulus thinner than the collar, or too close to 0
  interval_collapse,    // free-dual interval shorter than the collar
  scheme_failure,       // violation beyond the scheme tolerance band
  convexity_breakdown,
  focal_crossing,
  symmetry_loss,
};

constexpr std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::explosion: return "explosion";
    case StopReason::ordering: return "ordering";
    case StopReason::collapse_to_disk: return "collapse-to-disk";
    case StopReason::collar: return "collar";
    case StopReason::interval_collapse: return "interval-collapse";
    case StopReason::scheme_failure: return "scheme-failure";
    case StopReason::convexity_breakdown: return "convexity-breakdown";
    case StopReason::focal_crossing: return "focal-crossing";
    case StopReason::symmetry_loss: return "symmetry-loss";
  }
  return "unknown";
}

}  // namespace dualflow
