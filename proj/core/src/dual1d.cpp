#include "dualflow/dual1d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dualflow/errors.hpp"
#include "dualflow/sde.hpp"
#include "dualflow/stats.hpp"

namespace dualflow {

namespace {

void require_origin(std::span<const double> x) {
  if (x.empty()) throw ConfigError("path must have at least one node");
  if (x[0] != 0.0) throw ConfigError("path must start at 0");
}

}  // namespace

std::vector<double> symmetric_dual(std::span<const double> x) {
  require_origin(x);
  std::vector<double> r = tanaka_local_time(x);
  for (std::size_t k = 0; k < x.size(); ++k) r[k] += std::abs(x[k]);
  return r;
}

std::vector<double> pitman_dual(std::span<const double> x) {
  require_origin(x);
  std::vector<double> r(x.size());
  double running_min = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    running_min = std::min(running_min, x[k]);
    r[k] = x[k] - 2.0 * running_min;
  }
  return r;
}

MirrorPath mirror_dual(std::span<const double> x, const MirrorOptions& options) {
  require_origin(x);
  if (!(options.bandwidth > 0.0)) throw ConfigError("mirror bandwidth must be positive");
  const double bw = options.bandwidth;
  MirrorPath out;
  out.r.assign(x.size(), 0.0);
  double r = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double dx = x[k + 1] - x[k];
    const double l0 = occupation_local_time_step(x[k], 0.0, dx * dx, bw);
    double next = r - sign0(x[k]) * dx - 2.0 * l0;
    const double xn = x[k + 1];
    if (options.push == BoundaryPush::regulator) {
      if (next < std::abs(xn)) {
        next = std::abs(xn);
        ++out.push_steps;
      }
    } else {
      // d<R - X> = d<R + X> = d<X> in the continuum.
      const double lp = occupation_local_time_step(r - x[k], 0.0, dx * dx, bw);
      const double lm = occupation_local_time_step(r + x[k], 0.0, dx * dx, bw);
      if (lp > 0.0 || lm > 0.0) ++out.push_steps;
      next += 2.0 * lp + 2.0 * lm;
      if (next < 0.0) {
        next = 0.0;
        ++out.clip_steps;
      }
    }
    out.max_violation = std::max(out.max_violation, std::abs(xn) - next);
    r = next;
    out.r[k + 1] = r;
  }
  return out;
}

FreeDualPath free_dual(std::span<const double> x, std::span<const double> w, double a0,
                       double b0, const FreeDualOptions& options) {
  if (x.size() != w.size() || x.empty()) throw ConfigError("free dual needs equal-length paths");
  if (!(a0 < x[0] && x[0] < b0)) throw ConfigError("free dual needs a0 < X_0 < b0");
  if (!(options.bandwidth > 0.0)) throw ConfigError("free dual bandwidth must be positive");
  const double bw = options.bandwidth;
  FreeDualPath out;
  out.a.reserve(x.size());
  out.b.reserve(x.size());
  out.a.push_back(a0);
  out.b.push_back(b0);
  double a = a0, b = b0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double dw = w[k + 1] - w[k];
    const double dx = x[k + 1] - x[k];
    const double xn = x[k + 1];
    double an = a + dw, bn = b - dw;
    double push = 0.0;
    if (options.push == BoundaryPush::occupation) {
      const double gb = b - x[k], ga = x[k] - a;
      const double dgb = -dw - dx, dga = dx - dw;
      const double lb = occupation_local_time_step(gb, 0.0, dgb * dgb, bw);
      const double la = occupation_local_time_step(ga, 0.0, dga * dga, bw);
      if (ga <= bw && gb <= bw) {
        const double l = 0.5 * (la + lb);
        an -= 0.5 * l;
        bn += 0.5 * l;
        push = l;
      } else if (gb < ga) {
        bn += lb;
        push = lb;
      } else {
        an -= la;
        push = la;
      }
    }
    const double violation = std::max(xn - bn, an - xn);
    out.max_violation = std::max(out.max_violation, violation);
    if (violation > 0.0) {
      // Credit the remaining push to the endpoint that was crossed.
      if (xn > bn) {
        push += xn - bn;
        bn = xn;
      } else {
        push += an - xn;
        an = xn;
      }
    }
    if (push > 0.0) ++out.push_steps;
    out.local_time += push;
    a = an;
    b = bn;
    out.a.push_back(a);
    out.b.push_back(b);
    out.steps_done = k + 1;
    if (b - a < 2.0 * options.collar) {
      out.stop = StopReason::interval_collapse;
      break;
    }
  }
  return out;
}

std::optional<PathRecord> frozen_interval_record(double half_width, double x0,
                                                 const TimeGrid& grid, RandomStream& rng,
                                                 double bandwidth) {
  if (!(half_width > 0.0)) throw ConfigError("half_width must be positive");
  if (!(std::abs(x0) < half_width)) throw ConfigError("x0 must lie inside the interval");
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
  const double sd = std::sqrt(grid.dt());
  std::vector<double> d{half_width - std::abs(x0)}, dn, dl;
  double x = x0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double dx = rng.normal(sd);
    const double xn = x + dx;
    if (!(std::abs(xn) < half_width)) break;
    dn.push_back(-sign0(x) * dx);
    dl.push_back(occupation_local_time_step(x, 0.0, dx * dx, bandwidth));
    d.push_back(half_width - std::abs(xn));
    x = xn;
  }
  const std::size_t n = dn.size();
  if (n == 0) return std::nullopt;
  PathRecord rec(TimeGrid(grid.time_at(n), n));
  dn.push_back(0.0);
  dl.push_back(0.0);
  rec.add_channel(kDistanceChannel, std::move(d));
  rec.add_channel(kNormalIncrementChannel, std::move(dn));
  rec.add_channel(kCurvatureChannel, std::vector<double>(n + 1, 0.0));
  rec.add_channel(kSinThetaChannel, std::vector<double>(n + 1, 1.0));
  rec.add_channel(kLocalTimeChannel, std::move(dl));
  return rec;
}

double bessel3_cdf(double x, double t) {
  if (!(t > 0.0)) throw ConfigError("bessel3_cdf needs t > 0");
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double z = x / std::sqrt(t);
  return std::erf(z / std::numbers::sqrt2) -
         std::sqrt(2.0 / std::numbers::pi) * z * std::exp(-0.5 * z * z);
}

}  // namespace dualflow
