#include "dualflow/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "dualflow/errors.hpp"

namespace dualflow {

namespace {

constexpr double kPi = std::numbers::pi;

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussX = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                           0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussW = {0.2369268850561891, 0.4786286704993665,
                                           0.5688888888888889, 0.4786286704993665,
                                           0.2369268850561891};

template <class F>
double gauss_integrate(F&& g, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t i = 0; i < 5; ++i) sum += kGaussW[i] * g(mid + 0.5 * h * kGaussX[i]);
  }
  return 0.5 * h * sum;
}

double volume_density(const RadialProfile& p, double r) {
  return std::pow(p.warp(r), p.dimension() - 1);
}

}  // namespace

RadialProfile::RadialProfile(ProfileKind kind, int dimension, std::function<double(double)> f,
                             std::function<double(double)> df, double r_max)
    : kind_(kind), dimension_(dimension), f_(std::move(f)), df_(std::move(df)), r_max_(r_max) {
  if (dimension_ < 2) throw ConfigError("profile dimension must be at least 2");
  if (!f_ || !df_) throw ConfigError("profile needs a warping function and its derivative");
  if (!(r_max_ > 0.0)) throw ConfigError("profile r_max must be positive");
}

RadialProfile RadialProfile::euclidean(int d) {
  return {ProfileKind::euclidean, d, [](double r) { return r; }, [](double) { return 1.0; },
          INFINITY};
}

RadialProfile RadialProfile::sphere(int d) {
  return {ProfileKind::sphere, d, [](double r) { return std::sin(r); },
          [](double r) { return std::cos(r); }, kPi};
}

RadialProfile RadialProfile::hyperbolic(int d) {
  return {ProfileKind::hyperbolic, d, [](double r) { return std::sinh(r); },
          [](double r) { return std::cosh(r); }, INFINITY};
}

RadialProfile RadialProfile::custom(int d, std::function<double(double)> f,
                                    std::function<double(double)> df, double r_max) {
  return {ProfileKind::custom, d, std::move(f), std::move(df), r_max};
}

double RadialProfile::disk_drift(double r) const {
  return (dimension_ - 1) * df_(r) / f_(r);
}

double RadialProfile::annulus_drift(double r) const { return df_(r) / f_(r); }

std::string RadialProfile::name() const {
  switch (kind_) {
    case ProfileKind::euclidean: return "euclidean";
    case ProfileKind::sphere: return "sphere";
    case ProfileKind::hyperbolic: return "hyperbolic";
    case ProfileKind::custom: return "custom";
  }
  return "unknown";
}

double radial_mass(const RadialProfile& p, double lo, double hi) {
  const int d = p.dimension();
  switch (p.kind()) {
    case ProfileKind::euclidean:
      return (std::pow(hi, d) - std::pow(lo, d)) / d;
    case ProfileKind::sphere:
      if (d == 2) return std::cos(lo) - std::cos(hi);
      break;
    case ProfileKind::hyperbolic:
      if (d == 2) return std::cosh(hi) - std::cosh(lo);
      break;
    case ProfileKind::custom:
      break;
  }
  return gauss_integrate([&](double r) { return volume_density(p, r); }, lo, hi, 256);
}

double radial_density_sample(const RadialProfile& p, double lo, double hi, double u) {
  if (!(lo >= 0.0 && lo < hi)) throw ConfigError("radial sample needs 0 <= lo < hi");
  if (!(u >= 0.0 && u <= 1.0)) throw ConfigError("radial sample needs u in [0, 1]");
  const int d = p.dimension();
  switch (p.kind()) {
    case ProfileKind::euclidean: {
      const double a = std::pow(lo, d), b = std::pow(hi, d);
      return std::clamp(std::pow(a + u * (b - a), 1.0 / d), lo, hi);
    }
    case ProfileKind::sphere:
      if (d == 2) {
        const double c = std::cos(lo) - u * (std::cos(lo) - std::cos(hi));
        return std::clamp(std::acos(std::clamp(c, -1.0, 1.0)), lo, hi);
      }
      break;
    case ProfileKind::hyperbolic:
      if (d == 2) {
        const double c = std::cosh(lo) + u * (std::cosh(hi) - std::cosh(lo));
        return std::clamp(std::acosh(c), lo, hi);
      }
      break;
    case ProfileKind::custom:
      break;
  }
  // Bisection on the cumulative mass, integrating only the new piece each time.
  const double total = radial_mass(p, lo, hi);
  const double target = u * total;
  double a = lo, b = hi, mass_a = 0.0;
  while (b - a > 1e-12) {
    const double m = 0.5 * (a + b);
    const double mass_m = mass_a + gauss_integrate([&](double r) { return volume_density(p, r); },
                                                   a, m, 32);
    if (mass_m < target) {
      a = m;
      mass_a = mass_m;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

DiskStep disk_step(const DiskDualState& s, const RadialProfile& p, double dbeta, double dt) {
  if (!(s.rho > 0.0 && s.rho < s.R)) throw ConfigError("disk step needs 0 < rho < R");
  const double b_rho = p.disk_drift(s.rho);
  DiskStep out;
  out.state.rho = s.rho + dbeta + 0.5 * b_rho * dt;
  out.state.R = s.R + dbeta + (b_rho - 0.5 * p.disk_drift(s.R)) * dt;
  const auto& n = out.state;
  if (!(n.rho > 0.0) || !(n.R > 0.0) || !(n.R < p.r_max()) || !std::isfinite(n.R))
    out.stop = StopReason::explosion;
  else if (!(n.rho < n.R))
    out.stop = StopReason::ordering;
  return out;
}

AnnulusStep annulus_step(const AnnulusDualState& s, const RadialProfile& p, double dbeta,
                         double dt, double bandwidth, double tolerance) {
  if (p.dimension() != 2) throw ConfigError("annulus dual is two-dimensional");
  if (!(s.r_minus > 0.0 && s.r_minus <= s.rho && s.rho <= s.r_plus))
    throw ConfigError("annulus step needs 0 < R- <= rho <= R+");
  if (tolerance < 0.0) tolerance = 2.0 * std::sqrt(dt);
  const double r0 = s.r_zero();
  const double sg = s.rho >= r0 ? 1.0 : -1.0;
  const double b_rho = p.annulus_drift(s.rho);
  AnnulusStep out;
  out.sign = sg;
  out.dw = sg * dbeta;
  out.local_time = occupation_local_time_step(s.rho, r0, dbeta * dbeta, bandwidth);
  auto& n = out.state;
  n.rho = s.rho + dbeta + 0.5 * b_rho * dt;
  n.r_plus = s.r_plus + out.dw + (-0.5 * p.annulus_drift(s.r_plus) + sg * b_rho) * dt +
             2.0 * out.local_time;
  n.r_minus = s.r_minus - out.dw + (-0.5 * p.annulus_drift(s.r_minus) - sg * b_rho) * dt -
              2.0 * out.local_time;
  n.local_time = s.local_time + out.local_time;
  out.violation = std::max({0.0, n.r_minus - n.rho, n.rho - n.r_plus});
  if (!(n.r_minus > 0.0))
    out.stop = StopReason::collapse_to_disk;
  else if (!(n.r_plus < p.r_max()) || !std::isfinite(n.r_plus))
    out.stop = StopReason::explosion;
  else if (out.violation > tolerance)
    out.stop = StopReason::scheme_failure;
  return out;
}

double annulus_volume(double r_minus, double r_plus, const RadialProfile& p) {
  if (p.dimension() != 2) throw ConfigError("annulus volume is two-dimensional");
  if (r_plus <= r_minus) return 0.0;
  return 2.0 * kPi * radial_mass(p, r_minus, r_plus);
}

double annulus_volume(const AnnulusDualState& s, const RadialProfile& p) {
  return annulus_volume(s.r_minus, s.r_plus, p);
}

RadialFunctional disk_functional(double R, TestField k) {
  RadialFunctional out;
  const double perimeter = 2.0 * kPi * R, area = kPi * R * R;
  if (k == TestField::one) {
    out.value = area;
    out.boundary_integral = perimeter;
  } else {
    out.value = 0.5 * kPi * std::pow(R, 4);
    out.boundary_integral = perimeter * R * R;
    // grad |x|^2 = 2x against the inward normal -x/R.
    out.boundary_normal_derivative = perimeter * (-2.0 * R);
  }
  out.generator = out.boundary_integral * perimeter / area - 0.5 * out.boundary_normal_derivative;
  out.gamma = out.boundary_integral * out.boundary_integral;
  return out;
}

RadialFunctional annulus_functional(double m, double p, TestField k) {
  RadialFunctional out;
  const double perimeter = 2.0 * kPi * (m + p), area = kPi * (p * p - m * m);
  if (k == TestField::one) {
    out.value = area;
    out.boundary_integral = perimeter;
  } else {
    out.value = 0.5 * kPi * (std::pow(p, 4) - std::pow(m, 4));
    out.boundary_integral = 2.0 * kPi * (p * p * p + m * m * m);
    // Inward normal is -x/p on the outer circle and +x/m on the inner one.
    out.boundary_normal_derivative = 2.0 * kPi * p * (-2.0 * p) + 2.0 * kPi * m * (2.0 * m);
  }
  out.generator = out.boundary_integral * perimeter / area - 0.5 * out.boundary_normal_derivative;
  out.gamma = out.boundary_integral * out.boundary_integral;
  return out;
}

double radial_increment(RandomStream& rng, const RadialProfile& p, double rho, double dt,
                        RadialNoise noise, double drift) {
  const double sd = std::sqrt(dt);
  if (noise == RadialNoise::gaussian) return rng.normal(sd);
  if (p.kind() != ProfileKind::euclidean)
    throw ConfigError("exact radial noise needs the euclidean profile");
  // Radius after an exact Gaussian step from rho * e1, minus the drift part.
  double sq = 0.0;
  const double z0 = rho + rng.normal(sd);
  sq = z0 * z0;
  for (int i = 1; i < p.dimension(); ++i) {
    const double z = rng.normal(sd);
    sq += z * z;
  }
  return std::sqrt(sq) - rho - 0.5 * drift * dt;
}

DiskPath simulate_disk(const RadialProfile& p, const TimeGrid& grid, RandomStream& rng,
                       const DiskRunOptions& o, const DiskObserver& observer) {
  if (!(o.r0 > 0.0 && o.r0 < p.r_max())) throw ConfigError("disk r0 must lie in (0, r_max)");
  if (!std::isnan(o.rho0) && !(o.rho0 > 0.0 && o.rho0 < o.r0))
    throw ConfigError("disk rho0 must satisfy 0 < rho0 < r0");
  DiskPath out;
  const double rho0 =
      std::isnan(o.rho0) ? radial_density_sample(p, 0.0, o.r0, rng.uniform_open()) : o.rho0;
  DiskDualState s{rho0, o.r0};
  out.initial = s;
  if (observer) observer(0, s);
  const double dt = grid.dt();
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double dbeta = radial_increment(rng, p, s.rho, dt, o.noise, p.disk_drift(s.rho));
    const auto step = disk_step(s, p, dbeta, dt);
    if (step.stop != StopReason::none) {
      out.stop = step.stop;
      break;
    }
    out.min_gap_increment =
        std::min(out.min_gap_increment, (step.state.R - step.state.rho) - (s.R - s.rho));
    s = step.state;
    out.steps_done = k + 1;
    if (observer) observer(k + 1, s);
  }
  out.state = s;
  return out;
}

AnnulusPath simulate_annulus(const RadialProfile& p, const TimeGrid& grid, RandomStream& rng,
                             const AnnulusRunOptions& o, const AnnulusObserver& observer) {
  if (!(o.r0_minus > 0.0 && o.r0_minus < o.r0_plus && o.r0_plus < p.r_max()))
    throw ConfigError("annulus needs 0 < r0_minus < r0_plus < r_max");
  if (!(o.collar > 0.0)) throw ConfigError("collar must be positive");
  AnnulusPath out;
  AnnulusDualState s;
  s.r_minus = o.r0_minus;
  s.r_plus = o.r0_plus;
  s.rho = radial_density_sample(p, o.r0_minus, o.r0_plus, rng.uniform_open());
  out.initial = s;
  const double dt = grid.dt();
  const double bw = bandwidth_for(dt, o.bandwidth_factor);
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double dbeta = radial_increment(rng, p, s.rho, dt, o.noise, p.annulus_drift(s.rho));
    const auto step = annulus_step(s, p, dbeta, dt, bw);
    out.max_violation = std::max(out.max_violation, step.violation);
    if (step.stop != StopReason::none) {
      out.stop = step.stop;
      break;
    }
    if (observer) observer(k, s, step);
    s = step.state;
    // Keep the particle in the closed annulus; the excursion is within the
    // tolerance band and is recorded as max_violation.
    s.rho = std::clamp(s.rho, s.r_minus, s.r_plus);
    out.steps_done = k + 1;
    if (s.r_plus - s.r_minus < 2.0 * o.collar || s.r_minus < o.collar) {
      out.stop = StopReason::collar;
      break;
    }
  }
  out.state = s;
  return out;
}

}  // namespace dualflow
