#pragma once

// Disk and annulus duals on rotationally symmetric manifolds
// ds^2 = dr^2 + f(r)^2 dTheta^2.

#include <cstdint>
#include <functional>
#include <string>

#include "dualflow/sde.hpp"
#include "dualflow/stop.hpp"

namespace dualflow {

enum class ProfileKind { euclidean, sphere, hyperbolic, custom };

/// Warping function f with derivative, in dimension d.
class RadialProfile {
 public:
  static RadialProfile euclidean(int dimension = 2);
  static RadialProfile sphere(int dimension = 2);
  static RadialProfile hyperbolic(int dimension = 2);
  static RadialProfile custom(int dimension, std::function<double(double)> f,
                              std::function<double(double)> df, double r_max = INFINITY);

  ProfileKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  double r_max() const { return r_max_; }
  double warp(double r) const { return f_(r); }
  double warp_derivative(double r) const { return df_(r); }
  /// b = (d - 1) f'/f, the radial drift of the disk model.
  double disk_drift(double r) const;
  /// b = f'/f, the radial drift of the two-dimensional annulus model.
  double annulus_drift(double r) const;
  std::string name() const;

 private:
  RadialProfile(ProfileKind kind, int dimension, std::function<double(double)> f,
                std::function<double(double)> df, double r_max);
  ProfileKind kind_;
  int dimension_;
  std::function<double(double)> f_, df_;
  double r_max_;
};

/// int_lo^hi f^(d-1).
double radial_mass(const RadialProfile& profile, double lo, double hi);

/// Inverse-CDF sample of the density proportional to f^(d-1) on (lo, hi).
double radial_density_sample(const RadialProfile& profile, double lo, double hi, double u);

struct DiskDualState {
  double rho = 0.0;
  double R = 0.0;
};

struct DiskStep {
  DiskDualState state;
  StopReason stop = StopReason::none;
};

/// rho' = rho + dbeta + b(rho) dt / 2,  R' = R + dbeta + (b(rho) - b(R) / 2) dt.
DiskStep disk_step(const DiskDualState& state, const RadialProfile& profile, double dbeta,
                   double dt);

struct AnnulusDualState {
  double rho = 0.0;
  double r_minus = 0.0;
  double r_plus = 0.0;
  double local_time = 0.0;
  double r_zero() const { return 0.5 * (r_minus + r_plus); }
};

struct AnnulusStep {
  AnnulusDualState state;
  StopReason stop = StopReason::none;
  double sign = 1.0;         // sign(rho - R0), with sign(0) = +1
  double dw = 0.0;           // sign * dbeta
  double local_time = 0.0;   // occupation increment at the skeleton circle
  double violation = 0.0;    // how far rho' lies outside [R-', R+']
};

/// One Euler step of the annulus system with skeleton local time.
/// Ordering violations beyond `tolerance` (default 2 sqrt(dt)) stop the path.
AnnulusStep annulus_step(const AnnulusDualState& state, const RadialProfile& profile,
                         double dbeta, double dt, double bandwidth, double tolerance = -1.0);

/// 2 pi int_{R-}^{R+} f, the area of a two-dimensional annulus.
double annulus_volume(const AnnulusDualState& state, const RadialProfile& profile);
double annulus_volume(double r_minus, double r_plus, const RadialProfile& profile);

// Closed forms for F_k(D) = int_D k on euclidean planar disks and annuli
// with k = 1 or k = |x|^2, together with the generator and carre du champ
// of the marginal domain process.

enum class TestField { one, r_squared };

struct RadialFunctional {
  double value = 0.0;
  double boundary_integral = 0.0;          // int_{dD} k
  double boundary_normal_derivative = 0.0; // int_{dD} <grad k, N>
  double generator = 0.0;
  double gamma = 0.0;
};

RadialFunctional disk_functional(double R, TestField k);
RadialFunctional annulus_functional(double r_minus, double r_plus, TestField k);

/// How dbeta is generated in ensemble runs. `exact` uses the radial part of
/// an exact d-dimensional Gaussian step (euclidean profiles only), so the
/// particle radius has the exact law on the grid; `gaussian` uses N(0, dt).
enum class RadialNoise { exact, gaussian };

/// Draws dbeta for the particle at radius rho.
double radial_increment(RandomStream& rng, const RadialProfile& profile, double rho, double dt,
                        RadialNoise noise, double drift);

struct DiskRunOptions {
  double r0 = 1.0;
  RadialNoise noise = RadialNoise::exact;
  double rho0 = NAN;  // fixed start when finite, else drawn from f^(d-1)
};

struct DiskPath {
  DiskDualState initial;
  DiskDualState state;
  StopReason stop = StopReason::none;
  std::size_t steps_done = 0;
  double min_gap_increment = 0.0;  // most negative step change of R - rho
};

using DiskObserver = std::function<void(std::size_t, const DiskDualState&)>;

/// One replica from rho_0 ~ f^(d-1) on (0, r0) (or the fixed rho0), R_0 = r0. The observer, when
/// set, sees every node state including the initial one.
DiskPath simulate_disk(const RadialProfile& profile, const TimeGrid& grid, RandomStream& rng,
                       const DiskRunOptions& options, const DiskObserver& observer = {});

struct AnnulusRunOptions {
  double r0_minus = 1.0;
  double r0_plus = 2.0;
  double bandwidth_factor = 1.0;
  double collar = 1e-3;
  RadialNoise noise = RadialNoise::exact;
};

struct AnnulusPath {
  AnnulusDualState initial;
  AnnulusDualState state;
  StopReason stop = StopReason::none;
  std::size_t steps_done = 0;
  double max_violation = 0.0;
};

/// Observer called after every step with the pre-step state and step record.
using AnnulusObserver =
    std::function<void(std::size_t, const AnnulusDualState&, const AnnulusStep&)>;

AnnulusPath simulate_annulus(const RadialProfile& profile, const TimeGrid& grid,
                             RandomStream& rng, const AnnulusRunOptions& options,
                             const AnnulusObserver& observer = {});

}  // namespace dualflow
