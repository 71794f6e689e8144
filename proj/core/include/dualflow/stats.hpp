#pragma once

// Empirical distributions, KS statistics, conditional-uniformity harness and
// the generator / measure-evolution / Ito-Tanaka diagnostics.

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dualflow/sde.hpp"

namespace dualflow {

/// Sorted sample. The constructor rejects unsorted or non-finite input.
class EmpiricalSample {
 public:
  explicit EmpiricalSample(std::vector<double> sorted_values);
  static EmpiricalSample from_unsorted(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double quantile(double p) const;

 private:
  std::vector<double> values_;
};

using Cdf = std::function<double(double)>;

inline double uniform01_cdf(double x) { return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : x); }

/// D_n = max_i max(i/n - F(x_i), F(x_i) - (i-1)/n).
double ks_one_sample(const EmpiricalSample& sample, const Cdf& cdf);
double ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b);
/// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

enum class Verdict { pass, fail, degenerate };
const char* to_string(Verdict v);

struct Check {
  std::string key;
  double value = 0.0;
  double threshold = 0.0;
  bool passed() const { return value <= threshold; }
};

/// Outcome of one verification. The verdict is pass iff every check value is
/// at or below its threshold, unless the input was flagged degenerate.
struct StatReport {
  std::string name;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> metrics;
  std::map<std::string, std::size_t> stops;
  std::size_t samples = 0;
  std::string fingerprint;
  bool degenerate = false;

  Verdict verdict() const;
  bool passed() const { return verdict() == Verdict::pass; }
  const Check& check(const std::string& key) const;
  double metric(const std::string& key) const;
  /// key = value lines in a stable order.
  std::string to_text() const;
};

struct UniformityPair {
  double particle = 0.0;
  double domain = 0.0;
};

struct UniformityThresholds {
  double ks = 0.02;
  double correlation = 0.03;
  double stratified_ks = 0.05;
  std::size_t strata = 4;
  std::size_t min_samples = 100;
};

/// KS of U = pushforward(pair) against Uniform(0,1), |corr(U, domain)| and
/// KS within quantile strata of the domain statistic.
StatReport conditional_uniformity(std::span<const UniformityPair> pairs,
                                  const std::function<double(const UniformityPair&)>& pushforward,
                                  const UniformityThresholds& thresholds,
                                  std::string name = "conditional-uniformity");

/// Per-path integrals for the Dynkin comparison of a functional F = F_k.
struct DynkinPath {
  double increment = 0.0;       // F(D_t) - F(D_0)
  double generator_integral = 0.0;  // int_0^t L F(D_s) ds
  double quadratic_variation = 0.0; // sum of squared increments of F
  double gamma_integral = 0.0;  // int_0^t Gamma(F, F)(D_s) ds
};

/// Streams one path's values of F, L F and Gamma(F, F) on the grid.
class DynkinAccumulator {
 public:
  explicit DynkinAccumulator(double dt) : dt_(dt) {}
  void add(double f, double generator, double gamma);
  DynkinPath result() const { return path_; }

 private:
  double dt_;
  bool started_ = false;
  double f0_ = 0.0, prev_f_ = 0.0, prev_gen_ = 0.0, prev_gamma_ = 0.0;
  DynkinPath path_;
};

/// Compares mean increment with mean generator integral and mean quadratic
/// variation with mean carre du champ integral; both as relative errors.
StatReport dynkin_check(std::span<const DynkinPath> paths, double tolerance,
                        std::string name = "dynkin");

/// Sufficient statistics for the no-intercept regression y ~ a x1 + c x2.
class RegressionAccumulator {
 public:
  void add(double y, double x1, double x2);
  void merge(const RegressionAccumulator& other);
  std::size_t count() const { return n_; }
  /// (a, c); throws InsufficientDataError when the normal matrix is singular.
  std::pair<double, double> slopes() const;
  bool degenerate() const;

  /// Raw sums (s11, s12, s22, s1y, s2y, syy) for serialization.
  std::array<double, 6> sums() const { return {s11_, s12_, s22_, s1y_, s2y_, syy_}; }
  static RegressionAccumulator from_sums(std::size_t count, const std::array<double, 6>& sums);

 private:
  std::size_t n_ = 0;
  double s11_ = 0.0, s12_ = 0.0, s22_ = 0.0, s1y_ = 0.0, s2y_ = 0.0, syy_ = 0.0;
};

/// Increments of mu_t(k) regressed on the predicted drift and diffusion
/// parts; both slopes should be 1.
StatReport measure_evolution_check(const RegressionAccumulator& acc, double tolerance,
                                   std::string name = "measure-evolution");

/// Channel names read by tanaka_path_residual.
inline constexpr const char* kDistanceChannel = "distance";
inline constexpr const char* kNormalIncrementChannel = "normal_increment";
inline constexpr const char* kCurvatureChannel = "curvature";
inline constexpr const char* kSinThetaChannel = "sin_theta";
inline constexpr const char* kLocalTimeChannel = "local_time";

/// sup_t |r_t| with r_t = d(X_t) - d(X_0) - sum [<N, dX> - h/2 dt - sin(theta) dL].
/// Channels hold node values; the increment channels hold the increment
/// over the step starting at each node (last entry unused).
double tanaka_path_residual(const PathRecord& record);

/// 95th percentile of the per-path sup residuals against a threshold.
StatReport tanaka_residual_check(std::span<const double> sup_residuals, double threshold,
                                 std::string name = "ito-tanaka");

}  // namespace dualflow
