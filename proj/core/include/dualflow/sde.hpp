#pragma once

// Random streams, time grids, local-time estimators and the Skorokhod map.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dualflow/errors.hpp"

namespace dualflow {

/// Symmetric sign convention: sign(0) = 0.
inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Uniform time discretization of [0, t_end]. Node times are computed by
/// index so that time_at(n_steps) == t_end exactly.
class TimeGrid {
 public:
  TimeGrid(double t_end, std::size_t n_steps);

  double t_end() const { return t_end_; }
  std::size_t n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  double time_at(std::size_t k) const;

 private:
  double t_end_;
  std::size_t n_steps_;
  double dt_;
};

/// Identifies one replica's noise: (seed, replica_index) fully determines
/// the generated sequence.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint64_t replica_index = 0;
  int dimension = 1;
};

/// Name of the pinned generator algorithm, written into run fingerprints.
inline constexpr const char* kGeneratorName =
    "xoshiro256++(splitmix64(seed,replica))/marsaglia-polar";

/// Per-replica random stream: xoshiro256++ keyed by splitmix64 of
/// (seed, replica). Normals use the Marsaglia polar method, which only
/// needs sqrt and log, so sequences are reproducible bit-for-bit.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t replica_index);
  explicit RandomStream(const NoiseStream& stream)
      : RandomStream(stream.seed, stream.replica_index) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  double normal(double stddev) { return stddev * normal(); }

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// n_steps increment vectors, each with `dimension` i.i.d. N(0, dt)
/// coordinates.
std::vector<std::vector<double>> gaussian_increments(const NoiseStream& stream,
                                                     const TimeGrid& grid);

/// Cumulative Brownian path with one value per grid node, starting at x0.
std::vector<double> brownian_path(RandomStream& rng, const TimeGrid& grid,
                                  double x0 = 0.0);

/// Named scalar channels recorded on a TimeGrid.
class PathRecord {
 public:
  explicit PathRecord(TimeGrid grid) : grid_(grid) {}

  const TimeGrid& grid() const { return grid_; }
  void add_channel(const std::string& name, std::vector<double> values);
  bool has_channel(const std::string& name) const;
  const std::vector<double>& channel(const std::string& name) const;
  std::vector<std::string> channel_names() const;

 private:
  TimeGrid grid_;
  std::map<std::string, std::vector<double>> channels_;
};

/// Bandwidth policy beta = c * sqrt(dt).
double bandwidth_for(double dt, double c = 1.0);

/// One step of the occupation estimator:
/// (1 / 2 beta) * 1{|x - level| <= beta} * qv.
double occupation_local_time_step(double x, double level, double qv,
                                  double bandwidth);

enum class LocalTimeEstimator { occupation, tanaka_residual };

/// Running local time of a scalar process at a (possibly moving) level.
class LocalTimeAccumulator {
 public:
  LocalTimeAccumulator(double bandwidth,
                       LocalTimeEstimator kind = LocalTimeEstimator::occupation);

  /// Feeds one step. `x` and `level` are the values at the start of the
  /// step, `dx` the increment of x - level over the step.
  double add_step(double x, double level, double dx);

  double value() const { return value_; }
  double bandwidth() const { return bandwidth_; }
  LocalTimeEstimator kind() const { return kind_; }

 private:
  double bandwidth_;
  LocalTimeEstimator kind_;
  double value_ = 0.0;
};

/// Discrete Tanaka residual L_k = |X_k| - |X_0| - sum_{j<k} sign(X_j) dX_j.
std::vector<double> tanaka_local_time(std::span<const double> x);

/// z_t = f_t - min(0, min_{s<=t} f_s). Requires f_0 >= 0.
std::vector<double> skorokhod_reflect(std::span<const double> f);

}  // namespace dualflow
