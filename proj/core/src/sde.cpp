#include "dualflow/sde.hpp"

#include <algorithm>
#include <bit>

namespace dualflow {

TimeGrid::TimeGrid(double t_end, std::size_t n_steps)
    : t_end_(t_end), n_steps_(n_steps), dt_(0.0) {
  if (n_steps == 0) throw ConfigError("grid.n_steps must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end))
    throw ConfigError("grid.t_end must be positive and finite");
  dt_ = t_end / static_cast<double>(n_steps);
}

double TimeGrid::time_at(std::size_t k) const {
  if (k == n_steps_) return t_end_;
  return t_end_ * static_cast<double>(k) / static_cast<double>(n_steps_);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t replica_index) {
  // Key = splitmix64 of the seed, then mixed with the replica index so that
  // neighbouring replicas get unrelated states.
  std::uint64_t key = seed;
  const std::uint64_t k0 = splitmix64(key);
  std::uint64_t state = k0 ^ (replica_index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  (void)splitmix64(state);
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t RandomStream::next_u64() {
  const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * factor;
  has_cached_ = true;
  return u * factor;
}

std::vector<std::vector<double>> gaussian_increments(const NoiseStream& stream,
                                                     const TimeGrid& grid) {
  if (stream.dimension < 1) throw ConfigError("noise dimension must be >= 1");
  RandomStream rng(stream);
  const double sd = std::sqrt(grid.dt());
  std::vector<std::vector<double>> out(grid.n_steps(),
                                       std::vector<double>(static_cast<std::size_t>(stream.dimension)));
  for (auto& step : out)
    for (auto& v : step) v = rng.normal(sd);
  return out;
}

std::vector<double> brownian_path(RandomStream& rng, const TimeGrid& grid, double x0) {
  const double sd = std::sqrt(grid.dt());
  std::vector<double> x(grid.n_steps() + 1);
  x[0] = x0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) x[k + 1] = x[k] + rng.normal(sd);
  return x;
}

void PathRecord::add_channel(const std::string& name, std::vector<double> values) {
  if (values.size() != grid_.n_steps() + 1)
    throw InvariantError("channel '" + name + "' must have n_steps + 1 values");
  if (!channels_.emplace(name, std::move(values)).second)
    throw InvariantError("duplicate channel name '" + name + "'");
}

bool PathRecord::has_channel(const std::string& name) const {
  return channels_.count(name) != 0;
}

const std::vector<double>& PathRecord::channel(const std::string& name) const {
  auto it = channels_.find(name);
  if (it == channels_.end()) throw InvariantError("missing channel '" + name + "'");
  return it->second;
}

std::vector<std::string> PathRecord::channel_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : channels_) names.push_back(name);
  return names;
}

double bandwidth_for(double dt, double c) {
  if (!(dt > 0.0) || !(c > 0.0)) throw ConfigError("bandwidth.c and dt must be positive");
  return c * std::sqrt(dt);
}

double occupation_local_time_step(double x, double level, double qv, double bandwidth) {
  return std::abs(x - level) <= bandwidth ? qv / (2.0 * bandwidth) : 0.0;
}

LocalTimeAccumulator::LocalTimeAccumulator(double bandwidth, LocalTimeEstimator kind)
    : bandwidth_(bandwidth), kind_(kind) {
  if (!(bandwidth > 0.0)) throw ConfigError("local-time bandwidth must be positive");
}

double LocalTimeAccumulator::add_step(double x, double level, double dx) {
  double inc = 0.0;
  if (kind_ == LocalTimeEstimator::occupation) {
    inc = occupation_local_time_step(x, level, dx * dx, bandwidth_);
  } else {
    const double y = x - level;
    inc = std::abs(y + dx) - std::abs(y) - sign0(y) * dx;
  }
  value_ += inc;
  return inc;
}

std::vector<double> tanaka_local_time(std::span<const double> x) {
  std::vector<double> local(x.size(), 0.0);
  if (x.empty()) return local;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double dx = x[k] - x[k - 1];
    // Each increment is >= 0 in exact arithmetic; clamp rounding noise.
    const double inc = std::abs(x[k]) - std::abs(x[k - 1]) - sign0(x[k - 1]) * dx;
    local[k] = local[k - 1] + std::max(0.0, inc);
  }
  return local;
}

std::vector<double> skorokhod_reflect(std::span<const double> f) {
  std::vector<double> z(f.size());
  if (f.empty()) return z;
  if (f[0] < 0.0) throw ConfigError("skorokhod_reflect requires f_0 >= 0");
  double running_min = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    running_min = std::min(running_min, f[k]);
    z[k] = f[k] - running_min;
  }
  return z;
}

}  // namespace dualflow
