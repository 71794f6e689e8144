#include "dualflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dualflow/errors.hpp"

namespace dualflow {

namespace {

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EmpiricalSample::EmpiricalSample(std::vector<double> sorted_values)
    : values_(std::move(sorted_values)) {
  for (double v : values_)
    if (!std::isfinite(v)) throw InvariantError("empirical sample contains a non-finite value");
  if (!std::is_sorted(values_.begin(), values_.end()))
    throw InvariantError("empirical sample is not sorted");
}

EmpiricalSample EmpiricalSample::from_unsorted(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return EmpiricalSample(std::move(values));
}

double EmpiricalSample::quantile(double p) const {
  if (values_.empty()) throw InsufficientDataError("quantile of an empty sample");
  p = std::clamp(p, 0.0, 1.0);
  const double pos = p * static_cast<double>(values_.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values_.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

double ks_one_sample(const EmpiricalSample& sample, const Cdf& cdf) {
  const auto v = sample.values();
  if (v.empty()) throw InsufficientDataError("KS statistic of an empty sample");
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b) {
  const auto x = a.values(), y = b.values();
  if (x.empty() || y.empty()) throw InsufficientDataError("KS statistic of an empty sample");
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("pearson needs equal-length inputs");
  if (x.size() < 2) throw InsufficientDataError("pearson needs at least two pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::degenerate: return "degenerate";
  }
  return "unknown";
}

Verdict StatReport::verdict() const {
  if (degenerate) return Verdict::degenerate;
  for (const auto& c : checks)
    if (!c.passed()) return Verdict::fail;
  return Verdict::pass;
}

const Check& StatReport::check(const std::string& key) const {
  for (const auto& c : checks)
    if (c.key == key) return c;
  throw InvariantError("report " + name + " has no check " + key);
}

double StatReport::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  throw InvariantError("report " + name + " has no metric " + key);
}

std::string StatReport::to_text() const {
  std::ostringstream os;
  os << "report = " << name << '\n';
  if (!fingerprint.empty()) os << "fingerprint = " << fingerprint << '\n';
  os << "verdict = " << to_string(verdict()) << '\n';
  os << "samples = " << samples << '\n';
  for (const auto& c : checks) {
    os << "check." << c.key << ".value = " << format17(c.value) << '\n';
    os << "check." << c.key << ".threshold = " << format17(c.threshold) << '\n';
    os << "check." << c.key << ".verdict = " << (c.passed() ? "pass" : "fail") << '\n';
  }
  for (const auto& [k, v] : metrics) os << "metric." << k << " = " << format17(v) << '\n';
  for (const auto& [k, v] : stops) os << "stops." << k << " = " << v << '\n';
  return os.str();
}

StatReport conditional_uniformity(std::span<const UniformityPair> pairs,
                                  const std::function<double(const UniformityPair&)>& pushforward,
                                  const UniformityThresholds& thresholds, std::string name) {
  if (pairs.size() < thresholds.min_samples)
    throw InsufficientDataError(name + ": " + std::to_string(pairs.size()) +
                                " surviving pairs, need " +
                                std::to_string(thresholds.min_samples));
  if (thresholds.strata == 0) throw ConfigError("strata must be positive");
  std::vector<double> u(pairs.size()), dom(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    u[i] = pushforward(pairs[i]);
    dom[i] = pairs[i].domain;
  }
  StatReport rep;
  rep.name = std::move(name);
  rep.samples = pairs.size();
  const double ks = ks_one_sample(EmpiricalSample::from_unsorted(u), uniform01_cdf);
  const double corr = std::abs(pearson(u, dom));
  rep.checks.push_back({"ks", ks, thresholds.ks});
  rep.checks.push_back({"abs_correlation", corr, thresholds.correlation});

  // Strata by rank of the domain statistic.
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dom[a] < dom[b]; });
  const std::size_t k = thresholds.strata;
  double worst = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t lo = s * order.size() / k, hi = (s + 1) * order.size() / k;
    std::vector<double> part;
    part.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) part.push_back(u[order[i]]);
    if (part.empty()) continue;
    const double d = ks_one_sample(EmpiricalSample::from_unsorted(std::move(part)), uniform01_cdf);
    rep.metrics.emplace_back("stratum" + std::to_string(s) + "_ks", d);
    worst = std::max(worst, d);
  }
  rep.checks.push_back({"stratified_ks", worst, thresholds.stratified_ks});
  return rep;
}

void DynkinAccumulator::add(double f, double generator, double gamma) {
  if (!started_) {
    started_ = true;
    f0_ = f;
  } else {
    path_.increment = f - f0_;
    path_.generator_integral += prev_gen_ * dt_;
    path_.gamma_integral += prev_gamma_ * dt_;
    path_.quadratic_variation += (f - prev_f_) * (f - prev_f_);
  }
  prev_f_ = f;
  prev_gen_ = generator;
  prev_gamma_ = gamma;
}

StatReport dynkin_check(std::span<const DynkinPath> paths, double tolerance, std::string name) {
  if (paths.size() < 2) throw InsufficientDataError(name + ": no surviving paths");
  const double n = static_cast<double>(paths.size());
  double inc = 0.0, gen = 0.0, qv = 0.0, gam = 0.0, diff_sq = 0.0, qdiff_sq = 0.0;
  for (const auto& p : paths) {
    inc += p.increment;
    gen += p.generator_integral;
    qv += p.quadratic_variation;
    gam += p.gamma_integral;
  }
  inc /= n;
  gen /= n;
  qv /= n;
  gam /= n;
  for (const auto& p : paths) {
    const double d = (p.increment - p.generator_integral) - (inc - gen);
    const double q = (p.quadratic_variation - p.gamma_integral) - (qv - gam);
    diff_sq += d * d;
    qdiff_sq += q * q;
  }
  StatReport rep;
  rep.name = std::move(name);
  rep.samples = paths.size();
  if (gen == 0.0 || gam == 0.0) {
    rep.degenerate = true;
    return rep;
  }
  rep.checks.push_back({"drift_rel_error", std::abs(inc - gen) / std::abs(gen), tolerance});
  rep.checks.push_back({"qv_rel_error", std::abs(qv - gam) / std::abs(gam), tolerance});
  rep.metrics.emplace_back("mean_increment", inc);
  rep.metrics.emplace_back("mean_generator_integral", gen);
  rep.metrics.emplace_back("drift_stderr", std::sqrt(diff_sq / (n - 1.0) / n));
  rep.metrics.emplace_back("mean_quadratic_variation", qv);
  rep.metrics.emplace_back("mean_gamma_integral", gam);
  rep.metrics.emplace_back("qv_stderr", std::sqrt(qdiff_sq / (n - 1.0) / n));
  return rep;
}

void RegressionAccumulator::add(double y, double x1, double x2) {
  ++n_;
  s11_ += x1 * x1;
  s12_ += x1 * x2;
  s22_ += x2 * x2;
  s1y_ += x1 * y;
  s2y_ += x2 * y;
  syy_ += y * y;
}

RegressionAccumulator RegressionAccumulator::from_sums(std::size_t count,
                                                      const std::array<double, 6>& sums) {
  RegressionAccumulator a;
  a.n_ = count;
  a.s11_ = sums[0];
  a.s12_ = sums[1];
  a.s22_ = sums[2];
  a.s1y_ = sums[3];
  a.s2y_ = sums[4];
  a.syy_ = sums[5];
  return a;
}

void RegressionAccumulator::merge(const RegressionAccumulator& o) {
  n_ += o.n_;
  s11_ += o.s11_;
  s12_ += o.s12_;
  s22_ += o.s22_;
  s1y_ += o.s1y_;
  s2y_ += o.s2y_;
  syy_ += o.syy_;
}

bool RegressionAccumulator::degenerate() const {
  const double det = s11_ * s22_ - s12_ * s12_;
  return n_ < 2 || !(det > 1e-12 * s11_ * s22_) || syy_ == 0.0;
}

std::pair<double, double> RegressionAccumulator::slopes() const {
  if (degenerate()) throw InsufficientDataError("regression design is singular");
  const double det = s11_ * s22_ - s12_ * s12_;
  return {(s22_ * s1y_ - s12_ * s2y_) / det, (s11_ * s2y_ - s12_ * s1y_) / det};
}

StatReport measure_evolution_check(const RegressionAccumulator& acc, double tolerance,
                                   std::string name) {
  StatReport rep;
  rep.name = std::move(name);
  rep.samples = acc.count();
  if (acc.degenerate()) {
    rep.degenerate = true;
    return rep;
  }
  const auto [a, c] = acc.slopes();
  rep.checks.push_back({"drift_slope_error", std::abs(a - 1.0), tolerance});
  rep.checks.push_back({"diffusion_slope_error", std::abs(c - 1.0), tolerance});
  rep.metrics.emplace_back("drift_slope", a);
  rep.metrics.emplace_back("diffusion_slope", c);
  return rep;
}

double tanaka_path_residual(const PathRecord& record) {
  for (const char* ch : {kDistanceChannel, kNormalIncrementChannel, kCurvatureChannel,
                         kSinThetaChannel, kLocalTimeChannel})
    if (!record.has_channel(ch))
      throw InvariantError(std::string("missing channel ") + ch);
  const auto& d = record.channel(kDistanceChannel);
  const auto& dn = record.channel(kNormalIncrementChannel);
  const auto& h = record.channel(kCurvatureChannel);
  const auto& st = record.channel(kSinThetaChannel);
  const auto& dl = record.channel(kLocalTimeChannel);
  const double dt = record.grid().dt();
  double drive = 0.0, worst = 0.0;
  for (std::size_t k = 0; k + 1 < d.size(); ++k) {
    drive += dn[k] - 0.5 * h[k] * dt - st[k] * dl[k];
    worst = std::max(worst, std::abs(d[k + 1] - d[0] - drive));
  }
  return worst;
}

StatReport tanaka_residual_check(std::span<const double> sup_residuals, double threshold,
                                 std::string name) {
  if (sup_residuals.size() < 8) throw InsufficientDataError(name + ": fewer than 8 paths");
  const auto s = EmpiricalSample::from_unsorted({sup_residuals.begin(), sup_residuals.end()});
  StatReport rep;
  rep.name = std::move(name);
  rep.samples = s.size();
  rep.checks.push_back({"sup_residual_q95", s.quantile(0.95), threshold});
  rep.metrics.emplace_back("sup_residual_median", s.quantile(0.5));
  return rep;
}

}  // namespace dualflow
