#include "harness/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "dualflow/errors.hpp"
#include "dualflow/parallel.hpp"
#include "harness/geometry_check.hpp"

namespace dualflow::harness {

namespace {

constexpr Construction kConstructions[] = {
    Construction::symmetric1d, Construction::pitman1d, Construction::mirror1d,
    Construction::free1d,      Construction::disk,     Construction::annulus,
    Construction::planar};

constexpr StopReason kStops[] = {
    StopReason::none,          StopReason::explosion,         StopReason::ordering,
    StopReason::collapse_to_disk, StopReason::collar,         StopReason::interval_collapse,
    StopReason::scheme_failure, StopReason::convexity_breakdown, StopReason::focal_crossing,
    StopReason::symmetry_loss};

// Stops that signal a numerical problem rather than a modelled event.
bool is_failure(StopReason r) {
  switch (r) {
    case StopReason::explosion:
    case StopReason::ordering:
    case StopReason::scheme_failure:
    case StopReason::convexity_breakdown:
    case StopReason::focal_crossing:
    case StopReason::symmetry_loss:
      return true;
    default:
      return false;
  }
}

bool uses_bandwidth(Construction c) {
  return c == Construction::mirror1d || c == Construction::free1d ||
         c == Construction::annulus || c == Construction::planar;
}

bool is_law_run(Construction c) {
  return c == Construction::symmetric1d || c == Construction::pitman1d;
}

double positive(const Config& c, const std::string& key, double fallback) {
  const double v = c.get_double(key, fallback);
  if (!(v > 0.0)) throw ConfigError(key + ": must be positive");
  return v;
}

std::size_t positive_count(const Config& c, const std::string& key, std::uint64_t fallback) {
  const auto v = c.get_u64(key, fallback);
  if (v == 0) throw ConfigError(key + ": must be positive");
  return static_cast<std::size_t>(v);
}

BoundaryPush parse_push(const Config& c) {
  const auto v = c.get_string("boundary.push", "regulator");
  if (v == "regulator") return BoundaryPush::regulator;
  if (v == "occupation") return BoundaryPush::occupation;
  throw ConfigError("boundary.push: expected regulator or occupation, got '" + v + "'");
}

const char* push_name(BoundaryPush p) {
  return p == BoundaryPush::regulator ? "regulator" : "occupation";
}

void parse_uniformity(const Config& c, ExperimentConfig& e) {
  e.uniformity.ks = positive(c, "test.ks", 0.02);
  e.uniformity.correlation = positive(c, "test.correlation", 0.03);
  e.uniformity.stratified_ks = positive(c, "test.stratified_ks", 0.05);
  e.uniformity.strata = positive_count(c, "test.strata", 4);
  e.uniformity.min_samples = positive_count(c, "test.min_samples", 100);
}

void parse_profile(const Config& c, ExperimentConfig& e, bool fixed_dimension) {
  e.profile = c.get_string("profile.kind", "euclidean");
  if (e.profile != "euclidean" && e.profile != "sphere" && e.profile != "hyperbolic")
    throw ConfigError("profile.kind: expected euclidean, sphere or hyperbolic, got '" +
                      e.profile + "'");
  const auto d = c.get_u64("profile.dimension", 2);
  if (d < 2 || d > 64) throw ConfigError("profile.dimension: must lie in [2, 64]");
  if (fixed_dimension && d != 2) throw ConfigError("profile.dimension: the annulus dual needs 2");
  e.dimension = static_cast<int>(d);
  const auto noise = c.get_string("profile.noise", e.profile == "euclidean" ? "exact" : "gaussian");
  if (noise == "exact") {
    if (e.profile != "euclidean")
      throw ConfigError("profile.noise: exact noise needs the euclidean profile");
    e.noise = RadialNoise::exact;
  } else if (noise == "gaussian") {
    e.noise = RadialNoise::gaussian;
  } else {
    throw ConfigError("profile.noise: expected exact or gaussian, got '" + noise + "'");
  }
}

}  // namespace

std::string_view to_string(Construction c) {
  switch (c) {
    case Construction::symmetric1d: return "symmetric1d";
    case Construction::pitman1d: return "pitman1d";
    case Construction::mirror1d: return "mirror1d";
    case Construction::free1d: return "free1d";
    case Construction::disk: return "disk";
    case Construction::annulus: return "annulus";
    case Construction::planar: return "planar";
  }
  return "unknown";
}

StopReason stop_from_string(std::string_view name) {
  for (auto r : kStops)
    if (to_string(r) == name) return r;
  throw ConfigError("unknown stop reason '" + std::string(name) + "'");
}

ExperimentConfig parse_experiment(const Config& c) {
  ExperimentConfig e;
  const auto name = c.get_string("construction");
  const auto it = std::find_if(std::begin(kConstructions), std::end(kConstructions),
                               [&](Construction k) { return to_string(k) == name; });
  if (it == std::end(kConstructions))
    throw ConfigError("construction: unknown '" + name +
                      "' (expected symmetric1d, pitman1d, mirror1d, free1d, disk, annulus "
                      "or planar)");
  e.construction = *it;
  e.seed = c.get_u64("seed", 1);
  e.replicas = positive_count(c, "replicas", 1000);
  e.t_end = positive(c, "grid.t_end", 1.0);
  e.n_steps = positive_count(c, "grid.n_steps", 1000);
  e.snapshot_stride = static_cast<std::size_t>(c.get_u64("output.snapshot_stride", 0));
  e.failure_ceiling = c.get_double("test.failure_ceiling", 0.05);
  if (!(e.failure_ceiling >= 0.0 && e.failure_ceiling <= 1.0))
    throw ConfigError("test.failure_ceiling: must lie in [0, 1]");

  if (is_law_run(e.construction)) {
    e.law_ks = positive(c, "test.ks", 0.02);
  } else {
    parse_uniformity(c, e);
  }
  if (uses_bandwidth(e.construction)) e.bandwidth_factor = positive(c, "bandwidth.factor", 1.0);

  switch (e.construction) {
    case Construction::symmetric1d:
      e.non_touching = c.get_bool("test.non_touching", false);
      e.touch_from = c.get_double("test.touch_from", 0.1 * e.t_end);
      if (!(e.touch_from >= 0.0 && e.touch_from <= e.t_end))
        throw ConfigError("test.touch_from: must lie in [0, grid.t_end]");
      e.touch_fraction = positive(c, "test.touch_fraction", 0.01);
      break;
    case Construction::pitman1d:
      break;
    case Construction::mirror1d:
      e.push = parse_push(c);
      break;
    case Construction::free1d:
      e.push = parse_push(c);
      e.collar = positive(c, "collar", 1e-3);
      e.a0 = c.get_double("interval.a0", -1.0);
      e.b0 = c.get_double("interval.b0", 1.0);
      if (!(e.b0 > e.a0)) throw ConfigError("interval.b0: must exceed interval.a0");
      if (!(e.b0 - e.a0 > 2.0 * e.collar))
        throw ConfigError("interval.b0: interval must be wider than twice the collar");
      if (c.has("interval.x0")) {
        e.x0 = c.get_double("interval.x0");
        if (!(e.a0 < e.x0 && e.x0 < e.b0))
          throw ConfigError("interval.x0: ordering violated, need a0 < x0 < b0");
      }
      break;
    case Construction::disk: {
      parse_profile(c, e, false);
      e.disk_r0 = positive(c, "disk.r0", 1.0);
      if (!(e.disk_r0 < e.radial_profile().r_max()))
        throw ConfigError("disk.r0: must lie below the profile's maximal radius");
      if (c.has("disk.rho0")) {
        e.disk_rho0 = c.get_double("disk.rho0");
        if (!(e.disk_rho0 > 0.0 && e.disk_rho0 < e.disk_r0))
          throw ConfigError("disk.rho0: ordering violated, need 0 < rho0 < disk.r0");
      }
      e.dynkin = c.get_bool("test.dynkin", false);
      e.dynkin_tolerance = positive(c, "test.dynkin_tolerance", 0.1);
      if (e.dynkin && (e.profile != "euclidean" || e.dimension != 2))
        throw ConfigError("test.dynkin: closed forms exist for the euclidean plane only");
      break;
    }
    case Construction::annulus: {
      parse_profile(c, e, true);
      e.collar = positive(c, "collar", 1e-3);
      e.r_minus = positive(c, "annulus.r_minus", 1.0);
      e.r_plus = positive(c, "annulus.r_plus", 2.0);
      if (!(e.r_plus > e.r_minus))
        throw ConfigError("annulus.r_plus: ordering violated, need r_minus < r_plus");
      if (!(e.r_plus < e.radial_profile().r_max()))
        throw ConfigError("annulus.r_plus: must lie below the profile's maximal radius");
      e.dynkin = c.get_bool("test.dynkin", false);
      e.dynkin_tolerance = positive(c, "test.dynkin_tolerance", 0.1);
      e.measure = c.get_bool("test.measure", false);
      e.measure_tolerance = positive(c, "test.measure_tolerance", 0.05);
      if ((e.dynkin || e.measure) && e.profile != "euclidean")
        throw ConfigError(std::string(e.dynkin ? "test.dynkin" : "test.measure") +
                          ": closed forms exist for the euclidean plane only");
      e.qv_ratio = positive(c, "test.qv_ratio", 0.05);
      e.drift_tolerance = positive(c, "test.drift_tolerance", 0.05);
      break;
    }
    case Construction::planar: {
      e.shape = c.get_string("shape.kind", "ellipse");
      if (e.shape == "ellipse") {
        e.shape_a = positive(c, "shape.a", 2.0);
        e.shape_b = positive(c, "shape.b", 1.0);
      } else if (e.shape == "circle") {
        e.shape_a = positive(c, "shape.a", 1.0);
      } else if (e.shape == "file") {
        e.shape_file = c.get_string("shape.file");
      } else {
        throw ConfigError("shape.kind: expected ellipse, circle or file, got '" + e.shape + "'");
      }
      if (e.shape != "file") {
        e.shape_nodes = positive_count(c, "shape.nodes", 1024);
        if (e.shape_nodes < 16 || e.shape_nodes % 4 != 0)
          throw ConfigError("shape.nodes: need a multiple of 4, at least 16");
      }
      e.planar.skeleton_every = positive_count(c, "planar.skeleton_every", 10);
      e.planar.profile_points = positive_count(c, "planar.profile_points", 65);
      if (e.planar.profile_points < 2)
        throw ConfigError("planar.profile_points: need at least 2 points");
      e.planar.symmetry_tolerance = positive(c, "planar.symmetry_tolerance", 1e-9);
      e.planar.resample = c.get_bool("planar.resample", true);
      e.planar.implicit_curvature = c.get_bool("planar.implicit_curvature", true);
      if (e.shape == "file") {
        try {
          e.planar_domain();
        } catch (const ConfigError& err) {
          throw ConfigError(std::string("shape.file: ") + err.what());
        }
      }
      break;
    }
  }
  if (const auto extra = c.unread_keys(); !extra.empty())
    throw ConfigError(extra.front() + ": not used by construction " + name);
  return e;
}

std::string ExperimentConfig::canonical() const {
  Config c;
  auto num = [&](const std::string& k, double v) { c.set(k, format_number(v)); };
  auto cnt = [&](const std::string& k, std::uint64_t v) { c.set(k, std::to_string(v)); };
  auto flag = [&](const std::string& k, bool v) { c.set(k, v ? "true" : "false"); };
  c.set("construction", std::string(to_string(construction)));
  cnt("seed", seed);
  cnt("replicas", replicas);
  num("grid.t_end", t_end);
  cnt("grid.n_steps", n_steps);
  cnt("output.snapshot_stride", snapshot_stride);
  num("test.failure_ceiling", failure_ceiling);
  if (is_law_run(construction)) {
    num("test.ks", law_ks);
  } else {
    num("test.ks", uniformity.ks);
    num("test.correlation", uniformity.correlation);
    num("test.stratified_ks", uniformity.stratified_ks);
    cnt("test.strata", uniformity.strata);
    cnt("test.min_samples", uniformity.min_samples);
  }
  if (uses_bandwidth(construction)) num("bandwidth.factor", bandwidth_factor);
  switch (construction) {
    case Construction::symmetric1d:
      flag("test.non_touching", non_touching);
      num("test.touch_from", touch_from);
      num("test.touch_fraction", touch_fraction);
      break;
    case Construction::pitman1d:
      break;
    case Construction::mirror1d:
      c.set("boundary.push", push_name(push));
      break;
    case Construction::free1d:
      c.set("boundary.push", push_name(push));
      num("collar", collar);
      num("interval.a0", a0);
      num("interval.b0", b0);
      if (!std::isnan(x0)) num("interval.x0", x0);
      break;
    case Construction::disk:
    case Construction::annulus:
      c.set("profile.kind", profile);
      cnt("profile.dimension", static_cast<std::uint64_t>(dimension));
      c.set("profile.noise", noise == RadialNoise::exact ? "exact" : "gaussian");
      flag("test.dynkin", dynkin);
      num("test.dynkin_tolerance", dynkin_tolerance);
      if (construction == Construction::disk) {
        num("disk.r0", disk_r0);
        if (!std::isnan(disk_rho0)) num("disk.rho0", disk_rho0);
      } else {
        num("collar", collar);
        num("annulus.r_minus", r_minus);
        num("annulus.r_plus", r_plus);
        flag("test.measure", measure);
        num("test.measure_tolerance", measure_tolerance);
        num("test.qv_ratio", qv_ratio);
        num("test.drift_tolerance", drift_tolerance);
      }
      break;
    case Construction::planar:
      c.set("shape.kind", shape);
      if (shape == "ellipse") {
        num("shape.a", shape_a);
        num("shape.b", shape_b);
      } else if (shape == "circle") {
        num("shape.a", shape_a);
      } else {
        c.set("shape.file", shape_file);
      }
      if (shape != "file") cnt("shape.nodes", shape_nodes);
      cnt("planar.skeleton_every", planar.skeleton_every);
      cnt("planar.profile_points", planar.profile_points);
      num("planar.symmetry_tolerance", planar.symmetry_tolerance);
      flag("planar.resample", planar.resample);
      flag("planar.implicit_curvature", planar.implicit_curvature);
      break;
  }
  return c.text();
}

std::string ExperimentConfig::fingerprint() const {
  return fnv1a_hex(canonical() + kGeneratorName);
}

RadialProfile ExperimentConfig::radial_profile() const {
  if (profile == "sphere") return RadialProfile::sphere(dimension);
  if (profile == "hyperbolic") return RadialProfile::hyperbolic(dimension);
  return RadialProfile::euclidean(dimension);
}

SymmetricConvexCurve ExperimentConfig::planar_domain() const {
  if (shape == "circle") return make_circle(shape_a, shape_nodes);
  if (shape == "file") return load_symmetric_curve(shape_file, planar.symmetry_tolerance);
  return make_ellipse(shape_a, shape_b, shape_nodes);
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct ReplicaResult {
  ReplicaRow row;
  std::vector<std::vector<double>> snapshots;
};

struct Setup {
  const ExperimentConfig& cfg;
  TimeGrid grid;
  double bandwidth;
  std::optional<RadialProfile> profile;
  std::optional<SymmetricConvexCurve> domain;
};

class Snapshotter {
 public:
  Snapshotter(const Setup& s, std::size_t replica, ReplicaResult& out)
      : stride_(s.cfg.snapshot_stride), grid_(s.grid), replica_(replica), out_(out) {}
  void operator()(std::size_t k, std::initializer_list<double> state) {
    if (stride_ == 0 || k % stride_ != 0) return;
    std::vector<double> row{static_cast<double>(replica_), static_cast<double>(k),
                            grid_.time_at(k)};
    row.insert(row.end(), state);
    out_.snapshots.push_back(std::move(row));
  }

 private:
  std::size_t stride_;
  const TimeGrid& grid_;
  std::size_t replica_;
  ReplicaResult& out_;
};

std::vector<std::string> columns_for(const ExperimentConfig& c) {
  auto dynkin_cols = [](std::vector<std::string>& v) {
    for (const char* f : {"one", "r2"})
      for (const char* q : {"increment", "generator", "qv", "gamma"})
        v.push_back(std::string("dynkin_") + f + "_" + q);
  };
  switch (c.construction) {
    case Construction::symmetric1d: return {"x", "r", "min_gap"};
    case Construction::pitman1d: return {"x", "r"};
    case Construction::mirror1d:
      return {"x", "r", "u", "max_violation", "push_steps", "clip_steps"};
    case Construction::free1d:
      return {"x0", "x", "a", "b", "u", "width", "local_time", "max_violation", "push_steps"};
    case Construction::disk: {
      std::vector<std::string> v{"rho0", "rho", "r", "u"};
      if (c.dynkin) dynkin_cols(v);
      return v;
    }
    case Construction::annulus: {
      std::vector<std::string> v{"rho",   "r_minus",      "r_plus", "u",      "area",
                                 "local_time", "max_violation", "qv_r0", "qv_rplus",
                                 "drift_r0", "drift_pred"};
      if (c.dynkin) dynkin_cols(v);
      if (c.measure)
        for (const char* f : {"one", "r2"})
          for (const char* q : {"n", "s11", "s12", "s22", "s1y", "s2y", "syy"})
            v.push_back(std::string("measure_") + f + "_" + q);
      return v;
    }
    case Construction::planar:
      return {"x1", "x2", "u", "area", "half_length", "local_time", "repairs", "max_violation"};
  }
  return {};
}

std::vector<std::string> snapshot_columns_for(Construction c) {
  std::vector<std::string> v{"replica", "step", "t"};
  switch (c) {
    case Construction::symmetric1d:
    case Construction::pitman1d:
    case Construction::mirror1d: v.insert(v.end(), {"x", "r"}); break;
    case Construction::free1d: v.insert(v.end(), {"x", "a", "b"}); break;
    case Construction::disk: v.insert(v.end(), {"rho", "r"}); break;
    case Construction::annulus: v.insert(v.end(), {"rho", "r_minus", "r_plus"}); break;
    case Construction::planar: v.insert(v.end(), {"x1", "x2", "half_length", "area"}); break;
  }
  return v;
}

ReplicaResult run_interval(const Setup& s, std::size_t replica) {
  const auto& c = s.cfg;
  ReplicaResult out;
  Snapshotter snap(s, replica, out);
  RandomStream rng(c.seed, replica);
  auto& row = out.row;
  if (c.construction == Construction::free1d) {
    const double x0 = std::isnan(c.x0) ? c.a0 + (c.b0 - c.a0) * rng.uniform_open() : c.x0;
    const auto x = brownian_path(rng, s.grid, x0);
    const auto w = brownian_path(rng, s.grid);
    FreeDualOptions o;
    o.bandwidth = s.bandwidth;
    o.collar = c.collar;
    o.push = c.push;
    const auto p = free_dual(x, w, c.a0, c.b0, o);
    const std::size_t n = p.steps_done;
    for (std::size_t k = 0; k <= n; ++k) snap(k, {x[k], p.a[k], p.b[k]});
    const double width = p.b[n] - p.a[n];
    row.stop = p.stop;
    row.steps = n;
    row.values = {x0,    x[n],         p.a[n],          p.b[n], (x[n] - p.a[n]) / width,
                  width, p.local_time, p.max_violation, static_cast<double>(p.push_steps)};
    return out;
  }
  const auto x = brownian_path(rng, s.grid);
  const std::size_t n = s.grid.n_steps();
  row.steps = n;
  if (c.construction == Construction::mirror1d) {
    MirrorOptions o;
    o.bandwidth = s.bandwidth;
    o.push = c.push;
    const auto p = mirror_dual(x, o);
    for (std::size_t k = 0; k <= n; ++k) snap(k, {x[k], p.r[k]});
    const double r = p.r[n];
    row.values = {x[n], r, r > 0.0 ? (x[n] + r) / (2.0 * r) : NAN, p.max_violation,
                  static_cast<double>(p.push_steps), static_cast<double>(p.clip_steps)};
    return out;
  }
  const auto r = c.construction == Construction::symmetric1d ? symmetric_dual(x) : pitman_dual(x);
  for (std::size_t k = 0; k <= n; ++k) snap(k, {x[k], r[k]});
  row.values = {x[n], r[n]};
  if (c.construction == Construction::symmetric1d) {
    double gap = INFINITY;
    for (std::size_t k = 0; k <= n; ++k)
      if (s.grid.time_at(k) >= c.touch_from) gap = std::min(gap, r[k] - std::abs(x[k]));
    row.values.push_back(gap);
  }
  return out;
}

void push_dynkin(std::vector<double>& v, const DynkinAccumulator& a) {
  const auto p = a.result();
  v.insert(v.end(), {p.increment, p.generator_integral, p.quadratic_variation, p.gamma_integral});
}

void push_regression(std::vector<double>& v, const RegressionAccumulator& a) {
  v.push_back(static_cast<double>(a.count()));
  const auto s = a.sums();
  v.insert(v.end(), s.begin(), s.end());
}

ReplicaResult run_disk(const Setup& s, std::size_t replica) {
  const auto& c = s.cfg;
  const auto& prof = *s.profile;
  ReplicaResult out;
  Snapshotter snap(s, replica, out);
  RandomStream rng(c.seed, replica);
  DiskRunOptions o;
  o.r0 = c.disk_r0;
  o.rho0 = c.disk_rho0;
  o.noise = c.noise;
  DynkinAccumulator d1(s.grid.dt()), d2(s.grid.dt());
  const auto path = simulate_disk(prof, s.grid, rng, o, [&](std::size_t k, const DiskDualState& st) {
    snap(k, {st.rho, st.R});
    if (c.dynkin) {
      const auto f1 = disk_functional(st.R, TestField::one);
      const auto f2 = disk_functional(st.R, TestField::r_squared);
      d1.add(f1.value, f1.generator, f1.gamma);
      d2.add(f2.value, f2.generator, f2.gamma);
    }
  });
  const auto& st = path.state;
  out.row.stop = path.stop;
  out.row.steps = path.steps_done;
  const double u = path.stop == StopReason::none
                       ? radial_mass(prof, 0.0, st.rho) / radial_mass(prof, 0.0, st.R)
                       : NAN;
  out.row.values = {path.initial.rho, st.rho, st.R, u};
  if (c.dynkin) {
    push_dynkin(out.row.values, d1);
    push_dynkin(out.row.values, d2);
  }
  return out;
}

ReplicaResult run_annulus(const Setup& s, std::size_t replica) {
  const auto& c = s.cfg;
  const auto& prof = *s.profile;
  const double dt = s.grid.dt();
  ReplicaResult out;
  Snapshotter snap(s, replica, out);
  RandomStream rng(c.seed, replica);
  AnnulusRunOptions o;
  o.r0_minus = c.r_minus;
  o.r0_plus = c.r_plus;
  o.bandwidth_factor = c.bandwidth_factor;
  o.collar = c.collar;
  o.noise = c.noise;
  DynkinAccumulator d1(dt), d2(dt);
  RegressionAccumulator m1, m2;
  double qv0 = 0.0, qvp = 0.0, drift = 0.0, pred = 0.0;
  const auto path = simulate_annulus(
      prof, s.grid, rng, o, [&](std::size_t k, const AnnulusDualState& st, const AnnulusStep& step) {
        snap(k, {st.rho, st.r_minus, st.r_plus});
        const auto& nx = step.state;
        const double d0 = nx.r_zero() - st.r_zero(), dp = nx.r_plus - st.r_plus;
        qv0 += d0 * d0;
        qvp += dp * dp;
        drift += d0;
        pred += -0.25 * (prof.annulus_drift(st.r_plus) + prof.annulus_drift(st.r_minus)) * dt;
        if (!c.dynkin && !c.measure) return;
        const TestField fields[2] = {TestField::one, TestField::r_squared};
        DynkinAccumulator* dyn[2] = {&d1, &d2};
        RegressionAccumulator* reg[2] = {&m1, &m2};
        for (int i = 0; i < 2; ++i) {
          const auto f = annulus_functional(st.r_minus, st.r_plus, fields[i]);
          const auto g = annulus_functional(nx.r_minus, nx.r_plus, fields[i]);
          if (c.dynkin) {
            if (k == 0) dyn[i]->add(f.value, f.generator, f.gamma);
            dyn[i]->add(g.value, g.generator, g.gamma);
          }
          if (c.measure) {
            // Inward boundary speed times dt, common to both circles.
            const double bdt = -step.sign * prof.annulus_drift(st.rho) * dt - 2.0 * step.local_time;
            reg[i]->add(g.value - f.value,
                        -0.5 * (2.0 * bdt * f.boundary_integral + f.boundary_normal_derivative * dt),
                        f.boundary_integral * step.dw);
          }
        }
      });
  const auto& st = path.state;
  const std::size_t n = path.steps_done;
  if (path.stop == StopReason::none || path.stop == StopReason::collar)
    snap(n, {st.rho, st.r_minus, st.r_plus});
  out.row.stop = path.stop;
  out.row.steps = n;
  const double u = path.stop == StopReason::none ? radial_mass(prof, st.r_minus, st.rho) /
                                                        radial_mass(prof, st.r_minus, st.r_plus)
                                                  : NAN;
  out.row.values = {st.rho, st.r_minus, st.r_plus, u, annulus_volume(st, prof), st.local_time,
                    path.max_violation, qv0, qvp, drift, pred};
  if (c.dynkin) {
    push_dynkin(out.row.values, d1);
    push_dynkin(out.row.values, d2);
  }
  if (c.measure) {
    push_regression(out.row.values, m1);
    push_regression(out.row.values, m2);
  }
  return out;
}

ReplicaResult run_planar(const Setup& s, std::size_t replica) {
  const auto& c = s.cfg;
  ReplicaResult out;
  Snapshotter snap(s, replica, out);
  RandomStream rng(c.seed, replica);
  const double sd = std::sqrt(s.grid.dt());
  auto state = make_planar_state(*s.domain, sample_uniform_planar(*s.domain, rng), c.planar);
  auto area = [&] { return PlanarDomain(state.domain).area(); };
  if (c.snapshot_stride) snap(0, {state.x.x, state.x.y, state.half_length, area()});
  StopReason stop = StopReason::none;
  std::size_t k = 0;
  for (; k < s.grid.n_steps(); ++k) {
    const Vec2 dx{rng.normal(sd), rng.normal(sd)};
    const auto info = planar_step(state, dx, s.grid.dt(), s.bandwidth, c.planar);
    if (info.stop != StopReason::none) {
      stop = info.stop;
      break;
    }
    if (c.snapshot_stride && (k + 1) % c.snapshot_stride == 0)
      snap(k + 1, {state.x.x, state.x.y, state.half_length, area()});
  }
  const PlanarDomain dom(state.domain);
  const double u =
      stop == StopReason::none ? distance_cdf(state.domain, foot_point(state.x, dom).distance) : NAN;
  out.row.stop = stop;
  out.row.steps = k;
  out.row.values = {state.x.x,        state.x.y,         u,
                    dom.area(),       state.half_length, state.local_time,
                    static_cast<double>(state.repairs), state.max_violation};
  return out;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg, unsigned threads) {
  Setup setup{cfg, cfg.grid(), bandwidth_for(cfg.grid().dt(), cfg.bandwidth_factor), {}, {}};
  if (cfg.construction == Construction::disk || cfg.construction == Construction::annulus)
    setup.profile = cfg.radial_profile();
  if (cfg.construction == Construction::planar) setup.domain = cfg.planar_domain();

  std::function<ReplicaResult(const Setup&, std::size_t)> body;
  switch (cfg.construction) {
    case Construction::disk: body = run_disk; break;
    case Construction::annulus: body = run_annulus; break;
    case Construction::planar: body = run_planar; break;
    default: body = run_interval; break;
  }
  std::vector<ReplicaResult> results(cfg.replicas);
  parallel_for(cfg.replicas, threads, [&](std::size_t i) {
    results[i] = body(setup, i);
    results[i].row.replica = i;
  });

  RunOutput out;
  out.config = cfg;
  out.columns = columns_for(cfg);
  if (cfg.snapshot_stride) out.snapshot_columns = snapshot_columns_for(cfg.construction);
  out.rows.reserve(results.size());
  for (auto& r : results) {
    out.rows.push_back(std::move(r.row));
    for (auto& sn : r.snapshots) out.snapshots.push_back(std::move(sn));
  }
  out.reports = evaluate(cfg, out.columns, out.rows);
  return out;
}

bool RunOutput::passed() const {
  return std::all_of(reports.begin(), reports.end(), [](const StatReport& r) { return r.passed(); });
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<StatReport> evaluate(const ExperimentConfig& c, const std::vector<std::string>& columns,
                                 const std::vector<ReplicaRow>& rows) {
  auto col = [&](const std::string& name) {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvariantError("missing column " + name);
    return static_cast<std::size_t>(it - columns.begin());
  };
  std::map<std::string, std::size_t> stops;
  std::size_t failures = 0;
  std::vector<const ReplicaRow*> alive;
  for (const auto& r : rows) {
    ++stops[std::string(to_string(r.stop))];
    if (is_failure(r.stop)) ++failures;
    if (r.stop == StopReason::none) alive.push_back(&r);
  }
  const double dt = c.grid().dt();

  std::vector<StatReport> out;
  StatReport main;
  if (is_law_run(c.construction)) {
    const auto ri = col("r");
    std::vector<double> r;
    for (const auto* row : alive) r.push_back(row->values[ri]);
    if (r.size() < 2) throw InsufficientDataError("bessel3-law: fewer than 2 samples");
    const auto sample = EmpiricalSample::from_unsorted(std::move(r));
    const double t = c.t_end;
    main.name = "bessel3-law";
    main.samples = sample.size();
    main.checks.push_back(
        {"ks", ks_one_sample(sample, [t](double x) { return bessel3_cdf(x, t); }), c.law_ks});
    main.metrics.emplace_back("median_r", sample.quantile(0.5));
  } else {
    const auto ui = col("u");
    std::size_t si = 0;
    switch (c.construction) {
      case Construction::mirror1d:
      case Construction::disk: si = col("r"); break;
      case Construction::free1d: si = col("width"); break;
      default: si = col("area"); break;
    }
    std::vector<UniformityPair> pairs;
    for (const auto* row : alive) pairs.push_back({row->values[ui], row->values[si]});
    main = conditional_uniformity(pairs, [](const UniformityPair& p) { return p.particle; },
                                  c.uniformity);
  }
  main.checks.push_back({"failure_rate",
                         rows.empty() ? 0.0 : static_cast<double>(failures) / rows.size(),
                         c.failure_ceiling});
  if (columns.end() != std::find(columns.begin(), columns.end(), "max_violation")) {
    const auto vi = col("max_violation");
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.values[vi]);
    main.metrics.emplace_back("max_violation", worst);
  }
  main.stops = stops;
  out.push_back(std::move(main));

  if (c.construction == Construction::symmetric1d && c.non_touching) {
    const auto gi = col("min_gap");
    std::vector<double> gaps;
    for (const auto* row : alive) gaps.push_back(row->values[gi]);
    if (gaps.empty()) throw InsufficientDataError("non-touching: no samples");
    const double band = 2.0 * std::sqrt(dt);
    const auto close = std::count_if(gaps.begin(), gaps.end(), [&](double g) { return g < band; });
    StatReport rep;
    rep.name = "non-touching";
    rep.samples = gaps.size();
    rep.checks.push_back({"touch_fraction", static_cast<double>(close) / gaps.size(),
                          c.touch_fraction});
    rep.metrics.emplace_back("band", band);
    rep.metrics.emplace_back("median_min_gap",
                             EmpiricalSample::from_unsorted(gaps).quantile(0.5));
    out.push_back(std::move(rep));
  }

  if (c.construction == Construction::annulus) {
    double qv0 = 0.0, qvp = 0.0, drift = 0.0, pred = 0.0, time = 0.0;
    const auto a = col("qv_r0"), b = col("qv_rplus"), d = col("drift_r0"), p = col("drift_pred");
    for (const auto& r : rows) {
      qv0 += r.values[a];
      qvp += r.values[b];
      drift += r.values[d];
      pred += r.values[p];
      time += static_cast<double>(r.steps) * dt;
    }
    StatReport rep;
    rep.name = "skeleton-rigidity";
    rep.samples = rows.size();
    rep.degenerate = !(qvp > 0.0) || pred == 0.0;
    rep.checks.push_back({"qv_ratio", qvp > 0.0 ? qv0 / qvp : 0.0, c.qv_ratio});
    rep.checks.push_back(
        {"drift_rel_error", pred != 0.0 ? std::abs(drift - pred) / std::abs(pred) : 0.0,
         c.drift_tolerance});
    rep.metrics.emplace_back("drift_rate", time > 0.0 ? drift / time : 0.0);
    rep.metrics.emplace_back("predicted_drift_rate", time > 0.0 ? pred / time : 0.0);
    out.push_back(std::move(rep));
  }

  if (c.dynkin) {
    for (const char* f : {"one", "r2"}) {
      const std::string pre = std::string("dynkin_") + f + "_";
      const auto i = col(pre + "increment"), g = col(pre + "generator"), q = col(pre + "qv"),
                 m = col(pre + "gamma");
      std::vector<DynkinPath> paths;
      for (const auto* row : alive)
        paths.push_back({row->values[i], row->values[g], row->values[q], row->values[m]});
      out.push_back(dynkin_check(paths, c.dynkin_tolerance, std::string("dynkin.") + f));
    }
  }

  if (c.measure) {
    for (const char* f : {"one", "r2"}) {
      const std::string pre = std::string("measure_") + f + "_";
      const auto ni = col(pre + "n");
      RegressionAccumulator acc;
      for (const auto& r : rows) {
        std::array<double, 6> sums{};
        for (std::size_t j = 0; j < 6; ++j) sums[j] = r.values[ni + 1 + j];
        acc.merge(RegressionAccumulator::from_sums(static_cast<std::size_t>(r.values[ni]), sums));
      }
      out.push_back(measure_evolution_check(acc, c.measure_tolerance,
                                            std::string("measure-evolution.") + f));
    }
  }

  const auto fp = c.fingerprint();
  for (auto& r : out) r.fingerprint = fp;
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string reports_text(const std::vector<StatReport>& reports) {
  std::string out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (i) out += "\n";
    out += reports[i].to_text();
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

std::string header(const char* kind, const ExperimentConfig& c) {
  return std::string("# dualflow ") + kind + "\n# fingerprint = " + c.fingerprint() +
         "\n# construction = " + std::string(to_string(c.construction)) + "\n";
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "\t" : "") + v[i];
  return out;
}

}  // namespace

void write_run(const RunOutput& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "'");
  const auto& c = run.config;
  write_file(dir / "config.txt", "# fingerprint = " + c.fingerprint() + "\n" + c.canonical());

  std::string t = header("replicas", c) + "replica\tstop\tsteps";
  for (const auto& name : run.columns) t += "\t" + name;
  t += "\n";
  for (const auto& r : run.rows) {
    t += std::to_string(r.replica) + "\t" + std::string(to_string(r.stop)) + "\t" +
         std::to_string(r.steps);
    for (double v : r.values) t += "\t" + format_number(v);
    t += "\n";
  }
  write_file(dir / "replicas.tsv", t);

  if (!run.snapshot_columns.empty()) {
    std::string s = header("snapshots", c) + join(run.snapshot_columns) + "\n";
    for (const auto& row : run.snapshots) {
      s += std::to_string(static_cast<std::size_t>(row[0])) + "\t" +
           std::to_string(static_cast<std::size_t>(row[1]));
      for (std::size_t j = 2; j < row.size(); ++j) s += "\t" + format_number(row[j]);
      s += "\n";
    }
    write_file(dir / "snapshots.tsv", s);
  }
  write_file(dir / "report.txt", header("report", c) + reports_text(run.reports));
}

RunOutput read_run(const std::filesystem::path& dir) {
  RunOutput out;
  out.config = parse_experiment(Config::load((dir / "config.txt").string()));
  const auto fp = out.config.fingerprint();
  std::ifstream in(dir / "replicas.tsv", std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + (dir / "replicas.tsv").string() + "'");
  std::string line;
  bool have_header = false, fingerprint_seen = false;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw ConfigError("replicas.tsv line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string key = "# fingerprint = ";
      if (line.rfind(key, 0) == 0) {
        if (line.substr(key.size()) != fp) fail("fingerprint does not match config.txt");
        fingerprint_seen = true;
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, '\t');) cells.push_back(cell);
    if (!have_header) {
      if (cells.size() < 3 || cells[0] != "replica") fail("expected the column header");
      out.columns.assign(cells.begin() + 3, cells.end());
      if (out.columns != columns_for(out.config)) fail("columns do not match the construction");
      have_header = true;
      continue;
    }
    if (cells.size() != out.columns.size() + 3) fail("wrong number of cells");
    ReplicaRow row;
    auto parse_count = [&](const std::string& s) {
      std::size_t v = 0;
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || end != s.data() + s.size()) fail("bad integer '" + s + "'");
      return v;
    };
    row.replica = parse_count(cells[0]);
    row.stop = stop_from_string(cells[1]);
    row.steps = parse_count(cells[2]);
    for (std::size_t j = 3; j < cells.size(); ++j) {
      double v = 0.0;
      const auto& s = cells[j];
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || end != s.data() + s.size()) fail("bad number '" + s + "'");
      row.values.push_back(v);
    }
    out.rows.push_back(std::move(row));
  }
  if (!fingerprint_seen) throw ConfigError("replicas.tsv: missing fingerprint header");
  if (!have_header) throw ConfigError("replicas.tsv: missing column header");
  out.reports = evaluate(out.config, out.columns, out.rows);
  return out;
}

}  // namespace dualflow::harness
