// End-to-end acceptance runs. Each criterion prints one PASS/FAIL line and
// leaves its outputs under <workdir>/cNN so that reruns can be compared
// byte for byte.
//
//   dualflow_acceptance <criterion 1..14 | all> [--workdir DIR] [--threads N]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dualflow/dual1d.hpp"
#include "dualflow/geometry.hpp"
#include "dualflow/parallel.hpp"
#include "dualflow/planar.hpp"
#include "dualflow/radial.hpp"
#include "dualflow/stats.hpp"
#include "harness/config.hpp"
#include "harness/experiment.hpp"
#include "harness/geometry_check.hpp"

namespace fs = std::filesystem;
using namespace dualflow;
using namespace dualflow::harness;

namespace {

struct Context {
  fs::path dir;  // this criterion's output directory
  unsigned threads = 1;
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const Context&)> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunOutput harness_run(const Context& ctx, const std::string& name, const std::string& config) {
  const auto cfg = parse_experiment(Config::parse(config));
  auto run = run_experiment(cfg, ctx.threads);
  write_run(run, ctx.dir / name);
  return run;
}

const StatReport& report(const RunOutput& run, const std::string& name) {
  for (const auto& r : run.reports)
    if (r.name == name) return r;
  throw std::runtime_error("missing report " + name);
}

const StatReport& main_report(const RunOutput& run) { return run.reports.front(); }

// "key=value (<= threshold)" for the named checks; passes when all do.
Outcome from_checks(const StatReport& rep, std::initializer_list<const char*> keys) {
  Outcome o{!rep.degenerate, ""};
  for (const char* k : keys) {
    const auto& c = rep.check(k);
    o.passed = o.passed && c.passed();
    if (!o.detail.empty()) o.detail += ", ";
    o.detail += std::string(k) + "=" + fmt(c.value) + " (<= " + fmt(c.threshold) + ")";
  }
  return o;
}

Outcome combine(std::initializer_list<Outcome> parts) {
  Outcome o{true, ""};
  for (const auto& p : parts) {
    o.passed = o.passed && p.passed;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += p.detail;
  }
  return o;
}

std::vector<double> column(const RunOutput& run, const std::string& name) {
  const auto it = std::find(run.columns.begin(), run.columns.end(), name);
  if (it == run.columns.end()) throw std::runtime_error("missing column " + name);
  const auto j = static_cast<std::size_t>(it - run.columns.begin());
  std::vector<double> out;
  for (const auto& r : run.rows)
    if (r.stop == StopReason::none) out.push_back(r.values[j]);
  return out;
}

// ---------------------------------------------------------------------------

Outcome law_oracle(const Context& ctx) {
  // |Z| for a standard 3D Gaussian has the Bessel-3 law at t = 1.
  const std::size_t n = 10'000'000;
  std::vector<double> v(n);
  RandomStream rng(9001, 0);
  for (auto& x : v) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal();
    x = std::sqrt(a * a + b * b + c * c);
  }
  const double ks =
      ks_one_sample(EmpiricalSample::from_unsorted(std::move(v)),
                    [](double x) { return bessel3_cdf(x, 1.0); });
  // DKW band at level 1e-3.
  const double band = std::sqrt(std::log(2.0 / 1e-3) / (2.0 * static_cast<double>(n)));
  write_text(ctx.dir / "oracle.txt", "ks = " + format_number(ks) + "\n");
  return {ks <= band, "cdf-vs-oracle ks=" + fmt(ks) + " (<= " + fmt(band) + ")"};
}

Outcome c01(const Context& ctx) {
  const auto run = harness_run(ctx, "pitman", R"(construction = pitman1d
seed = 101
replicas = 100000
grid.t_end = 1
grid.n_steps = 10000
test.ks = 0.01
)");
  return combine({from_checks(main_report(run), {"ks"}), law_oracle(ctx)});
}

Outcome c02(const Context& ctx) {
  const auto sym = harness_run(ctx, "symmetric", R"(construction = symmetric1d
seed = 201
replicas = 100000
grid.t_end = 1
grid.n_steps = 10000
)");
  const auto pit = harness_run(ctx, "pitman", R"(construction = pitman1d
seed = 202
replicas = 100000
grid.t_end = 1
grid.n_steps = 10000
)");
  const double ks = ks_two_sample(EmpiricalSample::from_unsorted(column(sym, "r")),
                                  EmpiricalSample::from_unsorted(column(pit, "r")));
  write_text(ctx.dir / "two_sample.txt", "ks = " + format_number(ks) + "\n");
  return {ks <= 0.01, "two-sample ks=" + fmt(ks) + " (<= 0.01)"};
}

Outcome c03(const Context& ctx) {
  const auto run = harness_run(ctx, "symmetric", R"(construction = symmetric1d
seed = 301
replicas = 10000
grid.t_end = 1
grid.n_steps = 10000
test.non_touching = true
test.touch_from = 0.1
test.touch_fraction = 0.01
)");
  return from_checks(report(run, "non-touching"), {"touch_fraction"});
}

Outcome c04(const Context& ctx) {
  const auto run = harness_run(ctx, "disk", R"(construction = disk
seed = 401
replicas = 10000
grid.t_end = 0.5
grid.n_steps = 5000
test.ks = 0.02
test.correlation = 0.03
test.stratified_ks = 0.05
)");
  return from_checks(main_report(run), {"ks", "abs_correlation", "stratified_ks", "failure_rate"});
}

Outcome c05(const Context& ctx) {
  const auto run = harness_run(ctx, "annulus", R"(construction = annulus
seed = 501
replicas = 10000
grid.t_end = 0.5
grid.n_steps = 5000
test.qv_ratio = 0.05
test.drift_tolerance = 0.05
)");
  return combine({from_checks(report(run, "skeleton-rigidity"), {"qv_ratio", "drift_rel_error"}),
                  from_checks(main_report(run), {"failure_rate"})});
}

Outcome c06(const Context& ctx) {
  const auto run = harness_run(ctx, "annulus", R"(construction = annulus
seed = 601
replicas = 10000
grid.t_end = 0.3
grid.n_steps = 3000
test.ks = 0.03
)");
  return from_checks(main_report(run), {"ks", "failure_rate"});
}

Outcome c07(const Context& ctx) {
  constexpr double pi = std::numbers::pi;
  const double disk_gen = disk_functional(1.0, TestField::one).generator;
  const double ann_gen = annulus_functional(1.0, 2.0, TestField::one).generator;
  const double closed = std::max(std::abs(disk_gen / (4.0 * pi) - 1.0),
                                 std::abs(ann_gen / (12.0 * pi) - 1.0));
  const Outcome forms{closed <= 1e-12, "closed-form rel error=" + fmt(closed) + " (<= 1e-12)"};

  const char* common = R"(grid.t_end = 0.05
grid.n_steps = 500
replicas = 10000
test.dynkin = true
test.dynkin_tolerance = 0.1
)";
  const auto disk = harness_run(ctx, "disk", std::string("construction = disk\nseed = 701\n") + common);
  const auto ann =
      harness_run(ctx, "annulus", std::string("construction = annulus\nseed = 702\n") + common);
  std::vector<Outcome> parts{forms};
  for (const auto* run : {&disk, &ann}) {
    for (const char* f : {"dynkin.one", "dynkin.r2"}) {
      auto o = from_checks(report(*run, f), {"drift_rel_error", "qv_rel_error"});
      o.detail = std::string(to_string(run->config.construction)) + " " + f + " " + o.detail;
      parts.push_back(o);
    }
  }
  Outcome out{true, ""};
  for (const auto& p : parts) out = combine({out, p});
  return out;
}

Outcome c08(const Context& ctx) {
  const auto run = harness_run(ctx, "annulus", R"(construction = annulus
seed = 801
replicas = 10000
grid.t_end = 0.05
grid.n_steps = 500
test.measure = true
test.measure_tolerance = 0.05
)");
  auto one = from_checks(report(run, "measure-evolution.one"), {"drift_slope_error", "diffusion_slope_error"});
  auto r2 = from_checks(report(run, "measure-evolution.r2"), {"drift_slope_error", "diffusion_slope_error"});
  one.detail = "k=1 " + one.detail;
  r2.detail = "k=r2 " + r2.detail;
  return combine({one, r2});
}

// Worst value of the checks whose key starts with `prefix`, over all shapes.
Outcome geometry_criterion(const Context& ctx, const std::vector<std::string>& prefixes) {
  GeometryCheckOptions opt;
  const auto reps = geometry_check(opt);
  write_text(ctx.dir / "geometry.txt", reports_text(reps));
  Outcome o{true, ""};
  for (const auto& prefix : prefixes) {
    double worst = 0.0, threshold = 0.0;
    std::size_t count = 0;
    for (const auto& r : reps) {
      for (const auto& c : r.checks) {
        if (c.key.rfind(prefix, 0) != 0) continue;
        ++count;
        o.passed = o.passed && c.passed();
        if (c.value / c.threshold >= worst / std::max(threshold, 1e-300)) {
          worst = c.value;
          threshold = c.threshold;
        }
      }
    }
    o.passed = o.passed && count > 0;
    if (!o.detail.empty()) o.detail += ", ";
    o.detail += prefix + " worst=" + fmt(worst) + " (<= " + fmt(threshold) + ", " +
                std::to_string(count) + " checks)";
  }
  return o;
}

Outcome c09(const Context& ctx) { return geometry_criterion(ctx, {"key_formula"}); }
Outcome c10(const Context& ctx) { return geometry_criterion(ctx, {"tube_area_rel_error"}); }
Outcome c11(const Context& ctx) {
  return geometry_criterion(ctx, {"skeleton_speed_abs_error", "skeleton_speed_rel_error"});
}

Outcome c12(const Context& ctx) {
  const double dt = 1e-5;
  const TimeGrid grid(0.1, 10000);
  const std::size_t paths = 1000;

  auto q95 = [&](double c, const std::function<std::optional<PathRecord>(RandomStream&, double)>& rec,
                 std::uint64_t seed) {
    std::vector<double> sup(paths, NAN);
    parallel_for(paths, ctx.threads, [&](std::size_t p) {
      RandomStream rng(seed, p);
      if (auto r = rec(rng, bandwidth_for(dt, c))) sup[p] = tanaka_path_residual(*r);
    });
    std::erase_if(sup, [](double v) { return std::isnan(v); });
    return tanaka_residual_check(sup, 0.05);
  };

  // Bandwidth constant from the frozen interval, where the residual is the
  // occupation-vs-Tanaka gap alone.
  std::string calib;
  double best_c = 1.0, best = INFINITY;
  for (double c : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto rep = q95(c, [&](RandomStream& rng, double bw) {
      return frozen_interval_record(1.0, 2.0 * rng.uniform() - 1.0, grid, rng, bw);
    }, 1201);
    const double v = rep.check("sup_residual_q95").value;
    calib += "c = " + format_number(c) + "  q95 = " + format_number(v) + "\n";
    if (v < best) best = v, best_c = c;
  }
  write_text(ctx.dir / "calibration.txt", calib);

  const auto curve = make_ellipse(2.0, 1.0, 1024);
  const auto rep = q95(best_c, [&](RandomStream& rng, double bw) {
    return frozen_planar_record(curve, sample_uniform_planar(curve, rng), grid, rng, bw);
  }, 1202);
  write_text(ctx.dir / "ellipse.txt", rep.to_text());
  auto o = from_checks(rep, {"sup_residual_q95"});
  o.detail = "c=" + fmt(best_c) + " " + o.detail;
  return o;
}

// Deterministic flow of the ellipse (2, 1) until the typed stop: every
// intermediate curve must pass the convexity check, and the skeleton half
// length must not grow.
Outcome deterministic_flow(const Context& ctx) {
  auto curve = make_ellipse(2.0, 1.0, 1024);
  const double dt = 1e-3;
  double prev_half = medial_axis(curve).half_length;
  double worst_growth = 0.0;
  std::size_t steps = 0;
  std::string log = "step\tarea\thalf_length\n";
  bool convex = true;
  while (auto next = deterministic_flow_step(curve, dt)) {
    curve = std::move(*next);
    ++steps;
    convex = convex && is_strictly_convex(curve.nodes());
    const double half = medial_axis(curve).half_length;
    worst_growth = std::max(worst_growth, half - prev_half);
    prev_half = half;
    log += std::to_string(steps) + "\t" + format_number(PlanarDomain(curve).area()) + "\t" +
           format_number(half) + "\n";
    if (steps > 100000) break;
  }
  write_text(ctx.dir / "flow.tsv", log);
  // Medial-axis resolution at 1024 nodes.
  const double slack = 1e-3;
  return {convex && worst_growth <= slack && steps > 0,
          "flow " + std::to_string(steps) + " steps convex=" + (convex ? "yes" : "no") +
              " max half-length growth=" + fmt(worst_growth) + " (<= " + fmt(slack) + ")"};
}

// Symmetry defect of the moving domain along short planar paths.
Outcome planar_symmetry(const Context& ctx) {
  const auto curve = make_ellipse(2.0, 1.0, 1024);
  const double dt = 1e-3;
  const std::size_t paths = 20;
  std::vector<double> worst(paths, 0.0);
  parallel_for(paths, ctx.threads, [&](std::size_t p) {
    RandomStream rng(1302, p);
    auto s = make_planar_state(curve, sample_uniform_planar(curve, rng));
    for (int k = 0; k < 200; ++k) {
      const auto info = planar_step(s, {rng.normal(std::sqrt(dt)), rng.normal(std::sqrt(dt))},
                                    dt, bandwidth_for(dt));
      if (info.stop != StopReason::none) break;
      worst[p] = std::max(worst[p], symmetry_defect(s.domain.nodes()));
    }
  });
  const double w = *std::max_element(worst.begin(), worst.end());
  write_text(ctx.dir / "symmetry.txt", "max_defect = " + format_number(w) + "\n");
  return {w <= 1e-9, "symmetry defect=" + fmt(w) + " (<= 1e-09)"};
}

Outcome c13(const Context& ctx) {
  const auto run = harness_run(ctx, "planar", R"(construction = planar
seed = 1301
replicas = 2000
grid.t_end = 0.2
grid.n_steps = 200
shape.kind = ellipse
shape.a = 2
shape.b = 1
shape.nodes = 1024
test.ks = 0.05
)");
  const auto& rep = main_report(run);
  const auto it = rep.stops.find(std::string(to_string(StopReason::symmetry_loss)));
  const std::size_t lost = it == rep.stops.end() ? 0 : it->second;
  const Outcome stops{lost == 0, "symmetry-loss stops=" + std::to_string(lost)};
  return combine({planar_symmetry(ctx), stops, deterministic_flow(ctx),
                  from_checks(rep, {"ks", "failure_rate"})});
}

std::vector<Criterion> criteria();

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text(e.path());
  return out;
}

fs::path criterion_dir(const fs::path& root, int id) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "c%02d", id);
  return root / buf;
}

// Reruns every other criterion into a scratch directory with a different
// worker count and compares all outputs with the stored ones; criteria
// without stored outputs are run twice.
Outcome c14(const Context& ctx) {
  const fs::path root = ctx.dir.parent_path();
  std::size_t compared = 0;
  std::string mismatched;
  for (const auto& c : criteria()) {
    if (c.id == 14) continue;
    const fs::path stored = criterion_dir(root, c.id);
    auto reference = snapshot_dir(stored);
    if (reference.empty()) {
      const fs::path first = ctx.dir / "first" / stored.filename();
      fs::remove_all(first);
      fs::create_directories(first);
      c.run({first, ctx.threads});
      reference = snapshot_dir(first);
    }
    const fs::path again = ctx.dir / "rerun" / stored.filename();
    fs::remove_all(again);
    fs::create_directories(again);
    c.run({again, ctx.threads + 1});
    const auto got = snapshot_dir(again);
    compared += got.size();
    if (got != reference) mismatched += " " + stored.filename().string();
  }
  fs::remove_all(ctx.dir / "first");
  fs::remove_all(ctx.dir / "rerun");
  if (!mismatched.empty()) return {false, "outputs differ:" + mismatched};
  return {compared > 0, std::to_string(compared) + " output files byte-identical on rerun"};
}

std::vector<Criterion> criteria() {
  return {
      {1, "pitman-bessel3-law", c01},
      {2, "symmetric-vs-pitman-law", c02},
      {3, "non-touching", c03},
      {4, "disk-intertwining", c04},
      {5, "annulus-skeleton-rigidity", c05},
      {6, "annulus-intertwining", c06},
      {7, "generator-dynkin", c07},
      {8, "measure-evolution", c08},
      {9, "key-formula", c09},
      {10, "tube-formula", c10},
      {11, "skeleton-motion", c11},
      {12, "ito-tanaka-residual", c12},
      {13, "planar-diagnostics", c13},
      {14, "determinism", c14},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dualflow acceptance runs"};
  std::string which;
  std::string workdir = "acceptance-out";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("criterion", which, "1..14 or all")->required();
  app.add_option("--workdir", workdir);
  app.add_option("--threads", threads)->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::vector<Criterion> selected;
  for (const auto& c : criteria())
    if (which == "all" || which == std::to_string(c.id)) selected.push_back(c);
  if (selected.empty()) {
    std::fprintf(stderr, "unknown criterion '%s'\n", which.c_str());
    return 2;
  }

  bool all_passed = true;
  for (const auto& c : selected) {
    const fs::path dir = criterion_dir(workdir, c.id);
    fs::remove_all(dir);
    fs::create_directories(dir);
    Outcome o;
    try {
      o = c.run({dir, threads});
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %2d %-28s %s  %s\n", c.id, c.name, o.passed ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    all_passed = all_passed && o.passed;
  }
  return all_passed ? 0 : 1;
}
