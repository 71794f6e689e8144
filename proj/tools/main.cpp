#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualflow/errors.hpp"
#include "harness/config.hpp"
#include "harness/experiment.hpp"
#include "harness/geometry_check.hpp"

namespace h = dualflow::harness;

namespace {

constexpr int kPass = 0, kFail = 1, kConfigError = 2;

unsigned resolve_threads(long long flag) {
  if (flag != 0) {
    if (flag < 0) throw dualflow::ConfigError("--threads: must be positive");
    return static_cast<unsigned>(flag);
  }
  const char* env = std::getenv("DUALFLOW_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v <= 0 || v > 4096)
    throw dualflow::ConfigError(std::string("DUALFLOW_THREADS: expected a positive integer, got '") +
                                env + "'");
  return static_cast<unsigned>(v);
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

void write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw dualflow::ConfigError("cannot create output directory '" + dir.string() + "'");
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw dualflow::ConfigError("cannot write '" + (dir / name).string() + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo duals of Brownian motion: runs, geometry checks and reports"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  long long threads = 0;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run an ensemble from a config file");
  run->add_option("--config", config_path, "key = value config file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Output directory")->default_val("dualflow-out");
  run->add_option("--threads", threads, "Worker threads (default: $DUALFLOW_THREADS or 1)");
  run->add_option("--set", overrides, "Override a config entry, key=value");

  h::GeometryCheckOptions geo;
  std::string geo_config, geo_out;
  auto* gc = app.add_subcommand("geometry-check", "Key formula, tube areas and skeleton motion");
  gc->add_option("--config", geo_config, "Config with geometry.* keys");
  auto* shape_opt = gc->add_option("--shape", geo.shapes,
                                   "disk[:R], ellipse:a,b, annulus:r1,r2 or file:<path>");
  auto* field_opt = gc->add_option("--field", geo.fields, "one, x, x2p2 or expx4");
  auto* nodes_opt = gc->add_option("--nodes", geo.nodes, "Boundary nodes");
  auto* tol_opt = gc->add_option("--tolerance", geo.tolerance, "Residual tolerance");
  gc->add_option("--out", geo_out, "Write geometry.txt into this directory");

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "Re-evaluate the reports of a finished run");
  rep->add_option("--out,dir", report_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run) {
      auto cfg = h::Config::load(config_path);
      if (*seed_opt) cfg.set("seed", std::to_string(seed));
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw dualflow::ConfigError("--set: expected key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      const auto exp = h::parse_experiment(cfg);
      const unsigned n = resolve_threads(threads);
      const auto result = h::run_experiment(exp, n);
      h::write_run(result, out_dir);
      std::cout << "# fingerprint = " << exp.fingerprint() << "\n"
                << h::reports_text(result.reports);
      return result.passed() ? kPass : kFail;
    }
    if (*gc) {
      if (!geo_config.empty()) {
        const auto cfg = h::Config::load(geo_config);
        if (!*shape_opt && cfg.has("geometry.shapes"))
          geo.shapes = split_words(cfg.get_string("geometry.shapes"));
        if (!*field_opt && cfg.has("geometry.fields"))
          geo.fields = split_words(cfg.get_string("geometry.fields"));
        if (!*nodes_opt) geo.nodes = cfg.get_u64("geometry.nodes", geo.nodes);
        if (!*tol_opt) geo.tolerance = cfg.get_double("geometry.tolerance", geo.tolerance);
        geo.skeleton_tolerance =
            cfg.get_double("geometry.skeleton_tolerance", geo.skeleton_tolerance);
        geo.skeleton_nodes = cfg.get_u64("geometry.skeleton_nodes", geo.skeleton_nodes);
        geo.skeleton_dt = cfg.get_double("geometry.skeleton_dt", geo.skeleton_dt);
        if (const auto extra = cfg.unread_keys(); !extra.empty())
          throw dualflow::ConfigError(extra.front() + ": not a geometry-check setting");
      }
      const auto reports = h::geometry_check(geo);
      const std::string text = "# fingerprint = " + h::geometry_fingerprint(geo) + "\n" +
                               h::reports_text(reports);
      if (!geo_out.empty()) write_text(geo_out, "geometry.txt", text);
      std::cout << text;
      bool ok = true;
      for (const auto& r : reports) ok = ok && r.passed();
      return ok ? kPass : kFail;
    }
    if (*rep) {
      const auto result = h::read_run(report_dir);
      std::cout << "# fingerprint = " << result.config.fingerprint() << "\n"
                << h::reports_text(result.reports);
      return result.passed() ? kPass : kFail;
    }
  } catch (const dualflow::ConfigError& e) {
    std::cerr << "dualflow: configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "dualflow: " << e.what() << "\n";
    return kFail;
  }
  return kConfigError;
}
