#pragma once

// Config-driven ensemble runs of every construction, their verification
// reports and the on-disk run format.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dualflow/dual1d.hpp"
#include "dualflow/planar.hpp"
#include "dualflow/radial.hpp"
#include "dualflow/stats.hpp"
#include "harness/config.hpp"

namespace dualflow::harness {

enum class Construction { symmetric1d, pitman1d, mirror1d, free1d, disk, annulus, planar };

std::string_view to_string(Construction c);

struct ExperimentConfig {
  Construction construction = Construction::pitman1d;
  std::uint64_t seed = 1;
  std::size_t replicas = 1000;
  double t_end = 1.0;
  std::size_t n_steps = 1000;
  double bandwidth_factor = 1.0;
  double collar = 1e-3;
  std::size_t snapshot_stride = 0;  // 0: no snapshots

  double law_ks = 0.02;
  UniformityThresholds uniformity;
  double failure_ceiling = 0.05;  // allowed fraction of scheme-failure stops
  bool non_touching = false;
  double touch_from = 0.1;
  double touch_fraction = 0.01;
  bool dynkin = false;
  double dynkin_tolerance = 0.1;
  bool measure = false;
  double measure_tolerance = 0.05;
  double qv_ratio = 0.05;
  double drift_tolerance = 0.05;

  BoundaryPush push = BoundaryPush::regulator;
  double a0 = -1.0, b0 = 1.0;
  double x0 = NAN;  // free1d start; uniform in (a0, b0) when unset

  std::string profile = "euclidean";
  int dimension = 2;
  RadialNoise noise = RadialNoise::exact;
  double disk_r0 = 1.0;
  double disk_rho0 = NAN;
  double r_minus = 1.0, r_plus = 2.0;

  std::string shape = "ellipse";  // ellipse, circle or file
  double shape_a = 2.0, shape_b = 1.0;
  std::size_t shape_nodes = 1024;
  std::string shape_file;
  PlanarOptions planar;

  /// Every effective setting as sorted "key = value" lines; parses back to
  /// the same configuration.
  std::string canonical() const;
  std::string fingerprint() const;
  TimeGrid grid() const { return TimeGrid(t_end, n_steps); }
  RadialProfile radial_profile() const;
  SymmetricConvexCurve planar_domain() const;
};

/// Validates in a fixed field order; ConfigError names the first bad field.
/// Keys that the chosen construction does not use are rejected.
ExperimentConfig parse_experiment(const Config& config);

struct ReplicaRow {
  std::size_t replica = 0;
  StopReason stop = StopReason::none;
  std::size_t steps = 0;
  std::vector<double> values;
};

struct RunOutput {
  ExperimentConfig config;
  std::vector<std::string> columns;
  std::vector<ReplicaRow> rows;
  std::vector<std::string> snapshot_columns;
  std::vector<std::vector<double>> snapshots;  // replica, step, t, state...
  std::vector<StatReport> reports;

  bool passed() const;
};

/// Runs all replicas (fanned out over `threads` workers; results are
/// ordered by replica index) and evaluates the reports.
RunOutput run_experiment(const ExperimentConfig& config, unsigned threads = 1);

/// Reports from the per-replica table alone.
std::vector<StatReport> evaluate(const ExperimentConfig& config,
                                 const std::vector<std::string>& columns,
                                 const std::vector<ReplicaRow>& rows);

/// config.txt, replicas.tsv, snapshots.tsv (if any) and report.txt.
void write_run(const RunOutput& run, const std::filesystem::path& dir);
/// Reads config.txt and replicas.tsv back and re-evaluates the reports.
RunOutput read_run(const std::filesystem::path& dir);

std::string reports_text(const std::vector<StatReport>& reports);

StopReason stop_from_string(std::string_view name);

}  // namespace dualflow::harness
