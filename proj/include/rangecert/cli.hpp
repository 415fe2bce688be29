#pragma once

#include "rangecert/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rangecert {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitCertified = 0, kExitError = 1, kExitUncertified = 2 };

struct TrajectoryErrors {
  double rmse = 0.0;
  double mae = 0.0;
};

/// Positions of `truth` at `times` (D x N). Every time must match a truth
/// stamp within `tolerance`; otherwise ValidationError lists the offenders.
Eigen::MatrixXd align_positions(const std::vector<double>& times, const GroundTruth& truth, double tolerance = 1e-6);

/// RMSE = sqrt(mean |x^_n - x_n|^2), MAE = mean |x^_n - x_n| over position columns.
TrajectoryErrors trajectory_errors(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

/// Estimate in trajectory-CSV form (velocities included for the constant-velocity state).
GroundTruth to_trajectory(const TrajectoryEstimate& estimate, int dim);

/// One restart of a solve run.
struct RestartRecord {
  TrajectoryEstimate estimate;
  std::optional<CertificateReport> certificate;  // empty for diverged runs
  CostLabel label = CostLabel::suboptimal;
  std::optional<TrajectoryErrors> errors;        // when ground truth is known
  bool certified() const { return certificate && certificate->verdict == Verdict::certified; }
};

struct SolveOutcome {
  std::vector<RestartRecord> restarts;  // sorted by (diverged, cost, restart)
  std::size_t chosen = 0;               // best certified, else best cost
  bool chosen_certified = false;
  double seconds_solve = 0.0;
  double seconds_duals = 0.0;
  double seconds_psd = 0.0;
};

/// Multi-restart solve followed by a certificate for every non-diverged estimate.
SolveOutcome solve_and_certify(const ProblemData& problem, const RunConfig& config);

/// 64-bit FNV-1a over the given bytes, continuing from `state`.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t state = 0xcbf29ce484222325ull);
/// FNV-1a over the contents of the files, in order; missing files are skipped.
std::string content_hash(const std::vector<std::filesystem::path>& files, const std::string& extra = {});

struct CommandOptions {
  bool quiet = false;
  std::optional<std::filesystem::path> dump_h;  // solve: coordinate list of H for the chosen estimate
};

/// Writes the dataset files and config.json into `out`.
int cmd_simulate(const RunConfig& config, const std::filesystem::path& out, const CommandOptions& options = {});
/// Writes report.json and estimate.csv into `out`. Returns an ExitCode.
int cmd_solve(const std::filesystem::path& dataset, const RunConfig& config, const std::filesystem::path& out,
              const CommandOptions& options = {});
/// Prints RMSE and MAE; writes metrics.json into `out` when given.
int cmd_eval(const std::filesystem::path& estimate, const std::filesystem::path& truth,
             const std::optional<std::filesystem::path>& out, const CommandOptions& options = {});

struct BenchRow {
  std::size_t num_times = 0;
  int state_dim = 0;
  double gn_seconds = 0.0;  // per GN iteration, minimum over repeats
  double duals_seconds = 0.0;
  double psd_seconds = 0.0;  // H assembly, stationarity and LDL'
  double peak_rss_mb = 0.0;  // process peak after this row
};

std::vector<BenchRow> run_bench(const RunConfig& config, bool quiet = true);
/// Writes bench.csv into `out`.
int cmd_bench(const RunConfig& config, const std::filesystem::path& out, const CommandOptions& options = {});

struct SweepRecord {
  double noise = 0.0;
  int setup = 0;
  int restart = 0;
  double cost = 0.0;
  double rmse = 0.0;
  int iterations = 0;
  bool diverged = false;
  bool certified = false;
  bool best_cost = false;
  std::string verdict;
  double min_diag = 0.0;
  double stationarity = 0.0;
  double relative_gap = 0.0;  // (cost - best) / |best|
};

struct SweepCell {
  double noise = 0.0;
  int tp = 0, tn = 0, fp = 0, fn = 0;
  int diverged = 0;
  int fp_beyond_tolerance = 0;  // certified with relative gap above cluster_tolerance
  int setups_with_clusters = 0; // setups with a restart above cluster_tolerance
};

struct SweepResult {
  std::vector<SweepRecord> records;
  std::vector<SweepCell> cells;
};

SweepResult run_sweep(const RunConfig& config, bool quiet = true);
/// Writes sweep.csv and sweep_summary.csv into `out`.
int cmd_sweep(const RunConfig& config, const std::filesystem::path& out, const CommandOptions& options = {});

/// Entry point of the command-line tool.
int run_cli(int argc, char** argv);

}  // namespace rangecert
