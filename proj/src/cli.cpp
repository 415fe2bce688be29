#include "rangecert/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <sys/resource.h>

#include <CLI11.hpp>
#include <json.hpp>

namespace rangecert {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double peak_rss_mb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<double>(usage.ru_maxrss) / 1024.0;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Finite JSON numbers; NaN and inf become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_number(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

}  // namespace

// -- metrics ------------------------------------------------------------------

Eigen::MatrixXd align_positions(const std::vector<double>& times, const GroundTruth& truth, double tolerance) {
  Eigen::MatrixXd out(truth.positions.rows(), static_cast<Eigen::Index>(times.size()));
  std::vector<std::string> offenders;
  std::size_t j = 0;
  for (std::size_t n = 0; n < times.size(); ++n) {
    while (j < truth.times.size() && truth.times[j] < times[n] - tolerance) ++j;
    if (j == truth.times.size() || std::abs(truth.times[j] - times[n]) > tolerance) {
      offenders.push_back(csv_number(times[n]));
      continue;
    }
    out.col(static_cast<Eigen::Index>(n)) = truth.positions.col(static_cast<Eigen::Index>(j));
  }
  if (!offenders.empty()) {
    std::string msg = "alignment error: " + std::to_string(offenders.size()) + " timestamp(s) without a match:";
    for (std::size_t i = 0; i < offenders.size() && i < 10; ++i) msg += " " + offenders[i];
    if (offenders.size() > 10) msg += " ...";
    throw ValidationError(msg);
  }
  return out;
}

TrajectoryErrors trajectory_errors(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() || estimate.cols() == 0)
    throw DomainError("trajectory shapes differ");
  const Eigen::VectorXd dist = (estimate - truth).colwise().norm();
  return {std::sqrt(dist.squaredNorm() / static_cast<double>(dist.size())), dist.mean()};
}

GroundTruth to_trajectory(const TrajectoryEstimate& estimate, int dim) {
  const auto n = static_cast<Eigen::Index>(estimate.num_times());
  GroundTruth out;
  out.times = estimate.times;
  out.positions.resize(dim, n);
  const bool with_velocity = estimate.state_dim == 2 * dim;
  if (with_velocity) out.velocities.resize(dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.positions.col(i) = estimate.theta.segment(i * estimate.state_dim, dim);
    if (with_velocity) out.velocities.col(i) = estimate.theta.segment(i * estimate.state_dim + dim, dim);
  }
  return out;
}

// -- pipeline -------------------------------------------------------------------

SolveOutcome solve_and_certify(const ProblemData& problem, const RunConfig& config) {
  const MotionPrior prior = config.prior(problem.dim());
  SolveOutcome out;
  auto start = Clock::now();
  std::vector<TrajectoryEstimate> estimates = multi_restart(problem, prior, config.solve);
  out.seconds_solve = seconds_since(start);

  std::optional<Eigen::MatrixXd> truth;
  if (problem.ground_truth()) truth = align_positions(problem.times(), *problem.ground_truth());

  std::vector<double> costs;
  for (const auto& e : estimates) costs.push_back(e.diverged ? std::nan("") : e.cost);
  const auto labels = label_by_best_cost(costs, config.solve.gap_tolerance, config.solve.gap_floor);

  for (std::size_t i = 0; i < estimates.size(); ++i) {
    RestartRecord rec;
    rec.estimate = std::move(estimates[i]);
    rec.label = labels[i];
    if (!rec.estimate.diverged) {
      rec.certificate = certify(rec.estimate, problem, prior, config.cert);
      out.seconds_duals += rec.certificate->seconds_duals;
      out.seconds_psd += rec.certificate->seconds_psd;
    }
    if (truth && rec.estimate.theta.allFinite())
      rec.errors = trajectory_errors(to_trajectory(rec.estimate, problem.dim()).positions, *truth);
    out.restarts.push_back(std::move(rec));
  }
  const auto certified = std::find_if(out.restarts.begin(), out.restarts.end(),
                                      [](const RestartRecord& r) { return r.certified(); });
  out.chosen_certified = certified != out.restarts.end();
  out.chosen = out.chosen_certified ? static_cast<std::size_t>(certified - out.restarts.begin()) : 0;
  return out;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ull;
  }
  return state;
}

std::string content_hash(const std::vector<std::filesystem::path>& files, const std::string& extra) {
  std::uint64_t h = fnv1a("");
  for (const auto& f : files)
    if (std::filesystem::exists(f)) h = fnv1a(read_file(f), h);
  h = fnv1a(extra, h);
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

// -- commands -------------------------------------------------------------------

int cmd_simulate(const RunConfig& config, const std::filesystem::path& out, const CommandOptions& options) {
  const ProblemData problem = simulate(config.sim, config.noise);
  write_dataset(out, problem);
  write_text(out / "config.json", dump_config(config) + "\n");
  if (!options.quiet)
    std::cout << "wrote " << problem.num_times() << " times, " << problem.num_measurements() << " measurements to "
              << out.string() << "\n";
  return kExitCertified;
}

int cmd_solve(const std::filesystem::path& dataset, const RunConfig& config, const std::filesystem::path& out,
              const CommandOptions& options) {
  const ProblemData problem = load_dataset(dataset, config.noise);
  const SolveOutcome outcome = solve_and_certify(problem, config);
  std::filesystem::create_directories(out);

  const std::string resolved = dump_config(config);
  json report;
  report["config"] = json::parse(resolved);
  report["input_hash"] = content_hash(
      {dataset / "anchors.csv", dataset / "measurements.csv", dataset / "ground_truth.csv"}, resolved);
  report["num_times"] = problem.num_times();
  report["num_measurements"] = problem.num_measurements();
  report["variance_fallbacks"] = problem.fallback_count();
  report["effective_sigma_squared"] = problem.noise().sigma_squared;
  json restarts = json::array();
  for (const auto& r : outcome.restarts) {
    json item{{"restart", r.estimate.restart},
              {"cost", number(r.estimate.cost)},
              {"iterations", r.estimate.iterations},
              {"converged", r.estimate.converged},
              {"diverged", r.estimate.diverged},
              {"best_cost", r.label == CostLabel::best_cost}};
    if (r.certificate) {
      const auto& c = *r.certificate;
      item["verdict"] = to_string(c.verdict);
      item["duality_gap"] = number(c.duality_gap);
      item["min_diag"] = number(c.min_diag);
      item["stationarity_residual"] = number(c.stationarity_residual);
      item["beta"] = c.beta_used;
      item["rho"] = number(c.duals.rho);
    } else {
      item["verdict"] = "diverged";
    }
    if (r.errors) {
      item["rmse"] = number(r.errors->rmse);
      item["mae"] = number(r.errors->mae);
    }
    restarts.push_back(item);
  }
  report["restarts"] = restarts;
  report["chosen_restart"] = outcome.restarts[outcome.chosen].estimate.restart;
  report["chosen_certified"] = outcome.chosen_certified;
  report["timing_seconds"] = {
      {"solve", outcome.seconds_solve}, {"duals", outcome.seconds_duals}, {"psd", outcome.seconds_psd}};
  json warnings = json::array();
  if (!outcome.chosen_certified) warnings.push_back("no estimate certified; reporting the best-cost estimate");
  if (problem.fallback_count() > 0) warnings.push_back("zero distances used the squared-constant variance");
  report["warnings"] = warnings;
  write_text(out / "report.json", report.dump(2) + "\n");

  const auto& chosen = outcome.restarts[outcome.chosen];
  write_ground_truth(out / "estimate.csv", to_trajectory(chosen.estimate, problem.dim()));
  if (options.dump_h && chosen.certificate) {
    const MotionPrior prior = config.prior(problem.dim());
    const ArrowheadMatrix h = assemble_H(chosen.certificate->duals, build_matrices(problem, prior, anchor_centroid(problem)));
    write_coordinate_list(*options.dump_h, h);
  }

  if (!options.quiet) {
    int n_cert = 0;
    for (const auto& r : outcome.restarts) n_cert += r.certified() ? 1 : 0;
    std::cout << "restarts: " << outcome.restarts.size() << ", certified: " << n_cert << "\n"
              << "chosen restart " << chosen.estimate.restart << ": cost " << chosen.estimate.cost << ", "
              << (chosen.certificate ? to_string(chosen.certificate->verdict) : "diverged") << "\n";
    if (chosen.errors) std::cout << "rmse " << chosen.errors->rmse << ", mae " << chosen.errors->mae << "\n";
  }
  if (!outcome.chosen_certified) std::cerr << "warning: no estimate certified; wrote the best-cost estimate\n";
  return outcome.chosen_certified ? kExitCertified : kExitUncertified;
}

int cmd_eval(const std::filesystem::path& estimate, const std::filesystem::path& truth,
             const std::optional<std::filesystem::path>& out, const CommandOptions& options) {
  const GroundTruth est = read_ground_truth(estimate);
  const GroundTruth ref = read_ground_truth(truth, static_cast<int>(est.positions.rows()));
  const Eigen::MatrixXd aligned = align_positions(est.times, ref);
  if (ref.times.size() != est.times.size())
    align_positions(ref.times, est);  // lists truth stamps missing from the estimate
  const TrajectoryErrors err = trajectory_errors(est.positions, aligned);
  if (out) {
    std::filesystem::create_directories(*out);
    json metrics{{"rmse", err.rmse},
                 {"mae", err.mae},
                 {"num_times", est.times.size()},
                 {"input_hash", content_hash({estimate, truth})}};
    write_text(*out / "metrics.json", metrics.dump(2) + "\n");
  }
  if (!options.quiet) std::cout << std::setprecision(10) << "rmse " << err.rmse << "\nmae " << err.mae << "\n";
  return kExitCertified;
}

std::vector<BenchRow> run_bench(const RunConfig& config, bool quiet) {
  std::vector<BenchRow> rows;
  for (std::size_t n : config.bench.grid) {
    SimConfig sim = config.sim;
    sim.num_times = n;
    const ProblemData problem = simulate(sim, config.noise);
    const MotionPrior prior = config.prior(problem.dim());
    const BlockTridiagonal r = assemble_R(prior, problem.times());

    BenchRow row;
    row.num_times = n;
    row.state_dim = prior.state_dim();
    row.gn_seconds = row.duals_seconds = row.psd_seconds = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < config.bench.repeats; ++rep) {
      TrajectoryEstimate est;
      est.theta = ground_truth_state(problem, prior);
      est.times = problem.times();
      est.state_dim = prior.state_dim();
      const auto start = Clock::now();
      for (int it = 0; it < config.bench.gn_iterations; ++it) est.theta += gn_step(est.theta, problem, prior, r).delta;
      row.gn_seconds = std::min(row.gn_seconds, seconds_since(start) / config.bench.gn_iterations);
      const CertificateReport cert = certify(est, problem, prior, config.cert);
      row.duals_seconds = std::min(row.duals_seconds, cert.seconds_duals);
      row.psd_seconds = std::min(row.psd_seconds, cert.seconds_psd);
    }
    row.peak_rss_mb = peak_rss_mb();
    if (!quiet)
      std::cout << "N=" << n << " gn " << row.gn_seconds << " s/it, duals " << row.duals_seconds << " s, psd "
                << row.psd_seconds << " s, peak rss " << row.peak_rss_mb << " MB\n";
    rows.push_back(row);
  }
  return rows;
}

int cmd_bench(const RunConfig& config, const std::filesystem::path& out, const CommandOptions& options) {
  const auto rows = run_bench(config, options.quiet);
  std::filesystem::create_directories(out);
  std::ostringstream csv;
  csv << "num_times,state_dim,gn_seconds_per_iteration,duals_seconds,psd_seconds,peak_rss_mb\n";
  for (const auto& r : rows)
    csv << r.num_times << ',' << r.state_dim << ',' << csv_number(r.gn_seconds) << ','
        << csv_number(r.duals_seconds) << ',' << csv_number(r.psd_seconds) << ',' << csv_number(r.peak_rss_mb)
        << '\n';
  write_text(out / "bench.csv", csv.str());
  write_text(out / "config.json", dump_config(config) + "\n");
  return kExitCertified;
}

SweepResult run_sweep(const RunConfig& config, bool quiet) {
  SweepResult result;
  for (double noise : config.sweep.noise_grid) {
    SweepCell cell;
    cell.noise = noise;
    for (int s = 0; s < config.sweep.setups; ++s) {
      RunConfig run = config;
      run.sim.sigma_d = noise;
      run.sim.rng_seed = config.seed + static_cast<std::uint64_t>(s);
      run.solve.rng_seed = run.sim.rng_seed;
      run.noise = config.noise_for(noise);
      const ProblemData problem = simulate(run.sim, run.noise);
      const SolveOutcome outcome = solve_and_certify(problem, run);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : outcome.restarts)
        if (!r.estimate.diverged) best = std::min(best, r.estimate.cost);
      bool clusters = false;
      for (const auto& r : outcome.restarts) {
        SweepRecord rec;
        rec.noise = noise;
        rec.setup = s;
        rec.restart = r.estimate.restart;
        rec.cost = r.estimate.cost;
        rec.rmse = r.errors ? r.errors->rmse : std::nan("");
        rec.iterations = r.estimate.iterations;
        rec.diverged = r.estimate.diverged;
        rec.certified = r.certified();
        rec.best_cost = r.label == CostLabel::best_cost;
        rec.verdict = r.certificate ? to_string(r.certificate->verdict) : "diverged";
        rec.min_diag = r.certificate ? r.certificate->min_diag : std::nan("");
        rec.stationarity = r.certificate ? r.certificate->stationarity_residual : std::nan("");
        rec.relative_gap = (rec.cost - best) / std::max(std::abs(best), config.solve.gap_floor);
        if (rec.diverged) {
          ++cell.diverged;
        } else {
          if (rec.certified && rec.best_cost) ++cell.tp;
          if (rec.certified && !rec.best_cost) ++cell.fp;
          if (!rec.certified && rec.best_cost) ++cell.fn;
          if (!rec.certified && !rec.best_cost) ++cell.tn;
          const bool beyond = rec.relative_gap > config.sweep.cluster_tolerance;
          clusters = clusters || beyond;
          if (rec.certified && beyond) ++cell.fp_beyond_tolerance;
        }
        result.records.push_back(rec);
      }
      if (clusters) ++cell.setups_with_clusters;
    }
    if (!quiet)
      std::cout << "noise " << noise << ": tp " << cell.tp << " tn " << cell.tn << " fp " << cell.fp << " fn "
                << cell.fn << " diverged " << cell.diverged << "\n";
    result.cells.push_back(cell);
  }
  return result;
}

int cmd_sweep(const RunConfig& config, const std::filesystem::path& out, const CommandOptions& options) {
  const SweepResult result = run_sweep(config, options.quiet);
  std::filesystem::create_directories(out);
  std::ostringstream csv;
  csv << "noise,setup,restart,rmse,cost,certified,best_cost,verdict,iterations,min_diag,stationarity,relative_gap\n";
  for (const auto& r : result.records)
    csv << csv_number(r.noise) << ',' << r.setup << ',' << r.restart << ',' << csv_number(r.rmse) << ','
        << csv_number(r.cost) << ',' << (r.certified ? 1 : 0) << ',' << (r.best_cost ? 1 : 0) << ',' << r.verdict
        << ',' << r.iterations << ',' << csv_number(r.min_diag) << ',' << csv_number(r.stationarity) << ','
        << csv_number(r.relative_gap) << '\n';
  write_text(out / "sweep.csv", csv.str());
  std::ostringstream summary;
  summary << "noise,tp,tn,fp,fn,diverged,fp_beyond_tolerance,setups_with_clusters\n";
  for (const auto& c : result.cells)
    summary << csv_number(c.noise) << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn << ',' << c.diverged
            << ',' << c.fp_beyond_tolerance << ',' << c.setups_with_clusters << '\n';
  write_text(out / "sweep_summary.csv", summary.str());
  write_text(out / "config.json", dump_config(config) + "\n");
  return kExitCertified;
}

// -- argument parsing -------------------------------------------------------------

int run_cli(int argc, char** argv) {
  CLI::App app{"Range-only trajectory estimation with optimality certificates"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON config file (defaults when omitted)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_flag("--quiet", quiet, "suppress progress output");

  auto* simulate_cmd = app.add_subcommand("simulate", "write a synthetic dataset");
  auto* solve_cmd = app.add_subcommand("solve", "solve and certify a dataset");
  std::string dataset;
  std::string dump_h;
  solve_cmd->add_option("dataset", dataset, "directory with anchors.csv and measurements.csv")->required();
  solve_cmd->add_option("--dump-h", dump_h, "write the certificate matrix as row,col,value lines");
  auto* eval_cmd = app.add_subcommand("eval", "compare an estimate with ground truth");
  std::string estimate_file, truth_file;
  eval_cmd->add_option("estimate", estimate_file, "estimate CSV")->required();
  eval_cmd->add_option("truth", truth_file, "ground truth CSV")->required();
  auto* bench_cmd = app.add_subcommand("bench", "time the pipeline stages over a grid of N");
  auto* sweep_cmd = app.add_subcommand("sweep", "certification statistics over random setups");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) config.seed = *seed;
    config.resolve();
    CommandOptions options;
    options.quiet = quiet;
    if (!dump_h.empty()) options.dump_h = dump_h;
    const std::filesystem::path out(out_dir);
    if (*simulate_cmd) return cmd_simulate(config, out, options);
    if (*solve_cmd) return cmd_solve(dataset, config, out, options);
    if (*eval_cmd) {
      std::optional<std::filesystem::path> eval_out;
      if (app.get_option("--out")->count() > 0) eval_out = out;
      return cmd_eval(estimate_file, truth_file, eval_out, options);
    }
    if (*bench_cmd) return cmd_bench(config, out, options);
    if (*sweep_cmd) return cmd_sweep(config, out, options);
  } catch (const RankDeficiencyError& e) {
    std::cerr << "error: " << e.what() << "\nhint: add a motion prior\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace rangecert
