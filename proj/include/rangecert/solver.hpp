#pragma once

#include "rangecert/block_matrix.hpp"
#include "rangecert/model.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace rangecert {

enum class InitStrategy { ground_truth, random_in_box, user_supplied };

std::string to_string(InitStrategy s);
InitStrategy init_strategy_from_string(const std::string& s);

struct SolveConfig {
  int max_iterations = 50;
  double step_tolerance = 1e-10;  // RMS of the GN step
  int n_restarts = 10;
  InitStrategy init = InitStrategy::random_in_box;
  std::uint64_t rng_seed = 0;
  double init_box_scale = 1.0;  // scales the anchor bounding box about its center
  bool init_per_time = false;   // false: one random position shared by all times
  double gap_tolerance = 1e-6;  // relative gap for the best-cost label
  double gap_floor = 1e-12;     // absolute floor on the gap, for near-zero best costs
  std::optional<Eigen::VectorXd> user_init;

  void validate() const;
};

/// In-place Cholesky of a symmetric positive definite block-tridiagonal
/// matrix. The factor keeps the block-tridiagonal pattern: diagonal blocks
/// hold the lower-triangular L_n, super-diagonal blocks hold C_n = L_n^-1 A_n,n+1
/// so that block (n+1, n) of the factor is C_n'.
class BlockCholesky {
 public:
  /// Throws RankDeficiencyError naming the first block whose pivot fails the
  /// relative threshold.
  explicit BlockCholesky(BlockTridiagonal matrix, double pivot_tolerance = 1e-13);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Dense lower-triangular factor, for verification at small sizes.
  Eigen::MatrixXd dense_factor() const;

 private:
  BlockTridiagonal factor_;
};

/// R + (N/E) J' Sigma^-1 J and the matching right-hand side.
struct NormalEquations {
  BlockTridiagonal lhs;
  Eigen::VectorXd rhs;
};

NormalEquations normal_equations(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior,
                                 const BlockTridiagonal& r);

struct GnStep {
  Eigen::VectorXd delta;
  double cost = 0.0;  // total cost at theta + delta
};

/// One Gauss-Newton update.
GnStep gn_step(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior);
GnStep gn_step(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior,
               const BlockTridiagonal& r);

/// Plain (undamped) Gauss-Newton from theta0 until the RMS step falls below
/// config.step_tolerance or max_iterations is reached. Non-finite iterates
/// set `diverged` and return the last finite state.
TrajectoryEstimate solve(const ProblemData& problem, const MotionPrior& prior, const SolveConfig& config,
                         const Eigen::VectorXd& theta0);

/// Initial state for a given strategy. Random positions are uniform in the
/// scaled anchor bounding box, drawn once per restart (or once per time with
/// init_per_time); velocities start at zero.
Eigen::VectorXd initial_state(const ProblemData& problem, const MotionPrior& prior, const SolveConfig& config,
                              std::mt19937_64& rng);

/// State built from the problem's ground truth; velocities come from the
/// ground truth when known, finite differences otherwise.
Eigen::VectorXd ground_truth_state(const ProblemData& problem, const MotionPrior& prior);

/// Runs config.n_restarts solves. Deterministic in config.rng_seed. Results
/// are sorted by (diverged, cost, restart index).
std::vector<TrajectoryEstimate> multi_restart(const ProblemData& problem, const MotionPrior& prior,
                                              const SolveConfig& config);

enum class CostLabel { best_cost, suboptimal };

/// Estimates whose cost is within gap_tolerance (relative to the minimum,
/// with an absolute floor) of the minimum are best-cost. Diverged estimates
/// (NaN cost) are suboptimal.
std::vector<CostLabel> label_by_best_cost(const std::vector<double>& costs, double gap_tolerance = 1e-6,
                                          double gap_floor = 1e-12);

}  // namespace rangecert
