#include "rangecert/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rangecert {

std::string to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::ground_truth: return "ground-truth";
    case InitStrategy::random_in_box: return "random-in-box";
    case InitStrategy::user_supplied: return "user-supplied";
  }
  return "random-in-box";
}

InitStrategy init_strategy_from_string(const std::string& s) {
  if (s == "ground-truth") return InitStrategy::ground_truth;
  if (s == "random-in-box") return InitStrategy::random_in_box;
  if (s == "user-supplied") return InitStrategy::user_supplied;
  throw ValidationError("unknown init strategy '" + s + "'");
}

void SolveConfig::validate() const {
  if (!(step_tolerance > 0.0)) throw ValidationError("step_tolerance must be positive");
  if (n_restarts < 1) throw ValidationError("n_restarts must be at least 1");
  if (max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
  if (!(init_box_scale > 0.0)) throw ValidationError("init_box_scale must be positive");
  if (!(gap_tolerance >= 0.0) || !(gap_floor >= 0.0)) throw ValidationError("gap tolerances must be nonnegative");
  if (init == InitStrategy::user_supplied && !user_init) throw ValidationError("user-supplied init requires a state");
}

// -- block Cholesky ---------------------------------------------------------

BlockCholesky::BlockCholesky(BlockTridiagonal matrix, double pivot_tolerance) : factor_(std::move(matrix)) {
  const int b = factor_.block_size();
  const std::size_t n_blocks = factor_.num_blocks();
  for (std::size_t n = 0; n < n_blocks; ++n) {
    auto block = factor_.diag(n);
    const SmallMat s = block;
    Eigen::LLT<SmallMat> llt(s);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      const SmallMat l = llt.matrixL();
      for (int i = 0; i < b && ok; ++i) ok = l(i, i) * l(i, i) > pivot_tolerance * std::abs(s(i, i)) && s(i, i) > 0.0;
      block = l;
    }
    if (!ok) throw RankDeficiencyError("normal matrix is singular at time index " + std::to_string(n), n);
    if (n + 1 < n_blocks) {
      auto coupling = factor_.upper(n);
      const SmallMat c = llt.matrixL().solve(SmallMat(coupling));
      coupling = c;
      factor_.diag(n + 1).noalias() -= c.transpose() * c;
    }
  }
}

Eigen::VectorXd BlockCholesky::solve(const Eigen::VectorXd& rhs) const {
  const int b = factor_.block_size();
  const std::size_t n_blocks = factor_.num_blocks();
  Eigen::VectorXd y = rhs;
  for (std::size_t n = 0; n < n_blocks; ++n) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * b;
    if (n > 0) y.segment(i, b).noalias() -= factor_.upper(n - 1).transpose() * y.segment(i - b, b);
    factor_.diag(n).triangularView<Eigen::Lower>().solveInPlace(y.segment(i, b));
  }
  for (std::size_t n = n_blocks; n-- > 0;) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * b;
    if (n + 1 < n_blocks) y.segment(i, b).noalias() -= factor_.upper(n) * y.segment(i + b, b);
    factor_.diag(n).transpose().triangularView<Eigen::Upper>().solveInPlace(y.segment(i, b));
  }
  return y;
}

Eigen::MatrixXd BlockCholesky::dense_factor() const {
  const int b = factor_.block_size();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(factor_.dim(), factor_.dim());
  for (std::size_t n = 0; n < factor_.num_blocks(); ++n) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * b;
    l.block(i, i, b, b) = factor_.diag(n).triangularView<Eigen::Lower>();
    if (n + 1 < factor_.num_blocks()) l.block(i + b, i, b, b) = factor_.upper(n).transpose();
  }
  return l;
}

// -- Gauss-Newton -------------------------------------------------------------

NormalEquations normal_equations(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior,
                                 const BlockTridiagonal& r) {
  const auto& ms = problem.measurements();
  const int k = prior.state_dim();
  const int dim = problem.dim();
  const double weight = static_cast<double>(ms.num_times()) / static_cast<double>(ms.num_measurements());
  NormalEquations eq{r, -r.multiply(theta)};
  for (std::size_t n = 0; n < ms.num_times(); ++n) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * k;
    const SmallVec x = theta.segment(i, dim);
    auto block = eq.lhs.diag(n);
    for (std::size_t row = ms.offsets[n]; row < ms.offsets[n + 1]; ++row) {
      const auto a = problem.anchors().coordinates.col(ms.anchor[row]);
      const SmallVec jac_row = -2.0 * (a - x);
      const double d = ms.distance[row];
      const double e = d * d - (a - x).squaredNorm();
      const double w = weight * problem.inv_variance(row);
      block.topLeftCorner(dim, dim).noalias() += w * jac_row * jac_row.transpose();
      eq.rhs.segment(i, dim) += w * e * jac_row;
    }
  }
  return eq;
}

GnStep gn_step(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior,
               const BlockTridiagonal& r) {
  NormalEquations eq = normal_equations(theta, problem, prior, r);
  const BlockCholesky chol(std::move(eq.lhs));
  GnStep step;
  step.delta = chol.solve(eq.rhs);
  step.cost = total_cost(theta + step.delta, problem, prior);
  return step;
}

GnStep gn_step(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior) {
  return gn_step(theta, problem, prior, assemble_R(prior, problem.times()));
}

TrajectoryEstimate solve(const ProblemData& problem, const MotionPrior& prior, const SolveConfig& config,
                         const Eigen::VectorXd& theta0) {
  const int k = prior.state_dim();
  if (theta0.size() != static_cast<Eigen::Index>(problem.num_times()) * k) throw DomainError("initial state length mismatch");
  if (prior.dim() != problem.dim()) throw ValidationError("prior dimension does not match problem");
  const BlockTridiagonal r = assemble_R(prior, problem.times());
  TrajectoryEstimate est;
  est.theta = theta0;
  est.times = problem.times();
  est.state_dim = k;
  const double sqrt_size = std::sqrt(static_cast<double>(theta0.size()));
  for (int it = 1; it <= config.max_iterations; ++it) {
    const GnStep step = gn_step(est.theta, problem, prior, r);
    est.iterations = it;
    const Eigen::VectorXd next = est.theta + step.delta;
    if (!next.allFinite() || !std::isfinite(step.cost)) {
      est.diverged = true;
      break;
    }
    est.theta = next;
    est.cost = step.cost;
    if (step.delta.norm() / sqrt_size < config.step_tolerance) {
      est.converged = true;
      break;
    }
  }
  est.cost = total_cost(est.theta, problem, prior);
  if (!std::isfinite(est.cost)) est.diverged = true;
  return est;
}

// -- initialization -------------------------------------------------------------

Eigen::VectorXd ground_truth_state(const ProblemData& problem, const MotionPrior& prior) {
  if (!problem.ground_truth()) throw ValidationError("problem has no ground truth");
  const auto& truth = *problem.ground_truth();
  const auto& times = problem.times();
  const int k = prior.state_dim();
  const int dim = problem.dim();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(times.size()) * k);
  std::vector<Eigen::Index> columns(times.size());
  std::size_t j = 0;
  for (std::size_t n = 0; n < times.size(); ++n) {
    while (j < truth.times.size() && truth.times[j] < times[n] - 1e-6) ++j;
    if (j == truth.times.size() || std::abs(truth.times[j] - times[n]) > 1e-6)
      throw ValidationError("ground truth has no sample at measurement time " + std::to_string(times[n]));
    columns[n] = static_cast<Eigen::Index>(j);
    theta.segment(static_cast<Eigen::Index>(n) * k, dim) = truth.positions.col(columns[n]);
  }
  if (prior.kind != PriorKind::constant_velocity) return theta;
  const bool have_velocity = truth.velocities.cols() == truth.positions.cols() && truth.velocities.rows() == dim;
  for (std::size_t n = 0; n < times.size(); ++n) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    if (have_velocity) {
      v = truth.velocities.col(columns[n]);
    } else if (times.size() > 1) {
      const std::size_t lo = n == 0 ? 0 : n - 1;
      const std::size_t hi = n + 1 == times.size() ? n : n + 1;
      v = (truth.positions.col(columns[hi]) - truth.positions.col(columns[lo])) / (times[hi] - times[lo]);
    }
    theta.segment(static_cast<Eigen::Index>(n) * k + dim, dim) = v;
  }
  return theta;
}

Eigen::VectorXd initial_state(const ProblemData& problem, const MotionPrior& prior, const SolveConfig& config,
                              std::mt19937_64& rng) {
  switch (config.init) {
    case InitStrategy::ground_truth: return ground_truth_state(problem, prior);
    case InitStrategy::user_supplied: return *config.user_init;
    case InitStrategy::random_in_box: break;
  }
  const auto& coords = problem.anchors().coordinates;
  const Eigen::VectorXd lo = coords.rowwise().minCoeff();
  const Eigen::VectorXd hi = coords.rowwise().maxCoeff();
  const Eigen::VectorXd center = 0.5 * (lo + hi);
  const Eigen::VectorXd half = (0.5 * (hi - lo)).cwiseMax(0.5e-3) * config.init_box_scale;
  const int k = prior.state_dim();
  const int dim = problem.dim();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.num_times()) * k);
  Eigen::VectorXd x(dim);
  for (std::size_t n = 0; n < problem.num_times(); ++n) {
    if (n == 0 || config.init_per_time)
      for (int d = 0; d < dim; ++d) x[d] = center[d] + half[d] * unit(rng);
    theta.segment(static_cast<Eigen::Index>(n) * k, dim) = x;
  }
  return theta;
}

std::vector<TrajectoryEstimate> multi_restart(const ProblemData& problem, const MotionPrior& prior,
                                              const SolveConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.rng_seed);
  std::vector<TrajectoryEstimate> out;
  out.reserve(static_cast<std::size_t>(config.n_restarts));
  for (int i = 0; i < config.n_restarts; ++i) {
    const Eigen::VectorXd theta0 = initial_state(problem, prior, config, rng);
    out.push_back(solve(problem, prior, config, theta0));
    out.back().restart = i;
  }
  std::stable_sort(out.begin(), out.end(), [](const TrajectoryEstimate& a, const TrajectoryEstimate& b) {
    if (a.diverged != b.diverged) return !a.diverged;
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.restart < b.restart;
  });
  return out;
}

std::vector<CostLabel> label_by_best_cost(const std::vector<double>& costs, double gap_tolerance, double gap_floor) {
  double best = std::numeric_limits<double>::infinity();
  for (double c : costs)
    if (std::isfinite(c)) best = std::min(best, c);
  std::vector<CostLabel> labels;
  labels.reserve(costs.size());
  const double gap = std::max(gap_tolerance * std::abs(best), gap_floor);
  for (double c : costs)
    labels.push_back(std::isfinite(c) && c - best <= gap ? CostLabel::best_cost : CostLabel::suboptimal);
  return labels;
}

}  // namespace rangecert
