#pragma once

#include "rangecert/prior.hpp"
#include "rangecert/problem.hpp"

namespace rangecert {

/// Stacked states at the N measurement times plus solver metadata.
struct TrajectoryEstimate {
  Eigen::VectorXd theta;  // N*K
  std::vector<double> times;
  int state_dim = 0;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  int restart = 0;  // index of the initialization that produced this estimate

  std::size_t num_times() const { return times.size(); }
  /// Position x_n (first D entries of state n).
  Eigen::VectorXd position(std::size_t n, int dim) const {
    return theta.segment(static_cast<Eigen::Index>(n) * state_dim, dim);
  }
};

/// h_n(x_n): squared distances from x_n to the anchors observed at time n.
Eigen::VectorXd predict(std::size_t n, const Eigen::VectorXd& x, const ProblemData& problem);

/// e_n = d~_n^2 - h_n(x_n).
Eigen::VectorXd residual(std::size_t n, const Eigen::VectorXd& x, const ProblemData& problem);

/// Residual via the expanded form d~^2 - gamma_n + 2 Y_n' x_n - |x_n|^2 1.
Eigen::VectorXd residual_expanded(std::size_t n, const Eigen::VectorXd& x, const ProblemData& problem);

/// Jacobian of h_n with respect to x_n (M_n x D); row m is -2 (a_m - x_n)'.
Eigen::MatrixXd jacobian(std::size_t n, const Eigen::VectorXd& x, const ProblemData& problem);

/// f(theta) = (1/E) sum_n e_n' Sigma_n^-1 e_n. `state_dim` is K.
double data_cost(const Eigen::VectorXd& theta, int state_dim, const ProblemData& problem);

/// f(theta) + r(theta).
double total_cost(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior);

/// Gradient of total_cost: 4/E (Y_n - x_n 1') Sigma_n^-1 e_n on positions plus 2/N R theta.
Eigen::VectorXd cost_gradient(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior);

}  // namespace rangecert
