#pragma once

#include "rangecert/block_matrix.hpp"
#include "rangecert/common.hpp"

#include <string>
#include <vector>

namespace rangecert {

enum class PriorKind { none, zero_velocity, constant_velocity };

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

/// LTV-SDE motion prior. The state at each time holds the position, followed
/// by the velocity for the constant-velocity prior.
struct MotionPrior {
  PriorKind kind = PriorKind::none;
  Eigen::MatrixXd psd;  // power spectral density Q_C (D x D)

  static MotionPrior make(PriorKind kind, int dim, double sigma_a);

  int dim() const { return static_cast<int>(psd.rows()); }
  int state_dim() const { return kind == PriorKind::constant_velocity ? 2 * dim() : dim(); }
  void validate() const;
};

/// Phi(t_to, t_from).
Eigen::MatrixXd transition(const MotionPrior& prior, double t_to, double t_from);

/// Integrated process-noise covariance over an interval of length dt
/// (closed form).
Eigen::MatrixXd interval_covariance(const MotionPrior& prior, double dt);

/// Inverse of interval_covariance, in closed form.
Eigen::MatrixXd interval_information(const MotionPrior& prior, double dt);

/// Per-interval factors for intervals n = 1..N-1 (0-based: interval n joins
/// states n-1 and n).
struct IntervalFactors {
  std::vector<Eigen::MatrixXd> transition;
  std::vector<Eigen::MatrixXd> covariance;
  std::vector<Eigen::VectorXd> input;  // zero for the shipped priors
};

IntervalFactors interval_factors(const MotionPrior& prior, const std::vector<double>& times);

/// Block-tridiagonal prior matrix R with r(theta) = theta' R theta / N.
/// For kind == none (or a single time) R is zero.
BlockTridiagonal assemble_R(const MotionPrior& prior, const std::vector<double>& times);

/// r(theta) = (1/N) sum_n e' W^-1 e, evaluated factor by factor.
double prior_energy(const MotionPrior& prior, const std::vector<double>& times, const Eigen::VectorXd& theta);

}  // namespace rangecert
