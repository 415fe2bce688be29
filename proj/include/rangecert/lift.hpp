#pragma once

#include "rangecert/block_matrix.hpp"
#include "rangecert/model.hpp"

namespace rangecert {

/// Index map of the lifted vector g = (theta_1, z_1, ..., theta_N, z_N, l).
/// Each time index owns a block of K+1 entries; l is the last entry.
///
/// Positions may be expressed relative to `origin` (empty means zero). The
/// shift maps g linearly and leaves every quadratic form of the problem
/// unchanged, so H changes by a congruence and keeps its inertia; centering
/// on the anchors avoids cancellation in the corner entry.
struct LiftLayout {
  std::size_t num_times = 0;
  int dim = 0;        // D
  int state_dim = 0;  // K
  Eigen::VectorXd origin;

  int block_size() const { return state_dim + 1; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(num_times) * block_size() + 1; }
  Eigen::Index state_index(std::size_t n, int k) const { return static_cast<Eigen::Index>(n) * block_size() + k; }
  Eigen::Index z_index(std::size_t n) const { return state_index(n, state_dim); }
  Eigen::Index ell_index() const { return size() - 1; }
};

/// Lifted vector for theta: x_n - origin, z_n = |x_n - origin|^2, l = 1.
Eigen::VectorXd lift(const Eigen::VectorXd& theta, const LiftLayout& layout);

/// Matrices of the homogeneous QCQP in the padded (K+1)-block layout.
///
/// `q` carries Q^(g): block n is C_n' Sigma_n^-1 C_n with C_n = [2 Y_n', -1]
/// acting on (x_n, z_n), arrow column q_n = C_n' Sigma_n^-1 b_n and corner
/// q_0 = sum b_n' Sigma_n^-1 b_n, with b_n = d~_n^2 - gamma_n. Velocity rows
/// and columns are zero. `r` is the unpadded prior matrix; R^(g) is obtained
/// through the layout. The constraint matrices A_n, A_0 are structural and
/// applied through the functions below.
struct LiftedMatrices {
  LiftLayout layout;
  std::size_t num_measurements = 0;  // E
  ArrowheadMatrix q;
  BlockTridiagonal r;

  /// R^(g) g.
  Eigen::VectorXd apply_R(const Eigen::VectorXd& g) const;
  /// Dense R^(g), for verification at small sizes.
  Eigen::MatrixXd dense_R() const;
};

LiftedMatrices build_matrices(const ProblemData& problem, const MotionPrior& prior,
                              const Eigen::VectorXd& origin = {});

/// g' A_n g = |x_n|^2 - z_n l.
double constraint_value(std::size_t n, const Eigen::VectorXd& g, const LiftLayout& layout);
/// g' A_0 g = l^2.
double homogenization_value(const Eigen::VectorXd& g, const LiftLayout& layout);
/// A_n g (sparse result returned densely).
Eigen::VectorXd apply_constraint(std::size_t n, const Eigen::VectorXd& g, const LiftLayout& layout);
/// A_0 g.
Eigen::VectorXd apply_homogenization(const Eigen::VectorXd& g, const LiftLayout& layout);
/// Dense A_n (n < N) or A_0 (n == N), for verification at small sizes.
Eigen::MatrixXd dense_constraint(std::size_t n, const LiftLayout& layout);

}  // namespace rangecert
