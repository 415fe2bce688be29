#pragma once

#include "rangecert/lift.hpp"
#include "rangecert/solver.hpp"

namespace rangecert {

/// Lagrange multipliers of the lifted constraints.
struct DualVariables {
  Eigen::VectorXd lambda;  // one per time index
  double rho = 0.0;
};

enum class Verdict { certified, not_certified, numerically_marginal };

std::string to_string(Verdict v);

struct CertConfig {
  double beta = 1e-3;                     // diagonal shift added before the LDL' test
  double stationarity_threshold = 1e-5;   // on |H g|_inf / (1 + |g|_inf)
  double pivot_tolerance = 1e-14;         // |pivot| below this is marginal

  void validate() const;
};

/// Block LDL' factors of an arrowhead matrix H = L D L'.
///
/// Block n of the body holds the unit lower-triangular J_n; `upper(n)` holds
/// L_n (the factor block at position (n+1, n)); `arrow(n)` holds l_n; the
/// corner holds delta. `d` stacks the diagonals of all D_n.
struct ArrowheadFactorization {
  ArrowheadMatrix factors;
  Eigen::VectorXd d;

  /// L D L' rebuilt block by block.
  ArrowheadMatrix reassemble() const;
  /// Dense unit lower-triangular L, for verification at small sizes.
  Eigen::MatrixXd dense_L() const;
};

struct PsdResult {
  bool psd = false;
  bool marginal = false;
  double min_diag = 0.0;
  /// Pivot blocks finished before stopping; N + 1 (including delta) when complete.
  std::size_t completed_blocks = 0;
  std::optional<ArrowheadFactorization> factorization;  // set when complete and requested
};

/// Closed-form duals at a (near-)stationary point:
/// lambda_n = -(2/E) 1' Sigma_n^-1 e_n, rho = -f(theta) - r(theta).
DualVariables compute_duals(const TrajectoryEstimate& estimate, const ProblemData& problem, const MotionPrior& prior);
DualVariables compute_duals(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior);

/// H = (1/E) Q^(g) + (1/N) R^(g) + rho A_0 + sum_n lambda_n A_n.
ArrowheadMatrix assemble_H(const DualVariables& duals, const LiftedMatrices& lifted);

/// |H g|_inf / (1 + |g|_inf).
double check_stationarity(const ArrowheadMatrix& h, const Eigen::VectorXd& g);

/// Block LDL' of H + beta I in the order D_1, J_1, L_1, ..., D_N, J_N, l_1..l_N, delta.
/// Stops at the first negative pivot; a pivot with magnitude below
/// pivot_tolerance stops with `marginal` set. O(N) time and memory.
PsdResult psd_arrowhead(const ArrowheadMatrix& h, double beta, bool keep_factorization = false,
                        double pivot_tolerance = 1e-14);

/// Smallest eigenvalue of the densified H. Refuses matrices above 5000 rows.
double dense_min_eig_oracle(const ArrowheadMatrix& h);

/// Origin used by certify for the lifted coordinates.
Eigen::VectorXd anchor_centroid(const ProblemData& problem);

struct CertificateReport {
  DualVariables duals;
  bool psd = false;
  double min_diag = 0.0;
  double stationarity_residual = 0.0;
  double beta_used = 0.0;
  double duality_gap = 0.0;  // |total_cost - (-rho)|
  double cost = 0.0;
  std::size_t completed_blocks = 0;
  Verdict verdict = Verdict::not_certified;
  double seconds_duals = 0.0;
  double seconds_psd = 0.0;  // H assembly, stationarity and LDL'
};

/// Full certificate pipeline for one estimate. Throws ValidationError for a
/// diverged estimate.
CertificateReport certify(const TrajectoryEstimate& estimate, const ProblemData& problem, const MotionPrior& prior,
                          const CertConfig& config = {});

}  // namespace rangecert
