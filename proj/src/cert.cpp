#include "rangecert/cert.hpp"

#include <chrono>

namespace rangecert {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Copies a K x K prior block into the leading corner of a (K+1) x (K+1) block.
template <class Dst, class Src>
void add_padded(Dst&& dst, const Src& src, double scale) {
  dst.topLeftCorner(src.rows(), src.cols()) += scale * src;
}

}  // namespace

Eigen::VectorXd anchor_centroid(const ProblemData& problem) {
  return problem.anchors().coordinates.rowwise().mean();
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::not_certified: return "not-certified";
    case Verdict::numerically_marginal: return "numerically-marginal";
  }
  return "not-certified";
}

void CertConfig::validate() const {
  if (!(beta >= 0.0)) throw ValidationError("beta must be nonnegative");
  if (!(stationarity_threshold > 0.0)) throw ValidationError("stationarity threshold must be positive");
  if (!(pivot_tolerance >= 0.0)) throw ValidationError("pivot tolerance must be nonnegative");
}

DualVariables compute_duals(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior) {
  const auto& ms = problem.measurements();
  const int k = prior.state_dim();
  const int dim = problem.dim();
  if (theta.size() != static_cast<Eigen::Index>(ms.num_times()) * k) throw DomainError("state length mismatch");
  const double inv_e = 1.0 / static_cast<double>(ms.num_measurements());
  DualVariables duals;
  duals.lambda.resize(static_cast<Eigen::Index>(ms.num_times()));
  double weighted = 0.0;
  for (std::size_t n = 0; n < ms.num_times(); ++n) {
    const auto x = theta.segment(static_cast<Eigen::Index>(n) * k, dim);
    double sum = 0.0;
    for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r) {
      const double d = ms.distance[r];
      const double e = d * d - (problem.anchors().coordinates.col(ms.anchor[r]) - x).squaredNorm();
      sum += problem.inv_variance(r) * e;
      weighted += problem.inv_variance(r) * e * e;
    }
    duals.lambda[static_cast<Eigen::Index>(n)] = -2.0 * inv_e * sum;
  }
  duals.rho = -inv_e * weighted - prior_energy(prior, problem.times(), theta);
  return duals;
}

DualVariables compute_duals(const TrajectoryEstimate& estimate, const ProblemData& problem, const MotionPrior& prior) {
  return compute_duals(estimate.theta, problem, prior);
}

ArrowheadMatrix assemble_H(const DualVariables& duals, const LiftedMatrices& lifted) {
  const auto& layout = lifted.layout;
  const std::size_t n_times = layout.num_times;
  if (duals.lambda.size() != static_cast<Eigen::Index>(n_times)) throw DomainError("dual length mismatch");
  const double inv_e = 1.0 / static_cast<double>(lifted.num_measurements);
  const double inv_n = 1.0 / static_cast<double>(n_times);
  const int k = layout.state_dim;
  const int dim = layout.dim;
  ArrowheadMatrix h(n_times, layout.block_size());
  for (std::size_t n = 0; n < n_times; ++n) {
    const double lambda = duals.lambda[static_cast<Eigen::Index>(n)];
    auto block = h.diag(n);
    block = inv_e * lifted.q.diag(n);
    add_padded(block, lifted.r.diag(n), inv_n);
    block.diagonal().head(dim).array() += lambda;
    if (n + 1 < n_times) {
      auto up = h.upper(n);
      up.setZero();
      add_padded(up, lifted.r.upper(n), inv_n);
    }
    h.arrow(n) = inv_e * lifted.q.arrow(n);
    h.arrow(n)[k] -= 0.5 * lambda;
  }
  h.corner() = inv_e * lifted.q.corner() + duals.rho;
  return h;
}

double check_stationarity(const ArrowheadMatrix& h, const Eigen::VectorXd& g) {
  return h.multiply(g).lpNorm<Eigen::Infinity>() / (1.0 + g.lpNorm<Eigen::Infinity>());
}

PsdResult psd_arrowhead(const ArrowheadMatrix& h, double beta, bool keep_factorization, double pivot_tolerance) {
  const std::size_t n_blocks = h.num_blocks();
  const int b = h.block_size();
  PsdResult result;
  result.min_diag = std::numeric_limits<double>::infinity();

  // J_n in the diagonal blocks, L_n in the upper slots, l_n in the arrow.
  ArrowheadFactorization f{ArrowheadMatrix(n_blocks, b), Eigen::VectorXd(static_cast<Eigen::Index>(n_blocks) * b)};

  // Returns false when the pivot stops the recursion.
  auto accept_pivot = [&](double pivot) {
    result.min_diag = std::min(result.min_diag, pivot);
    if (std::abs(pivot) < pivot_tolerance) {
      result.marginal = true;
      return false;
    }
    return pivot > 0.0;
  };

  SmallMat s(b, b), j(b, b), prev_ld(b, b);
  SmallVec dn(b);
  for (std::size_t n = 0; n < n_blocks; ++n) {
    s = h.diag(n);
    s.diagonal().array() += beta;
    if (n > 0) {
      const auto l_prev = f.factors.upper(n - 1);
      const auto d_prev = f.d.segment(static_cast<Eigen::Index>(n - 1) * b, b);
      prev_ld = l_prev * d_prev.asDiagonal();
      s.noalias() -= prev_ld * l_prev.transpose();
    }
    // Unpivoted LDL' of the (K+1) x (K+1) Schur complement.
    j.setIdentity();
    for (int c = 0; c < b; ++c) {
      double pivot = s(c, c);
      for (int m = 0; m < c; ++m) pivot -= j(c, m) * j(c, m) * dn[m];
      dn[c] = pivot;
      if (!accept_pivot(pivot)) return result;
      for (int r = c + 1; r < b; ++r) {
        double v = s(r, c);
        for (int m = 0; m < c; ++m) v -= j(r, m) * j(c, m) * dn[m];
        j(r, c) = v / pivot;
      }
    }
    f.factors.diag(n) = j;
    f.d.segment(static_cast<Eigen::Index>(n) * b, b) = dn;
    if (n + 1 < n_blocks) {
      // H_{n,n+1} = J_n D_n L_n'  =>  L_n' = D_n^-1 J_n^-1 H_{n,n+1}.
      SmallMat lt = j.triangularView<Eigen::UnitLower>().solve(SmallMat(h.upper(n)));
      lt = dn.cwiseInverse().asDiagonal() * lt;
      f.factors.upper(n) = lt.transpose();
    }
    ++result.completed_blocks;
  }

  // Arrow: h_n = L_{n-1} D_{n-1} l_{n-1} + J_n D_n l_n.
  double delta = h.corner() + beta;
  SmallVec rhs(b), l_prev(b);
  for (std::size_t n = 0; n < n_blocks; ++n) {
    rhs = h.arrow(n);
    const auto d_n = f.d.segment(static_cast<Eigen::Index>(n) * b, b);
    if (n > 0) {
      const auto d_prev = f.d.segment(static_cast<Eigen::Index>(n - 1) * b, b);
      rhs.noalias() -= f.factors.upper(n - 1) * d_prev.asDiagonal() * l_prev;
    }
    SmallMat jn = f.factors.diag(n);
    jn.triangularView<Eigen::UnitLower>().solveInPlace(rhs);
    SmallVec ln = rhs.cwiseQuotient(d_n);
    f.factors.arrow(n) = ln;
    delta -= ln.dot(d_n.asDiagonal() * ln);
    l_prev = ln;
  }
  f.factors.corner() = delta;
  // delta is never divided by, so only its sign matters.
  result.min_diag = std::min(result.min_diag, delta);
  if (delta < 0.0) return result;
  ++result.completed_blocks;
  result.psd = true;
  if (keep_factorization) result.factorization = std::move(f);
  return result;
}

ArrowheadMatrix ArrowheadFactorization::reassemble() const {
  const std::size_t n_blocks = factors.num_blocks();
  const int b = factors.block_size();
  ArrowheadMatrix out(n_blocks, b);
  double corner = factors.corner();
  for (std::size_t n = 0; n < n_blocks; ++n) {
    const SmallMat j = SmallMat(factors.diag(n)).triangularView<Eigen::UnitLower>();
    const auto dn = d.segment(static_cast<Eigen::Index>(n) * b, b);
    const SmallMat jd = j * dn.asDiagonal();
    out.diag(n) = jd * j.transpose();
    out.arrow(n) = jd * factors.arrow(n);
    if (n > 0) {
      const auto l_prev = factors.upper(n - 1);
      const auto d_prev = d.segment(static_cast<Eigen::Index>(n - 1) * b, b);
      const SmallMat ld = l_prev * d_prev.asDiagonal();
      out.diag(n) += ld * l_prev.transpose();
      out.arrow(n) += ld * factors.arrow(n - 1);
    }
    if (n + 1 < n_blocks) out.upper(n) = jd * factors.upper(n).transpose();
    corner += factors.arrow(n).dot(dn.asDiagonal() * factors.arrow(n));
  }
  out.corner() = corner;
  return out;
}

Eigen::MatrixXd ArrowheadFactorization::dense_L() const {
  const std::size_t n_blocks = factors.num_blocks();
  const int b = factors.block_size();
  const Eigen::Index size = factors.dim();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(size, size);
  for (std::size_t n = 0; n < n_blocks; ++n) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * b;
    l.block(i, i, b, b) = factors.diag(n).triangularView<Eigen::UnitLower>();
    if (n + 1 < n_blocks) l.block(i + b, i, b, b) = factors.upper(n);
    l.row(size - 1).segment(i, b) = factors.arrow(n).transpose();
  }
  l(size - 1, size - 1) = 1.0;
  return l;
}

double dense_min_eig_oracle(const ArrowheadMatrix& h) {
  if (h.dim() > 5000) throw DomainError("dense eigenvalue oracle limited to 5000 rows");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.to_dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigenvalue solver failed");
  return solver.eigenvalues().minCoeff();
}

CertificateReport certify(const TrajectoryEstimate& estimate, const ProblemData& problem, const MotionPrior& prior,
                          const CertConfig& config) {
  config.validate();
  if (estimate.diverged || !estimate.theta.allFinite()) throw ValidationError("refusing to certify a diverged estimate");
  CertificateReport report;
  report.beta_used = config.beta;

  auto start = std::chrono::steady_clock::now();
  report.duals = compute_duals(estimate, problem, prior);
  report.seconds_duals = seconds_since(start);

  start = std::chrono::steady_clock::now();
  ArrowheadMatrix h;
  LiftLayout layout;
  {
    const LiftedMatrices lifted = build_matrices(problem, prior, anchor_centroid(problem));
    layout = lifted.layout;
    h = assemble_H(report.duals, lifted);
  }
  const Eigen::VectorXd g = lift(estimate.theta, layout);
  report.stationarity_residual = check_stationarity(h, g);
  const PsdResult psd = psd_arrowhead(h, config.beta, false, config.pivot_tolerance);
  report.seconds_psd = seconds_since(start);

  report.psd = psd.psd;
  report.min_diag = psd.min_diag;
  report.completed_blocks = psd.completed_blocks;
  report.cost = total_cost(estimate.theta, problem, prior);
  report.duality_gap = std::abs(report.cost + report.duals.rho);
  if (psd.marginal)
    report.verdict = Verdict::numerically_marginal;
  else if (psd.psd && report.stationarity_residual < config.stationarity_threshold)
    report.verdict = Verdict::certified;
  else
    report.verdict = Verdict::not_certified;
  return report;
}

}  // namespace rangecert
