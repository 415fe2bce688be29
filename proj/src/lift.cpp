#include "rangecert/lift.hpp"

namespace rangecert {

Eigen::VectorXd lift(const Eigen::VectorXd& theta, const LiftLayout& layout) {
  const int k = layout.state_dim;
  if (theta.size() != static_cast<Eigen::Index>(layout.num_times) * k) throw DomainError("state length mismatch");
  Eigen::VectorXd g(layout.size());
  const bool shifted = layout.origin.size() == layout.dim;
  for (std::size_t n = 0; n < layout.num_times; ++n) {
    const Eigen::Index i = layout.state_index(n, 0);
    g.segment(i, k) = theta.segment(static_cast<Eigen::Index>(n) * k, k);
    if (shifted) g.segment(i, layout.dim) -= layout.origin;
    g[layout.z_index(n)] = g.segment(i, layout.dim).squaredNorm();
  }
  g[layout.ell_index()] = 1.0;
  return g;
}

LiftedMatrices build_matrices(const ProblemData& problem, const MotionPrior& prior, const Eigen::VectorXd& origin) {
  if (prior.dim() != problem.dim()) throw ValidationError("prior dimension does not match problem");
  const auto& ms = problem.measurements();
  const int dim = problem.dim();
  if (origin.size() != 0 && origin.size() != dim) throw DomainError("origin dimension mismatch");
  LiftLayout layout{ms.num_times(), dim, prior.state_dim(), origin};
  const Eigen::VectorXd shift = origin.size() == dim ? origin : Eigen::VectorXd::Zero(dim);
  LiftedMatrices out{layout, ms.num_measurements(), ArrowheadMatrix(layout.num_times, layout.block_size(), false),
                     assemble_R(prior, problem.times())};
  const int k = layout.state_dim;
  SmallVec c(dim + 1);
  for (std::size_t n = 0; n < ms.num_times(); ++n) {
    auto block = out.q.diag(n);
    auto arrow = out.q.arrow(n);
    for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r) {
      const SmallVec a = problem.anchors().coordinates.col(ms.anchor[r]) - shift;
      const double w = problem.inv_variance(r);
      const double b = ms.distance[r] * ms.distance[r] - a.squaredNorm();
      c.head(dim) = 2.0 * a;
      c[dim] = -1.0;
      // Positions occupy entries [0, D); z sits at entry K of the block.
      block.topLeftCorner(dim, dim).noalias() += w * c.head(dim) * c.head(dim).transpose();
      block.col(k).head(dim) += w * c[dim] * c.head(dim);
      block.row(k).head(dim) += w * c[dim] * c.head(dim).transpose();
      block(k, k) += w;
      arrow.head(dim) += w * b * c.head(dim);
      arrow[k] += w * b * c[dim];
      out.q.corner() += w * b * b;
    }
  }
  return out;
}

Eigen::VectorXd LiftedMatrices::apply_R(const Eigen::VectorXd& g) const {
  const int k = layout.state_dim;
  Eigen::VectorXd theta(static_cast<Eigen::Index>(layout.num_times) * k);
  for (std::size_t n = 0; n < layout.num_times; ++n)
    theta.segment(static_cast<Eigen::Index>(n) * k, k) = g.segment(layout.state_index(n, 0), k);
  const Eigen::VectorXd r_theta = r.multiply(theta);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.size());
  for (std::size_t n = 0; n < layout.num_times; ++n)
    out.segment(layout.state_index(n, 0), k) = r_theta.segment(static_cast<Eigen::Index>(n) * k, k);
  return out;
}

Eigen::MatrixXd LiftedMatrices::dense_R() const {
  const int k = layout.state_dim;
  const Eigen::MatrixXd unpadded = r.to_dense();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(layout.size(), layout.size());
  for (std::size_t i = 0; i < layout.num_times; ++i)
    for (std::size_t j = 0; j < layout.num_times; ++j)
      out.block(layout.state_index(i, 0), layout.state_index(j, 0), k, k) =
          unpadded.block(static_cast<Eigen::Index>(i) * k, static_cast<Eigen::Index>(j) * k, k, k);
  return out;
}

double constraint_value(std::size_t n, const Eigen::VectorXd& g, const LiftLayout& layout) {
  return g.segment(layout.state_index(n, 0), layout.dim).squaredNorm() - g[layout.z_index(n)] * g[layout.ell_index()];
}

double homogenization_value(const Eigen::VectorXd& g, const LiftLayout& layout) {
  const double l = g[layout.ell_index()];
  return l * l;
}

Eigen::VectorXd apply_constraint(std::size_t n, const Eigen::VectorXd& g, const LiftLayout& layout) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.size());
  const Eigen::Index i = layout.state_index(n, 0);
  out.segment(i, layout.dim) = g.segment(i, layout.dim);
  out[layout.z_index(n)] = -0.5 * g[layout.ell_index()];
  out[layout.ell_index()] = -0.5 * g[layout.z_index(n)];
  return out;
}

Eigen::VectorXd apply_homogenization(const Eigen::VectorXd& g, const LiftLayout& layout) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.size());
  out[layout.ell_index()] = g[layout.ell_index()];
  return out;
}

Eigen::MatrixXd dense_constraint(std::size_t n, const LiftLayout& layout) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(layout.size(), layout.size());
  const Eigen::Index last = layout.ell_index();
  if (n == layout.num_times) {
    a(last, last) = 1.0;
    return a;
  }
  const Eigen::Index i = layout.state_index(n, 0);
  a.block(i, i, layout.dim, layout.dim).setIdentity();
  a(layout.z_index(n), last) = -0.5;
  a(last, layout.z_index(n)) = -0.5;
  return a;
}

}  // namespace rangecert
