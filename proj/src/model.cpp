#include "rangecert/model.hpp"

namespace rangecert {

namespace {

void check_index(std::size_t n, const ProblemData& problem) {
  if (n >= problem.num_times()) throw DomainError("time index out of range");
}

double squared_residual(std::size_t row, const Eigen::Ref<const Eigen::VectorXd>& x, const ProblemData& problem) {
  const auto& ms = problem.measurements();
  const double d = ms.distance[row];
  return d * d - (problem.anchors().coordinates.col(ms.anchor[row]) - x).squaredNorm();
}

}  // namespace

Eigen::VectorXd predict(std::size_t n, const Eigen::VectorXd& x, const ProblemData& problem) {
  check_index(n, problem);
  const auto& ms = problem.measurements();
  Eigen::VectorXd h(static_cast<Eigen::Index>(ms.count(n)));
  for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r)
    h[static_cast<Eigen::Index>(r - ms.offsets[n])] =
        (problem.anchors().coordinates.col(ms.anchor[r]) - x).squaredNorm();
  return h;
}

Eigen::VectorXd residual(std::size_t n, const Eigen::VectorXd& x, const ProblemData& problem) {
  check_index(n, problem);
  const auto& ms = problem.measurements();
  Eigen::VectorXd e(static_cast<Eigen::Index>(ms.count(n)));
  for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r)
    e[static_cast<Eigen::Index>(r - ms.offsets[n])] = squared_residual(r, x, problem);
  return e;
}

Eigen::VectorXd residual_expanded(std::size_t n, const Eigen::VectorXd& x, const ProblemData& problem) {
  check_index(n, problem);
  const auto& ms = problem.measurements();
  Eigen::VectorXd e(static_cast<Eigen::Index>(ms.count(n)));
  const double z = x.squaredNorm();
  for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r) {
    const auto a = problem.anchors().coordinates.col(ms.anchor[r]);
    const double d = ms.distance[r];
    e[static_cast<Eigen::Index>(r - ms.offsets[n])] = d * d - a.squaredNorm() + 2.0 * a.dot(x) - z;
  }
  return e;
}

Eigen::MatrixXd jacobian(std::size_t n, const Eigen::VectorXd& x, const ProblemData& problem) {
  check_index(n, problem);
  const auto& ms = problem.measurements();
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(ms.count(n)), problem.dim());
  for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r)
    jac.row(static_cast<Eigen::Index>(r - ms.offsets[n])) =
        -2.0 * (problem.anchors().coordinates.col(ms.anchor[r]) - x).transpose();
  return jac;
}

double data_cost(const Eigen::VectorXd& theta, int state_dim, const ProblemData& problem) {
  const auto& ms = problem.measurements();
  if (theta.size() != static_cast<Eigen::Index>(ms.num_times()) * state_dim) throw DomainError("state length mismatch");
  const int dim = problem.dim();
  double sum = 0.0;
  for (std::size_t n = 0; n < ms.num_times(); ++n) {
    const auto x = theta.segment(static_cast<Eigen::Index>(n) * state_dim, dim);
    for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r) {
      const double e = squared_residual(r, x, problem);
      sum += e * e * problem.inv_variance(r);
    }
  }
  return sum / static_cast<double>(ms.num_measurements());
}

double total_cost(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior) {
  return data_cost(theta, prior.state_dim(), problem) + prior_energy(prior, problem.times(), theta);
}

Eigen::VectorXd cost_gradient(const Eigen::VectorXd& theta, const ProblemData& problem, const MotionPrior& prior) {
  const auto& ms = problem.measurements();
  const int k = prior.state_dim();
  const int dim = problem.dim();
  if (theta.size() != static_cast<Eigen::Index>(ms.num_times()) * k) throw DomainError("state length mismatch");
  const double n_times = static_cast<double>(ms.num_times());
  Eigen::VectorXd grad = (2.0 / n_times) * assemble_R(prior, problem.times()).multiply(theta);
  const double scale = 4.0 / static_cast<double>(ms.num_measurements());
  for (std::size_t n = 0; n < ms.num_times(); ++n) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * k;
    const Eigen::VectorXd x = theta.segment(i, dim);
    for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r) {
      const double we = problem.inv_variance(r) * squared_residual(r, x, problem);
      grad.segment(i, dim) += scale * we * (problem.anchors().coordinates.col(ms.anchor[r]) - x);
    }
  }
  return grad;
}

}  // namespace rangecert
