#include "rangecert/prior.hpp"

namespace rangecert {

namespace {

void check_increasing(const std::vector<double>& times) {
  for (std::size_t n = 1; n < times.size(); ++n)
    if (!(times[n] > times[n - 1])) throw OrderingError("prior times must be strictly increasing");
}

// Per-interval information matrix W^-1 and transition, in SmallMat form for
// the O(N) loops.
void interval_blocks(const MotionPrior& prior, const Eigen::MatrixXd& psd_inv, double dt, SmallMat& phi,
                     SmallMat& info) {
  const int d = prior.dim();
  if (prior.kind == PriorKind::zero_velocity) {
    phi = SmallMat::Identity(d, d);
    info = psd_inv / dt;
    return;
  }
  phi = SmallMat::Identity(2 * d, 2 * d);
  phi.topRightCorner(d, d).diagonal().setConstant(dt);
  info.resize(2 * d, 2 * d);
  info.topLeftCorner(d, d) = (12.0 / (dt * dt * dt)) * psd_inv;
  info.topRightCorner(d, d) = (-6.0 / (dt * dt)) * psd_inv;
  info.bottomLeftCorner(d, d) = (-6.0 / (dt * dt)) * psd_inv;
  info.bottomRightCorner(d, d) = (4.0 / dt) * psd_inv;
}

}  // namespace

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::none: return "none";
    case PriorKind::zero_velocity: return "zero-velocity";
    case PriorKind::constant_velocity: return "constant-velocity";
  }
  return "none";
}

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "none") return PriorKind::none;
  if (s == "zero-velocity") return PriorKind::zero_velocity;
  if (s == "constant-velocity") return PriorKind::constant_velocity;
  throw ValidationError("unknown prior kind '" + s + "'");
}

MotionPrior MotionPrior::make(PriorKind kind, int dim, double sigma_a) {
  MotionPrior prior{kind, sigma_a * Eigen::MatrixXd::Identity(dim, dim)};
  prior.validate();
  return prior;
}

void MotionPrior::validate() const {
  if (psd.rows() < 1 || psd.rows() != psd.cols() || psd.rows() > 3) throw ValidationError("invalid Q_C shape");
  if (!psd.isApprox(psd.transpose(), 0.0)) throw ValidationError("Q_C must be symmetric");
  if (kind != PriorKind::none) {
    Eigen::LLT<Eigen::MatrixXd> llt(psd);
    if (llt.info() != Eigen::Success) throw ValidationError("Q_C must be positive definite");
  }
}

Eigen::MatrixXd transition(const MotionPrior& prior, double t_to, double t_from) {
  if (t_to < t_from) throw DomainError("transition requires t_to >= t_from");
  const int d = prior.dim();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(prior.state_dim(), prior.state_dim());
  if (prior.kind == PriorKind::constant_velocity) phi.topRightCorner(d, d).diagonal().setConstant(t_to - t_from);
  return phi;
}

Eigen::MatrixXd interval_covariance(const MotionPrior& prior, double dt) {
  if (!(dt > 0.0)) throw DomainError("interval length must be positive");
  const int d = prior.dim();
  switch (prior.kind) {
    case PriorKind::none:
      throw DomainError("no interval covariance without a motion prior");
    case PriorKind::zero_velocity:
      return dt * prior.psd;
    case PriorKind::constant_velocity: {
      Eigen::MatrixXd w(2 * d, 2 * d);
      w.topLeftCorner(d, d) = (dt * dt * dt / 3.0) * prior.psd;
      w.topRightCorner(d, d) = (dt * dt / 2.0) * prior.psd;
      w.bottomLeftCorner(d, d) = (dt * dt / 2.0) * prior.psd;
      w.bottomRightCorner(d, d) = dt * prior.psd;
      return w;
    }
  }
  return {};
}

Eigen::MatrixXd interval_information(const MotionPrior& prior, double dt) {
  if (!(dt > 0.0)) throw DomainError("interval length must be positive");
  if (prior.kind == PriorKind::none) throw DomainError("no interval information without a motion prior");
  const Eigen::MatrixXd psd_inv = prior.psd.inverse();
  SmallMat phi, info;
  interval_blocks(prior, psd_inv, dt, phi, info);
  return info;
}

IntervalFactors interval_factors(const MotionPrior& prior, const std::vector<double>& times) {
  check_increasing(times);
  IntervalFactors f;
  if (prior.kind == PriorKind::none) return f;
  for (std::size_t n = 1; n < times.size(); ++n) {
    f.transition.push_back(transition(prior, times[n], times[n - 1]));
    f.covariance.push_back(interval_covariance(prior, times[n] - times[n - 1]));
    f.input.push_back(Eigen::VectorXd::Zero(prior.state_dim()));
  }
  return f;
}

BlockTridiagonal assemble_R(const MotionPrior& prior, const std::vector<double>& times) {
  check_increasing(times);
  const std::size_t n_times = times.size();
  const int k = prior.state_dim();
  BlockTridiagonal r(n_times, k);
  if (prior.kind == PriorKind::none || n_times < 2) return r;
  const Eigen::MatrixXd psd_inv = prior.psd.inverse();
  SmallMat phi, info;
  // Interval n couples states n-1 and n: e = Phi theta_{n-1} - theta_n.
  for (std::size_t n = 1; n < n_times; ++n) {
    interval_blocks(prior, psd_inv, times[n] - times[n - 1], phi, info);
    const SmallMat info_phi = info * phi;
    r.diag(n - 1).noalias() += phi.transpose() * info_phi;
    r.diag(n) += info;
    r.upper(n - 1) = -info_phi.transpose();
  }
  return r;
}

double prior_energy(const MotionPrior& prior, const std::vector<double>& times, const Eigen::VectorXd& theta) {
  const int k = prior.state_dim();
  if (theta.size() != static_cast<Eigen::Index>(times.size()) * k) throw DomainError("state length mismatch");
  if (prior.kind == PriorKind::none) return 0.0;
  check_increasing(times);
  const Eigen::MatrixXd psd_inv = prior.psd.inverse();
  SmallMat phi, info;
  double sum = 0.0;
  for (std::size_t n = 1; n < times.size(); ++n) {
    interval_blocks(prior, psd_inv, times[n] - times[n - 1], phi, info);
    const SmallVec e = phi * theta.segment(static_cast<Eigen::Index>(n - 1) * k, k) -
                       theta.segment(static_cast<Eigen::Index>(n) * k, k);
    sum += e.dot(info * e);
  }
  return sum / static_cast<double>(times.size());
}

}  // namespace rangecert
