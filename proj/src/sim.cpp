#include "rangecert/sim.hpp"

#include "rangecert/prior.hpp"

#include <cmath>

namespace rangecert {

std::string to_string(Schedule s) { return s == Schedule::all_anchors ? "all-anchors" : "round-robin-one"; }

std::string to_string(AnchorPlacement p) { return p == AnchorPlacement::uniform_box ? "uniform-box" : "near-colinear"; }

Schedule schedule_from_string(const std::string& s) {
  if (s == "all-anchors") return Schedule::all_anchors;
  if (s == "round-robin-one") return Schedule::round_robin_one;
  throw ValidationError("unknown schedule '" + s + "'");
}

AnchorPlacement placement_from_string(const std::string& s) {
  if (s == "uniform-box") return AnchorPlacement::uniform_box;
  if (s == "near-colinear") return AnchorPlacement::near_colinear;
  throw ValidationError("unknown anchor placement '" + s + "'");
}

void SimConfig::validate() const {
  if (num_times < 1 || num_anchors < 1) throw ValidationError("N and M must be at least 1");
  if (dim != 2 && dim != 3) throw ValidationError("dimension must be 2 or 3");
  if (!(sigma_a >= 0.0) || !(sigma_d >= 0.0)) throw ValidationError("noise levels must be nonnegative");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(colinear_eps >= 0.0)) throw ValidationError("colinear_eps must be nonnegative");
  if (!(position_range >= 0.0) || !(velocity_range >= 0.0)) throw ValidationError("ranges must be nonnegative");
}

SimTrajectory sample_trajectory(const SimConfig& config, std::mt19937_64& rng) {
  config.validate();
  const int d = config.dim;
  const auto n_times = static_cast<Eigen::Index>(config.num_times);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SimTrajectory traj;
  traj.positions.resize(d, n_times);
  traj.velocities.resize(d, n_times);
  for (int i = 0; i < d; ++i) traj.positions(i, 0) = config.position_range * unit(rng);
  for (int i = 0; i < d; ++i) traj.velocities(i, 0) = config.velocity_range * unit(rng);
  traj.times.resize(config.num_times);
  for (std::size_t n = 0; n < config.num_times; ++n) traj.times[n] = static_cast<double>(n) * config.dt;

  const MotionPrior model{PriorKind::constant_velocity, Eigen::MatrixXd::Identity(d, d)};
  Eigen::MatrixXd noise_factor = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  if (config.sigma_a > 0.0) {
    const MotionPrior scaled{PriorKind::constant_velocity, config.sigma_a * Eigen::MatrixXd::Identity(d, d)};
    noise_factor = Eigen::LLT<Eigen::MatrixXd>(interval_covariance(scaled, config.dt)).matrixL();
  }
  const Eigen::MatrixXd phi = transition(model, config.dt, 0.0);
  Eigen::VectorXd state(2 * d), w(2 * d);
  for (Eigen::Index n = 1; n < n_times; ++n) {
    state << traj.positions.col(n - 1), traj.velocities.col(n - 1);
    for (int i = 0; i < 2 * d; ++i) w[i] = normal(rng);
    state = phi * state + noise_factor * w;
    traj.positions.col(n) = state.head(d);
    traj.velocities.col(n) = state.tail(d);
  }
  return traj;
}

AnchorSet place_anchors(const SimConfig& config, const SimTrajectory& trajectory, std::mt19937_64& rng) {
  const int d = config.dim;
  const int m_count = config.num_anchors;
  const Eigen::VectorXd lo = trajectory.positions.rowwise().minCoeff();
  const Eigen::VectorXd extent = (trajectory.positions.rowwise().maxCoeff() - lo).cwiseMax(1e-3);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  AnchorSet anchors;
  anchors.coordinates.resize(d, m_count);
  for (int m = 0; m < m_count; ++m) anchors.ids.push_back(anchor_label(m));

  if (config.placement == AnchorPlacement::uniform_box) {
    for (int m = 0; m < m_count; ++m)
      for (int i = 0; i < d; ++i) anchors.coordinates(i, m) = lo[i] + extent[i] * unit01(rng);
    return anchors;
  }

  // Built in the unit box, then mapped to the trajectory box like uniform anchors.
  Eigen::VectorXd center(d), direction(d);
  for (int i = 0; i < d; ++i) center[i] = unit01(rng);
  for (int i = 0; i < d; ++i) direction[i] = normal(rng);
  direction.normalize();
  const double length = std::sqrt(static_cast<double>(d));
  for (int m = 0; m < m_count; ++m) {
    const double along = length * (unit01(rng) - 0.5);
    Eigen::VectorXd offset(d);
    for (int i = 0; i < d; ++i) offset[i] = normal(rng);
    offset -= offset.dot(direction) * direction;
    const double magnitude = config.colinear_eps * (2.0 * unit01(rng) - 1.0);
    const double norm = offset.norm();
    if (norm > 0.0) offset *= magnitude / norm;
    const Eigen::VectorXd unit_point = center + along * direction + offset;
    anchors.coordinates.col(m) = lo + extent.cwiseProduct(unit_point);
  }
  return anchors;
}

MeasurementSet synthesize_measurements(const SimTrajectory& trajectory, const AnchorSet& anchors,
                                       const SimConfig& config, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MeasurementSet ms;
  ms.times = trajectory.times;
  ms.offsets.push_back(0);
  const int m_count = anchors.size();
  auto emit = [&](std::size_t n, int m) {
    const double d =
        (anchors.coordinates.col(m) - trajectory.positions.col(static_cast<Eigen::Index>(n))).norm();
    const double eta = config.sigma_d > 0.0 ? config.sigma_d * normal(rng) : 0.0;
    ms.anchor.push_back(m);
    ms.distance.push_back(std::max(d + eta, 0.0));
  };
  for (std::size_t n = 0; n < trajectory.times.size(); ++n) {
    if (config.schedule == Schedule::all_anchors) {
      for (int m = 0; m < m_count; ++m) emit(n, m);
    } else {
      emit(n, static_cast<int>(n % static_cast<std::size_t>(m_count)));
    }
    ms.offsets.push_back(ms.distance.size());
  }
  ms.validate(m_count);
  return ms;
}

ProblemData simulate(const SimConfig& config, const NoiseModel& noise) {
  std::mt19937_64 rng(config.rng_seed);
  SimTrajectory traj = sample_trajectory(config, rng);
  AnchorSet anchors = place_anchors(config, traj, rng);
  MeasurementSet ms = synthesize_measurements(traj, anchors, config, rng);
  GroundTruth truth{traj.times, std::move(traj.positions), std::move(traj.velocities)};
  return ProblemData(std::move(anchors), std::move(ms), noise, std::move(truth));
}

double colinearity(const AnchorSet& anchors) {
  const Eigen::MatrixXd centered = anchors.coordinates.colwise() - anchors.coordinates.rowwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  return sv.size() < anchors.dim() ? 0.0 : sv[anchors.dim() - 1];
}

}  // namespace rangecert
