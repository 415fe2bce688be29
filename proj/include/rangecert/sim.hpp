#pragma once

#include "rangecert/problem.hpp"

#include <cstdint>
#include <random>

namespace rangecert {

enum class Schedule { all_anchors, round_robin_one };
enum class AnchorPlacement { uniform_box, near_colinear };

std::string to_string(Schedule s);
std::string to_string(AnchorPlacement p);
Schedule schedule_from_string(const std::string& s);
AnchorPlacement placement_from_string(const std::string& s);

struct SimConfig {
  std::size_t num_times = 100;  // N
  int num_anchors = 6;          // M
  int dim = 2;                  // D
  double sigma_a = 0.2;         // process noise, Q_C = sigma_a I; 0 gives noiseless motion
  double sigma_d = 1e-3;        // distance noise std; 0 gives exact distances
  double dt = 1.0;
  double position_range = 1.0;  // initial position drawn coordinate-wise from [-range, range]
  double velocity_range = 1.0;  // same for the initial velocity; 0 gives a static device
  Schedule schedule = Schedule::all_anchors;
  AnchorPlacement placement = AnchorPlacement::uniform_box;
  double colinear_eps = 1e-2;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Ground-truth constant-velocity trajectory sampled at the N measurement times.
struct SimTrajectory {
  std::vector<double> times;
  Eigen::MatrixXd positions;   // D x N
  Eigen::MatrixXd velocities;  // D x N
};

SimTrajectory sample_trajectory(const SimConfig& config, std::mt19937_64& rng);

/// Anchors are generated in the unit box [0,1]^D and mapped affinely onto the
/// trajectory bounding box (extent floored at 1e-3). Uniform-box anchors are
/// uniform in the unit box; near-colinear anchors lie on a random line through
/// it, perturbed perpendicular to the line by at most colinear_eps (in
/// unit-box units).
AnchorSet place_anchors(const SimConfig& config, const SimTrajectory& trajectory, std::mt19937_64& rng);

/// d~ = max(|a_m - x_n| + eta, 0), eta ~ N(0, sigma_d^2).
MeasurementSet synthesize_measurements(const SimTrajectory& trajectory, const AnchorSet& anchors,
                                       const SimConfig& config, std::mt19937_64& rng);

/// Runs the three stages from a generator seeded with config.rng_seed.
ProblemData simulate(const SimConfig& config, const NoiseModel& noise);

/// Smallest singular value of the centered anchor matrix; 0 for colinear anchors.
double colinearity(const AnchorSet& anchors);

}  // namespace rangecert
