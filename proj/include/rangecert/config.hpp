#pragma once

#include "rangecert/cert.hpp"
#include "rangecert/sim.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rangecert {

struct BenchConfig {
  std::vector<std::size_t> grid = {1000, 10000, 100000, 1000000};
  int repeats = 3;
  int gn_iterations = 3;  // timed GN iterations per repeat
};

struct SweepConfig {
  int setups = 100;
  std::vector<double> noise_grid = {1e-3, 1e-2, 1e-1};
  double cluster_tolerance = 1e-4;  // relative cost gap separating restarts from the best one
};

/// Everything a command needs, resolved from a JSON file plus overrides.
struct RunConfig {
  std::uint64_t seed = 0;
  SimConfig sim;
  NoiseModel noise{.sigma_squared_auto = true};  // squared-domain sigma from the data
  bool noise_sigma_d_from_sim = true;  // noise.sigma_d follows sim.sigma_d unless set
  PriorKind prior_kind = PriorKind::constant_velocity;
  double prior_sigma_a = 0.2;
  SolveConfig solve;
  CertConfig cert;
  BenchConfig bench;
  SweepConfig sweep;

  MotionPrior prior(int dim) const { return MotionPrior::make(prior_kind, dim, prior_sigma_a); }
  /// Noise model with the sim-derived defaults applied for distance noise sigma_d.
  NoiseModel noise_for(double sigma_d) const;
  /// Pushes `seed` into sim and solve and checks every section.
  void resolve();
};

/// Parses a JSON config (// comments allowed). Missing keys keep their
/// defaults; unknown keys throw ValidationError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config as JSON text.
std::string dump_config(const RunConfig& config);

}  // namespace rangecert
