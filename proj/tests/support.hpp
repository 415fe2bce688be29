#pragma once

#include "rangecert/cert.hpp"
#include "rangecert/sim.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testing {

using namespace rangecert;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / ("rangecert_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

/// Anchors given column-wise, labelled A, B, ...
inline AnchorSet make_anchors(const Eigen::MatrixXd& coords) {
  AnchorSet a;
  a.coordinates = coords;
  for (int m = 0; m < coords.cols(); ++m) a.ids.push_back(anchor_label(m));
  return a;
}

/// Unit-variance squared-constant noise, so Sigma = I.
inline NoiseModel unit_noise() {
  NoiseModel nm;
  nm.sigma_d = 1.0;
  nm.sigma_squared = 1.0;
  return nm;
}

inline SimConfig small_sim(std::uint64_t seed, std::size_t n = 20, double sigma_d = 1e-3) {
  SimConfig sc;
  sc.num_times = n;
  sc.sigma_d = sigma_d;
  sc.rng_seed = seed;
  return sc;
}

inline NoiseModel sim_noise(double sigma_d) {
  NoiseModel nm;
  nm.sigma_d = sigma_d > 0.0 ? sigma_d : 1e-3;
  nm.sigma_squared_auto = true;
  return nm;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace testing
