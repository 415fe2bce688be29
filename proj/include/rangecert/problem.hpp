#pragma once

#include "rangecert/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rangecert {

/// Known anchor positions, one column per anchor.
struct AnchorSet {
  Eigen::MatrixXd coordinates;  // D x M
  std::vector<std::string> ids;

  int dim() const { return static_cast<int>(coordinates.rows()); }
  int size() const { return static_cast<int>(coordinates.cols()); }
  int index_of(const std::string& id) const;  // -1 when unknown
  void validate() const;
};

/// Raw distance measurements grouped by time index (CSR layout).
struct MeasurementSet {
  std::vector<double> times;         // N strictly increasing
  std::vector<std::size_t> offsets;  // N+1, rows of time n are [offsets[n], offsets[n+1])
  std::vector<int> anchor;           // E anchor indices
  std::vector<double> distance;      // E raw distances

  std::size_t num_times() const { return times.size(); }
  std::size_t num_measurements() const { return distance.size(); }
  std::size_t count(std::size_t n) const { return offsets[n + 1] - offsets[n]; }
  void validate(int num_anchors) const;
};

struct Measurement {
  double t;
  int anchor;
  double distance;
};

/// Groups rows into time indices. Rows are stably sorted by time first; stamps
/// closer than `time_tolerance` to the first stamp of the current group share
/// its index. Duplicate (time, anchor) pairs throw ValidationError.
MeasurementSet group_measurements(std::vector<Measurement> rows, int num_anchors,
                                  double time_tolerance = 1e-9);

enum class VariancePolicy { squared_constant, propagated };

/// Noise on the squared-distance residuals.
///
/// squared_constant: every entry of Sigma_n is sigma_squared^2.
/// propagated: entry is 4 d^2 sigma_d^2, the first-order variance of d~^2
/// when d~ carries standard deviation sigma_d. A zero distance falls back to
/// the squared-constant entry.
///
/// With sigma_squared_auto, ProblemData replaces sigma_squared by
/// 2 sigma_d mean(d~), the propagated standard deviation at the mean distance.
struct NoiseModel {
  double sigma_d = 1e-2;
  VariancePolicy policy = VariancePolicy::squared_constant;
  double sigma_squared = 1e-2;
  bool sigma_squared_auto = false;

  double variance(double raw_distance, bool* fallback = nullptr) const;
  void validate() const;
};

struct GroundTruth {
  std::vector<double> times;
  Eigen::MatrixXd positions;  // D x G
  Eigen::MatrixXd velocities; // D x G, empty when unknown
};

/// Immutable problem instance. Inverse variances are resolved at construction.
class ProblemData {
 public:
  ProblemData(AnchorSet anchors, MeasurementSet measurements, NoiseModel noise,
              std::optional<GroundTruth> ground_truth = std::nullopt);

  const AnchorSet& anchors() const { return anchors_; }
  const MeasurementSet& measurements() const { return measurements_; }
  const NoiseModel& noise() const { return noise_; }
  const std::optional<GroundTruth>& ground_truth() const { return ground_truth_; }

  int dim() const { return anchors_.dim(); }
  std::size_t num_times() const { return measurements_.num_times(); }
  std::size_t num_measurements() const { return measurements_.num_measurements(); }
  const std::vector<double>& times() const { return measurements_.times; }

  /// Inverse variance of measurement row `row` (global index).
  double inv_variance(std::size_t row) const { return inv_variance_[row]; }
  /// Number of rows whose variance used the zero-distance fallback.
  std::size_t fallback_count() const { return fallback_count_; }

 private:
  AnchorSet anchors_;
  MeasurementSet measurements_;
  NoiseModel noise_;
  std::optional<GroundTruth> ground_truth_;
  std::vector<double> inv_variance_;
  std::size_t fallback_count_ = 0;
};

struct Covariance {
  Eigen::VectorXd diagonal;  // M_n entries
  bool fallback = false;
};

/// Sigma_n (diagonal) for time index n.
Covariance covariance_for(std::size_t n, const ProblemData& problem);

// -- file ingestion ---------------------------------------------------------

AnchorSet read_anchors(const std::filesystem::path& path);
std::vector<Measurement> read_measurement_rows(const std::filesystem::path& path, const AnchorSet& anchors);
/// Trajectory CSV: t,x,y[,z] with optional vx,vy[,vz]. Used for ground truth
/// and for estimates. A nonpositive `dim` is inferred from the header.
GroundTruth read_ground_truth(const std::filesystem::path& path, int dim = 0);

ProblemData load_problem(const std::filesystem::path& anchor_file, const std::filesystem::path& measurement_file,
                         const NoiseModel& noise);

/// Loads anchors.csv and measurements.csv from `dir`, plus ground_truth.csv if present.
ProblemData load_dataset(const std::filesystem::path& dir, const NoiseModel& noise);

void write_anchors(const std::filesystem::path& path, const AnchorSet& anchors);
void write_measurements(const std::filesystem::path& path, const ProblemData& problem);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);

/// Writes anchors.csv, measurements.csv and (if known) ground_truth.csv.
void write_dataset(const std::filesystem::path& dir, const ProblemData& problem);

/// Spreadsheet-style anchor label: A..Z, AA, AB, ...
std::string anchor_label(int index);

}  // namespace rangecert
