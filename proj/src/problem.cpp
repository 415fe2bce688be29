#include "rangecert/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

namespace rangecert {

namespace {

struct CsvRow {
  std::size_t line;
  std::vector<std::string> fields;
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Returns the header (first non-comment line) and the data rows.
std::pair<CsvRow, std::vector<CsvRow>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::pair<CsvRow, std::vector<CsvRow>> out;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!have_header) {
      out.first = {lineno, split(t)};
      have_header = true;
    } else {
      out.second.push_back({lineno, split(t)});
    }
  }
  if (!have_header) throw ParseError(path.string() + ": missing header", 0);
  return out;
}

double parse_number(const std::string& s, std::size_t line, const char* what) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || s.empty())
    throw ParseError(std::string("invalid ") + what + " '" + s + "'", line);
  if (!std::isfinite(value)) throw ParseError(std::string("non-finite ") + what, line);
  return value;
}

void expect_header(const CsvRow& header, const std::vector<std::string>& required, std::size_t optional,
                   const std::string& file) {
  const auto& f = header.fields;
  const bool size_ok = f.size() >= required.size() && f.size() <= required.size() + optional;
  bool names_ok = size_ok;
  for (std::size_t i = 0; names_ok && i < required.size(); ++i) names_ok = f[i] == required[i];
  if (!names_ok) throw ParseError(file + ": unexpected header", header.line);
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

const char* kAxes[] = {"x", "y", "z"};

}  // namespace

// -- AnchorSet / MeasurementSet --------------------------------------------

int AnchorSet::index_of(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  return it == ids.end() ? -1 : static_cast<int>(it - ids.begin());
}

void AnchorSet::validate() const {
  if (dim() != 2 && dim() != 3) throw ValidationError("anchor dimension must be 2 or 3");
  if (size() < 1) throw ValidationError("at least one anchor required");
  if (static_cast<int>(ids.size()) != size()) throw ValidationError("anchor id count mismatch");
  if (!coordinates.allFinite()) throw ValidationError("non-finite anchor coordinate");
  std::set<std::string> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) throw ValidationError("duplicate anchor id");
}

void MeasurementSet::validate(int num_anchors) const {
  const std::size_t n_times = times.size();
  if (n_times < 1) throw ValidationError("at least one measurement time required");
  if (offsets.size() != n_times + 1 || offsets.front() != 0 || offsets.back() != distance.size() ||
      anchor.size() != distance.size())
    throw ValidationError("inconsistent measurement layout");
  if (distance.empty()) throw ValidationError("at least one measurement required");
  for (std::size_t n = 0; n < n_times; ++n) {
    if (n > 0 && !(times[n] > times[n - 1])) throw OrderingError("measurement times must be strictly increasing");
    if (offsets[n + 1] < offsets[n]) throw ValidationError("inconsistent measurement offsets");
    std::set<int> seen;
    for (std::size_t r = offsets[n]; r < offsets[n + 1]; ++r) {
      if (anchor[r] < 0 || anchor[r] >= num_anchors) throw ReferenceError("anchor index out of range");
      if (!seen.insert(anchor[r]).second)
        throw ValidationError("duplicate measurement of anchor " + std::to_string(anchor[r]) + " at time index " +
                              std::to_string(n));
      if (!(distance[r] >= 0.0) || !std::isfinite(distance[r])) throw ValidationError("invalid distance");
    }
  }
}

MeasurementSet group_measurements(std::vector<Measurement> rows, int num_anchors, double time_tolerance) {
  std::stable_sort(rows.begin(), rows.end(), [](const Measurement& a, const Measurement& b) { return a.t < b.t; });
  MeasurementSet set;
  set.offsets.push_back(0);
  for (const auto& row : rows) {
    if (set.times.empty() || row.t - set.times.back() > time_tolerance) {
      if (!set.times.empty()) set.offsets.push_back(set.distance.size());
      set.times.push_back(row.t);
    }
    set.anchor.push_back(row.anchor);
    set.distance.push_back(row.distance);
  }
  if (!set.times.empty()) set.offsets.push_back(set.distance.size());
  set.validate(num_anchors);
  return set;
}

// -- NoiseModel ---------------------------------------------------------------

double NoiseModel::variance(double raw_distance, bool* fallback) const {
  if (fallback) *fallback = false;
  if (policy == VariancePolicy::propagated) {
    if (raw_distance > 0.0) return 4.0 * raw_distance * raw_distance * sigma_d * sigma_d;
    if (fallback) *fallback = true;
  }
  return sigma_squared * sigma_squared;
}

void NoiseModel::validate() const {
  if (!(sigma_d > 0.0)) throw ValidationError("sigma_d must be positive");
  if (!sigma_squared_auto && !(sigma_squared > 0.0)) throw ValidationError("squared-domain sigma must be positive");
}

// -- ProblemData ---------------------------------------------------------------

ProblemData::ProblemData(AnchorSet anchors, MeasurementSet measurements, NoiseModel noise,
                         std::optional<GroundTruth> ground_truth)
    : anchors_(std::move(anchors)),
      measurements_(std::move(measurements)),
      noise_(noise),
      ground_truth_(std::move(ground_truth)) {
  anchors_.validate();
  measurements_.validate(anchors_.size());
  noise_.validate();
  if (ground_truth_ && ground_truth_->positions.rows() != anchors_.dim())
    throw ValidationError("ground truth dimension does not match anchors");
  if (noise_.sigma_squared_auto) {
    double mean = 0.0;
    for (double d : measurements_.distance) mean += d;
    mean /= static_cast<double>(measurements_.num_measurements());
    noise_.sigma_squared = mean > 0.0 ? 2.0 * noise_.sigma_d * mean : noise_.sigma_d;
    noise_.sigma_squared_auto = false;
  }
  inv_variance_.resize(measurements_.num_measurements());
  for (std::size_t r = 0; r < inv_variance_.size(); ++r) {
    bool fallback = false;
    inv_variance_[r] = 1.0 / noise_.variance(measurements_.distance[r], &fallback);
    fallback_count_ += fallback ? 1 : 0;
  }
}

Covariance covariance_for(std::size_t n, const ProblemData& problem) {
  const auto& ms = problem.measurements();
  if (n >= ms.num_times()) throw DomainError("time index out of range");
  Covariance cov;
  cov.diagonal.resize(static_cast<Eigen::Index>(ms.count(n)));
  for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r) {
    bool fallback = false;
    cov.diagonal[static_cast<Eigen::Index>(r - ms.offsets[n])] = problem.noise().variance(ms.distance[r], &fallback);
    cov.fallback = cov.fallback || fallback;
  }
  return cov;
}

// -- files ---------------------------------------------------------------------

AnchorSet read_anchors(const std::filesystem::path& path) {
  const auto [header, rows] = read_csv(path);
  expect_header(header, {"id", "x", "y"}, 1, path.string());
  if (header.fields.size() == 4 && header.fields[3] != "z") throw ParseError("expected column z", header.line);
  const int dim = static_cast<int>(header.fields.size()) - 1;
  AnchorSet anchors;
  anchors.coordinates.resize(dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (static_cast<int>(row.fields.size()) != dim + 1) throw ParseError("wrong number of fields", row.line);
    if (row.fields[0].empty()) throw ParseError("empty anchor id", row.line);
    if (anchors.index_of(row.fields[0]) >= 0) throw ParseError("duplicate anchor id " + row.fields[0], row.line);
    anchors.ids.push_back(row.fields[0]);
    for (int d = 0; d < dim; ++d)
      anchors.coordinates(d, static_cast<Eigen::Index>(i)) = parse_number(row.fields[d + 1], row.line, "coordinate");
  }
  anchors.validate();
  return anchors;
}

std::vector<Measurement> read_measurement_rows(const std::filesystem::path& path, const AnchorSet& anchors) {
  const auto [header, rows] = read_csv(path);
  expect_header(header, {"t", "anchor_id", "distance"}, 0, path.string());
  std::unordered_map<std::string, int> index;
  for (int m = 0; m < anchors.size(); ++m) index.emplace(anchors.ids[m], m);
  std::vector<Measurement> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.fields.size() != 3) throw ParseError("wrong number of fields", row.line);
    const auto it = index.find(row.fields[1]);
    if (it == index.end())
      throw ReferenceError("unknown anchor id '" + row.fields[1] + "' (line " + std::to_string(row.line) + ")");
    const double d = parse_number(row.fields[2], row.line, "distance");
    if (d < 0.0) throw ParseError("negative distance", row.line);
    out.push_back({parse_number(row.fields[0], row.line, "timestamp"), it->second, d});
  }
  return out;
}

GroundTruth read_ground_truth(const std::filesystem::path& path, int dim) {
  const auto [header, rows] = read_csv(path);
  const auto& f = header.fields;
  if (dim <= 0) {
    dim = 0;
    while (dim < 3 && static_cast<std::size_t>(dim + 1) < f.size() && f[dim + 1] == kAxes[dim]) ++dim;
    if (dim < 2) throw ParseError(path.string() + ": unexpected header", header.line);
  }
  std::vector<std::string> required = {"t"};
  for (int d = 0; d < dim; ++d) required.emplace_back(kAxes[d]);
  expect_header(header, required, dim, path.string());
  const bool with_velocity = f.size() == required.size() + dim;
  if (f.size() != required.size() && !with_velocity) throw ParseError(path.string() + ": unexpected header", header.line);
  for (int d = 0; with_velocity && d < dim; ++d)
    if (f[dim + 1 + d] != std::string("v") + kAxes[d]) throw ParseError(path.string() + ": unexpected header", header.line);

  const auto cols = static_cast<Eigen::Index>(rows.size());
  GroundTruth truth;
  truth.positions.resize(dim, cols);
  if (with_velocity) truth.velocities.resize(dim, cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.fields.size() != f.size()) throw ParseError("wrong number of fields", row.line);
    const double t = parse_number(row.fields[0], row.line, "timestamp");
    if (!truth.times.empty() && !(t > truth.times.back()))
      throw OrderingError("timestamps must be strictly increasing (line " + std::to_string(row.line) + ")");
    truth.times.push_back(t);
    const auto col = static_cast<Eigen::Index>(i);
    for (int d = 0; d < dim; ++d) truth.positions(d, col) = parse_number(row.fields[d + 1], row.line, "coordinate");
    for (int d = 0; with_velocity && d < dim; ++d)
      truth.velocities(d, col) = parse_number(row.fields[dim + 1 + d], row.line, "velocity");
  }
  return truth;
}

ProblemData load_problem(const std::filesystem::path& anchor_file, const std::filesystem::path& measurement_file,
                         const NoiseModel& noise) {
  AnchorSet anchors = read_anchors(anchor_file);
  auto rows = read_measurement_rows(measurement_file, anchors);
  MeasurementSet ms = group_measurements(std::move(rows), anchors.size());
  return ProblemData(std::move(anchors), std::move(ms), noise);
}

ProblemData load_dataset(const std::filesystem::path& dir, const NoiseModel& noise) {
  AnchorSet anchors = read_anchors(dir / "anchors.csv");
  MeasurementSet ms = group_measurements(read_measurement_rows(dir / "measurements.csv", anchors), anchors.size());
  std::optional<GroundTruth> truth;
  if (std::filesystem::exists(dir / "ground_truth.csv")) truth = read_ground_truth(dir / "ground_truth.csv", anchors.dim());
  return ProblemData(std::move(anchors), std::move(ms), noise, std::move(truth));
}

void write_anchors(const std::filesystem::path& path, const AnchorSet& anchors) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "id";
  for (int d = 0; d < anchors.dim(); ++d) out << ',' << kAxes[d];
  out << '\n';
  for (int m = 0; m < anchors.size(); ++m) {
    out << anchors.ids[m];
    for (int d = 0; d < anchors.dim(); ++d) out << ',' << format_double(anchors.coordinates(d, m));
    out << '\n';
  }
}

void write_measurements(const std::filesystem::path& path, const ProblemData& problem) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const auto& ms = problem.measurements();
  out << "t,anchor_id,distance\n";
  for (std::size_t n = 0; n < ms.num_times(); ++n)
    for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r)
      out << format_double(ms.times[n]) << ',' << problem.anchors().ids[ms.anchor[r]] << ','
          << format_double(ms.distance[r]) << '\n';
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const auto dim = truth.positions.rows();
  const bool with_velocity = truth.velocities.rows() == dim && truth.velocities.cols() == truth.positions.cols();
  out << 't';
  for (Eigen::Index d = 0; d < dim; ++d) out << ',' << kAxes[d];
  for (Eigen::Index d = 0; with_velocity && d < dim; ++d) out << ",v" << kAxes[d];
  out << '\n';
  for (std::size_t i = 0; i < truth.times.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    out << format_double(truth.times[i]);
    for (Eigen::Index d = 0; d < dim; ++d) out << ',' << format_double(truth.positions(d, col));
    for (Eigen::Index d = 0; with_velocity && d < dim; ++d) out << ',' << format_double(truth.velocities(d, col));
    out << '\n';
  }
}

void write_dataset(const std::filesystem::path& dir, const ProblemData& problem) {
  std::filesystem::create_directories(dir);
  write_anchors(dir / "anchors.csv", problem.anchors());
  write_measurements(dir / "measurements.csv", problem);
  if (problem.ground_truth()) write_ground_truth(dir / "ground_truth.csv", *problem.ground_truth());
}

std::string anchor_label(int index) {
  std::string label;
  int i = index + 1;
  while (i > 0) {
    --i;
    label.insert(label.begin(), static_cast<char>('A' + i % 26));
    i /= 26;
  }
  return label;
}

}  // namespace rangecert
