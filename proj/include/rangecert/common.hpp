#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rangecert {

// Block sizes never exceed 7 (K+1 with K <= 2D, D <= 3), so small per-block
// temporaries live on the stack.
inline constexpr int kMaxBlock = 7;

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxBlock, kMaxBlock>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxBlock, 1>;
using BlockMap = Eigen::Map<Eigen::MatrixXd>;
using ConstBlockMap = Eigen::Map<const Eigen::MatrixXd>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input row. `line()` is 1-based; 0 when not tied to a file line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ReferenceError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Normal matrix of the Gauss-Newton system is singular; `block()` is the
/// 0-based time index of the first block whose pivot failed.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::size_t block) : Error(what), block_(block) {}
  std::size_t block() const { return block_; }

 private:
  std::size_t block_;
};

}  // namespace rangecert
