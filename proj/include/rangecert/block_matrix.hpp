#pragma once

#include "rangecert/common.hpp"

#include <filesystem>
#include <vector>

namespace rangecert {

/// Symmetric block-tridiagonal matrix with N square blocks of size b.
/// Stores the diagonal blocks and the super-diagonal blocks (n, n+1)
/// contiguously, column-major per block.
class BlockTridiagonal {
 public:
  BlockTridiagonal() = default;
  BlockTridiagonal(std::size_t num_blocks, int block_size, bool coupled = true);

  std::size_t num_blocks() const { return num_blocks_; }
  int block_size() const { return block_size_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(num_blocks_) * block_size_; }
  bool coupled() const { return !upper_.empty() || num_blocks_ < 2; }

  BlockMap diag(std::size_t n) { return {diag_.data() + n * stride(), block_size_, block_size_}; }
  ConstBlockMap diag(std::size_t n) const { return {diag_.data() + n * stride(), block_size_, block_size_}; }
  /// Block (n, n+1); the (n+1, n) block is its transpose.
  BlockMap upper(std::size_t n) { return {upper_.data() + n * stride(), block_size_, block_size_}; }
  ConstBlockMap upper(std::size_t n) const { return {upper_.data() + n * stride(), block_size_, block_size_}; }

  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd to_dense() const;
  void set_zero();

 private:
  std::size_t stride() const { return static_cast<std::size_t>(block_size_) * block_size_; }

  std::size_t num_blocks_ = 0;
  int block_size_ = 0;
  std::vector<double> diag_;
  std::vector<double> upper_;
};

/// Block-tridiagonal arrowhead matrix: a BlockTridiagonal body bordered by one
/// dense last row/column (`arrow(n)` holds the part of that column facing
/// block n) and a scalar corner.
class ArrowheadMatrix {
 public:
  ArrowheadMatrix() = default;
  ArrowheadMatrix(std::size_t num_blocks, int block_size, bool coupled = true);

  std::size_t num_blocks() const { return body_.num_blocks(); }
  int block_size() const { return body_.block_size(); }
  Eigen::Index dim() const { return body_.dim() + 1; }
  bool coupled() const { return body_.coupled(); }

  BlockTridiagonal& body() { return body_; }
  const BlockTridiagonal& body() const { return body_; }
  BlockMap diag(std::size_t n) { return body_.diag(n); }
  ConstBlockMap diag(std::size_t n) const { return body_.diag(n); }
  BlockMap upper(std::size_t n) { return body_.upper(n); }
  ConstBlockMap upper(std::size_t n) const { return body_.upper(n); }
  Eigen::Map<Eigen::VectorXd> arrow(std::size_t n) { return {arrow_.data() + n * block_size(), block_size()}; }
  Eigen::Map<const Eigen::VectorXd> arrow(std::size_t n) const {
    return {arrow_.data() + n * block_size(), block_size()};
  }
  double& corner() { return corner_; }
  double corner() const { return corner_; }

  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd to_dense() const;
  double max_abs() const;
  void set_zero();

 private:
  BlockTridiagonal body_;
  std::vector<double> arrow_;
  double corner_ = 0.0;
};

/// Dumps the nonzero entries as "row,col,value" lines (both triangles).
void write_coordinate_list(const std::filesystem::path& path, const ArrowheadMatrix& m);

}  // namespace rangecert
