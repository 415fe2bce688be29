#include "rangecert/block_matrix.hpp"

#include <fstream>
#include <iomanip>

namespace rangecert {

BlockTridiagonal::BlockTridiagonal(std::size_t num_blocks, int block_size, bool coupled)
    : num_blocks_(num_blocks),
      block_size_(block_size),
      diag_(num_blocks * static_cast<std::size_t>(block_size) * block_size, 0.0),
      upper_(coupled && num_blocks > 1 ? (num_blocks - 1) * static_cast<std::size_t>(block_size) * block_size : 0,
             0.0) {}

Eigen::VectorXd BlockTridiagonal::multiply(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
  const int b = block_size_;
  for (std::size_t n = 0; n < num_blocks_; ++n) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * b;
    out.segment(i, b).noalias() += diag(n) * v.segment(i, b);
    if (!upper_.empty() && n + 1 < num_blocks_) {
      out.segment(i, b).noalias() += upper(n) * v.segment(i + b, b);
      out.segment(i + b, b).noalias() += upper(n).transpose() * v.segment(i, b);
    }
  }
  return out;
}

Eigen::MatrixXd BlockTridiagonal::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim(), dim());
  const int b = block_size_;
  for (std::size_t n = 0; n < num_blocks_; ++n) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * b;
    out.block(i, i, b, b) = diag(n);
    if (!upper_.empty() && n + 1 < num_blocks_) {
      out.block(i, i + b, b, b) = upper(n);
      out.block(i + b, i, b, b) = upper(n).transpose();
    }
  }
  return out;
}

void BlockTridiagonal::set_zero() {
  std::fill(diag_.begin(), diag_.end(), 0.0);
  std::fill(upper_.begin(), upper_.end(), 0.0);
}

ArrowheadMatrix::ArrowheadMatrix(std::size_t num_blocks, int block_size, bool coupled)
    : body_(num_blocks, block_size, coupled), arrow_(num_blocks * static_cast<std::size_t>(block_size), 0.0) {}

Eigen::VectorXd ArrowheadMatrix::multiply(const Eigen::VectorXd& v) const {
  const Eigen::Index body_dim = body_.dim();
  Eigen::VectorXd out(dim());
  out.head(body_dim) = body_.multiply(v.head(body_dim));
  const Eigen::Map<const Eigen::VectorXd> column(arrow_.data(), body_dim);
  out.head(body_dim) += column * v[body_dim];
  out[body_dim] = column.dot(v.head(body_dim)) + corner_ * v[body_dim];
  return out;
}

Eigen::MatrixXd ArrowheadMatrix::to_dense() const {
  const Eigen::Index body_dim = body_.dim();
  Eigen::MatrixXd out(dim(), dim());
  out.topLeftCorner(body_dim, body_dim) = body_.to_dense();
  const Eigen::Map<const Eigen::VectorXd> column(arrow_.data(), body_dim);
  out.col(body_dim).head(body_dim) = column;
  out.row(body_dim).head(body_dim) = column.transpose();
  out(body_dim, body_dim) = corner_;
  return out;
}

double ArrowheadMatrix::max_abs() const {
  double m = std::abs(corner_);
  for (std::size_t n = 0; n < num_blocks(); ++n) {
    m = std::max({m, diag(n).cwiseAbs().maxCoeff(), arrow(n).cwiseAbs().maxCoeff()});
    if (coupled() && n + 1 < num_blocks()) m = std::max(m, upper(n).cwiseAbs().maxCoeff());
  }
  return m;
}

void ArrowheadMatrix::set_zero() {
  body_.set_zero();
  std::fill(arrow_.begin(), arrow_.end(), 0.0);
  corner_ = 0.0;
}

void write_coordinate_list(const std::filesystem::path& path, const ArrowheadMatrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17) << "row,col,value\n";
  const int b = m.block_size();
  const Eigen::Index last = m.dim() - 1;
  auto emit = [&](Eigen::Index r, Eigen::Index c, double v) {
    if (v != 0.0) out << r << ',' << c << ',' << v << '\n';
  };
  for (std::size_t n = 0; n < m.num_blocks(); ++n) {
    const Eigen::Index i = static_cast<Eigen::Index>(n) * b;
    for (int c = 0; c < b; ++c)
      for (int r = 0; r < b; ++r) emit(i + r, i + c, m.diag(n)(r, c));
    if (m.coupled() && n + 1 < m.num_blocks())
      for (int c = 0; c < b; ++c)
        for (int r = 0; r < b; ++r) {
          emit(i + r, i + b + c, m.upper(n)(r, c));
          emit(i + b + c, i + r, m.upper(n)(r, c));
        }
    for (int r = 0; r < b; ++r) {
      emit(i + r, last, m.arrow(n)[r]);
      emit(last, i + r, m.arrow(n)[r]);
    }
  }
  emit(last, last, m.corner());
}

}  // namespace rangecert
