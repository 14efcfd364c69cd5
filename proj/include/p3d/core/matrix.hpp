#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "p3d/core/error.hpp"

namespace p3d {

/// Dense row-major matrix of doubles. Rows are feature vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ValidationError("matrix data length != rows * cols");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Columns [begin, begin + count) as a new matrix.
  Matrix block(std::size_t begin, std::size_t count) const {
    if (begin + count > cols_) throw ValidationError("column block out of range");
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      std::copy_n(row(r).begin() + static_cast<std::ptrdiff_t>(begin), count, out.row(r).begin());
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Row-wise concatenation [a | b | ...]; every part must have `rows` rows.
inline Matrix hconcat(std::size_t rows, std::initializer_list<const Matrix*> parts) {
  std::size_t cols = 0;
  for (const Matrix* m : parts) {
    if (m->rows() != rows)
      throw ValidationError("row count mismatch in concatenation: expected " + std::to_string(rows) +
                            ", got " + std::to_string(m->rows()));
    cols += m->cols();
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r).begin();
    for (const Matrix* m : parts) dst = std::copy(m->row(r).begin(), m->row(r).end(), dst);
  }
  return out;
}

/// Repeat a single vector as `rows` identical rows.
inline Matrix broadcast_rows(std::span<const double> v, std::size_t rows) {
  Matrix out(rows, v.size());
  for (std::size_t r = 0; r < rows; ++r) std::copy(v.begin(), v.end(), out.row(r).begin());
  return out;
}

}  // namespace p3d
