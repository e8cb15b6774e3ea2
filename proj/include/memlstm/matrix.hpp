#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace memlstm {

using Vector = std::vector<double>;

/// Raised when operand shapes disagree. The message names the operand.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Small dense row-major matrix. Sized for the handful-of-units models this
/// library targets, so no blocking or BLAS.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void require_size(std::size_t actual, std::size_t expected, const std::string& operand) {
  if (actual != expected) {
    throw DimensionError(operand + ": expected length " + std::to_string(expected) + ", got " +
                         std::to_string(actual));
  }
}

inline void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                          const std::string& operand) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(operand + ": expected shape [" + std::to_string(rows) + "," +
                         std::to_string(cols) + "], got [" + std::to_string(m.rows()) + "," +
                         std::to_string(m.cols()) + "]");
  }
}

}  // namespace memlstm
