#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pelab {

// Dense row-major real matrix. Used for sentence embeddings and classifier
// weights; square attention-like data uses WeightMatrix / LogitMatrix below.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// n x n nonnegative attention / positional weights. Rows are attention
// distributions over key positions when the matrix is row-stochastic.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(std::size_t n);
  // Throws ValidationError on size mismatch, negative or non-finite entries.
  WeightMatrix(std::size_t n, std::vector<double> values);

  static WeightMatrix identity(std::size_t n);
  static WeightMatrix uniform(std::size_t n);

  std::size_t size() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  // Largest |row sum - 1| over all rows.
  double max_row_sum_error() const;
  bool is_row_stochastic(double tol) const { return max_row_sum_error() <= tol; }
  // Throws ValidationError naming the first offending row.
  void require_row_stochastic(double tol) const;

  bool operator==(const WeightMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// n x n pre-softmax scores. -inf is allowed as a causal-mask sentinel;
// NaN and +inf are rejected.
class LogitMatrix {
 public:
  LogitMatrix() = default;
  explicit LogitMatrix(std::size_t n);
  LogitMatrix(std::size_t n, std::vector<double> values);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
  std::span<const double> values() const { return data_; }

  void validate() const;

  bool operator==(const LogitMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// Row-wise softmax with max subtraction; rows that are entirely -inf are an error.
WeightMatrix softmax_rows(const LogitMatrix& logits);

}  // namespace pelab
