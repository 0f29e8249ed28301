#include "pelab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pelab/errors.hpp"

namespace pelab {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw ValidationError("matrix: expected " + std::to_string(rows_ * cols_) +
                          " values, got " + std::to_string(data_.size()));
  }
}

WeightMatrix::WeightMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

WeightMatrix::WeightMatrix(std::size_t n, std::vector<double> values)
    : n_(n), data_(std::move(values)) {
  if (data_.size() != n_ * n_) {
    throw ValidationError("weight matrix: expected " + std::to_string(n_ * n_) +
                          " values for n=" + std::to_string(n_) + ", got " +
                          std::to_string(data_.size()));
  }
  for (std::size_t k = 0; k < data_.size(); ++k) {
    if (!std::isfinite(data_[k]) || data_[k] < 0.0) {
      throw ValidationError("weight matrix: entry (" + std::to_string(k / n_) + "," +
                            std::to_string(k % n_) + ") is negative or non-finite");
    }
  }
}

WeightMatrix WeightMatrix::identity(std::size_t n) {
  WeightMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

WeightMatrix WeightMatrix::uniform(std::size_t n) {
  WeightMatrix m(n);
  std::fill(m.data_.begin(), m.data_.end(), 1.0 / static_cast<double>(n));
  return m;
}

double WeightMatrix::max_row_sum_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (double v : row(i)) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

void WeightMatrix::require_row_stochastic(double tol) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (double v : row(i)) sum += v;
    if (std::abs(sum - 1.0) > tol) {
      throw ValidationError("weight matrix: row " + std::to_string(i) + " sums to " +
                            std::to_string(sum) + ", not 1");
    }
  }
}

LogitMatrix::LogitMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

LogitMatrix::LogitMatrix(std::size_t n, std::vector<double> values)
    : n_(n), data_(std::move(values)) {
  if (data_.size() != n_ * n_) {
    throw ValidationError("logit matrix: expected " + std::to_string(n_ * n_) + " values");
  }
  validate();
}

void LogitMatrix::validate() const {
  for (std::size_t k = 0; k < data_.size(); ++k) {
    double v = data_[k];
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw ValidationError("logit matrix: entry (" + std::to_string(k / n_) + "," +
                            std::to_string(k % n_) + ") is NaN or +inf");
    }
  }
}

WeightMatrix softmax_rows(const LogitMatrix& logits) {
  const std::size_t n = logits.size();
  WeightMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = logits.row(i);
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : r) peak = std::max(peak, v);
    if (peak == -std::numeric_limits<double>::infinity()) {
      throw ValidationError("softmax: row " + std::to_string(i) + " is fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double e = std::exp(r[j] - peak);
      out(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j < n; ++j) out(i, j) /= z;
  }
  return out;
}

}  // namespace pelab
