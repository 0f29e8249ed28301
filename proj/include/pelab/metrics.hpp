#pragma once

// Locality and Symmetry of attention rows and matrices.
//
// Locality of row i (1-based):  sum_j w_j / 2^|i-j|.
//
// Symmetry of row i: take the centered window of half-length
// m = min(i-1, n-i), form the mirrored discrepancies |w_{i-k} - w_{i+k}| for
// k = 1..m, min-max normalize them within the row and return
// 1 - mean(normalized). When every discrepancy is equal the normalized values
// are 0 (symmetry 1); if that common value is nonzero the row is flagged.
// Rows with m = 0 (first and last position) have no symmetry value.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pelab/atw.hpp"
#include "pelab/errors.hpp"
#include "pelab/matrix.hpp"

namespace pelab::metrics {

inline constexpr double kStochasticTolerance = 1e-3;

// `position` is 1-based. Throws ValidationError for an out-of-range position,
// a negative weight, or a row that does not sum to 1 within 1e-3.
double locality_row(std::span<const double> row, std::size_t position);

struct SymmetryDetail {
  std::optional<double> value;     // empty for zero-length windows
  bool flat_nonzero = false;       // all discrepancies equal and > 0
};

SymmetryDetail symmetry_row_detail(std::span<const double> row, std::size_t position);

inline std::optional<double> symmetry_row(std::span<const double> row, std::size_t position) {
  return symmetry_row_detail(row, position).value;
}

double locality_matrix(const WeightMatrix& m);
// Throws UndefinedSymmetry when no row has a non-degenerate window (n <= 2).
double symmetry_matrix(const WeightMatrix& m);

class UndefinedSymmetry : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class Scope { kPerHead, kPerLayer, kModelAverage };

std::string to_string(Scope scope);
// Accepts "per-head", "per-layer", "model-average".
Scope parse_scope(const std::string& text);

struct MetricReport {
  std::size_t n = 0;
  std::string scope;
  std::optional<std::size_t> layer;
  std::optional<std::size_t> head;
  double locality = 0.0;
  double symmetry = 0.0;
  std::vector<double> per_row_locality;
  std::vector<std::pair<std::size_t, double>> per_row_symmetry;  // 1-based row index
  std::size_t flat_nonzero_rows = 0;
};

MetricReport report_for_matrix(const WeightMatrix& m, const std::string& scope = "matrix");

// Special positions are dropped and rows renormalized per slice, slices are
// averaged per the scope, then both metrics are computed. Reports come back
// in (layer, head) order. `jobs` only affects wall time.
std::vector<MetricReport> metric_report(const AttentionTensor& t, Scope scope,
                                        std::size_t jobs = 1);

// Elementwise mean of the masked slices in [layer_begin, layer_end) x [head_begin, head_end).
WeightMatrix average_slices(const AttentionTensor& t, std::size_t layer_begin,
                            std::size_t layer_end, std::size_t head_begin, std::size_t head_end);

}  // namespace pelab::metrics
