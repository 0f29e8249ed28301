#include "pelab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pelab/errors.hpp"
#include "pelab/parallel.hpp"

namespace pelab::metrics {

namespace {

void check_row(std::span<const double> row, std::size_t position) {
  if (position < 1 || position > row.size()) {
    throw ValidationError("position " + std::to_string(position) + " outside [1, " +
                          std::to_string(row.size()) + "]");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (!(row[j] >= 0.0) || !std::isfinite(row[j])) {
      throw ValidationError("weight " + std::to_string(j + 1) + " is negative or non-finite");
    }
    sum += row[j];
  }
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    throw ValidationError("row sums to " + std::to_string(sum) + "; expected 1");
  }
}

}  // namespace

double locality_row(std::span<const double> row, std::size_t position) {
  check_row(row, position);
  const std::size_t i = position - 1;
  double loc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const std::size_t dist = i > j ? i - j : j - i;
    loc += std::ldexp(row[j], -static_cast<int>(std::min<std::size_t>(dist, 2000)));
  }
  return loc;
}

SymmetryDetail symmetry_row_detail(std::span<const double> row, std::size_t position) {
  check_row(row, position);
  const std::size_t n = row.size();
  const std::size_t c = position - 1;
  const std::size_t m = std::min(c, n - 1 - c);
  SymmetryDetail out;
  if (m == 0) return out;

  std::vector<double> disc(m);
  for (std::size_t k = 1; k <= m; ++k) disc[k - 1] = std::abs(row[c - k] - row[c + k]);
  const auto [lo_it, hi_it] = std::minmax_element(disc.begin(), disc.end());
  const double lo = *lo_it;
  const double hi = *hi_it;

  double mean_norm = 0.0;
  if (hi > lo) {
    double acc = 0.0;
    for (double d : disc) acc += (d - lo) / (hi - lo);
    mean_norm = acc / static_cast<double>(m);
  } else {
    out.flat_nonzero = hi > 0.0;
  }
  out.value = 1.0 - mean_norm;
  return out;
}

double locality_matrix(const WeightMatrix& m) {
  if (m.size() == 0) throw ValidationError("locality of an empty matrix");
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += locality_row(m.row(i), i + 1);
  return acc / static_cast<double>(m.size());
}

double symmetry_matrix(const WeightMatrix& m) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto s = symmetry_row(m.row(i), i + 1);
    if (!s) continue;
    acc += *s;
    ++count;
  }
  if (count == 0) {
    throw UndefinedSymmetry("symmetry undefined: no row of the " + std::to_string(m.size()) +
                            "x" + std::to_string(m.size()) + " matrix has a centered window");
  }
  return acc / static_cast<double>(count);
}

std::string to_string(Scope scope) {
  switch (scope) {
    case Scope::kPerHead:
      return "per-head";
    case Scope::kPerLayer:
      return "per-layer";
    case Scope::kModelAverage:
      return "model-average";
  }
  return "model-average";
}

Scope parse_scope(const std::string& text) {
  if (text == "per-head") return Scope::kPerHead;
  if (text == "per-layer") return Scope::kPerLayer;
  if (text == "model-average") return Scope::kModelAverage;
  throw ValidationError("unknown scope '" + text + "' (per-head | per-layer | model-average)");
}

MetricReport report_for_matrix(const WeightMatrix& m, const std::string& scope) {
  if (m.size() == 0) throw ValidationError("metric report of an empty matrix");
  MetricReport r;
  r.n = m.size();
  r.scope = scope;
  r.per_row_locality.reserve(m.size());
  double loc_sum = 0.0;
  double sym_sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double loc = locality_row(m.row(i), i + 1);
    r.per_row_locality.push_back(loc);
    loc_sum += loc;
    auto sym = symmetry_row_detail(m.row(i), i + 1);
    if (sym.value) {
      r.per_row_symmetry.emplace_back(i + 1, *sym.value);
      sym_sum += *sym.value;
    }
    if (sym.flat_nonzero) ++r.flat_nonzero_rows;
  }
  if (r.per_row_symmetry.empty()) {
    throw UndefinedSymmetry("symmetry undefined for n=" + std::to_string(m.size()));
  }
  r.locality = loc_sum / static_cast<double>(m.size());
  r.symmetry = sym_sum / static_cast<double>(r.per_row_symmetry.size());
  return r;
}

WeightMatrix average_slices(const AttentionTensor& t, std::size_t layer_begin,
                            std::size_t layer_end, std::size_t head_begin, std::size_t head_end) {
  WeightMatrix acc;
  std::size_t count = 0;
  for (std::size_t l = layer_begin; l < layer_end; ++l) {
    for (std::size_t h = head_begin; h < head_end; ++h) {
      WeightMatrix s = t.masked_slice(l, h);
      if (count == 0) {
        acc = std::move(s);
      } else {
        auto dst = acc.values();
        auto src = s.values();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
      ++count;
    }
  }
  if (count == 0) throw ValidationError("no slices to average");
  for (double& v : acc.values()) v /= static_cast<double>(count);
  return acc;
}

std::vector<MetricReport> metric_report(const AttentionTensor& t, Scope scope, std::size_t jobs) {
  const std::string label = to_string(scope);
  std::vector<MetricReport> out;
  switch (scope) {
    case Scope::kModelAverage: {
      out.push_back(report_for_matrix(average_slices(t, 0, t.layers, 0, t.heads), label));
      break;
    }
    case Scope::kPerLayer: {
      out.resize(t.layers);
      parallel_for(t.layers, jobs, [&](std::size_t l) {
        out[l] = report_for_matrix(average_slices(t, l, l + 1, 0, t.heads), label);
        out[l].layer = l;
      });
      break;
    }
    case Scope::kPerHead: {
      out.resize(t.layers * t.heads);
      parallel_for(t.layers * t.heads, jobs, [&](std::size_t k) {
        const std::size_t l = k / t.heads;
        const std::size_t h = k % t.heads;
        out[k] = report_for_matrix(t.masked_slice(l, h), label);
        out[k].layer = l;
        out[k].head = h;
      });
      break;
    }
  }
  return out;
}

}  // namespace pelab::metrics
