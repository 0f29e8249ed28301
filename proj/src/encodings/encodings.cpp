#include "pelab/encodings.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "pelab/errors.hpp"
#include "pelab/metrics.hpp"

namespace pelab::encodings {

void AttenuatedParams::validate() const {
  if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("attenuated: w must be >= 0");
  if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("attenuated: s must be > 0");
  if (n < 2) throw ValidationError("attenuated: n must be >= 2");
}

LogitMatrix attenuated_logits(const AttenuatedParams& p) {
  p.validate();
  LogitMatrix out(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < p.n; ++j) {
      const double l = i > j ? static_cast<double>(i - j) : static_cast<double>(j - i);
      const double base = -p.w * l * l;
      out(i, j) = i <= j ? p.s * base : base;
    }
  }
  return out;
}

WeightMatrix attenuated_weights(const AttenuatedParams& p) {
  return softmax_rows(attenuated_logits(p));
}

std::string to_string(FixedKind kind) {
  switch (kind) {
    case FixedKind::kSinusoidal:
      return "sinusoidal";
    case FixedKind::kRotary:
      return "rotary";
    case FixedKind::kAlibiSymmetric:
      return "alibi-symmetric";
    case FixedKind::kAlibiCausal:
      return "alibi-causal";
  }
  return "sinusoidal";
}

FixedKind parse_fixed_kind(const std::string& text) {
  if (text == "sinusoidal") return FixedKind::kSinusoidal;
  if (text == "rotary") return FixedKind::kRotary;
  if (text == "alibi-symmetric" || text == "alibi") return FixedKind::kAlibiSymmetric;
  if (text == "alibi-causal") return FixedKind::kAlibiCausal;
  throw ValidationError("unknown encoding kind '" + text + "'");
}

void FixedEncodingSpec::validate() const {
  if (n < 1) throw ValidationError("fixed encoding: n must be positive");
  const bool dot_product = kind == FixedKind::kSinusoidal || kind == FixedKind::kRotary;
  if (dot_product && d == 0) throw ValidationError("fixed encoding: d must be positive");
  if (kind == FixedKind::kRotary && d % 2 != 0) {
    throw ValidationError("rotary encoding needs an even dimension, got d=" + std::to_string(d));
  }
  if (!dot_product && !(slope > 0.0)) throw ValidationError("ALiBi slope must be > 0");
}

namespace {

double frequency(std::size_t k, std::size_t d) {
  return std::pow(10000.0, -2.0 * static_cast<double>(k) / static_cast<double>(d));
}

// Scores that depend only on |i - j| are filled from a per-distance table so
// mirrored entries are bitwise equal.
LogitMatrix from_distance_table(std::size_t n, const std::vector<double>& table) {
  LogitMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) = table[i > j ? i - j : j - i];
  }
  return out;
}

LogitMatrix sinusoidal_scores(std::size_t n, std::size_t d) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const std::size_t pairs = d / 2;
  if (d % 2 == 0) {
    // sin(a)sin(b) + cos(a)cos(b) = cos(a - b), so P_i . P_j = sum_k cos((i-j) theta_k).
    std::vector<double> table(n);
    for (std::size_t l = 0; l < n; ++l) {
      double acc = 0.0;
      for (std::size_t k = 0; k < pairs; ++k) acc += std::cos(static_cast<double>(l) * frequency(k, d));
      table[l] = acc * scale;
    }
    return from_distance_table(n, table);
  }
  // Odd d: the trailing sin-only column breaks the distance identity.
  Matrix table(n, d);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t c = 0; c < d; ++c) {
      const double angle = static_cast<double>(pos) * frequency(c / 2, d);
      table(pos, c) = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  LogitMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += table(i, c) * table(j, c);
      out(i, j) = acc * scale;
    }
  }
  return out;
}

LogitMatrix rotary_scores(std::size_t n, std::size_t d) {
  // All-ones probe rotated at positions i and j: each 2-d block contributes
  // 2 cos((i - j) theta_k).
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> table(n);
  for (std::size_t l = 0; l < n; ++l) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d / 2; ++k) acc += 2.0 * std::cos(static_cast<double>(l) * frequency(k, d));
    table[l] = acc * scale;
  }
  return from_distance_table(n, table);
}

}  // namespace

LogitMatrix fixed_scores(const FixedEncodingSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case FixedKind::kSinusoidal:
      return sinusoidal_scores(spec.n, spec.d);
    case FixedKind::kRotary:
      return rotary_scores(spec.n, spec.d);
    case FixedKind::kAlibiSymmetric: {
      std::vector<double> table(spec.n);
      for (std::size_t l = 0; l < spec.n; ++l) table[l] = -spec.slope * static_cast<double>(l);
      return from_distance_table(spec.n, table);
    }
    case FixedKind::kAlibiCausal: {
      LogitMatrix out(spec.n);
      for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < spec.n; ++j) {
          out(i, j) = j <= i ? -spec.slope * static_cast<double>(i - j)
                             : -std::numeric_limits<double>::infinity();
        }
      }
      return out;
    }
  }
  throw ValidationError("unknown encoding kind");
}

WeightMatrix fixed_weight_matrix(const FixedEncodingSpec& spec) {
  return softmax_rows(fixed_scores(spec));
}

Calibration calibrate_w(double target_locality, double s, std::size_t n, double tol) {
  if (!(target_locality > 0.0 && target_locality < 1.0)) {
    throw ValidationError("calibration target must lie in (0, 1)");
  }
  if (!(tol > 0.0)) throw ValidationError("calibration tolerance must be positive");
  auto locality_at = [&](double w) {
    return metrics::locality_matrix(attenuated_weights({w, s, n}));
  };

  double lo = std::log(kCalibrationMinW);
  double hi = std::log(kCalibrationMaxW);
  const double loc_lo = locality_at(kCalibrationMinW);
  const double loc_hi = locality_at(kCalibrationMaxW);
  if (std::abs(loc_lo - target_locality) <= tol) return {kCalibrationMinW, loc_lo, 0};
  if (std::abs(loc_hi - target_locality) <= tol) return {kCalibrationMaxW, loc_hi, 0};
  if (target_locality < loc_lo || target_locality > loc_hi) {
    throw ValidationError("locality " + std::to_string(target_locality) +
                          " not reachable for n=" + std::to_string(n) + ", s=" +
                          std::to_string(s) + ": achievable range is [" + std::to_string(loc_lo) +
                          ", " + std::to_string(loc_hi) + "]");
  }

  for (int it = 1; it <= kCalibrationMaxIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double w = std::exp(mid);
    const double loc = locality_at(w);
    if (std::abs(loc - target_locality) <= tol) return {w, loc, it};
    if (loc < target_locality) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw ValidationError("calibration did not converge in " +
                        std::to_string(kCalibrationMaxIterations) + " iterations");
}

}  // namespace pelab::encodings
