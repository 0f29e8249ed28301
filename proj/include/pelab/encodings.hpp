#pragma once

#include <cstddef>
#include <string>

#include "pelab/matrix.hpp"

namespace pelab::encodings {

// Attenuated positional logits: -s*w*l^2 looking forward (j >= i) and
// -w*l^2 looking backward (j < i), with l = |i - j|. w = 0 is the uniform
// limit; s = 1 makes every row mirror-symmetric.
struct AttenuatedParams {
  double w = 0.0;
  double s = 1.0;
  std::size_t n = 0;

  void validate() const;
};

LogitMatrix attenuated_logits(const AttenuatedParams& p);
WeightMatrix attenuated_weights(const AttenuatedParams& p);

enum class FixedKind { kSinusoidal, kRotary, kAlibiSymmetric, kAlibiCausal };

std::string to_string(FixedKind kind);
FixedKind parse_fixed_kind(const std::string& text);

struct FixedEncodingSpec {
  FixedKind kind = FixedKind::kSinusoidal;
  std::size_t n = 128;
  std::size_t d = 64;      // sinusoidal / rotary
  double slope = 0.125;    // ALiBi

  void validate() const;
};

// Pre-softmax scores of the identical-word surrogate:
//   sinusoidal      P P^T / sqrt(d) with the standard sin/cos table
//   rotary          sum_k 2 cos((i-j) theta_k) / sqrt(d), theta_k = 10000^(-2k/d)
//   alibi-symmetric -m |i-j|
//   alibi-causal    -m (i-j) for j <= i, -inf above the diagonal
LogitMatrix fixed_scores(const FixedEncodingSpec& spec);
WeightMatrix fixed_weight_matrix(const FixedEncodingSpec& spec);

struct Calibration {
  double w = 0.0;
  double achieved = 0.0;
  int iterations = 0;
};

inline constexpr double kCalibrationMinW = 1e-6;
inline constexpr double kCalibrationMaxW = 1e3;
inline constexpr int kCalibrationMaxIterations = 200;

// Bisection on log w over [1e-6, 1e3] until the locality of
// attenuated_weights(w, s, n) is within `tol` of the target. Throws
// ValidationError if the target lies outside the locality range spanned by
// the bracket, or if 200 iterations do not converge.
Calibration calibrate_w(double target_locality, double s, std::size_t n, double tol);

}  // namespace pelab::encodings
