#pragma once

// ATW: the attention-tensor exchange format shared with the extraction
// scripts. A dump is a pair of files:
//
//   <name>.json  {"magic":"ATW1","model_name":..., "L":..,"H":..,"n":..,
//                 "dtype":"f32","layout":"LHNN","tokens":[...],
//                 "special_mask":[...],"bin":"<name>.bin","crc32":<int>}
//   <name>.bin   L*H*n*n little-endian float32 values, layout [L][H][n][n]
//
// crc32 is the IEEE CRC-32 (zlib polynomial) of the raw .bin bytes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pelab/matrix.hpp"

namespace pelab {

inline constexpr double kRowSumTolerance = 1e-3;

struct AttentionTensor {
  std::string model_name;
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::size_t n = 0;
  std::vector<std::string> tokens;
  std::vector<bool> special_mask;  // true = special / padding position
  std::vector<float> values;       // [layers][heads][n][n]

  // Largest |row sum - 1| over non-special query rows, filled in by validate().
  double row_sum_max_error = 0.0;

  std::size_t offset(std::size_t layer, std::size_t head, std::size_t i, std::size_t j) const {
    return ((layer * heads + head) * n + i) * n + j;
  }
  float at(std::size_t layer, std::size_t head, std::size_t i, std::size_t j) const {
    return values[offset(layer, head, i, j)];
  }

  // One (layer, head) slice widened to double, all positions kept.
  WeightMatrix slice(std::size_t layer, std::size_t head) const;

  // Indices of non-special positions, in order.
  std::vector<std::size_t> kept_positions() const;

  // The (layer, head) slice restricted to non-special rows and columns. Rows
  // are renormalized over the kept columns only when some column was dropped.
  // Throws ValidationError if every position is special or a kept row has no
  // mass on kept columns.
  WeightMatrix masked_slice(std::size_t layer, std::size_t head) const;

  // Checks shape, finiteness and row sums; records row_sum_max_error.
  // Throws FormatError with the offending coordinates.
  void validate();
};

// Single-slice tensor wrapping a weight matrix (used for generated encodings).
AttentionTensor tensor_from_matrix(const WeightMatrix& m, const std::string& model_name);

AttentionTensor load_atw(const std::filesystem::path& manifest_path);

// Writes <stem>.bin next to the manifest, then the manifest itself.
void save_atw(const AttentionTensor& t, const std::filesystem::path& manifest_path);

// IEEE CRC-32 of a byte buffer.
std::uint32_t crc32_of(std::span<const unsigned char> bytes);

// Index of dumps written by the extractor: {"model_name": ..., "dumps": [paths]}.
// Relative paths are resolved against the index file's directory.
std::vector<std::filesystem::path> load_atw_index(const std::filesystem::path& index_path);

}  // namespace pelab
