#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pelab/atw.hpp"
#include "pelab/corpora.hpp"
#include "pelab/matrix.hpp"

namespace pelab::probes {

// Positional weight matrix of a model from repeated-word dumps: the mean of
// every masked (layer, head) slice of every dump. Throws ValidationError when
// the dumps disagree on the number of kept positions.
WeightMatrix identical_word_aggregate(const std::vector<AttentionTensor>& dumps,
                                      std::size_t jobs = 1);

// Column with the largest weight in row `word` (0-based), self included;
// ties go to the smaller index.
std::size_t dep_predict(const WeightMatrix& head_slice, std::size_t word);

inline constexpr double kShortDistance = 4.0;

struct RelationResult {
  std::string relation;
  std::size_t best_layer = 0;
  std::size_t best_head = 0;
  double accuracy = 0.0;       // of the best head
  double mean_distance = 0.0;  // |dependent - head|, 0 for root
  std::size_t support = 0;
  std::vector<std::size_t> correct;  // per (layer, head), row-major
};

struct DepProbeReport {
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::vector<RelationResult> relations;  // most frequent first, then by name
  std::optional<double> short_avg;        // relations with mean distance <= 4
  std::optional<double> long_avg;
  std::optional<double> macro_avg;
  double distance_threshold = kShortDistance;
};

// tensors[k] holds the word-level attention of corpus sentence k (special
// positions are dropped before scoring). A word whose gold head is 0 counts
// as correct when it attends most to itself. Reports the top_k relations by
// support (0 = all).
DepProbeReport dep_probe(const std::vector<AttentionTensor>& tensors, const DepCorpus& corpus,
                         std::size_t top_k = 0, std::size_t jobs = 1);

// Plain-text table: Relation, Distance, Accuracy, Head.
std::string format_table(const DepProbeReport& report);

// Binary PPM (P6), one scale x scale block per cell. Colors run linearly from
// red (matrix minimum) to blue (maximum); a constant matrix is all red.
std::vector<unsigned char> heatmap_ppm(const WeightMatrix& m, std::size_t scale = 1);
void render_heatmap(const WeightMatrix& m, const std::filesystem::path& path,
                    std::size_t scale = 1);

}  // namespace pelab::probes
