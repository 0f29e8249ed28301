#include <algorithm>
#include <cmath>

#include "pelab/errors.hpp"
#include "pelab/posattn.hpp"

namespace pelab::posattn {

namespace {

constexpr double kCueValue = 1.0;
constexpr double kCueNoise = 0.3;
constexpr double kFillerScale = 0.5;

std::string cue_word(std::size_t k) { return "cue" + std::to_string(k); }
std::string filler_word(std::size_t k) { return "w" + std::to_string(k); }

LabeledDataset make_split(const SyntheticSpec& spec, std::size_t size, std::mt19937_64& rng) {
  LabeledDataset out;
  out.num_classes = 2;
  std::uniform_int_distribution<std::size_t> len_dist(spec.min_len, spec.max_len);
  std::uniform_real_distribution<double> high(0.4, 0.7);
  std::uniform_real_distribution<double> low(0.0, 0.2);
  std::uniform_int_distribution<std::size_t> cue_pick(0, spec.cue_words - 1);
  std::uniform_int_distribution<std::size_t> filler_pick(0, spec.filler_words - 1);
  for (std::size_t k = 0; k < size; ++k) {
    LabeledExample ex;
    ex.label = static_cast<int>(k % 2);
    const std::size_t len = len_dist(rng);
    const double density = ex.label == 1 ? high(rng) : low(rng);
    const auto cues = static_cast<std::size_t>(std::lround(density * static_cast<double>(len)));
    std::vector<bool> is_cue(len, false);
    std::fill(is_cue.begin(), is_cue.begin() + static_cast<std::ptrdiff_t>(cues), true);
    std::shuffle(is_cue.begin(), is_cue.end(), rng);
    for (std::size_t t = 0; t < len; ++t) {
      ex.tokens.push_back(is_cue[t] ? cue_word(cue_pick(rng)) : filler_word(filler_pick(rng)));
    }
    out.examples.push_back(std::move(ex));
  }
  std::shuffle(out.examples.begin(), out.examples.end(), rng);
  return out;
}

}  // namespace

SyntheticTask make_synthetic_task(const SyntheticSpec& spec) {
  if (spec.dim < 2) throw ValidationError("synthetic task needs dim >= 2");
  if (spec.min_len < 1 || spec.min_len > spec.max_len) {
    throw ValidationError("synthetic task needs 1 <= min_len <= max_len");
  }
  if (spec.cue_words == 0 || spec.filler_words == 0) {
    throw ValidationError("synthetic task needs cue and filler words");
  }
  if (spec.train_size == 0 || spec.dev_size == 0 || spec.test_size == 0) {
    throw ValidationError("synthetic splits must be non-empty");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticTask task;
  task.embeddings.dim = spec.dim;
  for (std::size_t k = 0; k < spec.cue_words; ++k) {
    std::vector<double> v(spec.dim);
    for (std::size_t c = 0; c < spec.dim; ++c) v[c] = kCueValue + kCueNoise * normal(rng);
    task.embeddings.vectors.emplace(cue_word(k), std::move(v));
  }
  for (std::size_t k = 0; k < spec.filler_words; ++k) {
    std::vector<double> v(spec.dim);
    for (std::size_t c = 0; c < spec.dim; ++c) v[c] = kFillerScale * normal(rng);
    task.embeddings.vectors.emplace(filler_word(k), std::move(v));
  }
  task.train = make_split(spec, spec.train_size, rng);
  task.dev = make_split(spec, spec.dev_size, rng);
  task.test = make_split(spec, spec.test_size, rng);
  return task;
}

}  // namespace pelab::posattn
