#pragma once

// Single-layer, single-head pure positional attention over frozen word
// embeddings, followed by mean pooling, dropout and an affine softmax head.
//
//   h_i = sum_j delta[i][j] x_j       (delta cropped to the sentence, no renormalization)
//   p   = mean_i h_i
//   q   = softmax(W dropout(p) + b)
//
// delta is either fixed (the attenuated weights for the configured w, s) or,
// with trainable_delta, the row softmax of a trainable logit matrix that is
// initialized from the attenuated logits.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pelab/corpora.hpp"
#include "pelab/encodings.hpp"
#include "pelab/matrix.hpp"

namespace pelab::posattn {

struct EncoderConfig {
  double w = 0.0;
  double s = 1.0;
  std::size_t max_len = 160;
  double dropout_rate = 0.5;
  bool trainable_delta = false;
  int num_classes = 2;
  double lr = 0.002;
  double lr_decay = 0.9;  // multiplier applied after every epoch
  int epochs = 5;
  std::size_t batch_size = 8;
  std::uint64_t seed = 42;
  int runs = 5;  // run k uses seed + k

  void validate() const;
  encodings::AttenuatedParams params() const { return {w, s, max_len}; }
};

// One embedded sentence: rows are word vectors (zero for unknown words).
struct Example {
  Matrix x;
  int label = 0;
};

// Throws ValidationError for sentences longer than max_len or labels outside
// [0, num_classes).
std::vector<Example> embed_dataset(const LabeledDataset& data, const EmbeddingTable& table,
                                   std::size_t max_len, int num_classes);

// h = delta' x where delta' is delta cropped to x.rows() with the columns of
// masked-out positions set to zero. Rows are not renormalized.
Matrix positional_forward(const WeightMatrix& delta, const Matrix& x,
                          const std::vector<bool>& mask);

struct Model {
  LogitMatrix delta_logits;  // meaningful only when trainable
  WeightMatrix delta;
  Matrix weight;  // num_classes x d
  std::vector<double> bias;
  bool trainable_delta = false;

  std::size_t dim() const { return weight.cols(); }
  std::size_t num_classes() const { return weight.rows(); }

  // Rebuilds delta from delta_logits.
  void refresh_delta();
};

// Attenuated delta for cfg, zero bias, Glorot-uniform head drawn from rng.
Model init_model(const EncoderConfig& cfg, std::size_t dim, std::mt19937_64& rng);

using Batch = std::span<const Example* const>;

// Per-example multipliers for the pooled vector: 0 or 1/(1-rate).
Matrix sample_dropout(std::size_t batch, std::size_t dim, double rate, std::mt19937_64& rng);

// Mean-pooled sentence vector (no dropout).
std::vector<double> pooled(const WeightMatrix& delta, const Matrix& x);

// Class scores before softmax, one row per example. `dropout` is a
// batch x d multiplier matrix (training) or nullptr (evaluation).
Matrix model_logits(const Model& model, Batch batch, const Matrix* dropout = nullptr);
// Softmax of model_logits.
Matrix model_forward(const Model& model, Batch batch, const Matrix* dropout = nullptr);

struct Gradients {
  double loss = 0.0;  // mean cross-entropy over the batch
  Matrix weight;
  std::vector<double> bias;
  std::vector<double> delta_logits;  // empty unless trainable_delta
};

Gradients loss_and_grads(const Model& model, Batch batch, const Matrix* dropout = nullptr);

// Fraction of examples whose argmax class (ties to the smaller id) is the label.
double accuracy(const Model& model, const std::vector<Example>& data);

struct RunResult {
  std::uint64_t seed = 0;
  double best_dev_accuracy = 0.0;
  int best_epoch = 0;  // 1-based
  double test_accuracy = 0.0;
};

struct TrainResult {
  EncoderConfig config;
  std::vector<RunResult> runs;
  double mean_test_accuracy = 0.0;
  double std_test_accuracy = 0.0;  // population standard deviation over runs
  double locality = 0.0;           // of the initial delta at max_len
  double symmetry = 0.0;
};

struct Splits {
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
};

// Trains cfg.runs models (Adam, beta1 0.9, beta2 0.999, eps 1e-8), keeps the
// checkpoint with the best dev accuracy and evaluates it on test. Runs may
// execute on `jobs` threads; results do not depend on it.
TrainResult train(const EncoderConfig& cfg, const Splits& splits, std::size_t jobs = 1);

// Single seeded run; exposed for determinism checks.
RunResult train_once(const EncoderConfig& cfg, const Splits& splits, std::uint64_t seed,
                     Model* final_model = nullptr);

struct SweepPoint {
  double w = 0.0;
  double s = 1.0;
};

struct SweepRow {
  double w = 0.0;
  double s = 1.0;
  double locality = 0.0;
  double symmetry = 0.0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  TrainResult result;
};

// One train() per grid point, rows in grid order.
std::vector<SweepRow> sweep(const EncoderConfig& base, const std::vector<SweepPoint>& grid,
                            const Splits& splits, std::size_t jobs = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// Bundled synthetic task. Sentences mix "cue" words, whose embeddings sit
// around +1 on every dimension, with zero-mean filler words. Class 1 sentences
// have a cue density in [0.4, 0.7], class 0 in [0, 0.2], and lengths vary
// widely. The label is readable from the mean word vector, which the encoder
// recovers only when delta keeps each row's mass inside the sentence.
struct SyntheticSpec {
  std::size_t train_size = 2000;
  std::size_t dev_size = 500;
  std::size_t test_size = 500;
  std::size_t dim = 16;
  std::size_t min_len = 6;
  std::size_t max_len = 40;
  std::size_t cue_words = 10;
  std::size_t filler_words = 200;
  std::uint64_t seed = 7;
};

struct SyntheticTask {
  LabeledDataset train;
  LabeledDataset dev;
  LabeledDataset test;
  EmbeddingTable embeddings;
};

SyntheticTask make_synthetic_task(const SyntheticSpec& spec);

}  // namespace pelab::posattn
