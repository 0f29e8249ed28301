#include <algorithm>
#include <cmath>

#include "pelab/errors.hpp"
#include "pelab/posattn.hpp"

namespace pelab::posattn {

void EncoderConfig::validate() const {
  params().validate();
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError("dropout rate must be in [0, 1)");
  }
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (runs < 1) throw ValidationError("runs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (num_classes < 2) throw ValidationError("need at least 2 classes");
  if (!(lr > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(lr_decay > 0.0)) throw ValidationError("learning rate decay must be > 0");
}

std::vector<Example> embed_dataset(const LabeledDataset& data, const EmbeddingTable& table,
                                   std::size_t max_len, int num_classes) {
  if (table.dim == 0) throw ValidationError("embedding table is empty");
  std::vector<Example> out;
  out.reserve(data.examples.size());
  for (std::size_t k = 0; k < data.examples.size(); ++k) {
    const auto& ex = data.examples[k];
    if (ex.tokens.empty()) throw ValidationError("example " + std::to_string(k + 1) + " is empty");
    if (ex.tokens.size() > max_len) {
      throw ValidationError("example " + std::to_string(k + 1) + " has " +
                            std::to_string(ex.tokens.size()) + " tokens; max_len is " +
                            std::to_string(max_len));
    }
    if (ex.label < 0 || ex.label >= num_classes) {
      throw ValidationError("example " + std::to_string(k + 1) + " has label " +
                            std::to_string(ex.label) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    Example e;
    e.label = ex.label;
    e.x = Matrix(ex.tokens.size(), table.dim);
    for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
      if (const auto* vec = table.find(ex.tokens[t])) {
        std::copy(vec->begin(), vec->end(), e.x.row(t).begin());
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

Matrix positional_forward(const WeightMatrix& delta, const Matrix& x,
                          const std::vector<bool>& mask) {
  const std::size_t len = x.rows();
  if (len > delta.size()) {
    throw ValidationError("sentence length " + std::to_string(len) + " exceeds max_len " +
                          std::to_string(delta.size()));
  }
  if (mask.size() != len) throw ValidationError("mask length does not match the sentence");
  Matrix h(len, x.cols());
  for (std::size_t i = 0; i < len; ++i) {
    auto hi = h.row(i);
    for (std::size_t j = 0; j < len; ++j) {
      if (!mask[j]) continue;
      const double wgt = delta(i, j);
      auto xj = x.row(j);
      for (std::size_t c = 0; c < x.cols(); ++c) hi[c] += wgt * xj[c];
    }
  }
  return h;
}

void Model::refresh_delta() { delta = softmax_rows(delta_logits); }

Model init_model(const EncoderConfig& cfg, std::size_t dim, std::mt19937_64& rng) {
  Model m;
  m.trainable_delta = cfg.trainable_delta;
  m.delta_logits = encodings::attenuated_logits(cfg.params());
  m.refresh_delta();
  const auto classes = static_cast<std::size_t>(cfg.num_classes);
  m.weight = Matrix(classes, dim);
  const double a = std::sqrt(6.0 / static_cast<double>(dim + classes));
  std::uniform_real_distribution<double> unif(-a, a);
  for (double& v : m.weight.values()) v = unif(rng);
  m.bias.assign(classes, 0.0);
  return m;
}

Matrix sample_dropout(std::size_t batch, std::size_t dim, double rate, std::mt19937_64& rng) {
  Matrix out(batch, dim, 1.0);
  if (rate <= 0.0) return out;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (double& v : out.values()) v = keep(rng) ? scale : 0.0;
  return out;
}

namespace {

// Column sums of delta over the first len rows, restricted to the first len columns.
std::vector<double> column_mass(const WeightMatrix& delta, std::size_t len) {
  std::vector<double> c(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    auto row = delta.row(i);
    for (std::size_t j = 0; j < len; ++j) c[j] += row[j];
  }
  return c;
}

std::vector<double> class_scores(const Model& model, std::span<const double> p) {
  std::vector<double> z(model.bias);
  for (std::size_t k = 0; k < z.size(); ++k) {
    auto wk = model.weight.row(k);
    for (std::size_t c = 0; c < p.size(); ++c) z[k] += wk[c] * p[c];
  }
  return z;
}

std::vector<double> dropped(const std::vector<double>& p, const Matrix* dropout, std::size_t b) {
  if (dropout == nullptr) return p;
  std::vector<double> out(p);
  auto m = dropout->row(b);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] *= m[c];
  return out;
}

void check_batch(const Model& model, Batch batch, const Matrix* dropout) {
  if (dropout != nullptr && (dropout->rows() != batch.size() || dropout->cols() != model.dim())) {
    throw ValidationError("dropout mask shape does not match the batch");
  }
  for (const Example* e : batch) {
    if (e->x.cols() != model.dim()) throw ValidationError("embedding width does not match the model");
    if (e->x.rows() == 0) throw ValidationError("empty sentence in batch");
  }
}

}  // namespace

std::vector<double> pooled(const WeightMatrix& delta, const Matrix& x) {
  const std::size_t len = x.rows();
  if (len > delta.size()) {
    throw ValidationError("sentence length " + std::to_string(len) + " exceeds max_len " +
                          std::to_string(delta.size()));
  }
  const auto c = column_mass(delta, len);
  std::vector<double> p(x.cols(), 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    auto xj = x.row(j);
    for (std::size_t d = 0; d < x.cols(); ++d) p[d] += c[j] * xj[d];
  }
  for (double& v : p) v /= static_cast<double>(len);
  return p;
}

Matrix model_logits(const Model& model, Batch batch, const Matrix* dropout) {
  check_batch(model, batch, dropout);
  Matrix out(batch.size(), model.num_classes());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto p = dropped(pooled(model.delta, batch[b]->x), dropout, b);
    const auto z = class_scores(model, p);
    std::copy(z.begin(), z.end(), out.row(b).begin());
  }
  return out;
}

Matrix model_forward(const Model& model, Batch batch, const Matrix* dropout) {
  Matrix z = model_logits(model, batch, dropout);
  for (std::size_t b = 0; b < z.rows(); ++b) {
    auto row = z.row(b);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return z;
}

Gradients loss_and_grads(const Model& model, Batch batch, const Matrix* dropout) {
  check_batch(model, batch, dropout);
  if (batch.empty()) throw ValidationError("empty batch");
  const std::size_t dim = model.dim();
  const std::size_t classes = model.num_classes();
  const std::size_t n = model.delta.size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  Gradients g;
  g.weight = Matrix(classes, dim);
  g.bias.assign(classes, 0.0);
  std::vector<double> d_delta;
  if (model.trainable_delta) d_delta.assign(n * n, 0.0);

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Example& ex = *batch[b];
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= classes) {
      throw ValidationError("label " + std::to_string(ex.label) + " outside the class range");
    }
    const auto p = dropped(pooled(model.delta, ex.x), dropout, b);
    const auto z = class_scores(model, p);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    g.loss += (lse - z[static_cast<std::size_t>(ex.label)]) * inv_b;

    std::vector<double> dz(classes);
    for (std::size_t k = 0; k < classes; ++k) {
      dz[k] = (std::exp(z[k] - lse) - (static_cast<int>(k) == ex.label ? 1.0 : 0.0)) * inv_b;
      g.bias[k] += dz[k];
      auto gw = g.weight.row(k);
      for (std::size_t c = 0; c < dim; ++c) gw[c] += dz[k] * p[c];
    }
    if (!model.trainable_delta) continue;

    // Back through the head and dropout to the pooled vector, then to delta:
    // d loss / d delta[i][j] = (dp . x_j) / len for every i, j < len.
    std::vector<double> dp(dim, 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
      auto wk = model.weight.row(k);
      for (std::size_t c = 0; c < dim; ++c) dp[c] += wk[c] * dz[k];
    }
    if (dropout != nullptr) {
      auto m = dropout->row(b);
      for (std::size_t c = 0; c < dim; ++c) dp[c] *= m[c];
    }
    const std::size_t len = ex.x.rows();
    std::vector<double> gj(len, 0.0);
    for (std::size_t j = 0; j < len; ++j) {
      auto xj = ex.x.row(j);
      for (std::size_t c = 0; c < dim; ++c) gj[j] += dp[c] * xj[c];
      gj[j] /= static_cast<double>(len);
    }
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = 0; j < len; ++j) d_delta[i * n + j] += gj[j];
    }
  }

  if (model.trainable_delta) {
    // Row softmax backward.
    g.delta_logits.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = model.delta.row(i);
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += row[k] * d_delta[i * n + k];
      for (std::size_t j = 0; j < n; ++j) g.delta_logits[i * n + j] = row[j] * (d_delta[i * n + j] - dot);
    }
  }
  return g;
}

double accuracy(const Model& model, const std::vector<Example>& data) {
  if (data.empty()) throw ValidationError("accuracy of an empty split");
  std::size_t correct = 0;
  for (const Example& ex : data) {
    const Example* one[] = {&ex};
    const Matrix z = model_logits(model, one);
    auto row = z.row(0);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace pelab::posattn
