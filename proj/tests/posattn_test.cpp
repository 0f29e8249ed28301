#include <cmath>
#include <random>

#include "doctest.h"
#include "pelab/errors.hpp"
#include "pelab/metrics.hpp"
#include "pelab/posattn.hpp"

using namespace pelab;
using namespace pelab::posattn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.values()) v = g(rng);
  return m;
}

std::vector<const Example*> ptrs(const std::vector<Example>& v) {
  std::vector<const Example*> out;
  for (const auto& e : v) out.push_back(&e);
  return out;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  const double denom = std::max(norm(a), norm(b));
  return denom == 0.0 ? 0.0 : norm(d) / denom;
}

struct GradCase {
  Model model;
  std::vector<Example> data;
};

GradCase gradient_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EncoderConfig cfg;
  cfg.w = 0.3;
  cfg.s = 1.5;
  cfg.max_len = 8;
  cfg.trainable_delta = true;
  GradCase gc;
  gc.model = init_model(cfg, 10, rng);
  // Move the positional logits off the attenuated pattern so every entry matters.
  std::normal_distribution<double> g(0.0, 0.5);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) gc.model.delta_logits(i, j) += g(rng);
  gc.model.refresh_delta();
  for (double& b : gc.model.bias) b = g(rng);
  gc.data.push_back({random_matrix(6, 10, rng), 1});
  gc.data.push_back({random_matrix(6, 10, rng), 0});
  gc.data.push_back({random_matrix(4, 10, rng), 1});
  return gc;
}

// Central differences over every trainable parameter.
void check_gradients(GradCase gc, const Matrix* dropout) {
  const auto batch_ptrs = ptrs(gc.data);
  const Batch batch(batch_ptrs);
  const Gradients g = loss_and_grads(gc.model, batch, dropout);
  const double eps = 1e-4;
  auto loss_at = [&](Model& m) { return loss_and_grads(m, batch, dropout).loss; };

  std::vector<double> numeric_w;
  for (double& v : gc.model.weight.values()) {
    const double keep = v;
    v = keep + eps;
    const double up = loss_at(gc.model);
    v = keep - eps;
    const double down = loss_at(gc.model);
    v = keep;
    numeric_w.push_back((up - down) / (2 * eps));
  }
  const std::vector<double> analytic_w(g.weight.values().begin(), g.weight.values().end());
  CHECK(rel_error(analytic_w, numeric_w) <= 1e-4);

  std::vector<double> numeric_b;
  for (double& v : gc.model.bias) {
    const double keep = v;
    v = keep + eps;
    const double up = loss_at(gc.model);
    v = keep - eps;
    const double down = loss_at(gc.model);
    v = keep;
    numeric_b.push_back((up - down) / (2 * eps));
  }
  CHECK(rel_error(g.bias, numeric_b) <= 1e-4);

  const std::size_t n = gc.model.delta_logits.size();
  REQUIRE(g.delta_logits.size() == n * n);
  std::vector<double> numeric_d;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double keep = gc.model.delta_logits(i, j);
      gc.model.delta_logits(i, j) = keep + eps;
      gc.model.refresh_delta();
      const double up = loss_at(gc.model);
      gc.model.delta_logits(i, j) = keep - eps;
      gc.model.refresh_delta();
      const double down = loss_at(gc.model);
      gc.model.delta_logits(i, j) = keep;
      gc.model.refresh_delta();
      numeric_d.push_back((up - down) / (2 * eps));
    }
  }
  CHECK(rel_error(g.delta_logits, numeric_d) <= 1e-4);
  // Rows beyond the longest sentence get no gradient.
  for (std::size_t j = 0; j < n; ++j) CHECK(g.delta_logits[7 * n + j] == 0.0);
}

LabeledDataset tiny_dataset() {
  LabeledDataset d;
  d.num_classes = 2;
  d.examples = {{1, {"good", "film"}}, {0, {"bad", "film"}}, {1, {"good", "good", "unknown"}}};
  return d;
}

}  // namespace

TEST_CASE("positional forward") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(4, 3, rng);
  const std::vector<bool> all(4, true);

  SUBCASE("identity returns the input") {
    CHECK(positional_forward(WeightMatrix::identity(6), x, all) == x);
  }
  SUBCASE("uniform attention gives the row mean") {
    const Matrix h = positional_forward(WeightMatrix::uniform(4), x, all);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t j = 0; j < 4; ++j) mean += x(j, c) / 4.0;
        CHECK(h(i, c) == doctest::Approx(mean).epsilon(1e-12));
      }
  }
  SUBCASE("a padded column is zeroed, not renormalized") {
    const Matrix x3(3, 2, std::vector<double>{3, 6, 9, 12, 100, 100});
    const Matrix h = positional_forward(WeightMatrix::uniform(3), x3, {true, true, false});
    // (len-1)/len * mean of the real rows = 2/3 * (6, 9).
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(h(i, 0) == doctest::Approx(4.0).epsilon(1e-12));
      CHECK(h(i, 1) == doctest::Approx(6.0).epsilon(1e-12));
    }
  }
  SUBCASE("too long") {
    CHECK_THROWS_AS(positional_forward(WeightMatrix::identity(3), x, all), ValidationError);
  }
}

TEST_CASE("model forward and loss") {
  std::mt19937_64 rng(2);
  EncoderConfig cfg;
  cfg.max_len = 10;
  Model m = init_model(cfg, 5, rng);
  std::vector<Example> data{{random_matrix(7, 5, rng), 1}};
  const auto p = ptrs(data);

  const Matrix probs = model_forward(m, p);
  CHECK(probs(0, 0) + probs(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(model_logits(m, p) == model_logits(m, p));

  for (double& v : m.weight.values()) v = 0.0;
  const Matrix flat = model_forward(m, p);
  CHECK(flat(0, 0) == 0.5);
  CHECK(loss_and_grads(m, p).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // A confident correct head drives the loss to zero.
  m.bias = {-60.0, 60.0};
  CHECK(loss_and_grads(m, p).loss < 1e-40);

  // Evaluation has no dropout: repeated evaluation is bitwise stable.
  CHECK(accuracy(m, data) == 1.0);
  CHECK(model_forward(m, p) == model_forward(m, p));
}

TEST_CASE("pooling matches the written formula") {
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(5, 4, rng);
  const WeightMatrix delta = encodings::attenuated_weights({0.4, 2.0, 9});
  const auto p = pooled(delta, x);
  const Matrix h = positional_forward(delta, x, std::vector<bool>(5, true));
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 5; ++i) mean += h(i, c) / 5.0;
    CHECK(p[c] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central differences") {
  SUBCASE("no dropout") { check_gradients(gradient_case(10), nullptr); }
  SUBCASE("fixed dropout mask") {
    std::mt19937_64 rng(11);
    const Matrix mask = sample_dropout(3, 10, 0.5, rng);
    check_gradients(gradient_case(12), &mask);
  }
  SUBCASE("other seeds") {
    for (std::uint64_t s = 20; s < 25; ++s) check_gradients(gradient_case(s), nullptr);
  }
}

TEST_CASE("frozen delta has no gradient") {
  std::mt19937_64 rng(4);
  EncoderConfig cfg;
  cfg.max_len = 8;
  const Model m = init_model(cfg, 3, rng);
  std::vector<Example> data{{random_matrix(5, 3, rng), 0}};
  CHECK(loss_and_grads(m, ptrs(data)).delta_logits.empty());
}

TEST_CASE("dropout masks") {
  std::mt19937_64 rng(5);
  const Matrix m = sample_dropout(50, 20, 0.5, rng);
  for (double v : m.values()) CHECK((v == 0.0 || v == 2.0));
  std::mt19937_64 rng2(5);
  CHECK(sample_dropout(50, 20, 0.5, rng2) == m);
  const Matrix none = sample_dropout(2, 3, 0.0, rng);
  for (double v : none.values()) CHECK(v == 1.0);
}

TEST_CASE("embedding lookup") {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors = {{"good", {1.0, 0.0}}, {"bad", {-1.0, 0.0}}, {"film", {0.0, 1.0}}};
  const auto ex = embed_dataset(tiny_dataset(), t, 4, 2);
  REQUIRE(ex.size() == 3);
  CHECK(ex[0].x(0, 0) == 1.0);
  CHECK(ex[2].x(2, 0) == 0.0);  // unknown word
  CHECK(ex[2].x(2, 1) == 0.0);
  CHECK_THROWS_AS(embed_dataset(tiny_dataset(), t, 2, 2), ValidationError);
  auto bad = tiny_dataset();
  bad.examples[0].label = 2;
  CHECK_THROWS_AS(embed_dataset(bad, t, 4, 2), ValidationError);
}

TEST_CASE("config validation") {
  EncoderConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dropout_rate = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

namespace {

Splits synthetic_splits(const SyntheticSpec& spec, std::size_t max_len) {
  const SyntheticTask task = make_synthetic_task(spec);
  return {embed_dataset(task.train, task.embeddings, max_len, 2),
          embed_dataset(task.dev, task.embeddings, max_len, 2),
          embed_dataset(task.test, task.embeddings, max_len, 2)};
}

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.train_size = 300;
  spec.dev_size = 100;
  spec.test_size = 100;
  return spec;
}

}  // namespace

TEST_CASE("synthetic task generator") {
  const auto a = make_synthetic_task(small_spec());
  const auto b = make_synthetic_task(small_spec());
  CHECK(a.train.examples.size() == 300);
  CHECK(a.embeddings.dim == 16);
  REQUIRE(a.train.examples.size() == b.train.examples.size());
  for (std::size_t k = 0; k < a.train.examples.size(); ++k) {
    CHECK(a.train.examples[k].tokens == b.train.examples[k].tokens);
    CHECK(a.train.examples[k].label == b.train.examples[k].label);
  }
  std::size_t ones = 0;
  for (const auto& e : a.train.examples) {
    CHECK(e.tokens.size() >= 6);
    CHECK(e.tokens.size() <= 40);
    for (const auto& t : e.tokens) CHECK(a.embeddings.find(t) != nullptr);
    ones += static_cast<std::size_t>(e.label);
  }
  CHECK(ones == 150);
}

TEST_CASE("training is deterministic and leaves a fixed delta alone") {
  const Splits splits = synthetic_splits(small_spec(), 40);
  EncoderConfig cfg;
  cfg.w = 0.5;
  cfg.max_len = 40;
  cfg.epochs = 2;
  cfg.runs = 3;

  Model m1;
  Model m2;
  const RunResult r1 = train_once(cfg, splits, 9, &m1);
  const RunResult r2 = train_once(cfg, splits, 9, &m2);
  CHECK(r1.test_accuracy == r2.test_accuracy);
  CHECK(r1.best_epoch == r2.best_epoch);
  CHECK(m1.weight == m2.weight);
  CHECK(m1.delta == encodings::attenuated_weights(cfg.params()));

  const TrainResult serial = train(cfg, splits, 1);
  const TrainResult parallel = train(cfg, splits, 3);
  REQUIRE(serial.runs.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(serial.runs[k].seed == cfg.seed + k);
    CHECK(serial.runs[k].test_accuracy == parallel.runs[k].test_accuracy);
    CHECK(serial.runs[k].best_dev_accuracy == parallel.runs[k].best_dev_accuracy);
  }
  double mean = 0.0;
  for (const auto& r : serial.runs) mean += r.test_accuracy / 3.0;
  CHECK(serial.mean_test_accuracy == doctest::Approx(mean).epsilon(1e-12));
  CHECK(serial.mean_test_accuracy == parallel.mean_test_accuracy);
  CHECK(serial.locality == doctest::Approx(metrics::locality_matrix(encodings::attenuated_weights(cfg.params()))));

  cfg.trainable_delta = true;
  Model m3;
  train_once(cfg, splits, 9, &m3);
  CHECK_FALSE(m3.delta == encodings::attenuated_weights(cfg.params()));
}

TEST_CASE("training rejects empty splits") {
  Splits splits = synthetic_splits(small_spec(), 40);
  splits.dev.clear();
  EncoderConfig cfg;
  cfg.max_len = 40;
  CHECK_THROWS_AS(train(cfg, splits), ValidationError);
}

TEST_CASE("sweep rows follow the grid") {
  const Splits splits = synthetic_splits(small_spec(), 40);
  EncoderConfig cfg;
  cfg.max_len = 40;
  cfg.epochs = 1;
  cfg.runs = 2;

  const auto one = sweep(cfg, {{0.2, 1.0}}, splits);
  EncoderConfig direct = cfg;
  direct.w = 0.2;
  const TrainResult tr = train(direct, splits);
  REQUIRE(one.size() == 1);
  CHECK(one[0].acc_mean == tr.mean_test_accuracy);
  CHECK(one[0].locality == tr.locality);

  const auto rows = sweep(cfg, {{1.0, 1.0}, {1.0, 2.0}, {1.0, 4.0}, {1.0, 8.0}}, splits, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].symmetry == doctest::Approx(1.0).epsilon(1e-9));
  // Per-row min-max normalization makes symmetry scale-free in the
  // discrepancies, so beyond the drop from s = 1 it is not monotone in s.
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].symmetry < 0.95);
  CHECK(rows[1].symmetry == doctest::Approx(metrics::symmetry_matrix(
                                encodings::attenuated_weights({1.0, 2.0, 40}))).epsilon(1e-12));
  CHECK(rows[2].s == 4.0);

  const std::string csv = sweep_csv(rows);
  CHECK(csv.rfind("w,s,loc,sym,acc_mean,acc_std\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 5);
}

TEST_CASE("calibrated sweep stays in the requested locality band") {
  for (double target : {0.15, 0.2, 0.3}) {
    const auto c = encodings::calibrate_w(target, 1.0, 40, 1e-3);
    const double loc = metrics::locality_matrix(encodings::attenuated_weights({c.w, 1.0, 40}));
    CHECK(loc >= 0.15 - 1e-3);
    CHECK(loc <= 0.30 + 1e-3);
  }
}

TEST_CASE("high locality beats uniform attention on the synthetic task") {
  const SyntheticTask task = make_synthetic_task(SyntheticSpec{});
  const Splits splits{embed_dataset(task.train, task.embeddings, 160, 2),
                      embed_dataset(task.dev, task.embeddings, 160, 2),
                      embed_dataset(task.test, task.embeddings, 160, 2)};
  EncoderConfig cfg;
  cfg.w = 10.0;
  const TrainResult local = train(cfg, splits, 4);
  cfg.w = 0.0;
  const TrainResult uniform = train(cfg, splits, 4);
  MESSAGE("w=10: " << local.mean_test_accuracy << "  w=0: " << uniform.mean_test_accuracy);
  CHECK(local.mean_test_accuracy >= 0.95);
  CHECK(local.mean_test_accuracy - uniform.mean_test_accuracy >= 0.05);
}
