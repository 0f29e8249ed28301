#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "pelab/errors.hpp"
#include "pelab/metrics.hpp"
#include "pelab/parallel.hpp"
#include "pelab/posattn.hpp"

namespace pelab::posattn {

namespace {

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit Adam(std::size_t size) : m(size, 0.0), v(size, 0.0) {}

  // params and grads are views over the same flattened layout.
  void update(std::span<double> params, std::span<const double> grads, std::size_t offset,
              double lr) {
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
      double& mk = m[offset + k];
      double& vk = v[offset + k];
      mk = beta1 * mk + (1.0 - beta1) * grads[k];
      vk = beta2 * vk + (1.0 - beta2) * grads[k] * grads[k];
      params[k] -= lr * (mk / c1) / (std::sqrt(vk / c2) + eps);
    }
  }
};

void check_split(const std::vector<Example>& split, const char* name) {
  if (split.empty()) throw ValidationError(std::string(name) + " split is empty");
}

// Mutable view of delta logits; LogitMatrix only exposes const values.
std::span<double> logit_values(LogitMatrix& m) {
  return {&m(0, 0), m.size() * m.size()};
}

}  // namespace

RunResult train_once(const EncoderConfig& cfg, const Splits& splits, std::uint64_t seed,
                     Model* final_model) {
  cfg.validate();
  check_split(splits.train, "train");
  check_split(splits.dev, "dev");
  check_split(splits.test, "test");
  const std::size_t dim = splits.train.front().x.cols();
  for (const auto* split : {&splits.train, &splits.dev, &splits.test}) {
    for (const Example& e : *split) {
      if (e.x.cols() != dim) throw ValidationError("inconsistent embedding width across splits");
      if (e.x.rows() > cfg.max_len) throw ValidationError("sentence longer than max_len");
      if (e.label < 0 || e.label >= cfg.num_classes) {
        throw ValidationError("label " + std::to_string(e.label) + " outside [0, " +
                              std::to_string(cfg.num_classes) + ")");
      }
    }
  }

  std::mt19937_64 rng(seed);
  Model model = init_model(cfg, dim, rng);
  const std::size_t n = cfg.max_len;
  const std::size_t head_size = model.weight.values().size() + model.bias.size();
  Adam adam(head_size + (cfg.trainable_delta ? n * n : 0));

  std::vector<const Example*> order(splits.train.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = &splits.train[k];

  RunResult result;
  result.seed = seed;
  result.best_dev_accuracy = -1.0;
  Model best = model;
  double lr = cfg.lr;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Batch batch(order.data() + start, stop - start);
      const Matrix mask = sample_dropout(batch.size(), dim, cfg.dropout_rate, rng);
      const Gradients g = loss_and_grads(model, batch, &mask);
      ++adam.step;
      adam.update(model.weight.values(), g.weight.values(), 0, lr);
      adam.update(model.bias, g.bias, model.weight.values().size(), lr);
      if (cfg.trainable_delta) {
        adam.update(logit_values(model.delta_logits), g.delta_logits, head_size, lr);
        model.refresh_delta();
      }
    }
    const double dev = accuracy(model, splits.dev);
    if (dev > result.best_dev_accuracy) {
      result.best_dev_accuracy = dev;
      result.best_epoch = epoch;
      best = model;
    }
    lr *= cfg.lr_decay;
  }
  result.test_accuracy = accuracy(best, splits.test);
  if (final_model != nullptr) *final_model = std::move(model);
  return result;
}

TrainResult train(const EncoderConfig& cfg, const Splits& splits, std::size_t jobs) {
  cfg.validate();
  TrainResult out;
  out.config = cfg;
  const WeightMatrix delta = encodings::attenuated_weights(cfg.params());
  out.locality = metrics::locality_matrix(delta);
  out.symmetry = metrics::symmetry_matrix(delta);
  out.runs.resize(static_cast<std::size_t>(cfg.runs));
  parallel_for(out.runs.size(), jobs, [&](std::size_t k) {
    out.runs[k] = train_once(cfg, splits, cfg.seed + k);
  });
  double sum = 0.0;
  for (const auto& r : out.runs) sum += r.test_accuracy;
  out.mean_test_accuracy = sum / static_cast<double>(out.runs.size());
  double var = 0.0;
  for (const auto& r : out.runs) {
    var += (r.test_accuracy - out.mean_test_accuracy) * (r.test_accuracy - out.mean_test_accuracy);
  }
  out.std_test_accuracy = std::sqrt(var / static_cast<double>(out.runs.size()));
  return out;
}

std::vector<SweepRow> sweep(const EncoderConfig& base, const std::vector<SweepPoint>& grid,
                            const Splits& splits, std::size_t jobs) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const SweepPoint& pt : grid) {
    EncoderConfig cfg = base;
    cfg.w = pt.w;
    cfg.s = pt.s;
    SweepRow row;
    row.w = pt.w;
    row.s = pt.s;
    row.result = train(cfg, splits, jobs);
    row.locality = row.result.locality;
    row.symmetry = row.result.symmetry;
    row.acc_mean = row.result.mean_test_accuracy;
    row.acc_std = row.result.std_test_accuracy;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "w,s,loc,sym,acc_mean,acc_std\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.w << ',' << r.s << ',' << r.locality << ',' << r.symmetry << ',' << r.acc_mean << ','
       << r.acc_std << '\n';
  }
  return os.str();
}

}  // namespace pelab::posattn
