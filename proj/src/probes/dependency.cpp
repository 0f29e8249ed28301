#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "pelab/errors.hpp"
#include "pelab/parallel.hpp"
#include "pelab/probes.hpp"

namespace pelab::probes {

namespace {

struct Counter {
  std::size_t support = 0;
  std::size_t distance_sum = 0;
  std::vector<std::size_t> correct;
};

using Counters = std::map<std::string, Counter>;

Counters count_sentence(const AttentionTensor& t, const DepSentence& s, std::size_t index) {
  const std::size_t len = s.tokens.size();
  const std::size_t kept = t.kept_positions().size();
  if (kept != len) {
    throw ValidationError("sentence " + std::to_string(index + 1) + " has " + std::to_string(len) +
                          " words but its attention has " + std::to_string(kept) +
                          " non-special positions");
  }
  const std::size_t slices = t.layers * t.heads;
  Counters out;
  for (std::size_t w = 0; w < len; ++w) {
    Counter& c = out[s.deprels[w]];
    if (c.correct.empty()) c.correct.assign(slices, 0);
    ++c.support;
    const std::size_t gold = s.heads[w];
    if (gold != 0) c.distance_sum += gold - 1 > w ? gold - 1 - w : w - (gold - 1);
  }
  for (std::size_t l = 0; l < t.layers; ++l) {
    for (std::size_t h = 0; h < t.heads; ++h) {
      const WeightMatrix slice = t.masked_slice(l, h);
      for (std::size_t w = 0; w < len; ++w) {
        const std::size_t pred = dep_predict(slice, w);
        const std::size_t gold = s.heads[w];
        const bool ok = gold == 0 ? pred == w : pred == gold - 1;
        if (ok) ++out[s.deprels[w]].correct[l * t.heads + h];
      }
    }
  }
  return out;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

std::size_t dep_predict(const WeightMatrix& head_slice, std::size_t word) {
  if (word >= head_slice.size()) {
    throw ValidationError("word " + std::to_string(word) + " outside a " +
                          std::to_string(head_slice.size()) + "-word slice");
  }
  auto row = head_slice.row(word);
  // max_element returns the first maximum, i.e. the smallest index on ties.
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

DepProbeReport dep_probe(const std::vector<AttentionTensor>& tensors, const DepCorpus& corpus,
                         std::size_t top_k, std::size_t jobs) {
  if (tensors.size() != corpus.sentences.size()) {
    throw ValidationError(std::to_string(tensors.size()) + " attention tensors for " +
                          std::to_string(corpus.sentences.size()) + " sentences");
  }
  if (tensors.empty()) throw ValidationError("empty dependency corpus");
  DepProbeReport report;
  report.layers = tensors.front().layers;
  report.heads = tensors.front().heads;
  for (const auto& t : tensors) {
    if (t.layers != report.layers || t.heads != report.heads) {
      throw ValidationError("attention tensors disagree on layer/head counts");
    }
  }

  std::vector<Counters> per_sentence(tensors.size());
  parallel_for(tensors.size(), jobs, [&](std::size_t k) {
    per_sentence[k] = count_sentence(tensors[k], corpus.sentences[k], k);
  });

  Counters total;
  const std::size_t slices = report.layers * report.heads;
  for (const auto& counters : per_sentence) {
    for (const auto& [rel, c] : counters) {
      Counter& dst = total[rel];
      if (dst.correct.empty()) dst.correct.assign(slices, 0);
      dst.support += c.support;
      dst.distance_sum += c.distance_sum;
      for (std::size_t k = 0; k < slices; ++k) dst.correct[k] += c.correct[k];
    }
  }

  for (const auto& [rel, c] : total) {
    RelationResult r;
    r.relation = rel;
    r.support = c.support;
    r.mean_distance = static_cast<double>(c.distance_sum) / static_cast<double>(c.support);
    r.correct = c.correct;
    // First maximum in (layer, head) order.
    const auto best = std::max_element(c.correct.begin(), c.correct.end());
    const auto idx = static_cast<std::size_t>(best - c.correct.begin());
    r.best_layer = idx / report.heads;
    r.best_head = idx % report.heads;
    r.accuracy = static_cast<double>(*best) / static_cast<double>(c.support);
    report.relations.push_back(std::move(r));
  }
  std::stable_sort(report.relations.begin(), report.relations.end(),
                   [](const RelationResult& a, const RelationResult& b) {
                     return a.support > b.support;
                   });
  if (top_k > 0 && report.relations.size() > top_k) report.relations.resize(top_k);

  std::vector<double> short_acc, long_acc, all_acc;
  for (const auto& r : report.relations) {
    all_acc.push_back(r.accuracy);
    (r.mean_distance <= kShortDistance ? short_acc : long_acc).push_back(r.accuracy);
  }
  report.short_avg = mean_of(short_acc);
  report.long_avg = mean_of(long_acc);
  report.macro_avg = mean_of(all_acc);
  return report;
}

std::string format_table(const DepProbeReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "Relation" << std::right << std::setw(10) << "Distance"
     << std::setw(10) << "Accuracy" << std::setw(10) << "Head" << std::setw(10) << "Support"
     << '\n';
  os << std::fixed;
  for (const auto& r : report.relations) {
    os << std::left << std::setw(16) << r.relation << std::right << std::setw(10)
       << std::setprecision(2) << r.mean_distance << std::setw(10) << std::setprecision(1)
       << 100.0 * r.accuracy << std::setw(10)
       << (std::to_string(r.best_layer) + "-" + std::to_string(r.best_head)) << std::setw(10)
       << r.support << '\n';
  }
  auto line = [&](const char* name, const std::optional<double>& v) {
    os << std::left << std::setw(16) << name << std::right << std::setw(20);
    if (v) {
      os << std::setprecision(1) << 100.0 * *v;
    } else {
      os << "-";
    }
    os << '\n';
  };
  line("Short (<=4)", report.short_avg);
  line("Long (>4)", report.long_avg);
  line("Macro", report.macro_avg);
  return os.str();
}

}  // namespace pelab::probes
