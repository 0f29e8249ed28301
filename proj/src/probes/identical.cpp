#include "pelab/errors.hpp"
#include "pelab/parallel.hpp"
#include "pelab/probes.hpp"

namespace pelab::probes {

WeightMatrix identical_word_aggregate(const std::vector<AttentionTensor>& dumps, std::size_t jobs) {
  if (dumps.empty()) throw ValidationError("no dumps to aggregate");
  const std::size_t n = dumps.front().kept_positions().size();
  for (std::size_t k = 0; k < dumps.size(); ++k) {
    const std::size_t kept = dumps[k].kept_positions().size();
    if (kept != n) {
      throw ValidationError("dump " + std::to_string(k) + " has " + std::to_string(kept) +
                            " kept positions; dump 0 has " + std::to_string(n));
    }
  }

  // Per-dump sums first, then a fixed-order reduction across dumps.
  std::vector<std::vector<double>> sums(dumps.size());
  parallel_for(dumps.size(), jobs, [&](std::size_t k) {
    const AttentionTensor& t = dumps[k];
    std::vector<double> acc(n * n, 0.0);
    for (std::size_t l = 0; l < t.layers; ++l) {
      for (std::size_t h = 0; h < t.heads; ++h) {
        const WeightMatrix s = t.masked_slice(l, h);
        auto v = s.values();
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += v[c];
      }
    }
    sums[k] = std::move(acc);
  });

  std::vector<double> total(n * n, 0.0);
  std::size_t slices = 0;
  for (std::size_t k = 0; k < dumps.size(); ++k) {
    for (std::size_t c = 0; c < total.size(); ++c) total[c] += sums[k][c];
    slices += dumps[k].layers * dumps[k].heads;
  }
  for (double& v : total) v /= static_cast<double>(slices);
  return WeightMatrix(n, std::move(total));
}

}  // namespace pelab::probes
