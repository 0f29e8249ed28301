#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "pelab/metrics.hpp"

using namespace pelab;
using namespace pelab::metrics;

namespace {

// Direct transcriptions used as oracles.
double oracle_locality(const std::vector<double>& row, std::size_t i) {
  double acc = 0.0;
  for (std::size_t j = 1; j <= row.size(); ++j) {
    const double dist = std::abs(static_cast<double>(i) - static_cast<double>(j));
    acc += row[j - 1] * std::pow(2.0, -dist);
  }
  return acc;
}

std::optional<double> oracle_symmetry(const std::vector<double>& row, std::size_t i) {
  const std::size_t n = row.size();
  const std::size_t m = std::min(i - 1, n - i);
  if (m == 0) return std::nullopt;
  // Truncated window of length 2m+1 centered at i; compare entry j with 2m+2-j.
  std::vector<double> window(row.begin() + static_cast<long>(i - 1 - m),
                             row.begin() + static_cast<long>(i + m));
  std::vector<double> d;
  for (std::size_t j = 1; j <= m; ++j) d.push_back(std::abs(window[j - 1] - window[window.size() - j]));
  const double lo = *std::min_element(d.begin(), d.end());
  const double hi = *std::max_element(d.begin(), d.end());
  double mean = 0.0;
  for (double v : d) mean += hi > lo ? (v - lo) / (hi - lo) : 0.0;
  return 1.0 - mean / static_cast<double>(m);
}

std::vector<double> random_row(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> r(n);
  double s = 0.0;
  for (auto& v : r) s += (v = u(rng));
  for (auto& v : r) v /= s;
  return r;
}

WeightMatrix random_matrix(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = random_row(rng, n);
    vals.insert(vals.end(), r.begin(), r.end());
  }
  return WeightMatrix(n, vals);
}

}  // namespace

TEST_CASE("locality of single rows") {
  CHECK(locality_row(std::vector<double>{1, 0, 0, 0, 0}, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(locality_row(std::vector<double>{0, 0, 0, 0, 1}, 1) - 1.0 / 16.0) <= 1e-12);
  CHECK(std::abs(locality_row(std::vector<double>{0.2, 0.2, 0.2, 0.2, 0.2}, 3) - 0.5) <= 1e-12);
  CHECK_THROWS_AS(locality_row(std::vector<double>{1, 0}, 0), ValidationError);
  CHECK_THROWS_AS(locality_row(std::vector<double>{1, 0}, 3), ValidationError);
  CHECK_THROWS_AS(locality_row(std::vector<double>{1.2, -0.2}, 1), ValidationError);
  CHECK_THROWS_AS(locality_row(std::vector<double>{0.5, 0.4}, 1), ValidationError);
}

TEST_CASE("locality falls off as a one-hot moves away") {
  for (std::size_t n = 1; n <= 32; ++n) {
    for (std::size_t i = 1; i <= n; ++i) {
      double prev = 2.0;
      // Walk the mass outward to the right, then to the left.
      for (std::size_t j = i; j <= n; ++j) {
        std::vector<double> row(n, 0.0);
        row[j - 1] = 1.0;
        const double loc = locality_row(row, i);
        CHECK(loc < prev);
        if (j == i) CHECK(loc == 1.0);
        prev = loc;
      }
      prev = 2.0;
      for (std::size_t j = i; j >= 1; --j) {
        std::vector<double> row(n, 0.0);
        row[j - 1] = 1.0;
        const double loc = locality_row(row, i);
        CHECK(loc < prev);
        prev = loc;
      }
    }
  }
}

TEST_CASE("symmetry of single rows") {
  CHECK(*symmetry_row(std::vector<double>{0.1, 0.2, 0.4, 0.2, 0.1}, 3) == 1.0);
  CHECK(*symmetry_row(std::vector<double>{0.4, 0.1, 0.3, 0.0, 0.2}, 3) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(symmetry_row(std::vector<double>{1, 0, 0, 0, 0}, 1).has_value());
  CHECK_FALSE(symmetry_row(std::vector<double>{0, 0, 0, 0, 1}, 5).has_value());
  CHECK_THROWS_AS(symmetry_row(std::vector<double>{1, 0}, 3), ValidationError);
}

TEST_CASE("a single mirrored discrepancy scores 1 - 1/m") {
  for (std::size_t m = 2; m <= 8; ++m) {
    const std::size_t n = 2 * m + 1;
    const std::size_t i = m + 1;
    for (std::size_t k = 1; k <= m; ++k) {
      std::vector<double> row(n, 1.0);
      row[i - 1 - k] += 0.5;  // only the pair at distance k differs
      double s = 0.0;
      for (double v : row) s += v;
      for (double& v : row) v /= s;
      CHECK(*symmetry_row(row, i) == doctest::Approx(1.0 - 1.0 / static_cast<double>(m)).epsilon(1e-12));
    }
  }
}

TEST_CASE("equal nonzero discrepancies are flagged") {
  // Both discrepancies are exactly 0.125.
  const std::vector<double> row{0.25, 0.125, 0.25, 0.25, 0.125};
  const auto d = symmetry_row_detail(row, 3);
  REQUIRE(d.value.has_value());
  CHECK(*d.value == 1.0);
  CHECK(d.flat_nonzero);
  CHECK_FALSE(symmetry_row_detail(std::vector<double>{0.1, 0.2, 0.4, 0.2, 0.1}, 3).flat_nonzero);
}

TEST_CASE("row metrics agree with the direct oracles") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    const auto row = random_row(rng, n);
    for (std::size_t i = 1; i <= n; ++i) {
      CHECK(locality_row(row, i) == doctest::Approx(oracle_locality(row, i)).epsilon(1e-12));
      const auto got = symmetry_row(row, i);
      const auto want = oracle_symmetry(row, i);
      REQUIRE(got.has_value() == want.has_value());
      if (got) {
        CHECK(*got == doctest::Approx(*want).epsilon(1e-12));
        CHECK(*got >= 0.0);
        CHECK(*got <= 1.0);
      }
    }
  }
}

TEST_CASE("matrix metrics") {
  CHECK(locality_matrix(WeightMatrix::identity(5)) == 1.0);
  double brute = 0.0;
  for (int i = 1; i <= 5; ++i)
    for (int j = 1; j <= 5; ++j) brute += 0.2 * std::pow(2.0, -std::abs(i - j));
  brute /= 5.0;
  // Rows by hand: 0.3875, 0.475, 0.5, 0.475, 0.3875.
  CHECK(brute == doctest::Approx(2.225 / 5.0).epsilon(1e-12));
  CHECK(locality_matrix(WeightMatrix::uniform(5)) == doctest::Approx(brute).epsilon(1e-12));
  CHECK(symmetry_matrix(WeightMatrix::uniform(5)) == 1.0);
  CHECK_THROWS_AS(symmetry_matrix(WeightMatrix::identity(2)), UndefinedSymmetry);

  std::mt19937_64 rng(77);
  const WeightMatrix m = random_matrix(rng, 9);
  const auto rep = report_for_matrix(m);
  double loc = 0.0;
  double sym = 0.0;
  std::size_t rows = 0;
  for (std::size_t i = 1; i <= 9; ++i) {
    const std::vector<double> row(m.row(i - 1).begin(), m.row(i - 1).end());
    loc += oracle_locality(row, i);
    if (auto s = oracle_symmetry(row, i)) {
      sym += *s;
      ++rows;
    }
  }
  CHECK(rep.locality == doctest::Approx(loc / 9.0).epsilon(1e-12));
  CHECK(rep.symmetry == doctest::Approx(sym / static_cast<double>(rows)).epsilon(1e-12));
  CHECK(rep.per_row_locality.size() == 9);
  CHECK(rep.per_row_symmetry.size() == 7);
  CHECK(rep.per_row_symmetry.front().first == 2);
}

TEST_CASE("scopes") {
  CHECK(parse_scope("per-head") == Scope::kPerHead);
  CHECK(to_string(parse_scope("model-average")) == "model-average");
  CHECK_THROWS_AS(parse_scope("whole"), ValidationError);
}

TEST_CASE("tensor reports average slices before scoring") {
  const std::size_t n = 5;
  AttentionTensor t;
  t.layers = 2;
  t.heads = 2;
  t.n = n;
  t.tokens.assign(n, "x");
  t.special_mask.assign(n, false);
  std::mt19937_64 rng(5);
  std::vector<WeightMatrix> slices;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < n; ++i) {
      auto r = random_row(rng, n);
      for (double v : r) {
        t.values.push_back(static_cast<float>(v));
        vals.push_back(static_cast<float>(v));
      }
    }
    slices.emplace_back(n, vals);
  }
  t.validate();

  SUBCASE("identity and uniform heads") {
    AttentionTensor two = tensor_from_matrix(WeightMatrix::identity(n), "m");
    two.heads = 2;
    const auto u = WeightMatrix::uniform(n);
    for (double v : u.values()) two.values.push_back(static_cast<float>(v));
    two.validate();
    const auto reps = metric_report(two, Scope::kModelAverage);
    REQUIRE(reps.size() == 1);
    std::vector<double> mean;
    for (std::size_t k = 0; k < n * n; ++k)
      mean.push_back(0.5 * (WeightMatrix::identity(n).values()[k] + static_cast<double>(static_cast<float>(u.values()[k]))));
    const WeightMatrix avg(n, mean);
    CHECK(reps[0].locality == doctest::Approx(locality_matrix(avg)).epsilon(1e-9));
    CHECK(reps[0].symmetry == doctest::Approx(symmetry_matrix(avg)).epsilon(1e-9));
  }

  SUBCASE("model average equals metrics of the explicit mean") {
    std::vector<double> mean(n * n, 0.0);
    for (const auto& s : slices)
      for (std::size_t k = 0; k < n * n; ++k) mean[k] += s.values()[k] / 4.0;
    const WeightMatrix avg(n, mean);
    const auto reps = metric_report(t, Scope::kModelAverage);
    REQUIRE(reps.size() == 1);
    CHECK(reps[0].locality == doctest::Approx(locality_matrix(avg)).epsilon(1e-12));
    CHECK(reps[0].symmetry == doctest::Approx(symmetry_matrix(avg)).epsilon(1e-12));
  }

  SUBCASE("per-head and per-layer shapes and order") {
    const auto heads = metric_report(t, Scope::kPerHead, 3);
    REQUIRE(heads.size() == 4);
    CHECK(*heads[3].layer == 1);
    CHECK(*heads[3].head == 1);
    CHECK(heads[2].locality == doctest::Approx(locality_matrix(slices[2])).epsilon(1e-12));
    const auto layers = metric_report(t, Scope::kPerLayer);
    REQUIRE(layers.size() == 2);
    CHECK_FALSE(layers[0].head.has_value());
  }

  SUBCASE("jobs do not change results") {
    const auto a = metric_report(t, Scope::kPerHead, 1);
    const auto b = metric_report(t, Scope::kPerHead, 4);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].locality == b[k].locality);
      CHECK(a[k].symmetry == b[k].symmetry);
    }
  }

  SUBCASE("special positions are dropped") {
    t.special_mask[0] = true;
    const auto reps = metric_report(t, Scope::kPerHead);
    CHECK(reps[0].n == n - 1);
    CHECK(reps[0].per_row_locality.size() == n - 1);
    t.special_mask.assign(n, true);
    CHECK_THROWS_AS(metric_report(t, Scope::kModelAverage), ValidationError);
  }
}
