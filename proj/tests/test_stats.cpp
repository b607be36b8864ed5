// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <catch_amalgamated.hpp>

#include "commenotes/stats.hpp"
#include "oracles.hpp"

using namespace commenotes::stats;
using Catch::Approx;

namespace oracle = commenotes::testing::oracle;

TEST_CASE("chi-square survival", "[stats][distributions]") {
  CHECK(chi_square_sf(4.250, 3) == Approx(0.2357).margin(5e-4));
  CHECK(chi_square_sf(1.651, 3) == Approx(0.6479).margin(5e-4));
  for (const double x : {0.1, 1.0, 3.5, 10.0, 40.0}) {
    CHECK(chi_square_sf(x, 2) == Approx(std::exp(-x / 2)).epsilon(1e-12));
    CHECK(chi_square_sf(x, 1) == Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-10));
  }
  CHECK(chi_square_sf(0.0, 4) == 1.0);
}

TEST_CASE("normal and t distributions", "[stats][distributions]") {
  CHECK(normal_cdf(1.96) == Approx(0.9750021048517795).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == Approx(0.0).margin(1e-15));
  for (const double p : {1e-10, 0.001, 0.2, 0.7, 0.9999}) {
    CHECK(normal_cdf(normal_quantile(p)) == Approx(p).epsilon(1e-10));
  }
  for (const double t : {0.0, 0.5, 1.0, 3.0, 12.0}) {
    CHECK(student_t_sf(t, 1.0) == Approx(0.5 - std::atan(t) / std::numbers::pi).epsilon(1e-10));
    CHECK(student_t_sf(t, 2.0) == Approx(0.5 * (1 - t / std::sqrt(t * t + 2))).epsilon(1e-10));
  }
  CHECK(student_t_sf(-1.0, 2.0) == Approx(1 - student_t_sf(1.0, 2.0)));
  CHECK(two_sided_t_p(2.0, 1e7) == Approx(two_sided_normal_p(2.0)).epsilon(1e-5));
  CHECK(regularized_gamma_p(3.0, 2.0) + regularized_gamma_q(3.0, 2.0) == Approx(1.0));
}

TEST_CASE("ranking helpers", "[stats]") {
  const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6, 5};
  CHECK(average_ranks(v) == oracle::ranks(v));
  CHECK(tie_group_sizes(v) == std::vector<std::size_t>{2, 2});
  CHECK(median({1, 2, 3, 4}) == 2.5);
  CHECK(median({5, 1, 3}) == 3.0);
  CHECK(variance(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}) == Approx(32.0 / 7));
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DegenerateInputError);
}

TEST_CASE("wilcoxon exact p matches sign enumeration for n <= 8", "[stats][oracle]") {
  std::size_t cases = 0;
  const std::array<double, 4> alphabet{-2, -1, 1, 2};
  for (std::size_t n = 1; n <= 8; ++n) {
    std::vector<std::size_t> digits(n, 0);
    for (;;) {
      std::vector<double> a, b(n, 0.0);
      for (const auto d : digits) a.push_back(alphabet[d]);
      const auto r = wilcoxon_signed_rank(a, b);
      REQUIRE(r.method == PMethod::Exact);
      REQUIRE(r.p_value == Approx(oracle::wilcoxon_p(a, b)).margin(1e-9));
      ++cases;
      std::size_t i = 0;
      while (i < n && ++digits[i] == alphabet.size()) digits[i++] = 0;
      if (i == n) break;
    }
  }
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> val(0, 6);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t n = 1 + rep % 8;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(val(rng) * 0.5);
      b.push_back(val(rng) * 0.5);
    }
    const bool all_zero = std::equal(a.begin(), a.end(), b.begin());
    if (all_zero) {
      CHECK_THROWS_AS(wilcoxon_signed_rank(a, b), DegenerateInputError);
      continue;
    }
    const auto r = wilcoxon_signed_rank(a, b);
    REQUIRE(r.p_value == Approx(oracle::wilcoxon_p(a, b)).margin(1e-9));
    ++cases;
  }
  CHECK(cases > 80000);
}

TEST_CASE("mann-whitney exact p matches subset enumeration for n <= 8", "[stats][oracle]") {
  std::size_t cases = 0;
  // Every labelling over a three-letter alphabet for small totals.
  for (std::size_t na = 1; na <= 4; ++na) {
    for (std::size_t nb = 1; na + nb <= 7; ++nb) {
      const std::size_t total = na + nb;
      std::vector<std::size_t> digits(total, 0);
      for (;;) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < total; ++i) (i < na ? a : b).push_back(static_cast<double>(digits[i]));
        const auto r = mann_whitney_u(a, b);
        REQUIRE(r.method == PMethod::Exact);
        REQUIRE(r.p_value == Approx(oracle::mann_whitney_p(a, b)).margin(1e-9));
        ++cases;
        std::size_t i = 0;
        while (i < total && ++digits[i] == 3) digits[i++] = 0;
        if (i == total) break;
      }
    }
  }
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> tied(0, 4);
  std::normal_distribution<double> smooth(0.0, 1.0);
  for (std::size_t na = 1; na <= 8; ++na) {
    for (std::size_t nb = 1; nb <= 8; ++nb) {
      for (int rep = 0; rep < 12; ++rep) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < na; ++i) a.push_back(rep % 2 ? tied(rng) : smooth(rng));
        for (std::size_t i = 0; i < nb; ++i) b.push_back(rep % 2 ? tied(rng) : smooth(rng) + 0.5);
        const auto r = mann_whitney_u(a, b);
        REQUIRE(r.method == PMethod::Exact);
        REQUIRE(r.p_value == Approx(oracle::mann_whitney_p(a, b)).margin(1e-9));
        ++cases;
      }
    }
  }
  CHECK(cases > 5000);
}

TEST_CASE("rank tests fall back to the normal approximation", "[stats]") {
  std::vector<double> a, b;
  for (int i = 0; i < 32; ++i) {
    a.push_back(i < 30 ? i + 0.5 * (1 + i % 2) : i);
    b.push_back(i);
  }
  const auto w = wilcoxon_signed_rank(a, b);
  CHECK(w.method == PMethod::Normal);
  // 30 nonzero differences at 0.5 (15) and 1.0 (15); W = sum of all ranks.
  CHECK(w.n == 30);
  CHECK(w.statistic == 465.0);
  const double mu = 30 * 31 / 4.0;
  const double var = 30 * 31 * 61 / 24.0 - (2 * (3375 - 15)) / 48.0;
  CHECK(*w.z == Approx((465 - mu) / std::sqrt(var)).epsilon(1e-12));
  CHECK(w.p_value == Approx(std::erfc(std::fabs(*w.z) / std::sqrt(2.0))).epsilon(1e-10));
  CHECK(*w.effect_size == Approx(std::fabs(*w.z) / std::sqrt(30.0)));

  std::vector<double> x(9), y(9);
  for (int i = 0; i < 9; ++i) {
    x[i] = i;
    y[i] = i + 4;
  }
  const auto u = mann_whitney_u(x, y);
  CHECK(u.method == PMethod::Normal);
  // pairs with x > y: 1 + 2 + 3 + 4, plus five ties at one half each
  CHECK(u.statistic == 12.5);
  const double var_u = 81.0 / 12 * (19 - 5 * 6.0 / (18 * 17));
  CHECK(*u.z == Approx((12.5 - 40.5) / std::sqrt(var_u)).epsilon(1e-12));
}

TEST_CASE("kruskal-wallis with ties", "[stats]") {
  const std::vector<std::vector<double>> groups{{1, 2, 2, 4}, {3, 3, 5}, {6, 7, 2, 8, 9}};
  std::vector<double> pooled;
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  const auto r = oracle::ranks(pooled);
  const double n = static_cast<double>(pooled.size());
  double h = 0;
  std::size_t at = 0;
  for (const auto& g : groups) {
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) s += r[at++];
    h += s * s / g.size();
  }
  h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1);
  // ties: value 2 three times, value 3 twice
  const double c = 1 - ((27 - 3) + (8 - 2)) / (n * n * n - n);
  const auto k = kruskal_wallis(groups);
  CHECK(k.statistic == Approx(h / c).epsilon(1e-12));
  CHECK(*k.df == 2.0);
  CHECK(k.p_value == Approx(std::exp(-h / c / 2)).epsilon(1e-10));
  const auto same = kruskal_wallis({{1, 2, 3}, {1, 2, 3}});
  CHECK(same.statistic == Approx(0.0).margin(1e-12));
  CHECK(same.p_value == Approx(1.0));
}

TEST_CASE("welch t by hand", "[stats]") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 4, 6, 8, 10, 12};
  const double va = 2.5, vb = 14.0;
  const double se2 = va / 5 + vb / 6;
  const double t = (3.0 - 7.0) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / 5) * (va / 5) / 4 + (vb / 6) * (vb / 6) / 5);
  const auto r = welch_t(a, b);
  CHECK(r.statistic == Approx(t).epsilon(1e-12));
  CHECK(*r.df == Approx(df).epsilon(1e-12));
  CHECK(r.p_value == Approx(2 * student_t_sf(std::fabs(t), df)).epsilon(1e-12));
}

TEST_CASE("paired t and cohen's d", "[stats]") {
  const std::vector<double> a{5, 6, 7, 8, 9};
  const std::vector<double> b{4, 6, 5, 7, 6};
  // d = {1, 0, 2, 1, 3}; mean 1.4, sd sqrt(1.3)
  const auto r = paired_t(a, b);
  CHECK(r.statistic == Approx(1.4 / (std::sqrt(1.3) / std::sqrt(5.0))).epsilon(1e-12));
  CHECK(*r.df == 4.0);
  CHECK(*r.effect_size == Approx(1.4 / std::sqrt(1.3)).epsilon(1e-12));
  CHECK_THROWS_AS(paired_t(std::vector<double>{1, 2}, std::vector<double>{0, 1}), DegenerateInputError);
}

TEST_CASE("spearman on tied data equals rank-then-pearson", "[stats][oracle]") {
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> fixtures{
      {{1, 2, 2, 3, 4, 4, 4, 5}, {2, 1, 3, 3, 5, 4, 6, 6}},
      {{10, 20, 20, 20, 30}, {1, 1, 2, 3, 3}},
      {{0.5, 0.5, 0.5, 1.5, 2.5, 2.5}, {9, 8, 8, 7, 1, 1}},
      {{1, 1, 2, 2}, {1, 2, 1, 2.5}},
  };
  for (const auto& [x, y] : fixtures) {
    const auto r = spearman(x, y);
    CHECK(r.statistic == Approx(oracle::pearson(oracle::ranks(x), oracle::ranks(y))).margin(1e-12));
  }
  const auto& [x4, y4] = fixtures.back();
  const auto r4 = spearman(x4, y4);
  const double t = r4.statistic * std::sqrt(2.0 / (1 - r4.statistic * r4.statistic));
  CHECK(r4.p_value == Approx(1 - std::fabs(t) / std::sqrt(t * t + 2)).epsilon(1e-10));
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}).statistic == Approx(-1.0));
}

TEST_CASE("binomial test is exact", "[stats]") {
  for (const auto& [k, n] : std::vector<std::pair<int, int>>{{505, 720}, {388, 720}, {401, 720}, {354, 720},
                                                             {54, 87}, {3, 10}, {0, 5}, {5, 5}}) {
    const auto r = binomial_test(k, n);
    CHECK(r.p_value == Approx(oracle::binomial_two_sided(k, n)).epsilon(1e-9));
    CHECK(r.statistic_name == StatisticName::k);
    CHECK(r.method == PMethod::Exact);
  }
  CHECK(binomial_test(388, 720).p_value == Approx(0.0403).margin(5e-4));
  CHECK(binomial_test(401, 720).p_value == Approx(0.0025).margin(5e-4));
  CHECK(binomial_test(354, 720).p_value == Approx(0.6819).margin(5e-4));
  CHECK(binomial_test(360, 720).p_value == Approx(1.0));
}

TEST_CASE("proportion intervals", "[stats]") {
  const auto w = binomial_ci(505, 720);
  CHECK(w.lower == Approx(0.667).margin(0.002));
  CHECK(w.upper == Approx(0.734).margin(0.002));
  const auto w2 = proportion_ci(0.539, 720);
  CHECK(w2.lower == Approx(0.502).margin(0.002));
  CHECK(w2.upper == Approx(0.575).margin(0.002));
  const auto wald = binomial_ci(505, 720, 0.95, IntervalMethod::Wald);
  const double se = std::sqrt(505.0 / 720 * (215.0 / 720) / 720);
  CHECK(wald.lower == Approx(505.0 / 720 - normal_quantile(0.975) * se).epsilon(1e-12));
  const auto edge = binomial_ci(10, 10, 0.95, IntervalMethod::Wald);
  CHECK(edge.upper == 1.0);
  CHECK(binomial_ci(0, 10).lower == 0.0);
  CHECK_THROWS_AS(binomial_ci(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(proportion_ci(1.5, 10), std::invalid_argument);
}

TEST_CASE("holm adjustment", "[stats]") {
  const auto adj = holm_adjust(std::vector<double>{0.01, 0.04, 0.03, 0.005});
  CHECK(adj[3] == Approx(0.02));
  CHECK(adj[0] == Approx(0.03));
  CHECK(adj[2] == Approx(0.06));
  CHECK(adj[1] == Approx(0.06));
}
