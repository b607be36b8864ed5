// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "commenotes/util/jsonl.hpp"

namespace commenotes::stats {

/// The input admits no test (all differences zero, constant vector, ...).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class StatisticName { W, H, t, U, rho, z, k };
std::string_view to_string(StatisticName n);

enum class PMethod { Exact, Normal, Distribution };
std::string_view to_string(PMethod m);

struct TestResult {
  StatisticName statistic_name = StatisticName::z;
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> df;
  std::size_t n = 0;                  // pairs used, total observations, ...
  std::optional<double> effect_size;  // r for rank tests, Cohen's d for paired t
  std::optional<double> z;            // signed standard score where one exists
  PMethod method = PMethod::Distribution;
};

json to_json(const TestResult& r);

// --- distribution functions -------------------------------------------------

/// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
/// Lentz continued fraction otherwise.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_beta(double a, double b, double x);

double normal_cdf(double z);
double normal_sf(double z);
/// Inverse standard normal CDF (Acklam's rational approximation polished
/// with one Halley step).
double normal_quantile(double p);
double two_sided_normal_p(double z);

/// Upper tail of the chi-square distribution. Requires x >= 0, df >= 1.
double chi_square_sf(double x, int df);

/// Upper tail of Student's t (df may be fractional).
double student_t_sf(double t, double df);
double two_sided_t_p(double t, double df);

// --- ranking helpers --------------------------------------------------------

/// 1-based ranks with ties assigned their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Sizes of groups of equal values (only groups of size >= 2).
std::vector<std::size_t> tie_group_sizes(std::span<const double> values);

double mean(std::span<const double> v);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> v);
/// Median; even-length samples average the two central values.
double median(std::vector<double> v);
double pearson(std::span<const double> x, std::span<const double> y);

// --- tests ------------------------------------------------------------------

/// Paired signed-rank test on a - b. Zero differences are discarded. W is
/// the sum of ranks of positive differences. Exact two-sided p (conditional
/// on ties) when at most `exact_max` nonzero pairs remain; otherwise the
/// tie-corrected normal approximation. effect_size = |z| / sqrt(n_nonzero).
inline constexpr std::size_t kWilcoxonExactMax = 25;
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                std::size_t exact_max = kWilcoxonExactMax);

/// Rank-sum test. U is computed for sample a. Exact two-sided p (conditional
/// on ties) when both samples have at most `exact_max` values; otherwise the
/// tie-corrected normal approximation.
inline constexpr std::size_t kMannWhitneyExactMax = 8;
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          std::size_t exact_max = kMannWhitneyExactMax);

/// Tie-corrected H; p = chi_square_sf(H, k - 1).
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// Welch's unequal-variance t with Welch-Satterthwaite df.
TestResult welch_t(std::span<const double> a, std::span<const double> b);

/// t on differences a - b with df = n - 1; effect_size = Cohen's d.
TestResult paired_t(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of average ranks; p from t with df = n - 2.
TestResult spearman(std::span<const double> x, std::span<const double> y);

/// Exact two-sided binomial test of k successes in n against p0. The p-value
/// sums the probabilities of all outcomes no more likely than the observed one.
TestResult binomial_test(std::uint64_t successes, std::uint64_t n, double p0 = 0.5);

// --- proportions ------------------------------------------------------------

enum class IntervalMethod { Wilson, Wald };
std::string_view to_string(IntervalMethod m);

struct ProportionCI {
  double p_hat = 0.0;
  std::uint64_t n = 0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  IntervalMethod method = IntervalMethod::Wilson;
};

json to_json(const ProportionCI& ci);

/// Interval for a proportion given directly as p_hat. Bounds are clipped to
/// [0, 1]. Throws std::invalid_argument for n == 0 or p_hat outside [0, 1].
ProportionCI proportion_ci(double p_hat, std::uint64_t n, double level = 0.95,
                           IntervalMethod method = IntervalMethod::Wilson);

ProportionCI binomial_ci(std::uint64_t successes, std::uint64_t n, double level = 0.95,
                         IntervalMethod method = IntervalMethod::Wilson);

/// Holm step-down adjusted p-values, in input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

}  // namespace commenotes::stats
