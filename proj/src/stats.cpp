// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace commenotes::stats {
namespace {

constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;
constexpr double kPi = 3.14159265358979323846;

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// Number of +/- sign assignments (Wilcoxon) whose doubled positive-rank sum
// equals s, for every s.
std::vector<double> signed_rank_counts(std::span<const long long> doubled_ranks) {
  const long long total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0LL);
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long long reach = 0;
  for (const long long r : doubled_ranks) {
    for (long long s = reach; s >= 0; --s) {
      if (counts[s] != 0.0) counts[s + r] += counts[s];
    }
    reach += r;
  }
  return counts;
}

// counts[s] = number of size-k subsets of `doubled_ranks` with sum s.
std::vector<double> subset_sum_counts(std::span<const long long> doubled_ranks, std::size_t k) {
  const long long total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0LL);
  const auto width = static_cast<std::size_t>(total) + 1;
  std::vector<std::vector<double>> table(k + 1, std::vector<double>(width, 0.0));
  table[0][0] = 1.0;
  std::size_t used = 0;
  for (const long long r : doubled_ranks) {
    ++used;
    for (std::size_t j = std::min(k, used); j >= 1; --j) {
      for (std::size_t s = width; s-- > static_cast<std::size_t>(r);) {
        table[j][s] += table[j - 1][s - static_cast<std::size_t>(r)];
      }
    }
  }
  return table[k];
}

// Two-sided p from a discrete count distribution: twice the smaller tail.
double two_sided_from_counts(const std::vector<double>& counts, long long observed) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double lower = 0.0, upper = 0.0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    const auto ss = static_cast<long long>(s);
    if (ss <= observed) lower += counts[s];
    if (ss >= observed) upper += counts[s];
  }
  return clamp01(2.0 * std::min(lower, upper) / total);
}

std::vector<long long> doubled(std::span<const double> ranks) {
  std::vector<long long> out;
  out.reserve(ranks.size());
  for (const double r : ranks) out.push_back(std::llround(2.0 * r));
  return out;
}

double tie_term(std::span<const double> values) {
  double sum = 0.0;
  for (const auto t : tie_group_sizes(values)) {
    const double td = static_cast<double>(t);
    sum += td * td * td - td;
  }
  return sum;
}

void require_paired(std::span<const double> a, std::span<const double> b, std::size_t min_n,
                    const char* who) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": unequal lengths");
  if (a.size() < min_n) throw std::invalid_argument(std::string(who) + ": too few pairs");
}

}  // namespace

std::string_view to_string(StatisticName n) {
  switch (n) {
    case StatisticName::W: return "W";
    case StatisticName::H: return "H";
    case StatisticName::t: return "t";
    case StatisticName::U: return "U";
    case StatisticName::rho: return "rho";
    case StatisticName::z: return "z";
    case StatisticName::k: return "k";
  }
  return "z";
}

std::string_view to_string(PMethod m) {
  switch (m) {
    case PMethod::Exact: return "exact";
    case PMethod::Normal: return "normal";
    case PMethod::Distribution: return "distribution";
  }
  return "distribution";
}

std::string_view to_string(IntervalMethod m) {
  return m == IntervalMethod::Wilson ? "wilson" : "wald";
}

json to_json(const TestResult& r) {
  json obj{{"statistic_name", std::string(to_string(r.statistic_name))},
           {"statistic", r.statistic},
           {"p_value", r.p_value},
           {"n", r.n},
           {"method", std::string(to_string(r.method))}};
  obj["df"] = r.df ? json(*r.df) : json(nullptr);
  obj["effect_size"] = r.effect_size ? json(*r.effect_size) : json(nullptr);
  obj["z"] = r.z ? json(*r.z) : json(nullptr);
  return obj;
}

json to_json(const ProportionCI& ci) {
  return json{{"p_hat", ci.p_hat},   {"n", ci.n},         {"lower", ci.lower},
              {"upper", ci.upper},   {"level", ci.level}, {"method", std::string(to_string(ci.method))}};
}

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("regularized_gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return clamp01(gamma_p_series(a, x));
  return clamp01(1.0 - gamma_q_continued_fraction(a, x));
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("regularized_gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return clamp01(1.0 - gamma_p_series(a, x));
  return clamp01(gamma_q_continued_fraction(a, x));
}

double regularized_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("regularized_beta: bad shape");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return clamp01(front * beta_continued_fraction(a, b, x) / a);
  return clamp01(1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }
double two_sided_normal_p(double z) { return clamp01(std::erfc(std::fabs(z) / std::sqrt(2.0))); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("normal_quantile: p outside (0, 1)");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x = 0.0;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * kPi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double chi_square_sf(double x, int df) {
  if (df < 1) throw std::invalid_argument("chi_square_sf: df must be positive");
  if (x < 0.0 || std::isnan(x)) throw std::invalid_argument("chi_square_sf: x must be >= 0");
  return regularized_gamma_q(df / 2.0, x / 2.0);
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_sf: df must be positive");
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

double two_sided_t_p(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("two_sided_t_p: df must be positive");
  return clamp01(regularized_beta(df / 2.0, 0.5, df / (df + t * t)));
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::vector<std::size_t> tie_group_sizes(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> out;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    if (j > i) out.push_back(j - i + 1);
    i = j + 1;
  }
  return out;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("variance needs at least two values");
  const double m = mean(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: bad lengths");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("pearson: constant input vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                std::size_t exact_max) {
  require_paired(a, b, 1, "wilcoxon_signed_rank");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw DegenerateInputError("wilcoxon_signed_rank: all differences are zero");

  std::vector<double> magnitudes;
  magnitudes.reserve(diffs.size());
  for (const double d : diffs) magnitudes.push_back(std::fabs(d));
  const auto ranks = average_ranks(magnitudes);

  double w = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0.0) w += ranks[i];
  }
  const double n = static_cast<double>(diffs.size());
  const double mu = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(magnitudes) / 48.0;
  const double z = var > 0.0 ? (w - mu) / std::sqrt(var) : 0.0;

  TestResult r;
  r.statistic_name = StatisticName::W;
  r.statistic = w;
  r.n = diffs.size();
  r.z = z;
  r.effect_size = std::fabs(z) / std::sqrt(n);
  if (diffs.size() <= exact_max) {
    const auto ranks2 = doubled(ranks);
    r.p_value = two_sided_from_counts(signed_rank_counts(ranks2), std::llround(2.0 * w));
    r.method = PMethod::Exact;
  } else {
    r.p_value = two_sided_normal_p(z);
    r.method = PMethod::Normal;
  }
  return r;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          std::size_t exact_max) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double big_n = na + nb;
  const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(a.size()), 0.0);
  const double u = rank_sum_a - na * (na + 1.0) / 2.0;

  const double mu = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((big_n + 1.0) - tie_term(pooled) / (big_n * (big_n - 1.0)));
  const double z = var > 0.0 ? (u - mu) / std::sqrt(var) : 0.0;

  TestResult r;
  r.statistic_name = StatisticName::U;
  r.statistic = u;
  r.n = a.size() + b.size();
  r.z = z;
  r.effect_size = std::fabs(z) / std::sqrt(big_n);
  if (a.size() <= exact_max && b.size() <= exact_max) {
    const auto ranks2 = doubled(ranks);
    r.p_value = two_sided_from_counts(subset_sum_counts(ranks2, a.size()),
                                      std::llround(2.0 * rank_sum_a));
    r.method = PMethod::Exact;
  } else {
    r.p_value = var > 0.0 ? two_sided_normal_p(z) : 1.0;
    r.method = PMethod::Normal;
  }
  return r;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis: need at least two groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("kruskal_wallis: empty group");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const auto ranks = average_ranks(pooled);
  const double n = static_cast<double>(pooled.size());
  double sum_sq = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rs += ranks[offset + i];
    sum_sq += rs * rs / static_cast<double>(g.size());
    offset += g.size();
  }
  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  double h = 0.0;
  if (correction > 0.0) {
    h = (12.0 / (n * (n + 1.0)) * sum_sq - 3.0 * (n + 1.0)) / correction;
    if (std::fabs(h) < 1e-12) h = 0.0;
  }
  const int df = static_cast<int>(groups.size()) - 1;
  TestResult r;
  r.statistic_name = StatisticName::H;
  r.statistic = h;
  r.df = df;
  r.n = pooled.size();
  r.p_value = chi_square_sf(std::max(h, 0.0), df);
  return r;
}

TestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t: each sample needs >= 2 values");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = variance(a) / na;
  const double vb = variance(b) / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) throw DegenerateInputError("welch_t: both samples have zero variance");
  const double t = (mean(a) - mean(b)) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  TestResult r;
  r.statistic_name = StatisticName::t;
  r.statistic = t;
  r.df = df;
  r.n = a.size() + b.size();
  r.p_value = two_sided_t_p(t, df);
  return r;
}

TestResult paired_t(std::span<const double> a, std::span<const double> b) {
  require_paired(a, b, 2, "paired_t");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double sd = std::sqrt(variance(d));
  if (sd == 0.0) throw DegenerateInputError("paired_t: zero variance of differences");
  const double n = static_cast<double>(d.size());
  const double m = mean(d);
  const double t = m / (sd / std::sqrt(n));
  TestResult r;
  r.statistic_name = StatisticName::t;
  r.statistic = t;
  r.df = n - 1.0;
  r.n = d.size();
  r.effect_size = m / sd;
  r.p_value = two_sided_t_p(t, n - 1.0);
  return r;
}

TestResult spearman(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, 3, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double rho = pearson(rx, ry);
  const double n = static_cast<double>(x.size());
  TestResult r;
  r.statistic_name = StatisticName::rho;
  r.statistic = rho;
  r.df = n - 2.0;
  r.n = x.size();
  if (std::fabs(rho) >= 1.0) {
    r.p_value = 0.0;
  } else {
    const double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
    r.p_value = two_sided_t_p(t, n - 2.0);
  }
  return r;
}

TestResult binomial_test(std::uint64_t successes, std::uint64_t n, double p0) {
  if (n == 0) throw std::invalid_argument("binomial_test: n must be positive");
  if (successes > n) throw std::invalid_argument("binomial_test: successes exceed n");
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("binomial_test: p0 outside (0, 1)");
  const double nd = static_cast<double>(n);
  auto log_pmf = [&](std::uint64_t k) {
    const double kd = static_cast<double>(k);
    return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
           kd * std::log(p0) + (nd - kd) * std::log1p(-p0);
  };
  const double observed = log_pmf(successes);
  // Relative slack so outcomes tied in probability with the observed one count.
  const double threshold = observed + std::log1p(1e-7);
  double p = 0.0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    const double lp = log_pmf(k);
    if (lp <= threshold) p += std::exp(lp);
  }
  TestResult r;
  r.statistic_name = StatisticName::k;
  r.statistic = static_cast<double>(successes);
  r.n = n;
  r.z = (static_cast<double>(successes) - nd * p0) / std::sqrt(nd * p0 * (1.0 - p0));
  r.p_value = clamp01(p);
  r.method = PMethod::Exact;
  return r;
}

ProportionCI proportion_ci(double p_hat, std::uint64_t n, double level, IntervalMethod method) {
  if (n == 0) throw std::invalid_argument("proportion_ci: n must be positive");
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw std::invalid_argument("proportion_ci: p_hat outside [0, 1]");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("proportion_ci: level outside (0, 1)");
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  const double nd = static_cast<double>(n);
  ProportionCI ci{p_hat, n, 0.0, 0.0, level, method};
  if (method == IntervalMethod::Wald) {
    const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / nd);
    ci.lower = p_hat - half;
    ci.upper = p_hat + half;
  } else {
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double centre = (p_hat + z2 / (2.0 * nd)) / denom;
    const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / nd + z2 / (4.0 * nd * nd)) / denom;
    ci.lower = centre - half;
    ci.upper = centre + half;
  }
  ci.lower = std::clamp(ci.lower, 0.0, p_hat);
  ci.upper = std::clamp(ci.upper, p_hat, 1.0);
  return ci;
}

ProportionCI binomial_ci(std::uint64_t successes, std::uint64_t n, double level, IntervalMethod method) {
  if (n == 0) throw std::invalid_argument("binomial_ci: n must be positive");
  if (successes > n) throw std::invalid_argument("binomial_ci: successes exceed n");
  return proportion_ci(static_cast<double>(successes) / static_cast<double>(n), n, level, method);
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const double scaled = std::min(1.0, static_cast<double>(m - rank) * p_values[order[rank]]);
    running = std::max(running, scaled);
    adjusted[order[rank]] = running;
  }
  return adjusted;
}

}  // namespace commenotes::stats
