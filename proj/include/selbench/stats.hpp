#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace selbench {

enum class TestSide { Greater, Less };

namespace detail {

// Regularized incomplete beta I_x(a,b) via the Lentz continued fraction
// (Numerical Recipes style). Converges to ~1e-15 for the arguments the
// t distribution produces.
inline double betacf(double a, double b, double x) {
  constexpr int max_iter = 300;
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Inverse standard normal CDF, Acklam's rational approximation refined with
// one Halley step; good to ~1e-15 on (0,1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
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
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

// P(X >= k) for X ~ Binomial(n, p). Exact positive-term summation in the log
// domain; no cancellation, so the relative error stays near machine epsilon.
inline double binomial_tail(int k, int n, double p) {
  if (k < 0 || n < 0 || k > n) throw std::invalid_argument("binomial_tail: need 0 <= k <= n");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("binomial_tail: p outside [0,1]");
  if (k == 0) return 1.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lgn = std::lgamma(n + 1.0);
  long double sum = 0.0L;
  for (int i = k; i <= n; ++i) {
    const double lt = lgn - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + i * lp + (n - i) * lq;
    sum += std::exp((long double)lt);
  }
  return std::min(1.0, (double)sum);
}

// Holm step-down rejection mask at family-wise level alpha. Sorts ascending,
// rejects while p_(i) <= alpha / (m - i + 1), stops at the first failure.
inline std::vector<bool> holm_adjust(const std::vector<double>& pvalues, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("holm_adjust: alpha outside (0,1)");
  const std::size_t m = pvalues.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pvalues[a] != pvalues[b]) return pvalues[a] < pvalues[b];
    return a < b;
  });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (pvalues[order[i]] <= alpha / static_cast<double>(m - i)) {
      reject[order[i]] = true;
    } else {
      break;
    }
  }
  return reject;
}

namespace detail {

// Doubled midranks of |d| (doubling keeps tie-averaged ranks integral).
inline std::vector<std::int64_t> doubled_midranks(const std::vector<double>& absd) {
  const std::size_t n = absd.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return absd[a] < absd[b]; });
  std::vector<std::int64_t> r2(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && absd[order[j + 1]] == absd[order[i]]) ++j;
    // ranks i+1 .. j+1 share the midrank (i + j + 2) / 2; doubled: i + j + 2
    const std::int64_t doubled = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t t = i; t <= j; ++t) r2[order[t]] = doubled;
    i = j + 1;
  }
  return r2;
}

}  // namespace detail

// Paired one-sided Wilcoxon signed-rank test. Zero differences are dropped
// (classic Wilcoxon); ties get average ranks. Exact null distribution by
// dynamic programming for up to 25 nonzero pairs, normal approximation with
// tie correction and continuity correction beyond that. If every difference
// is zero there is no evidence either way and the p-value is 1.
inline double wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                   TestSide side) {
  if (x.size() != y.size() || x.empty())
    throw std::invalid_argument("wilcoxon_signed_rank: need equal-length nonempty samples");
  std::vector<double> absd;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;
    absd.push_back(std::fabs(d));
    positive.push_back(d > 0.0);
  }
  const std::size_t n = absd.size();
  if (n == 0) return 1.0;

  const auto r2 = detail::doubled_midranks(absd);
  std::int64_t w2 = 0;  // doubled signed-rank statistic (sum of positive ranks)
  std::int64_t total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += r2[i];
    if (positive[i]) w2 += r2[i];
  }

  if (n <= 25) {
    // counts[s] = number of sign assignments with doubled positive-rank sum s
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(total2) + 1, 0);
    counts[0] = 1;
    std::int64_t reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      reach += r2[i];
      for (std::int64_t s = reach; s >= r2[i]; --s) counts[s] += counts[s - r2[i]];
    }
    std::uint64_t favourable = 0;
    if (side == TestSide::Greater) {
      for (std::int64_t s = w2; s <= total2; ++s) favourable += counts[s];
    } else {
      for (std::int64_t s = 0; s <= w2; ++s) favourable += counts[s];
    }
    return static_cast<double>(favourable) / std::ldexp(1.0, static_cast<int>(n));
  }

  // Normal approximation. Tie correction subtracts sum(t^3 - t)/48 from the
  // null variance; continuity correction of one half rank toward the mean.
  const double w = static_cast<double>(w2) / 2.0;
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<double> sorted(absd);
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double sd = std::sqrt(var);
  if (side == TestSide::Greater) return 1.0 - normal_cdf((w - 0.5 - mean) / sd);
  return normal_cdf((w + 0.5 - mean) / sd);
}

// One-sided paired t test on precomputed differences. Zero variance is
// degenerate: the direction is then certain, so the p-value collapses to 0
// when every difference lies strictly on the tested side and to 1 otherwise.
inline double paired_t_test(const std::vector<double>& diffs, TestSide side) {
  const std::size_t n = diffs.size();
  if (n < 2) throw std::invalid_argument("paired_t_test: need at least 2 differences");
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double var = ss / static_cast<double>(n - 1);
  if (var == 0.0) {
    const bool significant = side == TestSide::Greater ? mean > 0.0 : mean < 0.0;
    return significant ? 0.0 : 1.0;
  }
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  const double df = static_cast<double>(n - 1);
  // survival P(T >= t) via the incomplete beta
  const double x = df / (df + t * t);
  const double tail_half = 0.5 * detail::incomplete_beta(df / 2.0, 0.5, x);
  const double p_greater = t >= 0.0 ? tail_half : 1.0 - tail_half;
  return side == TestSide::Greater ? p_greater : 1.0 - p_greater;
}

}  // namespace selbench
