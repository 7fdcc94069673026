#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "l1clt/errors.hpp"
#include "l1clt/random.hpp"

namespace l1clt::stats {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
/// Upper tail 1 - Phi(x) without cancellation.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }
inline double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorCode::DomainError, "normal_quantile needs p in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// E|Z| for standard normal Z.
inline constexpr double kMeanAbsNormal = 0.79788456080286535588;  // sqrt(2/pi)

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(n - 1);
}

inline double covariance(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = std::min(xs.size(), ys.size());
  if (n < 2) return 0.0;
  const double mx = mean(xs.first(n));
  const double my = mean(ys.first(n));
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (xs[i] - mx) * (ys[i] - my);
  return s / static_cast<double>(n - 1);
}

/// Covariance with its i.i.d. standard error (sd of the centered products / sqrt(n)).
struct CovEstimate {
  double cov = 0.0;
  double std_error = 0.0;
};

inline CovEstimate covariance_with_error(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = std::min(xs.size(), ys.size());
  CovEstimate out;
  if (n < 3) return out;
  const double mx = mean(xs.first(n));
  const double my = mean(ys.first(n));
  double s = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (xs[i] - mx) * (ys[i] - my);
    s += p;
    s2 += p * p;
  }
  const double dn = static_cast<double>(n);
  const double mp = s / dn;
  out.cov = s / (dn - 1.0);
  out.std_error = std::sqrt(std::max(0.0, s2 / dn - mp * mp) / dn);
  return out;
}

/// Unbiased k-statistics k2, k3, k4 (Fisher).
struct KStats {
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
};

inline KStats k_statistics(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  require(xs.size() >= 4, ErrorCode::InvalidArgument, "k-statistics need at least 4 values");
  const double m = mean(xs);
  double s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double x : xs) {
    const double d = x - m;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  const double m2 = s2 / n, m3 = s3 / n, m4 = s4 / n;
  KStats k;
  k.k2 = s2 / (n - 1.0);
  k.k3 = n * n * m3 / ((n - 1.0) * (n - 2.0));
  k.k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
  return k;
}

/// Nonparametric bootstrap: returns the statistic on each of `resamples` resamples.
template <class Statistic>
std::vector<double> bootstrap(std::span<const double> xs, std::size_t resamples, Seed seed,
                              const Statistic& statistic) {
  std::vector<double> out(resamples);
  std::vector<double> buffer(xs.size());
  Rng rng(seed);
  const std::size_t n = xs.size();
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      buffer[i] = xs[static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n];
    }
    out[b] = statistic(std::span<const double>(buffer));
  }
  return out;
}

/// Empirical quantile (linear interpolation, type 7).
inline double quantile(std::vector<double> xs, double p) {
  require(!xs.empty(), ErrorCode::InvalidArgument, "quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// sup_x |F_emp(x) - Phi(x)|.
inline double ks_to_normal(std::span<const double> xs) {
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double c = normal_cdf(s[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - c, c - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic Kolmogorov survival function P(K > lambda).
inline double kolmogorov_sf(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

struct TwoSampleResult {
  double ks = 0.0;
  double permutation_p = 1.0;
  double asymptotic_p = 1.0;
  std::size_t permutations = 0;
};

inline TwoSampleResult ks_permutation_test(std::span<const double> a, std::span<const double> b,
                                           std::size_t permutations, Seed seed) {
  TwoSampleResult out;
  out.ks = ks_two_sample(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ne = na * nb / (na + nb);
  out.asymptotic_p = kolmogorov_sf((std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * out.ks);
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  Rng rng(seed);
  std::size_t exceed = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    std::shuffle(pooled.begin(), pooled.end(), rng);
    const double d = ks_two_sample(std::span<const double>(pooled).first(a.size()),
                                   std::span<const double>(pooled).subspan(a.size()));
    if (d >= out.ks - 1e-15) ++exceed;
  }
  out.permutations = permutations;
  out.permutation_p = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(permutations));
  return out;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

/// Wilson score interval for a binomial proportion at two-sided level `confidence`.
inline Interval wilson_interval(std::size_t hits, std::size_t trials, double confidence) {
  if (trials == 0) return {0.0, 1.0};
  const double z = normal_quantile(0.5 + 0.5 * confidence);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = std::min(xs.size(), ys.size());
  require(n >= 2, ErrorCode::InvalidArgument, "line fit needs two points");
  const double mx = mean(xs.first(n));
  const double my = mean(ys.first(n));
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0.0, ErrorCode::InvalidArgument, "line fit needs distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

/// Upper bound on the Prokhorov distance between the empirical law of `xs` and N(0,1):
/// the smallest eps with Leb{u : |Q_emp(u) - Phi^{-1}(u)| > eps} <= eps under the quantile
/// coupling (Strassen). Each atom's cell uses the worse of its two endpoint gaps.
inline double prokhorov_upper(std::span<const double> xs) {
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  if (n == 0) return 1.0;
  std::vector<double> gaps(n);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ulo = static_cast<double>(i) / dn;
    const double uhi = static_cast<double>(i + 1) / dn;
    const double glo = i == 0 ? HUGE_VAL : std::abs(s[i] - normal_quantile(ulo));
    const double ghi = i + 1 == n ? HUGE_VAL : std::abs(s[i] - normal_quantile(uhi));
    gaps[i] = std::max(glo, ghi);
  }
  std::sort(gaps.begin(), gaps.end(), std::greater<>());
  // With k cells allowed to violate, eps must cover the (k+1)-th largest gap and mass k/n.
  double best = 1.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double gap = k < n ? gaps[k] : 0.0;
    const double eps = std::max(gap, static_cast<double>(k) / dn);
    best = std::min(best, eps);
  }
  return best;
}

}  // namespace l1clt::stats
