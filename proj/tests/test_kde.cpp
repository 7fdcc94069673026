#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "l1clt/kde.hpp"
#include "l1clt/rates.hpp"
#include "l1clt/stats.hpp"

using namespace l1clt;

namespace {
double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
}  // namespace

TEST(Sample, UniformMean) {
  const auto s = sample(uniform_density(), 100000, 101);
  EXPECT_EQ(s.actual_count, 100000u);
  EXPECT_TRUE(std::is_sorted(s.points.begin(), s.points.end()));
  EXPECT_NEAR(stats::mean(s.points), 0.5, 3.0 / std::sqrt(12.0 * 1e5));
}

TEST(Sample, PowerLawCdf) {
  const auto s = sample(power_law_density(0.5), 100000, 202);
  const double frac = static_cast<double>(std::lower_bound(s.points.begin(), s.points.end(), 0.25) - s.points.begin()) / 1e5;
  EXPECT_NEAR(frac, 0.5, 3.0 * std::sqrt(0.25 / 1e5));
}

TEST(Sample, SinglePointInSupport) {
  for (const auto& f : {uniform_density(), gaussian_density(), power_law_density(0.3), holder_density(0.7)}) {
    const auto s = sample(f, 1, 9);
    ASSERT_EQ(s.points.size(), 1u);
    EXPECT_TRUE(f.support().contains(s.points[0])) << f.family();
  }
}

TEST(SampleProperty, SameSeedSamePoints) {
  EXPECT_EQ(sample(gaussian_density(), 500, 77).points, sample(gaussian_density(), 500, 77).points);
  EXPECT_NE(sample(gaussian_density(), 500, 77).points, sample(gaussian_density(), 500, 78).points);
}

TEST(Poissonized, CountMoments) {
  std::vector<double> counts;
  for (std::uint64_t i = 0; i < 1000; ++i)
    counts.push_back(static_cast<double>(sample_poissonized(uniform_density(), 10000, derive_seed(5, 1, i)).actual_count));
  EXPECT_NEAR(stats::mean(counts), 1e4, 3.0 * std::sqrt(1e4 / 1e3));
  EXPECT_NEAR(stats::variance(counts), 1e4, 0.2e4);
}

TEST(Poissonized, EmptySampleRunsThrough) {
  const auto f = uniform_density();
  std::optional<Sample> empty;
  for (std::uint64_t i = 0; i < 100 && !empty; ++i) {
    auto s = sample_poissonized(f, 1, derive_seed(6, 0, i));
    if (s.actual_count == 0) empty = s;
  }
  ASSERT_TRUE(empty.has_value());
  const double h = 0.1;
  const auto xs = std::vector<double>{0.2, 0.5};
  for (double v : evaluate_fn(*empty, builtin_kernel("uniform"), h, xs)) EXPECT_EQ(v, 0.0);
  // ||0 - E f_n|| = int E f_n = 1
  EXPECT_NEAR(l1_deviation_uniform_exact(*empty, h, f, default_window(f, h)), 1.0, 1e-12);
}

TEST(EvaluateFn, Examples) {
  const auto k = builtin_kernel("uniform");
  Sample one{{0.0}, 1, 1, 0, false};
  EXPECT_DOUBLE_EQ(evaluate_fn(one, k, 1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(evaluate_fn(one, k, 1.0, 0.6), 0.0);
  Sample many{std::vector<double>(7, 0.0), 7, 7, 0, false};
  EXPECT_DOUBLE_EQ(evaluate_fn(many, k, 0.5, 0.0), 2.0);
}

TEST(EvaluateFnProperty, IntegratesToOne) {
  const auto f = gaussian_density();
  const auto k = builtin_kernel("epanechnikov");
  const double h = 0.2;
  const auto s = sample(f, 300, 4);
  std::vector<double> xs;
  const double lo = s.points.front() - h, hi = s.points.back() + h, step = h / 400;
  for (double x = lo; x <= hi; x += step) xs.push_back(x);
  const auto v = evaluate_fn(s, k, h, xs);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) acc += 0.5 * (v[i] + v[i + 1]) * step;
  EXPECT_NEAR(acc, 1.0, 1e-4);
}

TEST(MeanFn, Examples) {
  const auto k = builtin_kernel("uniform");
  EXPECT_NEAR(mean_fn(uniform_density(), k, 0.05, 0.4), 1.0, 1e-13);
  EXPECT_NEAR(mean_fn(gaussian_density(), k, 0.2, 0.0), (Phi(0.1) - Phi(-0.1)) / 0.2, 1e-10);
}

TEST(MeanFn, MonteCarloAndPoissonizationConsistency) {
  const auto f = gaussian_density();
  const auto k = builtin_kernel("epanechnikov");
  const double h = 0.3, x = 0.4;
  std::vector<double> fixed, pois;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    fixed.push_back(evaluate_fn(sample(f, 200, derive_seed(8, 0, i)), k, h, x));
    pois.push_back(evaluate_fn(sample_poissonized(f, 200, derive_seed(8, 1, i)), k, h, x));
  }
  const double m = mean_fn(f, k, h, x);
  EXPECT_NEAR(stats::mean(fixed), m, 3.0 * std::sqrt(stats::variance(fixed) / 1000));
  EXPECT_NEAR(stats::mean(pois), m, 3.0 * std::sqrt(stats::variance(pois) / 1000));
}

TEST(Kn, UniformInteriorAndSandwich) {
  const auto k = builtin_kernel("uniform");
  EXPECT_NEAR(kn(uniform_density(), k, 0.02, 0.5), 50.0, 1e-9);
  const auto e = builtin_kernel("epanechnikov");
  const auto f = gaussian_density();
  const double h = 0.01;
  for (double x : {-1.5, -0.3, 0.0, 0.8, 1.9}) {
    const double v = kn(f, e, h, x);
    EXPECT_GE(v, f.pdf(x) * e.l2sq() / (2 * h));
    EXPECT_LE(v, 2 * f.pdf(x) * e.l2sq() / h);
  }
}

TEST(Kn, PoissonizedVarianceMonteCarlo) {
  const auto f = gaussian_density();
  const auto k = builtin_kernel("uniform");
  const double h = 0.2, x = 0.1;
  const std::size_t n = 100;
  std::vector<double> v;
  for (std::uint64_t i = 0; i < 10000; ++i) v.push_back(evaluate_fn(sample_poissonized(f, n, derive_seed(9, 0, i)), k, h, x));
  const double nv = static_cast<double>(n) * stats::variance(v);
  // s.e. of a sample variance: sqrt((m4 - s^4)/N)
  const double m = stats::mean(v);
  double m4 = 0.0;
  for (double a : v) m4 += std::pow(a - m, 4);
  m4 /= static_cast<double>(v.size());
  const double s2 = stats::variance(v);
  const double se = static_cast<double>(n) * std::sqrt((m4 - s2 * s2) / static_cast<double>(v.size()));
  EXPECT_NEAR(nv, kn(f, k, h, x), 5.0 * se);
}

TEST(L1Deviation, GridRefinementAndExactAgreement) {
  const auto f = uniform_density();
  const auto k = builtin_kernel("uniform");
  const double h = 0.1;
  const auto w = default_window(f, h);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto s = sample(f, 1000, derive_seed(10, 0, i));
    const double coarse = l1_deviation(s, k, h, f, w, h / 10).l1_deviation;
    const double fine = l1_deviation(s, k, h, f, w, h / 20).l1_deviation;
    const double exact = l1_deviation_uniform_exact(s, h, f, w);
    // the estimate is a step function, so the grid error is O(step)
    EXPECT_LT(std::abs(coarse - exact), 0.03 * exact);
    EXPECT_LT(std::abs(fine - exact), 0.03 * exact);
    const double finest = l1_deviation(s, k, h, f, w, h / 2000).l1_deviation;
    EXPECT_NEAR(finest, exact, 2e-3 * exact);
  }
}

TEST(L1Deviation, WindowTooSmallRejected) {
  const auto f = uniform_density();
  const auto s = sample(f, 100, 3);
  EXPECT_THROW(l1_deviation_uniform_exact(s, 0.1, f, Interval{0.0, 1.0}), Error);
}

TEST(L1Deviation, ConsistentMedianDecreases) {
  const auto f = uniform_density();
  const auto w = [&](double h) { return default_window(f, h); };
  double prev = 1e9;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const double h = std::pow(static_cast<double>(n), -0.25);
    std::vector<double> v;
    for (std::uint64_t i = 0; i < 101; ++i) v.push_back(l1_deviation_uniform_exact(sample(f, n, derive_seed(11, n, i)), h, f, w(h)));
    const double med = stats::quantile(v, 0.5);
    EXPECT_LT(med, prev);
    prev = med;
  }
}

TEST(GaussianMeanApprox, UniformClosedForm) {
  EXPECT_NEAR(stats::kMeanAbsNormal, std::sqrt(2.0 / std::numbers::pi), 1e-15);
  const auto f = uniform_density();
  const double h = 0.05;
  const std::size_t n = 4000;
  const auto e = density_bounds(f, IntervalSet{Interval{h / 2, 1 - h / 2}});
  EXPECT_NEAR(gaussian_mean_approx(f, builtin_kernel("uniform"), h, e, n),
              std::sqrt(2.0 / std::numbers::pi) * (1 - h) / std::sqrt(n * h), 1e-10);
}

TEST(GaussianMeanApprox, MonteCarloWithinProxyBudget) {
  const auto f = uniform_density();
  const auto k = builtin_kernel("uniform");
  const std::size_t n = 1000;
  const double h = 0.1;
  const auto e = density_bounds(f, IntervalSet{Interval{h / 2, 1 - h / 2}});
  std::vector<double> v;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto s = sample(f, n, derive_seed(12, 0, i));
    double acc = 0.0;
    for (const auto& p : e.intervals.parts()) acc += detail::l1_uniform_kernel(s, h, f, p);
    v.push_back(acc);
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  const double gap = root_n * std::abs(stats::mean(v) - gaussian_mean_approx(f, k, h, e, n));
  // y_n with A = 1: lambda(E) ||K^3|| / (||K^2|| sqrt(n h^2)) + N_n sqrt(h) / sqrt(||K^2||)
  const double y = e.lambda * k.l3() / (k.l2sq() * std::sqrt(n * h * h)) + three_halves_integral(f, e.intervals) * std::sqrt(h);
  EXPECT_LE(gap, y + 3.0 * root_n * std::sqrt(stats::variance(v) / 1000));
}
