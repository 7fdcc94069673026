#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "l1clt/density.hpp"
#include "l1clt/kernel.hpp"
#include "l1clt/rates.hpp"
#include "l1clt/stats.hpp"

using namespace l1clt;

namespace {

double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

std::vector<Density> families() {
  return {uniform_density(), gaussian_density(), power_law_density(0.5), holder_density(0.7)};
}

double fitted_slope(const std::vector<double>& hs, const std::vector<double>& vs) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < hs.size(); ++i) pts.push_back({hs[i], vs[i]});
  return rate_slope(pts).slope;
}

}  // namespace

TEST(Prob, Examples) {
  EXPECT_NEAR(prob(uniform_density(), Interval{0.0, 0.5}), 0.5, 1e-15);
  EXPECT_NEAR(prob(power_law_density(0.5), Interval{0.0, 1.0}), 1.0, 1e-12);
  EXPECT_NEAR(prob(gaussian_density(), Interval{-1.0, 1.0}), Phi(1.0) - Phi(-1.0), 1e-12);
}

TEST(ProbProperty, SupportHasUnitMass) {
  for (const auto& f : families()) EXPECT_NEAR(prob(f, f.support()), 1.0, 1e-9) << f.family();
}

TEST(ProbProperty, CdfMatchesIntegratedPdf) {
  for (const auto& f : families()) {
    const Interval s = f.support();
    for (double u : {0.2, 0.5, 0.8}) {
      const double a = s.lo + 0.1 * (s.hi - s.lo), b = s.lo + u * (s.hi - s.lo);
      if (!(b > a)) continue;
      EXPECT_NEAR(f.integrate([&](double x) { return f.pdf(x); }, a, b), f.mass(a, b), 1e-7) << f.family();
    }
  }
}

TEST(Smooth, Examples) {
  const auto k = builtin_kernel("uniform");
  EXPECT_NEAR(smooth(uniform_density(), k.profile(1), 0.1, 0.5), 1.0, 1e-13);
  EXPECT_NEAR(smooth(gaussian_density(), k.profile(1), 0.2, 0.0), (Phi(0.1) - Phi(-0.1)) / 0.2, 1e-10);
  // the difference of two unit profiles has I(H) = 0, so f * H_h -> 0 at continuity points
  const auto lin = builtin_kernel("linear");
  const double small = smooth(gaussian_density(), lin.profile(1), 1e-6, 0.3) - smooth(gaussian_density(), k.profile(1), 1e-6, 0.3);
  EXPECT_NEAR(small, 0.0, 1e-6);
}

TEST(EpsilonN, UniformInteriorIsZero) {
  const auto f = uniform_density();
  const auto e = density_bounds(f, IntervalSet{Interval{0.005, 0.995}});
  EXPECT_NEAR(epsilon_n(f, e, builtin_kernel("uniform"), 0.01).value, 0.0, 1e-10);
  EXPECT_NEAR(epsilon_n(f, e, builtin_kernel("epanechnikov"), 0.01).value, 0.0, 1e-10);
}

TEST(EpsilonN, Example2SlopeOne) {
  // asymmetric kernel: first-order bias
  const auto f = gaussian_density();
  const auto k = builtin_kernel("linear");
  std::vector<double> hs{1e-2, 3e-3, 1e-3}, vs;
  for (double h : hs) vs.push_back(epsilon_n(f, example_sets(2, f, h), k, h).value);
  EXPECT_NEAR(fitted_slope(hs, vs), 1.0, 0.15);
}

TEST(EpsilonN, Example1SlopeGamma) {
  const auto f = holder_density(0.7);
  const auto k = builtin_kernel("linear");
  std::vector<double> hs{1e-2, 3e-3, 1e-3}, vs;
  for (double h : hs) vs.push_back(epsilon_n(f, example_sets(1, f, h), k, h).value);
  EXPECT_NEAR(fitted_slope(hs, vs), 0.7, 0.15);
}

TEST(SmallIntervalMass, Examples) {
  EXPECT_NEAR(small_interval_mass(uniform_density(), 0.05), 0.1, 1e-12);
  EXPECT_NEAR(small_interval_mass(gaussian_density(), 0.05), 2.0 * Phi(0.05) - 1.0, 1e-12);
  EXPECT_NEAR(small_interval_mass(power_law_density(0.5), 0.05), std::sqrt(0.1), 1e-12);
}

TEST(SmallIntervalMassProperty, MonotoneAndBounded) {
  for (const auto& f : families()) {
    double prev = 0.0;
    for (double h : {1e-3, 3e-3, 1e-2, 3e-2, 0.1}) {
      const double p = small_interval_mass(f, h);
      EXPECT_GE(p, prev - 1e-12) << f.family();
      prev = p;
      if (f.family() != "power_law") {
        const auto b = density_bounds(f, IntervalSet{f.support()});
        EXPECT_LE(p, 2.0 * h * b.d_n + 1e-12) << f.family();
      }
      // P_n >= c_f h: any window inside the bulk carries mass at least 2 h min f there
      const double cf = f.family() == "gaussian" ? 2.0 * stats::normal_pdf(1.0) : (f.family() == "holder" ? 0.5 : 1.0);
      EXPECT_GE(p, cf * h) << f.family();
    }
  }
}

TEST(L1SmoothingError, UniformBoundaryLayer) {
  // |h^{-1} P[x - h/2, x + h/2] - f| integrates to h/4 per edge over the padded support
  const double h = 0.01;
  const double v = l1_smoothing_error(uniform_density(), h);
  EXPECT_NEAR(v, 0.5 * h, 1e-10);
  EXPECT_LE(v, 2.0 * h);
}

TEST(L1SmoothingError, GaussianSlope) {
  std::vector<double> hs{1e-2, 3e-3, 1e-3}, g;
  for (double h : hs) g.push_back(l1_smoothing_error(gaussian_density(), h));
  // the box is symmetric, so a C^2 density gives the second-order rate: O(h) is an upper bound
  EXPECT_GE(fitted_slope(hs, g), 1.0 - 0.15);
}

TEST(L1SmoothingError, HolderSlope) {
  const auto f = holder_density(0.7);
  // whole line: the support edges add an O(h) layer, so fit where h^gamma dominates
  std::vector<double> deep{1e-3, 1e-4, 1e-5}, whole;
  for (double h : deep) whole.push_back(l1_smoothing_error(f, h));
  EXPECT_NEAR(fitted_slope(deep, whole), 0.7, 0.15);
  std::vector<double> hs{1e-2, 1e-3, 1e-4}, inner;
  for (double h : hs) inner.push_back(l1_smoothing_error(f, h, example_sets(1, f, h).intervals));
  EXPECT_NEAR(fitted_slope(hs, inner), 0.7, 0.15);
}

TEST(DensityBounds, Examples) {
  const auto g = gaussian_density();
  const auto b = density_bounds(g, IntervalSet{Interval{-1.5, 1.5}});
  EXPECT_NEAR(b.beta_n, stats::normal_pdf(1.5), 1e-12);
  EXPECT_NEAR(b.d_n, stats::normal_pdf(0.0), 1e-12);
  const auto u = density_bounds(uniform_density(0.0, 2.0), IntervalSet{Interval{0.5, 1.5}});
  EXPECT_NEAR(u.beta_n, 0.5, 1e-15);
  EXPECT_NEAR(u.d_n, 0.5, 1e-15);
  const double h = 0.01, g_ = 0.5, alpha = (1 - g_) / (1 + 2 * g_);
  const auto p = density_bounds(power_law_density(g_), IntervalSet{Interval{std::pow(h, alpha), 1 - h}});
  EXPECT_NEAR(p.beta_n, (1 - g_) * std::pow(1 - h, -g_), 1e-10);
  EXPECT_NEAR(p.d_n, (1 - g_) * std::pow(h, -g_ * alpha), 1e-10);
}

TEST(ThreeHalvesIntegral, Examples) {
  const double h = 0.02;
  EXPECT_NEAR(three_halves_integral(uniform_density(), IntervalSet{Interval{h / 2, 1 - h / 2}}), 1 - h, 1e-12);
  EXPECT_NEAR(three_halves_integral(gaussian_density(), IntervalSet{Interval{-8, 8}}),
              std::pow(2 * std::numbers::pi, -0.25) * std::sqrt(2.0 / 3.0), 1e-10);
}

TEST(ThreeHalvesIntegral, PowerLawTwoThirdsGrowsLikeLog) {
  const auto f = power_law_density(2.0 / 3.0);
  std::vector<double> vals;
  for (double h : {1e-2, 1e-4, 1e-6}) vals.push_back(three_halves_integral(f, example_sets(3, f, h).intervals));
  // (1 - gamma)^{3/2} alpha log(1/h) increments per two decades
  const double alpha = (1 - 2.0 / 3.0) / (1 + 4.0 / 3.0);
  const double step = std::pow(1.0 / 3.0, 1.5) * alpha * std::log(100.0);
  EXPECT_NEAR(vals[1] - vals[0], step, 0.02 * step);
  EXPECT_NEAR(vals[2] - vals[1], step, 0.02 * step);
}

TEST(TailCutoff, Examples) {
  EXPECT_NEAR(tail_cutoff(gaussian_density(), 0.3173).m, 1.0, 1e-3);
  EXPECT_NEAR(tail_cutoff(gaussian_density(), 0.05).m, 1.959964, 1e-5);
  const auto c = tail_cutoff(uniform_density(0.0, 1.0), 0.05);
  EXPECT_NEAR(c.m, 0.95, 1e-10);
  const auto sym = tail_cutoff(uniform_density(-0.25, 0.25), 0.9);
  EXPECT_NEAR(sym.m, 0.025, 1e-10);
  EXPECT_FALSE(sym.compact_flag);
}

TEST(ExampleSets, Examples) {
  const auto p = example_sets(3, power_law_density(0.5), 0.01);
  EXPECT_NEAR(p.intervals.lower(), std::pow(0.01, 0.25), 1e-12);
  EXPECT_NEAR(p.intervals.upper(), 0.99, 1e-12);
  const auto g = example_sets(2, gaussian_density(), std::exp(-2.0));
  EXPECT_NEAR(g.intervals.lower(), -1.0, 1e-12);
  EXPECT_NEAR(g.intervals.upper(), 1.0, 1e-12);
  const auto u = example_sets(1, uniform_density(), 0.1);
  EXPECT_NEAR(u.intervals.lower(), 0.05, 1e-12);
  EXPECT_NEAR(u.intervals.upper(), 0.95, 1e-12);
  EXPECT_NEAR(u.phi_n, 0.1, 1e-12);
}
