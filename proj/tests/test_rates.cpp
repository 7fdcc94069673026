#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "l1clt/rates.hpp"

using namespace l1clt;

namespace {

// int_0^1 s phi(rho(s)) ds by midpoint
double first_moment_phi(const Kernel& k, int m = 4000) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) / m;
    s += u * phi(autocorrelation(k, u));
  }
  return s / m;
}

RegularSet uniform_inner(double h) { return density_bounds(uniform_density(), IntervalSet{Interval{h / 2, 1 - h / 2}}); }

}  // namespace

TEST(RateSlope, Examples) {
  const auto fit = rate_slope({{1e-1, 3e-2}, {1e-2, 3e-4}, {1e-3, 3e-6}});
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(rate_slope({{0.5, 1.0}, {0.25, 1.0}}).slope, 0.0, 1e-15);
}

TEST(RateSlope, Rejections) {
  EXPECT_THROW(rate_slope({{0.1, 1.0}}), Error);
  try {
    rate_slope({{0.1, 1.0}, {0.01, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveValue);
  }
}

TEST(Example3Alpha, Values) {
  EXPECT_DOUBLE_EQ(example3_alpha(0.5), 0.25);
  EXPECT_NEAR(example3_alpha(2.0 / 3.0), 1.0 / 7.0, 1e-15);
}

TEST(TauStar, UniformByHand) {
  const auto k = builtin_kernel("uniform");
  const double h = 0.01, n = 1e6;
  const double s2 = 1.5 - 4.0 / std::numbers::pi;
  const auto e = uniform_inner(h);
  const auto L = rate_ledger(uniform_density(), k, h, n, e, 1.0, s2);
  // uniform: beta = D = kappa = ||K^2|| = 1, P_n = 2h, so psi_n takes the D h branch
  const double Psi = 1.0 / (s2 * s2);
  const double psi = 256.0 / s2 * h;
  const double tau = std::pow(Psi, 1.5) * std::sqrt(2 * h + psi);
  EXPECT_NEAR(L.p_n, 2 * h, 1e-14);
  EXPECT_NEAR(L.psi_cap, Psi, 1e-10 * Psi);
  EXPECT_NEAR(L.psi_n, psi, 1e-10 * psi);
  EXPECT_NEAR(L.tau_star, tau, 1e-10 * tau);
  EXPECT_TRUE(L.not_yet_asymptotic);
  const double y = (1 - h) / std::sqrt(n * h * h) + (1 - h) * std::sqrt(h);
  EXPECT_NEAR(L.y_n, y, 1e-9);
  EXPECT_NEAR(L.tau_star, tau_star_closed(uniform_density(), k, h, e, s2), 1e-12 * tau);
}

TEST(TauStar, AlphaBranches) {
  LedgerInputs in{};
  in.h = 1e-4;
  in.n = 1e12;
  in.a_const = 1e-3;
  in.kappa = in.l2sq = in.l3 = in.beta_n = in.d_n = 1.0;
  in.sigma_sq = 0.5;
  in.p_n = 1e-6;
  auto r = assemble_ledger(in);
  EXPECT_LT(r.tau_star, 1.0 / std::numbers::e);
  EXPECT_NEAR(r.alpha_n, 1296.0 / 5.0 * r.tau_star * r.tau_star * std::log(1.0 / r.tau_star), 1e-12);
  in.a_const = 10.0;
  r = assemble_ledger(in);
  EXPECT_GE(r.tau_star, 1.0 / std::numbers::e);
  EXPECT_NEAR(r.alpha_n, 1296.0 / 5.0 * r.tau_star * r.tau_star, 1e-9 * r.alpha_n);
}

TEST(PsiCapProperty, AtLeastQuarter) {
  for (const char* name : {"uniform", "epanechnikov", "linear", "triangular"}) {
    const auto k = builtin_kernel(name);
    const double s2 = asymptotic_variance(k).sigma_sq;
    for (int id : {1, 2, 3}) {
      const auto f = example_density(id);
      for (double h : {1e-2, 1e-3}) {
        const auto e = example_sets(id, f, h);
        LedgerInputs in{};
        in.h = h;
        in.n = 1.0 / (h * h * h);
        in.a_const = 1.0;
        in.kappa = k.kappa();
        in.l2sq = k.l2sq();
        in.l3 = k.l3();
        in.sigma_sq = s2;
        in.p_n = small_interval_mass(f, h);
        in.beta_n = e.beta_n;
        in.d_n = e.d_n;
        EXPECT_GE(assemble_ledger(in).psi_cap, 0.25) << name << " ex" << id;
      }
    }
  }
}

TEST(RhoNxy, Examples) {
  const auto k = builtin_kernel("epanechnikov");
  const auto f = gaussian_density();
  EXPECT_DOUBLE_EQ(rho_nxy(f, k, 0.1, 0.3, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(rho_nxy(f, k, 0.1, 0.3, 0.45), 0.0);
  // constant density: rho_{n,x,y} = rho((y - x)/h)
  const auto u = uniform_density();
  for (double t : {-0.7, -0.2, 0.4, 0.9}) EXPECT_NEAR(rho_nxy(u, k, 0.02, 0.5, 0.5 + t * 0.02), autocorrelation(k, t), 1e-9);
  EXPECT_DOUBLE_EQ(cnxy(0.4), phi(0.4));
}

TEST(RhoNxyProperty, SymmetricAndBounded) {
  const auto k = builtin_kernel("linear");
  const auto f = gaussian_density();
  for (double x : {-1.0, 0.0, 0.7})
    for (double t : {-0.9, -0.3, 0.5, 0.8}) {
      const double y = x + t * 0.2;
      const double r = rho_nxy(f, k, 0.2, x, y);
      EXPECT_LE(std::abs(r), 1.0);
      EXPECT_NEAR(r, rho_nxy(f, k, 0.2, y, x), 1e-9);
    }
}

TEST(BbkN, VanishesOnDiagonalAndBounded) {
  const auto k = builtin_kernel("uniform");
  const auto f = gaussian_density();
  EXPECT_DOUBLE_EQ(bbk_n(f, k, 0.1, 1e4, 0.2, 0.2), 0.0);
  for (double t : {0.1, 0.5, 0.95}) {
    const double r = rho_nxy(f, k, 0.1, 0.2, 0.2 + 0.1 * t);
    const double v = bbk_n(f, k, 0.1, 1e4, 0.2, 0.2 + 0.1 * t);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 - r * r + 1e-15);
  }
}

TEST(Rn, UniformInteriorEdgeLayer) {
  // only the y outside E terms survive: 2 h int_0^1 s phi(rho(s)) ds
  const auto k = builtin_kernel("uniform");
  for (double h : {0.02, 0.01}) {
    const double oracle = 2.0 * h * first_moment_phi(k);
    EXPECT_NEAR(rn(uniform_density(), k, h, uniform_inner(h)), oracle, 0.05 * oracle) << h;
  }
}

TEST(SigmaNSqTheory, UniformInterior) {
  const auto k = builtin_kernel("uniform");
  const double h = 0.01, s2 = asymptotic_variance(k).sigma_sq;
  const double oracle = (1 - h) * s2 - 2.0 * h * first_moment_phi(k);
  EXPECT_NEAR(sigma_n_sq_theory(uniform_density(), k, h, IntervalSet{Interval{h / 2, 1 - h / 2}}), oracle, 1e-3 * oracle);
}

TEST(EmptySet, ZeroQuantities) {
  const auto k = builtin_kernel("uniform");
  EXPECT_EQ(sigma_n_sq_theory(gaussian_density(), k, 0.1, IntervalSet{}), 0.0);
  const auto d = d_bound(gaussian_density(), k, 0.1, IntervalSet{});
  EXPECT_EQ(d.d, 0.0);
  EXPECT_EQ(d.omega, 0.0);
}

TEST(DBound, UniformInterior) {
  const auto k = builtin_kernel("uniform");
  const IntervalSet b{Interval{0.2, 0.4}};
  const auto d = d_bound(uniform_density(), k, 0.01, b);
  EXPECT_NEAR(d.d, 0.8, 1e-9);
  EXPECT_NEAR(d.d_box, 0.8, 1e-9);
  EXPECT_NEAR(d.l, 0.0, 1e-9);
  EXPECT_NEAR(d.omega, 0.2, 1e-9);
  EXPECT_NEAR(window_mass_integral(uniform_density(), 0.01, b), 0.2, 1e-12);
}

TEST(LedgerProperty, ShrinksAlongSchedules) {
  const auto k = builtin_kernel("linear");
  const double s2 = asymptotic_variance(k).sigma_sq;
  for (int id : {1, 2, 3}) {
    const auto f = example_density(id);
    double prev = 1e300;
    for (double h : {1e-10, 1e-11, 1e-12, 1e-13}) {
      const double t = tau_star_closed(f, k, h, example_sets(id, f, h), s2);
      EXPECT_LT(t, prev) << "ex" << id << " h=" << h;
      prev = t;
    }
  }
  const auto f = example_density(2);
  RateLedger last;
  last.omega_n = last.y_n = last.partial_n = 1e300;
  for (double h : {1e-2, 3e-3, 1e-3}) {
    const auto L = rate_ledger(f, k, h, std::pow(h, -3.0), example_sets(2, f, h), 1.0, s2);
    EXPECT_LT(L.omega_n, last.omega_n) << h;
    EXPECT_LT(L.y_n, last.y_n) << h;
    EXPECT_LT(L.partial_n, last.partial_n) << h;
    last = L;
  }
}

TEST(LedgerExport, ColumnsMatchValues) {
  RateLedger r;
  r.not_yet_asymptotic = true;
  const auto v = ledger_values(r);
  EXPECT_EQ(v.size(), ledger_columns().size());
  EXPECT_EQ(v.back(), 1.0);
}

TEST(ExampleDensity, RejectsUnknownId) { EXPECT_THROW(example_density(4), Error); }
