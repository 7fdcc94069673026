#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "l1clt/kernel.hpp"
#include "l1clt/quadrature.hpp"

using namespace l1clt;

namespace {

// midpoint-rule autocorrelation, no library machinery
double brute_rho(const Kernel& k, double t, int m = 20000) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u = -0.5 + (i + 0.5) / m;
    num += k(u) * k(u + t);
    den += k(u) * k(u);
  }
  return num / den;
}

double phi_formula(double r) { return 2.0 / std::numbers::pi * (r * std::asin(r) + std::sqrt(1.0 - r * r) - 1.0); }

}  // namespace

TEST(Quadrature, SimpsonAndGaussLegendre) {
  EXPECT_NEAR(quad::adaptive_simpson([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value, 2.0, 1e-10);
  EXPECT_NEAR(quad::gauss_legendre(8).integrate([](double x) { return std::pow(x, 15); }, 0.0, 1.0), 1.0 / 16.0, 1e-14);
  const double jump[] = {0.3};
  EXPECT_NEAR(quad::piecewise([](double x) { return x < 0.3 ? 1.0 : 2.0; }, 0.0, 1.0, jump).value, 1.7, 1e-12);
}

TEST(KernelNorms, Uniform) {
  const auto k = builtin_kernel("uniform");
  EXPECT_DOUBLE_EQ(k.kappa(), 1.0);
  EXPECT_NEAR(k.l2sq(), 1.0, 1e-12);
  EXPECT_NEAR(k.l3(), 1.0, 1e-12);
  EXPECT_TRUE(k.is_uniform());
}

TEST(KernelNorms, Epanechnikov) {
  const auto k = builtin_kernel("epanechnikov");
  EXPECT_NEAR(k.kappa(), 1.5, 1e-12);
  EXPECT_NEAR(k.l2sq(), 1.2, 1e-12);
  EXPECT_FALSE(k.is_uniform());
}

TEST(KernelValidation, NonUnitIntegralRejected) {
  try {
    validate_kernel(piecewise_polynomial_spec("double", {-0.5, 0.5}, {{2.0}}));
    FAIL() << "expected NonUnitIntegral";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonUnitIntegral);
  }
}

TEST(KernelValidation, SupportOutsideHalfRejected) {
  EXPECT_THROW(validate_kernel(piecewise_polynomial_spec("wide", {-1.0, 1.0}, {{0.5}})), Error);
}

TEST(Autocorrelation, Examples) {
  const auto u = builtin_kernel("uniform");
  EXPECT_NEAR(autocorrelation(u, 0.0), 1.0, 1e-12);
  EXPECT_NEAR(autocorrelation(u, 1.5), 0.0, 1e-15);
  EXPECT_NEAR(autocorrelation(u, 0.5), 0.5, 1e-12);
  for (const char* name : {"epanechnikov", "linear", "triangular"}) EXPECT_NEAR(autocorrelation(builtin_kernel(name), 0.0), 1.0, 1e-12);
}

TEST(Autocorrelation, MatchesBruteForceConvolution) {
  for (const char* name : {"uniform", "epanechnikov", "linear", "triangular"}) {
    const auto k = builtin_kernel(name);
    for (double t : {-0.8, -0.35, 0.1, 0.45, 0.9}) EXPECT_NEAR(autocorrelation(k, t), brute_rho(k, t), 2e-4) << name << " t=" << t;
  }
}

TEST(AutocorrelationProperty, BoundedAndEven) {
  for (const char* name : {"uniform", "epanechnikov", "linear", "triangular"}) {
    const auto k = builtin_kernel(name);
    for (int i = 0; i <= 200; ++i) {
      const double t = -1.0 + i / 100.0;
      const double r = autocorrelation(k, t);
      EXPECT_LE(std::abs(r), 1.0 + 1e-12);
      // rho(-t) = rho(t) holds for every kernel (the substitution u -> u - t), symmetric or not
      EXPECT_NEAR(r, autocorrelation(k, -t), 1e-10);
    }
  }
}

TEST(Phi, Examples) {
  EXPECT_DOUBLE_EQ(phi(0.0), 0.0);
  EXPECT_NEAR(phi(1.0), 1.0 - 2.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(phi(-1.0), 1.0 - 2.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(phi(0.3), phi_formula(0.3), 1e-15);
  EXPECT_NEAR(phi(1.0 + 1e-14), 1.0 - 2.0 / std::numbers::pi, 1e-12);  // rounding past 1 is clamped
}

TEST(PhiProperty, PositiveEvenLipschitz) {
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(-1.0 + i / 100.0);
  for (double r : grid) {
    EXPECT_NEAR(phi(r), phi(-r), 1e-15);
    if (std::abs(r) >= 1e-3) {
      EXPECT_GT(phi(r), 0.0);
    }
  }
  for (double a : grid)
    for (double b : grid) EXPECT_LE(std::abs(phi(a) - phi(b)), std::abs(a - b) + 1e-15);
}

TEST(AsymptoticVariance, UniformClosedForm) {
  EXPECT_NEAR(asymptotic_variance(builtin_kernel("uniform")).sigma_sq, 1.5 - 4.0 / std::numbers::pi, 1e-8);
}

TEST(AsymptoticVariance, EpanechnikovAgainstBruteForce) {
  const auto k = builtin_kernel("epanechnikov");
  // 2 int_0^1 phi(rho(t)) dt by midpoint over brute-force rho
  const int m = 400;
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += phi_formula(std::min(1.0, brute_rho(k, (i + 0.5) / m, 4000)));
  const double oracle = k.l2sq() * 2.0 * s / m;  // sigma^2 = ||K^2|| int phi(rho)
  const double v = asymptotic_variance(k).sigma_sq;
  EXPECT_NEAR(v, oracle, 2e-4);
  EXPECT_GT(v, 0.0);
  EXPECT_LE(v, 2.0 * 1.2);
}

TEST(AsymptoticVarianceProperty, BoundedByTwiceL2) {
  for (const char* name : {"uniform", "epanechnikov", "linear", "triangular"}) {
    const auto k = builtin_kernel(name);
    const double v = asymptotic_variance(k).sigma_sq;
    EXPECT_GT(v, 0.0) << name;
    EXPECT_LE(v, 2.0 * k.l2sq()) << name;
  }
}

TEST(NabeyaMonteCarlo, AgreesWithPhi) {
  for (double r : {0.0, 0.5, 1.0, -0.6}) {
    const auto est = nabeya_cov_mc(r, 200000, derive_seed(31, 0, static_cast<std::uint64_t>(10 * (r + 1))));
    EXPECT_LE(std::abs(est.cov - phi(r)), 3.0 * est.std_error + 1e-12) << "rho=" << r;
  }
}
