#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "l1clt/errors.hpp"
#include "l1clt/quadrature.hpp"
#include "l1clt/random.hpp"
#include "l1clt/stats.hpp"

namespace l1clt {

/// Polynomial c0 + c1 u + c2 u^2 + ... on the closed piece [lo, hi].
struct PolyPiece {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> coeffs;

  double operator()(double u) const {
    double v = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * u + *it;
    return v;
  }
};

namespace poly {

inline std::vector<double> multiply(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

inline std::vector<double> derivative(const std::vector<double>& a) {
  if (a.size() <= 1) return {};
  std::vector<double> d(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) d[i - 1] = static_cast<double>(i) * a[i];
  return d;
}

inline double eval(const std::vector<double>& a, double u) {
  double v = 0.0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) v = v * u + *it;
  return v;
}

/// Exact integral of the polynomial over [lo, hi].
inline double integral(const std::vector<double>& a, double lo, double hi) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    s += a[i] * (std::pow(hi, k) - std::pow(lo, k)) / k;
  }
  return s;
}

/// Exact int_lo^hi P(u) e^{i w u} du by repeated integration by parts (w != 0).
inline std::complex<double> fourier(const std::vector<double>& a, double lo, double hi, double w) {
  using C = std::complex<double>;
  const C iw(0.0, w);
  const C ehi = std::polar(1.0, w * hi), elo = std::polar(1.0, w * lo);
  std::vector<double> d = a;
  C acc(0.0, 0.0);
  C denom = iw;
  double sign = 1.0;
  for (std::size_t len = d.size(); len > 0; --len) {
    double vh = 0.0, vl = 0.0;
    for (std::size_t i = len; i-- > 0;) {
      vh = vh * hi + d[i];
      vl = vl * lo + d[i];
    }
    acc += sign * (vh * ehi - vl * elo) / denom;
    for (std::size_t i = 1; i < len; ++i) d[i - 1] = d[i] * static_cast<double>(i);
    denom *= iw;
    sign = -sign;
  }
  return acc;
}

}  // namespace poly

/// A bounded function on [-1/2, 1/2] used as a smoothing window H: the kernel itself,
/// K^2, |K|^3 or the box 1{|u| <= 1/2}. Polynomial pieces are kept when available.
struct Profile {
  std::string name;
  std::function<double(double)> fn;
  std::vector<double> breaks;       // sorted, includes -1/2 and 1/2
  std::vector<PolyPiece> pieces;    // empty when not piecewise polynomial
  double integral = 0.0;            // I(H)
  std::vector<double> moments;      // int u^m H(u) du, m = 0..41 (polynomial profiles)

  void finalize() {
    moments.assign(42, 0.0);
    for (int m = 0; m < 42; ++m)
      for (const auto& p : pieces) {
        std::vector<double> c(static_cast<std::size_t>(m), 0.0);
        c.insert(c.end(), p.coeffs.begin(), p.coeffs.end());
        moments[static_cast<std::size_t>(m)] += poly::integral(c, p.lo, p.hi);
      }
  }

  double operator()(double u) const { return (u < -0.5 || u > 0.5) ? 0.0 : fn(u); }
  bool polynomial() const { return !pieces.empty(); }

  /// int H(u) (e^{i w u} - 1) du without cancellation at small w.
  std::complex<double> fourier_minus_integral(double w) const {
    if (std::abs(w) > 2.0) return fourier(w) - std::complex<double>(integral, 0.0);
    if (polynomial() && moments.size() == 42) {
      std::complex<double> s(0.0, 0.0);
      std::complex<double> factor(1.0, 0.0);
      for (int m = 1; m <= 41; ++m) {
        factor *= std::complex<double>(0.0, w) / static_cast<double>(m);
        s += factor * moments[static_cast<std::size_t>(m)];
        if (std::abs(factor) < 1e-18) break;
      }
      return s;
    }
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      re += quad::composite_gl([&](double u) { const double q = std::sin(0.5 * w * u); return -2.0 * fn(u) * q * q; },
                               breaks[i], breaks[i + 1], 4);
      im += quad::composite_gl([&](double u) { return fn(u) * std::sin(w * u); }, breaks[i], breaks[i + 1], 4);
    }
    return {re, im};
  }

  /// int H(u) e^{i w u} du; exact for polynomial pieces.
  std::complex<double> fourier(double w) const {
    if (w == 0.0) return {integral, 0.0};
    if (polynomial()) {
      std::complex<double> s(0.0, 0.0);
      for (const auto& p : pieces) s += poly::fourier(p.coeffs, p.lo, p.hi, w);
      return s;
    }
    std::complex<double> s(0.0, 0.0);
    const int panels = 4 + static_cast<int>(std::abs(w));
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double re = quad::composite_gl([&](double u) { return fn(u) * std::cos(w * u); }, breaks[i], breaks[i + 1], panels);
      const double im = quad::composite_gl([&](double u) { return fn(u) * std::sin(w * u); }, breaks[i], breaks[i + 1], panels);
      s += std::complex<double>(re, im);
    }
    return s;
  }
};

inline Profile box_profile() {
  Profile p;
  p.name = "box";
  p.fn = [](double) { return 1.0; };
  p.breaks = {-0.5, 0.5};
  p.pieces = {PolyPiece{-0.5, 0.5, {1.0}}};
  p.integral = 1.0;
  p.finalize();
  return p;
}

/// User-facing kernel description, validated into a Kernel.
struct KernelSpec {
  std::string name = "custom";
  std::function<double(double)> evaluator;   // may be empty when pieces are given
  std::vector<PolyPiece> pieces;             // piecewise polynomial form
  std::vector<double> breakpoints;           // interior jumps or kinks
  double support_lo = -0.5;
  double support_hi = 0.5;
  std::optional<double> declared_kappa;
};

inline KernelSpec piecewise_polynomial_spec(std::string name, std::vector<double> breaks,
                                            std::vector<std::vector<double>> coeffs) {
  require(breaks.size() >= 2 && coeffs.size() + 1 == breaks.size(), ErrorCode::InvalidArgument,
          "piecewise kernel needs k+1 breakpoints for k coefficient lists");
  KernelSpec spec;
  spec.name = std::move(name);
  spec.support_lo = breaks.front();
  spec.support_hi = breaks.back();
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    require(breaks[i + 1] > breaks[i], ErrorCode::InvalidArgument, "kernel breakpoints must increase");
    spec.pieces.push_back(PolyPiece{breaks[i], breaks[i + 1], coeffs[i]});
  }
  spec.breakpoints.assign(breaks.begin() + 1, breaks.end() - 1);
  return spec;
}

class Kernel {
 public:
  const std::string& name() const { return s_->name; }
  double operator()(double u) const { return (u < -0.5 || u > 0.5) ? 0.0 : s_->eval(u); }
  double kappa() const { return s_->kappa; }
  double l2sq() const { return s_->l2sq; }
  double l3() const { return s_->l3; }
  double integral() const { return s_->integral; }
  int quadrature_nodes() const { return s_->nodes; }
  double support_half_width() const { return 0.5; }
  /// Sorted breakpoints including the support ends.
  std::span<const double> breaks() const { return s_->breaks; }
  bool is_uniform() const { return s_->uniform; }
  bool symmetric() const { return s_->symmetric; }
  const std::vector<PolyPiece>& pieces() const { return s_->pieces; }

  /// H in {K, K^2, |K|^3, box}; power 0 gives the box.
  const Profile& profile(int power) const {
    switch (power) {
      case 0: return s_->box;
      case 1: return s_->p1;
      case 2: return s_->p2;
      default: return s_->p3;
    }
  }

 private:
  struct State {
    std::string name;
    std::function<double(double)> eval;
    std::vector<PolyPiece> pieces;
    std::vector<double> breaks;
    double kappa = 0.0, l2sq = 0.0, l3 = 0.0, integral = 0.0;
    int nodes = 0;
    bool uniform = false;
    bool symmetric = false;
    Profile box, p1, p2, p3;
  };
  std::shared_ptr<const State> s_;

  friend Kernel validate_kernel(const KernelSpec& spec);
};

namespace detail {

// Sup of |g| on [lo,hi]: dense sampling plus golden-section polishing.
template <class G>
double sampled_sup(const G& g, std::span<const double> breaks, int per_piece = 2000) {
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    const double step = (b - a) / per_piece;
    int arg = 0;
    double local = -1.0;
    for (int j = 0; j <= per_piece; ++j) {
      const double u = j == per_piece ? b : a + step * j;
      const double v = std::abs(g(u));
      if (v > local) {
        local = v;
        arg = j;
      }
    }
    const double lo = std::max(a, a + step * (arg - 1));
    const double hi = std::min(b, a + step * (arg + 1));
    const auto polished = quad::golden_max([&](double u) { return std::abs(g(u)); }, lo, hi, 100);
    best = std::max({best, local, polished.second});
  }
  return best;
}

inline std::vector<PolyPiece> pieces_power(const std::vector<PolyPiece>& base, int power, bool absolute,
                                           bool& ok) {
  std::vector<PolyPiece> out;
  ok = true;
  for (const auto& p : base) {
    std::vector<double> c{1.0};
    for (int k = 0; k < power; ++k) c = poly::multiply(c, p.coeffs);
    if (absolute) {
      // |P|^3 stays polynomial only if P keeps one sign on the piece.
      double mn = HUGE_VAL, mx = -HUGE_VAL;
      for (int j = 0; j <= 256; ++j) {
        const double v = p(p.lo + (p.hi - p.lo) * j / 256.0);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mn < 0.0 && mx > 0.0) ok = false;
      if (mx <= 0.0)
        for (double& x : c) x = -x;
    }
    out.push_back(PolyPiece{p.lo, p.hi, std::move(c)});
  }
  return out;
}

}  // namespace detail

/// Validates the spec and caches kappa, ||K^2||, ||K^3||.
inline Kernel validate_kernel(const KernelSpec& spec) {
  const double kTol = 1e-12;
  if (std::abs(spec.support_lo + 0.5) > kTol || std::abs(spec.support_hi - 0.5) > kTol) {
    const double c = std::max(std::abs(spec.support_lo), std::abs(spec.support_hi));
    throw Error(ErrorCode::InvalidArgument,
                "kernel support must be [-1/2, 1/2]; for a kernel L supported in [-c, c] use "
                "K(u) = 2c L(2c u) with bandwidth h/(2c) (here c = " + std::to_string(c) + ")");
  }
  require(spec.evaluator || !spec.pieces.empty(), ErrorCode::InvalidArgument, "kernel has no evaluator");

  auto state = std::make_shared<Kernel::State>();
  state->name = spec.name;
  state->pieces = spec.pieces;
  if (!spec.pieces.empty()) {
    auto pieces = spec.pieces;
    state->eval = [pieces](double u) {
      for (const auto& p : pieces)
        if (u >= p.lo && u <= p.hi) return p(u);
      return 0.0;
    };
  } else {
    state->eval = spec.evaluator;
  }
  std::vector<double> breaks{-0.5, 0.5};
  for (double b : spec.breakpoints)
    if (b > -0.5 && b < 0.5) breaks.push_back(b);
  for (const auto& p : spec.pieces) {
    breaks.push_back(p.lo);
    breaks.push_back(p.hi);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  state->breaks = breaks;

  const auto& eval = state->eval;
  // Evaluate inside each piece only, so that jump values at breakpoints do not matter.
  auto integrate_power = [&](auto&& g) {
    quad::Result total;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double a = breaks[i], b = breaks[i + 1];
      const double span = b - a;
      auto inner = [&](double u) { return g(eval(std::clamp(u, a + 1e-15 * span, b - 1e-15 * span))); };
      quad::Result r = quad::adaptive_simpson(inner, a, b, 1e-13);
      total.value += r.value;
      total.error += r.error;
      total.converged = total.converged && r.converged;
    }
    return total;
  };
  const quad::Result i1 = integrate_power([](double k) { return k; });
  const quad::Result i2 = integrate_power([](double k) { return k * k; });
  const quad::Result i3 = integrate_power([](double k) { return std::abs(k * k * k); });
  state->integral = i1.value;
  if (std::abs(i1.value - 1.0) > 1e-10) {
    throw Error(ErrorCode::NonUnitIntegral, "kernel '" + spec.name + "' integrates to " + std::to_string(i1.value));
  }
  state->l2sq = i2.value;
  state->l3 = i3.value;
  state->nodes = 16 * static_cast<int>(breaks.size() - 1);

  auto inside = [&](double u) { return eval(u); };
  const double sup = detail::sampled_sup(inside, breaks);
  if (spec.declared_kappa) {
    if (sup > *spec.declared_kappa + 1e-8) {
      throw Error(ErrorCode::Unbounded, "sampled sup " + std::to_string(sup) + " exceeds declared kappa " +
                                            std::to_string(*spec.declared_kappa));
    }
    state->kappa = std::max(*spec.declared_kappa, sup);
  } else {
    state->kappa = sup;
  }
  require(std::isfinite(state->kappa), ErrorCode::Unbounded, "kernel is unbounded");

  state->uniform = spec.pieces.size() == 1 && spec.pieces[0].coeffs.size() == 1 &&
                   std::abs(spec.pieces[0].coeffs[0] - 1.0) < 1e-15;
  bool sym = true;
  for (int j = 0; j <= 200 && sym; ++j) {
    const double u = 0.5 * j / 200.0 * 0.999;
    sym = std::abs(eval(u) - eval(-u)) <= 1e-12 * (1.0 + std::abs(eval(u)));
  }
  state->symmetric = sym;

  state->box = box_profile();
  auto make_profile = [&](std::string name, int power, double integral) {
    Profile p;
    p.name = std::move(name);
    p.breaks = breaks;
    p.integral = integral;
    if (power == 1) {
      p.fn = eval;
    } else if (power == 2) {
      p.fn = [eval](double u) { const double k = eval(u); return k * k; };
    } else {
      p.fn = [eval](double u) { const double k = eval(u); return std::abs(k * k * k); };
    }
    if (!spec.pieces.empty()) {
      bool ok = true;
      p.pieces = detail::pieces_power(spec.pieces, power, power == 3, ok);
      if (!ok) p.pieces.clear();
    }
    if (!p.pieces.empty()) p.finalize();
    return p;
  };
  state->p1 = make_profile("K", 1, state->integral);
  state->p2 = make_profile("K^2", 2, state->l2sq);
  state->p3 = make_profile("|K|^3", 3, state->l3);

  Kernel k;
  k.s_ = std::move(state);
  return k;
}

/// Built-in kernels, all on [-1/2, 1/2]: uniform, epanechnikov (3/2)(1-4u^2), linear 1+u.
inline KernelSpec builtin_kernel_spec(const std::string& name) {
  if (name == "uniform") {
    auto s = piecewise_polynomial_spec("uniform", {-0.5, 0.5}, {{1.0}});
    s.declared_kappa = 1.0;
    return s;
  }
  if (name == "epanechnikov") {
    auto s = piecewise_polynomial_spec("epanechnikov", {-0.5, 0.5}, {{1.5, 0.0, -6.0}});
    s.declared_kappa = 1.5;
    return s;
  }
  if (name == "linear") {
    auto s = piecewise_polynomial_spec("linear", {-0.5, 0.5}, {{1.0, 1.0}});
    s.declared_kappa = 1.5;
    return s;
  }
  if (name == "triangular") {
    auto s = piecewise_polynomial_spec("triangular", {-0.5, 0.0, 0.5}, {{2.0, 4.0}, {2.0, -4.0}});
    s.declared_kappa = 2.0;
    return s;
  }
  throw Error(ErrorCode::ConfigError, "unknown kernel '" + name + "'");
}

inline Kernel builtin_kernel(const std::string& name) { return validate_kernel(builtin_kernel_spec(name)); }

/// rho(t) = int K(u) K(u+t) du / ||K^2||; exactly 0 for |t| >= 1.
inline double autocorrelation(const Kernel& k, double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  const double lo = std::max(-0.5, -0.5 - t);
  const double hi = std::min(0.5, 0.5 - t);
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo, hi};
  for (double b : k.breaks()) {
    if (b > lo && b < hi) cuts.push_back(b);
    if (b - t > lo && b - t < hi) cuts.push_back(b - t);
  }
  std::sort(cuts.begin(), cuts.end());
  const auto& gl = quad::gauss_legendre(k.pieces().empty() ? 64 : 16);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= 0.0) continue;
    s += gl.integrate([&](double u) { return k(u) * k(u + t); }, cuts[i], cuts[i + 1]);
  }
  return std::clamp(s / k.l2sq(), -1.0, 1.0);
}

/// Nabeya covariance (2/pi)(rho asin rho + sqrt(1-rho^2) - 1).
inline double phi(double rho) {
  require(std::abs(rho) <= 1.0 + 1e-12, ErrorCode::DomainError, "phi needs |rho| <= 1");
  rho = std::clamp(rho, -1.0, 1.0);
  return 2.0 / std::numbers::pi * (rho * std::asin(rho) + std::sqrt(1.0 - rho * rho) - 1.0);
}

struct VarianceReport {
  double sigma_sq = 0.0;
  std::vector<std::pair<double, double>> rho_grid;
  double quadrature_error_estimate = 0.0;
};

inline VarianceReport asymptotic_variance(const Kernel& k, double tol = 1e-8) {
  require(tol > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");
  // rho is smooth between differences of kernel breakpoints.
  std::vector<double> cuts{-1.0, 0.0, 1.0};
  for (double a : k.breaks())
    for (double b : k.breaks()) {
      const double d = a - b;
      if (d > -1.0 && d < 1.0) cuts.push_back(d);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-15; }),
             cuts.end());
  auto integrand = [&](double t) { return phi(autocorrelation(k, t)); };
  quad::Result total;
  const double share = 0.01 * tol / static_cast<double>(cuts.size());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    quad::Result r = quad::adaptive_simpson(integrand, cuts[i], cuts[i + 1], share, 40);
    total.value += r.value;
    total.error += r.error;
    total.converged = total.converged && r.converged;
  }
  VarianceReport rep;
  rep.sigma_sq = k.l2sq() * total.value;
  rep.quadrature_error_estimate = k.l2sq() * total.error;
  if (!total.converged && rep.quadrature_error_estimate > tol) {
    throw Error(ErrorCode::QuadratureFailure, "sigma^2 quadrature stalled above tolerance");
  }
  rep.rho_grid.reserve(201);
  for (int j = 0; j <= 200; ++j) {
    const double t = -1.0 + j / 100.0;
    rep.rho_grid.emplace_back(t, autocorrelation(k, t));
  }
  return rep;
}

/// Monte Carlo estimate of cov(|sqrt(1-rho^2) Z1 + rho Z2|, |Z2|).
inline stats::CovEstimate nabeya_cov_mc(double rho, std::size_t samples, Seed seed) {
  require(samples >= 10000, ErrorCode::InvalidArgument, "nabeya_cov_mc needs at least 1e4 samples");
  require(std::abs(rho) <= 1.0 + 1e-12, ErrorCode::DomainError, "|rho| must be <= 1");
  rho = std::clamp(rho, -1.0, 1.0);
  const double c = std::sqrt(1.0 - rho * rho);
  std::vector<double> xs(samples), ys(samples);
  Rng rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    xs[i] = std::abs(c * z1 + rho * z2);
    ys[i] = std::abs(z2);
  }
  return stats::covariance_with_error(xs, ys);
}

}  // namespace l1clt
