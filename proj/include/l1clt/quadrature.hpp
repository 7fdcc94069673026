#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "l1clt/errors.hpp"

namespace l1clt::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

namespace detail {

template <class F>
Result simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) {
    return {left + right + delta / 15.0, std::abs(delta) / 15.0, false};
  }
  if (std::abs(delta) <= 15.0 * tol) {
    return {left + right + delta / 15.0, std::abs(delta) / 15.0, true};
  }
  if (!(m > a && b > m)) return {left + right, std::abs(delta), true};
  Result l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
  Result r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  return {l.value + r.value, l.error + r.error, l.converged && r.converged};
}

}  // namespace detail

/// Adaptive Simpson with interval bisection and Richardson correction.
/// `tol` is absolute. The first few levels always split.
template <class F>
Result adaptive_simpson(const F& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
  if (!(b > a)) return {};
  // Pre-split into 8 panels so that features narrower than the interval are seen.
  constexpr int kPanels = 8;
  Result total;
  const double step = (b - a) / kPanels;
  double x0 = a;
  double f0 = f(a);
  for (int i = 0; i < kPanels; ++i) {
    const double x1 = (i == kPanels - 1) ? b : a + step * (i + 1);
    const double xm = 0.5 * (x0 + x1);
    const double fm = f(xm);
    const double f1 = f(x1);
    const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    Result r = detail::simpson_step(f, x0, x1, f0, fm, f1, whole, tol / kPanels, max_depth);
    total.value += r.value;
    total.error += r.error;
    total.converged = total.converged && r.converged;
    x0 = x1;
    f0 = f1;
  }
  return total;
}

/// Integrates over [a,b] split at every breakpoint strictly inside (a,b).
template <class F>
Result piecewise(const F& f, double a, double b, std::span<const double> breaks, double tol = 1e-10) {
  std::vector<double> cuts{a};
  for (double c : breaks) {
    if (c > a && c < b) cuts.push_back(c);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  Result total;
  const double share = tol / static_cast<double>(cuts.size() - 1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Result r = adaptive_simpson(f, cuts[i], cuts[i + 1], share);
    total.value += r.value;
    total.error += r.error;
    total.converged = total.converged && r.converged;
  }
  return total;
}

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
class GaussLegendre {
 public:
  explicit GaussLegendre(int order) : nodes_(order), weights_(order) {
    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes_[i] = -x;
      nodes_[n - 1 - i] = x;
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      weights_[i] = w;
      weights_[n - 1 - i] = w;
    }
  }

  int order() const { return static_cast<int>(nodes_.size()); }

  template <class F>
  double integrate(const F& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weights_[i] * f(mid + half * nodes_[i]);
    return sum * half;
  }

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

inline const GaussLegendre& gauss_legendre(int order) {
  static const GaussLegendre gl8(8), gl16(16), gl32(32), gl64(64);
  switch (order) {
    case 8: return gl8;
    case 16: return gl16;
    case 32: return gl32;
    default: return gl64;
  }
}

/// Composite Gauss-Legendre over `panels` equal panels.
template <class F>
double composite_gl(const F& f, double a, double b, int panels, int order = 16) {
  const auto& gl = gauss_legendre(order);
  const double step = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) sum += gl.integrate(f, a + p * step, a + (p + 1) * step);
  return sum;
}

/// Rank-1 lattice (golden-ratio Kronecker) rule on [a,b]; deterministic QMC.
template <class F>
double kronecker(const F& f, double a, double b, std::size_t nodes) {
  constexpr double kGolden = 0.61803398874989484820;
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double u = std::fmod(0.5 + kGolden * static_cast<double>(i), 1.0);
    sum += f(a + (b - a) * u);
  }
  return sum * (b - a) / static_cast<double>(nodes);
}

/// Golden-section maximization of a unimodal function on [a,b].
template <class F>
std::pair<double, double> golden_max(const F& f, double a, double b, int iterations = 80) {
  constexpr double kInv = 0.61803398874989484820;
  double c = b - kInv * (b - a);
  double d = a + kInv * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iterations && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInv * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInv * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Bisection for a sign change of f on [a,b].
template <class F>
double bisect(const F& f, double a, double b, double xtol = 1e-14, int max_iter = 200) {
  double fa = f(a);
  for (int i = 0; i < max_iter && (b - a) > xtol * (1.0 + std::abs(a)); ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace l1clt::quad
