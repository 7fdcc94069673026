#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "l1clt/density.hpp"
#include "l1clt/errors.hpp"
#include "l1clt/kernel.hpp"
#include "l1clt/random.hpp"
#include "l1clt/stats.hpp"

namespace l1clt {

struct Sample {
  std::vector<double> points;  // sorted ascending
  std::size_t nominal_n = 0;
  std::size_t actual_count = 0;
  Seed seed = 0;
  bool poissonized = false;
};

namespace detail {

inline std::vector<double> draw_points(const Density& f, std::size_t count, Rng& rng) {
  // sorted uniforms from normalized exponential spacings, then the (monotone) quantile
  std::vector<double> pts(count);
  double acc = 0.0;
  for (auto& x : pts) {
    acc += rng.exponential();
    x = acc;
  }
  const double total = acc + rng.exponential();
  for (auto& x : pts) x = f.quantile(x / total);
  if (!std::is_sorted(pts.begin(), pts.end())) std::sort(pts.begin(), pts.end());
  return pts;
}

}  // namespace detail

/// n i.i.d. draws by inverse CDF.
inline Sample sample(const Density& f, std::size_t n, Seed seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be >= 1");
  Rng rng(seed);
  Sample s;
  s.points = detail::draw_points(f, n, rng);
  s.nominal_n = n;
  s.actual_count = n;
  s.seed = seed;
  return s;
}

/// eta ~ Poisson(n), then eta i.i.d. draws.
inline Sample sample_poissonized(const Density& f, std::size_t n, Seed seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "Poisson mean must be >= 1");
  Rng rng(seed);
  const auto eta = static_cast<std::size_t>(rng.poisson(static_cast<double>(n)));
  Sample s;
  s.points = detail::draw_points(f, eta, rng);
  s.nominal_n = n;
  s.actual_count = eta;
  s.seed = seed;
  s.poissonized = true;
  return s;
}

/// f_n(x) = (n h)^{-1} sum K((x - X_i)/h), nominal n as divisor.
inline std::vector<double> evaluate_fn(const Sample& s, const Kernel& k, double h, std::span<const double> xs) {
  require(h > 0.0, ErrorCode::InvalidArgument, "bandwidth must be positive");
  std::vector<double> out(xs.size(), 0.0);
  const double scale = 1.0 / (static_cast<double>(s.nominal_n) * h);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double x = xs[j];
    auto lo = std::lower_bound(s.points.begin(), s.points.end(), x - 0.5 * h);
    auto hi = std::upper_bound(s.points.begin(), s.points.end(), x + 0.5 * h);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) acc += k((x - *it) / h);
    out[j] = acc * scale;
  }
  return out;
}

inline double evaluate_fn(const Sample& s, const Kernel& k, double h, double x) {
  const double xs[1] = {x};
  return evaluate_fn(s, k, h, std::span<const double>(xs, 1))[0];
}

/// E f_n(x) = h^{-1} E K((x - X)/h).
inline double mean_fn(const Density& f, const Kernel& k, double h, double x) { return smooth(f, k.profile(1), h, x); }

/// k_n(x) = n Var f_eta(x) = h^{-2} E K^2((x - X)/h).
inline double kn(const Density& f, const Kernel& k, double h, double x) { return smooth(f, k.profile(2), h, x) / h; }

/// Var f_n(x) = n^{-1} (k_n(x) - (E f_n(x))^2).
inline double var_fn(const Density& f, const Kernel& k, double h, std::size_t n, double x) {
  const double m = mean_fn(f, k, h, x);
  return (kn(f, k, h, x) - m * m) / static_cast<double>(n);
}

struct L1Stat {
  double l1_deviation = 0.0;
  Interval window;
  double grid_step = 0.0;
  Seed seed = 0;
};

/// Window covering the support padded by h/2.
inline Interval default_window(const Density& f, double h) {
  const Interval s = f.support();
  return {s.lo - 0.5 * h, s.hi + 0.5 * h};
}

/// Tabulated E f_n on a uniform grid, reusable across replicates.
struct MeanGrid {
  Interval window;
  double step = 0.0;
  std::vector<double> xs;
  std::vector<double> values;
};

inline MeanGrid mean_grid(const Density& f, const Kernel& k, double h, const Interval& window, double grid_step) {
  require(grid_step > 0.0 && grid_step <= h / 10.0 * (1.0 + 1e-12), ErrorCode::InvalidArgument,
          "grid step must be in (0, h/10]");
  MeanGrid g;
  g.window = window;
  const auto cells = static_cast<std::size_t>(std::ceil(window.length() / grid_step));
  g.step = window.length() / static_cast<double>(cells);
  g.xs.resize(cells + 1);
  g.values.resize(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    g.xs[i] = i == cells ? window.hi : window.lo + g.step * static_cast<double>(i);
    g.values[i] = mean_fn(f, k, h, g.xs[i]);
  }
  return g;
}

namespace detail {

inline void check_window(const Sample& s, double h, const Interval& w) {
  if (s.points.empty()) return;
  if (s.points.front() - 0.5 * h < w.lo || s.points.back() + 0.5 * h > w.hi)
    throw Error(ErrorCode::WindowTooSmall, "sample points lie within h/2 of the window edge");
}

}  // namespace detail

/// Trapezoid integral of |f_n - E f_n| on a precomputed grid.
inline L1Stat l1_deviation(const Sample& s, const Kernel& k, double h, const MeanGrid& g) {
  detail::check_window(s, h, g.window);
  const auto fn = evaluate_fn(s, k, h, g.xs);
  double acc = 0.0;
  for (std::size_t i = 0; i < fn.size(); ++i) {
    const double w = (i == 0 || i + 1 == fn.size()) ? 0.5 : 1.0;
    acc += w * std::abs(fn[i] - g.values[i]);
  }
  return {acc * g.step, g.window, g.step, s.seed};
}

inline L1Stat l1_deviation(const Sample& s, const Kernel& k, double h, const Density& f, const Interval& window,
                           double grid_step) {
  return l1_deviation(s, k, h, mean_grid(f, k, h, window, grid_step));
}

/// Exact int_W |f_n - E f_n| for the uniform kernel: f_n is a step function with jumps at
namespace detail {

// int_window |count(x)/nh - g(x)| dx when g is linear between consecutive cuts.
template <class G>
double l1_linear_mean(const std::vector<double>& p, double h, double nh, const G& g, const Interval& window,
                      const std::vector<double>& cuts) {
  std::vector<double> seg{window.lo};
  for (double c : cuts)
    if (c > window.lo && c < window.hi) seg.push_back(c);
  seg.push_back(window.hi);
  const double half = 0.5 * h;
  const std::size_t np = p.size();
  std::size_t i_in = 0, i_out = 0;
  while (i_in < np && p[i_in] - half <= window.lo) ++i_in;
  while (i_out < np && p[i_out] + half <= window.lo) ++i_out;
  long active = static_cast<long>(i_in) - static_cast<long>(i_out);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < seg.size(); ++k) {
    const double a = seg[k], b = seg[k + 1];
    const double ga = g(a), gb = g(b);
    const double slope = (gb - ga) / (b - a);
    double x = a;
    while (x < b) {
      const double next_in = i_in < np ? p[i_in] - half : b;
      const double next_out = i_out < np ? p[i_out] + half : b;
      const double nx = std::min(std::min(next_in, next_out), b);
      if (nx > x) {
        const double c = static_cast<double>(active) / nh;
        const double da = c - (ga + slope * (x - a)), db = c - (ga + slope * (nx - a));
        total += ((da >= 0.0) == (db >= 0.0)) ? 0.5 * (nx - x) * std::abs(da + db)
                                               : 0.5 * (nx - x) * (da * da + db * db) / (std::abs(da) + std::abs(db));
      }
      x = nx;
      while (i_in < np && p[i_in] - half <= x) {
        ++active;
        ++i_in;
      }
      while (i_out < np && p[i_out] + half <= x) {
        --active;
        ++i_out;
      }
    }
  }
  return total;
}

}  // namespace detail

namespace detail {

/// int_window |f_n - E f_n| for the uniform kernel; the window may cut through the sample.
/// f_n steps at X_i +- h/2, E f_n(x) = P([x - h/2, x + h/2])/h is smooth between density
/// breakpoints +- h/2. Each step is split at its crossing (found by bisection) and integrated
/// by Gauss-Legendre.
inline double l1_uniform_kernel(const Sample& s, double h, const Density& f, const Interval& window) {
  const double nh = static_cast<double>(s.nominal_n) * h;
  auto g = [&](double x) { return f.mass(x - 0.5 * h, x + 0.5 * h) / h; };
  // event list: +1 at X - h/2, -1 at X + h/2 (both sorted since points are sorted)
  std::vector<double> cuts;
  for (double b : f.breakpoints()) {
    cuts.push_back(b - 0.5 * h);
    cuts.push_back(b + 0.5 * h);
  }
  std::sort(cuts.begin(), cuts.end());
  const auto& gl = quad::gauss_legendre(8);
  // uniform f: E f_n is linear between cuts, so |c - g| integrates in closed form
  const bool linear = f.family() == "uniform";
  if (linear) return detail::l1_linear_mean(s.points, h, nh, g, window, cuts);
  auto piece = [&](double a, double b, double c) {
    if (!(b > a)) return 0.0;
    auto d = [&](double x) { return c - g(x); };
    double da = d(a), db = d(b);
    auto absint = [&](double lo, double hi) { return std::abs(gl.integrate(d, lo, hi)); };
    if ((da > 0.0 && db < 0.0) || (da < 0.0 && db > 0.0)) {
      double lo = a, hi = b;
      for (int it = 0; it < 60 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
        const double m = 0.5 * (lo + hi);
        const double dm = d(m);
        if ((dm > 0.0) == (da > 0.0)) {
          lo = m;
        } else {
          hi = m;
        }
      }
      const double r = 0.5 * (lo + hi);
      return absint(a, r) + absint(r, b);
    }
    return absint(a, b);
  };
  const auto& p = s.points;
  std::size_t i_in = 0, i_out = 0, i_cut = 0;
  while (i_cut < cuts.size() && cuts[i_cut] <= window.lo) ++i_cut;
  while (i_in < p.size() && p[i_in] - 0.5 * h <= window.lo) ++i_in;
  while (i_out < p.size() && p[i_out] + 0.5 * h <= window.lo) ++i_out;
  double x = window.lo;
  long active = static_cast<long>(i_in) - static_cast<long>(i_out);
  double total = 0.0;
  while (x < window.hi) {
    const double next_in = i_in < p.size() ? p[i_in] - 0.5 * h : window.hi;
    const double next_out = i_out < p.size() ? p[i_out] + 0.5 * h : window.hi;
    const double next_cut = i_cut < cuts.size() ? cuts[i_cut] : window.hi;
    const double nx = std::min({next_in, next_out, next_cut, window.hi});
    total += piece(x, nx, static_cast<double>(active) / nh);
    x = nx;
    while (i_in < p.size() && p[i_in] - 0.5 * h <= x) {
      ++active;
      ++i_in;
    }
    while (i_out < p.size() && p[i_out] + 0.5 * h <= x) {
      --active;
      ++i_out;
    }
    while (i_cut < cuts.size() && cuts[i_cut] <= x) ++i_cut;
  }
  return total;
}

}  // namespace detail

inline double l1_deviation_uniform_exact(const Sample& s, double h, const Density& f, const Interval& window) {
  detail::check_window(s, h, window);
  return detail::l1_uniform_kernel(s, h, f, window);
}

/// n^{-1/2} E|Z| int_E sqrt(k_n(x)) dx, the Gaussian proxy for E ||f_n - E f_n|| on E.
inline double gaussian_mean_approx(const Density& f, const Kernel& k, double h, const RegularSet& e, std::size_t n) {
  double acc = 0.0;
  for (const auto& part : e.intervals.parts()) {
    auto cuts = detail::cuts_within(part.lo, part.hi, [&] {
      std::vector<double> pts;
      for (double b : f.breakpoints()) {
        pts.push_back(b - 0.5 * h);
        pts.push_back(b + 0.5 * h);
      }
      return pts;
    }());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const int panels = static_cast<int>(std::clamp(std::ceil((cuts[i + 1] - cuts[i]) / h), 1.0, 4096.0));
      acc += quad::composite_gl([&](double x) { return std::sqrt(kn(f, k, h, x)); }, cuts[i], cuts[i + 1], panels, 8);
    }
  }
  return stats::kMeanAbsNormal * acc / std::sqrt(static_cast<double>(n));
}

}  // namespace l1clt
