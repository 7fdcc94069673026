#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "l1clt/errors.hpp"
#include "l1clt/intervals.hpp"
#include "l1clt/kernel.hpp"
#include "l1clt/quadrature.hpp"
#include "l1clt/stats.hpp"

namespace l1clt {

/// f(z) behaves like |z - at|^{-exponent} next to `at`.
struct Singularity {
  double at = 0.0;
  double exponent = 0.0;
};

class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual std::string family() const = 0;
  virtual std::vector<std::pair<std::string, double>> params() const { return {}; }
  virtual double pdf(double x) const = 0;
  virtual double cdf(double x) const = 0;
  virtual double sf(double x) const { return 1.0 - cdf(x); }
  virtual double quantile(double u) const {
    const Interval s = support();
    return quad::bisect([&](double x) { return cdf(x) - u; }, s.lo, s.hi, 1e-16);
  }
  /// G(x) = int_{-inf}^x F(t) dt.
  virtual double cdf_integral(double x) const {
    const Interval s = support();
    if (x <= s.lo) return 0.0;
    return quad::adaptive_simpson([&](double t) { return cdf(t); }, s.lo, x, 1e-13).value;
  }
  /// f(x + d) - f(x), free of cancellation where the family allows.
  virtual double increment(double x, double d) const { return pdf(x + d) - pdf(x); }
  /// Closure of {f > 0}; truncated for infinite supports.
  virtual Interval support() const = 0;
  /// Points where f jumps or is not smooth (support ends included).
  virtual std::vector<double> breakpoints() const { return {}; }
  virtual std::vector<Singularity> singularities() const { return {}; }
  /// Candidate locations of extrema of f and of its smoothing errors.
  virtual std::vector<double> hints() const { return {}; }
  /// True for densities that are only Holder continuous (quadrature switches to fixed rules).
  virtual bool rough() const { return false; }
  /// Closed form of f*H_h(x) - I(H) f(x) when available.
  virtual std::optional<double> smoothing_error(double, double, const Profile&) const { return std::nullopt; }
  /// (inf f, sup f) on the interval when known in closed form.
  virtual std::optional<std::pair<double, double>> bounds_on(const Interval&) const { return std::nullopt; }
  /// max_x P([x, x + w]) when known in closed form.
  virtual std::optional<double> max_window_mass(double) const { return std::nullopt; }
  /// int_I f^{3/2} when known in closed form.
  virtual std::optional<double> three_halves(const Interval&) const { return std::nullopt; }
};

namespace detail {

inline std::vector<double> cuts_within(double a, double b, std::vector<double> pts) {
  std::vector<double> cuts{a, b};
  for (double p : pts)
    if (p > a && p < b) cuts.push_back(p);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace detail

class Density {
 public:
  explicit Density(std::shared_ptr<const DensityModel> model) : m_(std::move(model)) { certify(); }

  const DensityModel& model() const { return *m_; }
  std::string family() const { return m_->family(); }
  double pdf(double x) const { return m_->pdf(x); }
  double operator()(double x) const { return m_->pdf(x); }
  double cdf(double x) const { return m_->cdf(x); }
  double sf(double x) const { return m_->sf(x); }
  double quantile(double u) const { return m_->quantile(u); }
  double cdf_integral(double x) const { return m_->cdf_integral(x); }
  double increment(double x, double d) const { return m_->increment(x, d); }
  Interval support() const { return m_->support(); }
  std::vector<double> breakpoints() const { return m_->breakpoints(); }
  std::vector<Singularity> singularities() const { return m_->singularities(); }
  bool rough() const { return m_->rough(); }

  /// P([a, b]) using whichever tail keeps precision.
  double mass(double a, double b) const {
    if (!(b > a)) return 0.0;
    const double fa = m_->cdf(a);
    if (fa > 0.5) return std::max(0.0, m_->sf(a) - m_->sf(b));
    return std::max(0.0, m_->cdf(b) - fa);
  }

  /// Integral of g over [a,b], split at the density's breakpoints and `extra`, with a
  /// power substitution on pieces that touch a singularity. `scale` multiplies the
  /// singular exponent (for integrands like f^{3/2}).
  template <class G>
  double integrate(const G& g, double a, double b, const std::vector<double>& extra = {}, double scale = 1.0,
                   double rel_tol = 1e-10) const {
    if (!(b > a)) return 0.0;
    std::vector<double> pts = m_->breakpoints();
    pts.insert(pts.end(), extra.begin(), extra.end());
    const auto sing = m_->singularities();
    for (const auto& s : sing) pts.push_back(s.at);
    const auto cuts = detail::cuts_within(a, b, pts);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double lo = cuts[i], hi = cuts[i + 1];
      const Singularity* left = nullptr;
      const Singularity* right = nullptr;
      for (const auto& s : sing) {
        if (s.at == lo) left = &s;
        if (s.at == hi) right = &s;
      }
      if (left || right) {
        const double expo = std::min(0.95, (left ? left->exponent : right->exponent) * scale);
        const double p = 1.0 / (1.0 - expo);
        const double len = hi - lo;
        auto sub = [&](double v) {
          const double z = left ? lo + len * std::pow(v, p) : hi - len * std::pow(v, p);
          return g(z) * len * p * std::pow(v, p - 1.0);
        };
        total += quad::composite_gl(sub, 0.0, 1.0, 32, 32);
      } else if (m_->rough()) {
        const int panels = static_cast<int>(std::clamp((hi - lo) * 4096.0, 8.0, 65536.0));
        total += quad::composite_gl(g, lo, hi, panels, 16);
      } else {
        const double est = quad::composite_gl(g, lo, hi, 8, 16);
        const double tol = std::max(1e-300, rel_tol * std::abs(est)) + 1e-15 * (hi - lo) * 1e-300;
        total += quad::adaptive_simpson(g, lo, hi, tol, 50).value;
      }
    }
    return total;
  }

 private:
  void certify() const {
    const Interval s = m_->support();
    require(s.hi > s.lo, ErrorCode::InvalidArgument, "density support is empty");
    const double total = m_->cdf(s.hi) - m_->cdf(s.lo);
    require(std::abs(total - 1.0) <= 1e-9, ErrorCode::NonUnitIntegral,
            m_->family() + " density has total mass " + std::to_string(total));
    for (int j = 1; j < 1000; ++j) {
      const double x = s.lo + (s.hi - s.lo) * j / 1000.0;
      require(m_->pdf(x) >= 0.0, ErrorCode::DomainError, m_->family() + " density is negative somewhere");
    }
    if (!m_->rough()) {
      const double numeric = integrate([&](double x) { return m_->pdf(x); }, s.lo, s.hi, {}, 1.0, 1e-12);
      require(std::abs(numeric - 1.0) <= 1e-9, ErrorCode::NonUnitIntegral,
              m_->family() + " density integrates numerically to " + std::to_string(numeric));
    }
  }

  std::shared_ptr<const DensityModel> m_;
};

// ---------------------------------------------------------------- families

class UniformModel final : public DensityModel {
 public:
  UniformModel(double a, double b) : a_(a), b_(b) {
    require(b > a, ErrorCode::InvalidArgument, "uniform density needs a < b");
  }
  std::string family() const override { return "uniform"; }
  std::vector<std::pair<std::string, double>> params() const override { return {{"a", a_}, {"b", b_}}; }
  double pdf(double x) const override { return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0; }
  double cdf(double x) const override { return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0); }
  double sf(double x) const override { return std::clamp((b_ - x) / (b_ - a_), 0.0, 1.0); }
  double quantile(double u) const override { return a_ + u * (b_ - a_); }
  double cdf_integral(double x) const override {
    if (x <= a_) return 0.0;
    if (x <= b_) return 0.5 * (x - a_) * (x - a_) / (b_ - a_);
    return 0.5 * (b_ - a_) + (x - b_);
  }
  Interval support() const override { return {a_, b_}; }
  std::vector<double> breakpoints() const override { return {a_, b_}; }
  std::optional<std::pair<double, double>> bounds_on(const Interval& i) const override {
    const double v = 1.0 / (b_ - a_);
    const bool inside = i.lo >= a_ && i.hi <= b_;
    return std::pair{inside ? v : 0.0, (i.hi >= a_ && i.lo <= b_) ? v : 0.0};
  }
  std::optional<double> max_window_mass(double w) const override { return std::min(w, b_ - a_) / (b_ - a_); }
  std::optional<double> three_halves(const Interval& i) const override {
    return intersect(i, {a_, b_}).length() * std::pow(b_ - a_, -1.5);
  }

 private:
  double a_, b_;
};

class GaussianModel final : public DensityModel {
 public:
  GaussianModel(double mean, double sd) : mu_(mean), s_(sd) {
    require(sd > 0.0, ErrorCode::InvalidArgument, "gaussian sd must be positive");
  }
  std::string family() const override { return "gaussian"; }
  std::vector<std::pair<std::string, double>> params() const override { return {{"mean", mu_}, {"sd", s_}}; }
  double pdf(double x) const override {
    const double z = (x - mu_) / s_;
    return std::exp(-0.5 * z * z) / (s_ * std::sqrt(2.0 * std::numbers::pi));
  }
  double cdf(double x) const override { return stats::normal_cdf((x - mu_) / s_); }
  double sf(double x) const override { return stats::normal_sf((x - mu_) / s_); }
  double quantile(double u) const override { return mu_ + s_ * stats::normal_quantile(u); }
  double cdf_integral(double x) const override {
    const double z = (x - mu_) / s_;
    return s_ * (z * stats::normal_cdf(z) + stats::normal_pdf(z));
  }
  double increment(double x, double d) const override {
    const double z = (x - mu_) / s_;
    const double e = d / s_;
    return pdf(x) * std::expm1(-(z * e + 0.5 * e * e));
  }
  Interval support() const override { return {mu_ - 12.0 * s_, mu_ + 12.0 * s_}; }
  std::vector<double> hints() const override { return {mu_}; }
  std::optional<std::pair<double, double>> bounds_on(const Interval& i) const override {
    return std::pair{std::min(pdf(i.lo), pdf(i.hi)), pdf(std::clamp(mu_, i.lo, i.hi))};
  }
  std::optional<double> max_window_mass(double w) const override {
    return std::erf(w / (2.0 * std::numbers::sqrt2 * s_));
  }
  std::optional<double> three_halves(const Interval& i) const override {
    const double c = std::pow(2.0 * std::numbers::pi * s_ * s_, -0.75) * s_ * std::sqrt(4.0 * std::numbers::pi / 3.0);
    const double k = std::sqrt(1.5);
    const double za = k * (i.lo - mu_) / s_, zb = k * (i.hi - mu_) / s_;
    const double m = za > 0.0 ? stats::normal_sf(za) - stats::normal_sf(zb) : stats::normal_cdf(zb) - stats::normal_cdf(za);
    return c * m;
  }

 private:
  double mu_, s_;
};

/// f(x) = (1 - gamma) x^{-gamma} on (0, 1].
class PowerLawModel final : public DensityModel {
 public:
  explicit PowerLawModel(double gamma) : g_(gamma) {
    require(gamma > 0.0 && gamma < 1.0, ErrorCode::InvalidArgument, "power law needs 0 < gamma < 1");
  }
  std::string family() const override { return "power_law"; }
  std::vector<std::pair<std::string, double>> params() const override { return {{"gamma", g_}}; }
  double gamma() const { return g_; }
  double pdf(double x) const override { return (x > 0.0 && x <= 1.0) ? (1.0 - g_) * std::pow(x, -g_) : 0.0; }
  double cdf(double x) const override { return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : std::pow(x, 1.0 - g_)); }
  double sf(double x) const override {
    return x <= 0.0 ? 1.0 : (x >= 1.0 ? 0.0 : -std::expm1((1.0 - g_) * std::log(x)));
  }
  double quantile(double u) const override { return std::pow(u, 1.0 / (1.0 - g_)); }
  double cdf_integral(double x) const override {
    if (x <= 0.0) return 0.0;
    if (x <= 1.0) return std::pow(x, 2.0 - g_) / (2.0 - g_);
    return 1.0 / (2.0 - g_) + (x - 1.0);
  }
  double increment(double x, double d) const override {
    const double y = x + d;
    if (x > 0.0 && x <= 1.0 && y > 0.0 && y <= 1.0) return pdf(x) * std::expm1(-g_ * std::log1p(d / x));
    return pdf(y) - pdf(x);
  }
  Interval support() const override { return {0.0, 1.0}; }
  std::vector<double> breakpoints() const override { return {0.0, 1.0}; }
  std::vector<Singularity> singularities() const override { return {{0.0, g_}}; }
  std::vector<double> hints() const override { return {0.0, 1.0}; }
  std::optional<std::pair<double, double>> bounds_on(const Interval& i) const override {
    if (i.lo <= 0.0) return std::pair{0.0, std::numeric_limits<double>::infinity()};
    if (i.hi > 1.0) return std::pair{0.0, pdf(i.lo)};
    return std::pair{pdf(i.hi), pdf(i.lo)};
  }
  std::optional<double> max_window_mass(double w) const override { return std::pow(std::min(w, 1.0), 1.0 - g_); }
  std::optional<double> three_halves(const Interval& i) const override {
    const double a = std::max(i.lo, 0.0), b = std::min(i.hi, 1.0);
    if (!(b > a)) return 0.0;
    const double c = std::pow(1.0 - g_, 1.5);
    const double e = 1.0 - 1.5 * g_;
    if (a == 0.0) {
      if (e <= 0.0) return std::numeric_limits<double>::infinity();
      return c * std::pow(b, e) / e;
    }
    const double lr = std::log(b / a);
    // (b^e - a^e)/e written to stay exact as e -> 0 (gamma = 2/3 gives log(b/a)).
    if (std::abs(e * lr) < 1e-300 || e == 0.0) return c * lr;
    return c * std::pow(a, e) * std::expm1(e * lr) / e;
  }

 private:
  double g_;
};

/// One piece of a piecewise Holder density on [a, b):
/// r(x) = poly(x) + amp * sum_{k<terms} 2^{-k gamma} cos(2^k pi t), t = (x - a)/(b - a).
struct HolderPiece {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> poly{1.0};
  double amp = 0.0;
  double gamma = 1.0;
  int terms = 40;
};

class PiecewiseHolderModel final : public DensityModel {
 public:
  explicit PiecewiseHolderModel(std::vector<HolderPiece> pieces) : p_(std::move(pieces)) {
    require(!p_.empty(), ErrorCode::InvalidArgument, "piecewise density needs at least one piece");
    std::sort(p_.begin(), p_.end(), [](const HolderPiece& x, const HolderPiece& y) { return x.a < y.a; });
    double acc = 0.0;
    for (std::size_t j = 0; j < p_.size(); ++j) {
      const auto& q = p_[j];
      require(q.b > q.a, ErrorCode::InvalidArgument, "piece needs a < b");
      require(q.gamma > 0.0 && q.gamma <= 1.0, ErrorCode::InvalidArgument, "Holder exponent must be in (0,1]");
      if (j > 0) require(q.a >= p_[j - 1].b, ErrorCode::InvalidArgument, "pieces must be disjoint");
      start_mass_.push_back(acc);
      acc += poly::integral(q.poly, q.a, q.b);
    }
    total_ = acc;
    // cdf_integral at each piece start.
    double g = 0.0;
    for (std::size_t j = 0; j < p_.size(); ++j) {
      if (j > 0) g += piece_g(j - 1, p_[j - 1].b) + start_mass_[j] * (p_[j].a - p_[j - 1].b);
      start_g_.push_back(g);
    }
  }

  std::string family() const override { return "piecewise_lipschitz"; }
  std::vector<std::pair<std::string, double>> params() const override {
    return {{"gamma", p_.front().gamma}, {"pieces", static_cast<double>(p_.size())}};
  }

  double pdf(double x) const override {
    const int j = piece_of(x);
    if (j < 0) return 0.0;
    const auto& q = p_[j];
    const double t = (x - q.a) / (q.b - q.a);
    double w = 0.0;
    double scale = 1.0;
    const double ratio = std::pow(2.0, -q.gamma);
    for (int k = 0; k < q.terms; ++k) {
      w += scale * std::cos(std::ldexp(std::numbers::pi, k) * t);
      scale *= ratio;
    }
    return poly::eval(q.poly, x) + q.amp * w;
  }

  double cdf(double x) const override {
    if (x <= p_.front().a) return 0.0;
    int j = last_piece_starting_before(x);
    const auto& q = p_[j];
    if (x >= q.b) return start_mass_[j] + poly::integral(q.poly, q.a, q.b);
    const double len = q.b - q.a;
    const double t = (x - q.a) / len;
    double s = 0.0, scale = 1.0;
    const double ratio = std::pow(2.0, -q.gamma);
    for (int k = 0; k < q.terms; ++k) {
      const double om = std::ldexp(std::numbers::pi, k);
      s += scale * std::sin(om * t) / om;
      scale *= ratio;
    }
    return start_mass_[j] + poly::integral(q.poly, q.a, x) + q.amp * len * s;
  }

  double cdf_integral(double x) const override {
    if (x <= p_.front().a) return 0.0;
    int j = last_piece_starting_before(x);
    const auto& q = p_[j];
    if (x >= q.b) return start_g_[j] + piece_g(j, q.b) + (start_mass_[j] + poly::integral(q.poly, q.a, q.b)) * (x - q.b);
    return start_g_[j] + piece_g(j, x);
  }

  double quantile(double u) const override {
    const Interval s = support();
    double lo = s.lo, hi = s.hi;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double m = 0.5 * (lo + hi);
      (cdf(m) < u ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
  }

  double increment(double x, double d) const override {
    const int j = piece_of(x);
    const int k2 = piece_of(x + d);
    if (j < 0 || j != k2) return pdf(x + d) - pdf(x);
    const auto& q = p_[j];
    const double len = q.b - q.a;
    const double t = (x - q.a) / len;
    const double dt = d / len;
    double s = 0.0, scale = 1.0;
    const double ratio = std::pow(2.0, -q.gamma);
    for (int k = 0; k < q.terms; ++k) {
      const double om = std::ldexp(std::numbers::pi, k);
      s += scale * -2.0 * std::sin(om * (t + 0.5 * dt)) * std::sin(0.5 * om * dt);
      scale *= ratio;
    }
    return poly::eval(q.poly, x + d) - poly::eval(q.poly, x) + q.amp * s;
  }

  Interval support() const override { return {p_.front().a, p_.back().b}; }
  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    for (const auto& q : p_) {
      out.push_back(q.a);
      out.push_back(q.b);
    }
    return out;
  }
  bool rough() const override {
    for (const auto& q : p_)
      if (q.amp != 0.0 && q.gamma < 1.0) return true;
    return false;
  }
  std::vector<double> hints() const override {
    std::vector<double> out;
    for (const auto& q : p_)
      for (int j = 0; j <= 1024; ++j) out.push_back(q.a + (q.b - q.a) * j / 1024.0);
    return out;
  }

  std::optional<double> smoothing_error(double x, double h, const Profile& H) const override {
    const int j = piece_of(x);
    if (j < 0) return std::nullopt;
    const auto& q = p_[j];
    if (x - 0.5 * h < q.a || x + 0.5 * h >= q.b) return std::nullopt;
    const double len = q.b - q.a;
    const double t = (x - q.a) / len;
    // polynomial part: int (poly(x - h u) - poly(x)) H(u) du
    double polypart = 0.0;
    if (q.poly.size() > 1) {
      const auto& gl = quad::gauss_legendre(16);
      for (std::size_t i = 0; i + 1 < H.breaks.size(); ++i)
        polypart += gl.integrate([&](double u) { return (poly::eval(q.poly, x - h * u) - poly::eval(q.poly, x)) * H(u); },
                                 H.breaks[i], H.breaks[i + 1]);
    }
    double s = 0.0, scale = 1.0;
    const double ratio = std::pow(2.0, -q.gamma);
    for (int k = 0; k < q.terms; ++k) {
      const double om = std::ldexp(std::numbers::pi, k);
      const std::complex<double> phase = std::polar(1.0, om * t);
      s += scale * (phase * H.fourier_minus_integral(-om * h / len)).real();
      scale *= ratio;
    }
    return polypart + q.amp * s;
  }

 private:
  int piece_of(double x) const {
    for (std::size_t j = 0; j < p_.size(); ++j)
      if (x >= p_[j].a && x < p_[j].b) return static_cast<int>(j);
    return -1;
  }
  int last_piece_starting_before(double x) const {
    int j = 0;
    for (std::size_t i = 0; i < p_.size(); ++i)
      if (p_[i].a < x) j = static_cast<int>(i);
    return j;
  }
  // int_{a_j}^x (F(s) - F(a_j)) ds within piece j.
  double piece_g(std::size_t j, double x) const {
    const auto& q = p_[j];
    const double len = q.b - q.a;
    const double t = (x - q.a) / len;
    std::vector<double> anti(q.poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < q.poly.size(); ++i) anti[i + 1] = q.poly[i] / static_cast<double>(i + 1);
    const double pa = poly::eval(anti, q.a);
    std::vector<double> shifted = anti;
    shifted[0] -= pa;
    const double polypart = poly::integral(shifted, q.a, x);
    double s = 0.0, scale = 1.0;
    const double ratio = std::pow(2.0, -q.gamma);
    for (int k = 0; k < q.terms; ++k) {
      const double om = std::ldexp(std::numbers::pi, k);
      const double sh = std::sin(0.5 * om * t);
      s += scale * 2.0 * sh * sh / (om * om);
      scale *= ratio;
    }
    return start_mass_[j] * (x - q.a) + polypart + q.amp * len * len * s;
  }

  std::vector<HolderPiece> p_;
  std::vector<double> start_mass_;
  std::vector<double> start_g_;
  double total_ = 0.0;
};

/// Grid-tabulated density with linear interpolation, renormalized (approximate by design).
class CustomModel final : public DensityModel {
 public:
  CustomModel(std::vector<double> xs, std::vector<double> ys) : x_(std::move(xs)), y_(std::move(ys)) {
    require(x_.size() >= 2 && x_.size() == y_.size(), ErrorCode::InvalidArgument, "custom density needs matching grids");
    for (std::size_t i = 1; i < x_.size(); ++i)
      require(x_[i] > x_[i - 1], ErrorCode::InvalidArgument, "custom density grid must increase");
    for (double y : y_) require(y >= 0.0, ErrorCode::InvalidArgument, "custom density values must be >= 0");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) total += 0.5 * (y_[i] + y_[i + 1]) * (x_[i + 1] - x_[i]);
    require(total > 0.0, ErrorCode::InvalidArgument, "custom density has zero mass");
    for (double& y : y_) y /= total;
    c_.assign(x_.size(), 0.0);
    g_.assign(x_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
      const double d = x_[i + 1] - x_[i];
      c_[i + 1] = c_[i] + 0.5 * (y_[i] + y_[i + 1]) * d;
      g_[i + 1] = g_[i] + c_[i] * d + y_[i] * d * d / 2.0 + (y_[i + 1] - y_[i]) * d * d / 6.0;
    }
    c_.back() = 1.0;
  }
  std::string family() const override { return "custom"; }
  double pdf(double x) const override {
    if (x < x_.front() || x > x_.back()) return 0.0;
    const std::size_t i = cell(x);
    const double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
    return y_[i] + w * (y_[i + 1] - y_[i]);
  }
  double cdf(double x) const override {
    if (x <= x_.front()) return 0.0;
    if (x >= x_.back()) return 1.0;
    const std::size_t i = cell(x);
    const double d = x_[i + 1] - x_[i];
    const double s = x - x_[i];
    return c_[i] + y_[i] * s + (y_[i + 1] - y_[i]) * s * s / (2.0 * d);
  }
  double cdf_integral(double x) const override {
    if (x <= x_.front()) return 0.0;
    if (x >= x_.back()) return g_.back() + (x - x_.back());
    const std::size_t i = cell(x);
    const double d = x_[i + 1] - x_[i];
    const double s = x - x_[i];
    return g_[i] + c_[i] * s + y_[i] * s * s / 2.0 + (y_[i + 1] - y_[i]) * s * s * s / (6.0 * d);
  }
  double quantile(double u) const override {
    auto it = std::upper_bound(c_.begin(), c_.end(), u);
    std::size_t i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - c_.begin() - 1, 0, static_cast<std::ptrdiff_t>(x_.size()) - 2));
    const double d = x_[i + 1] - x_[i];
    const double a = (y_[i + 1] - y_[i]) / (2.0 * d);
    const double b = y_[i];
    const double r = u - c_[i];
    double s;
    if (std::abs(a) < 1e-300) {
      s = b > 0.0 ? r / b : 0.0;
    } else {
      const double disc = std::max(0.0, b * b + 4.0 * a * r);
      s = 2.0 * r / (b + std::sqrt(disc));
    }
    return x_[i] + std::clamp(s, 0.0, d);
  }
  Interval support() const override { return {x_.front(), x_.back()}; }
  std::vector<double> breakpoints() const override { return x_; }
  std::vector<double> hints() const override { return x_; }
  std::optional<std::pair<double, double>> bounds_on(const Interval& in) const override {
    double lo = std::min(pdf(in.lo), pdf(in.hi)), hi = std::max(pdf(in.lo), pdf(in.hi));
    for (std::size_t i = 0; i < x_.size(); ++i)
      if (x_[i] > in.lo && x_[i] < in.hi) {
        lo = std::min(lo, y_[i]);
        hi = std::max(hi, y_[i]);
      }
    return std::pair{lo, hi};
  }

 private:
  std::size_t cell(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - x_.begin() - 1, 0, static_cast<std::ptrdiff_t>(x_.size()) - 2));
  }
  std::vector<double> x_, y_, c_, g_;
};

inline Density uniform_density(double a = 0.0, double b = 1.0) { return Density(std::make_shared<UniformModel>(a, b)); }
inline Density gaussian_density(double mean = 0.0, double sd = 1.0) {
  return Density(std::make_shared<GaussianModel>(mean, sd));
}
inline Density power_law_density(double gamma) { return Density(std::make_shared<PowerLawModel>(gamma)); }
inline Density piecewise_holder_density(std::vector<HolderPiece> pieces) {
  return Density(std::make_shared<PiecewiseHolderModel>(std::move(pieces)));
}
/// f = 1 + c W on [0,1) with W a Weierstrass series of exponent gamma, c = (1 - 2^{-gamma})/2,
/// so 1/2 <= f <= 3/2 and the increments are Holder-gamma.
inline Density holder_density(double gamma, int terms = 40) {
  HolderPiece p;
  p.a = 0.0;
  p.b = 1.0;
  p.poly = {1.0};
  p.gamma = gamma;
  p.amp = gamma < 1.0 ? 0.5 * (1.0 - std::pow(2.0, -gamma)) : 0.0;
  p.terms = terms;
  return piecewise_holder_density({p});
}
inline Density custom_density(std::vector<double> xs, std::vector<double> ys) {
  return Density(std::make_shared<CustomModel>(std::move(xs), std::move(ys)));
}

// ---------------------------------------------------------------- measure queries

/// P(B) for an interval union.
inline double prob(const Density& f, const IntervalSet& b) {
  double s = 0.0;
  for (const auto& p : b.parts()) s += f.mass(p.lo, p.hi);
  return s;
}
inline double prob(const Density& f, const Interval& b) { return f.mass(b.lo, b.hi); }

namespace detail {

inline bool is_box(const Profile& H) {
  return H.pieces.size() == 1 && H.pieces[0].coeffs.size() == 1 && H.pieces[0].coeffs[0] == 1.0 &&
         H.pieces[0].lo == -0.5 && H.pieces[0].hi == 0.5;
}

inline bool is_step(const Profile& H) {
  return !H.pieces.empty() &&
         std::all_of(H.pieces.begin(), H.pieces.end(), [](const PolyPiece& p) { return p.coeffs.size() == 1; });
}

inline bool singular_near(const Density& f, double lo, double hi) {
  for (const auto& s : f.singularities())
    if (s.at >= lo && s.at <= hi) return true;
  return false;
}

}  // namespace detail

namespace detail {

/// int (f(x - h u) - f(x)) H(u) du by Gauss-Legendre, split at the breaks of H and of f.
inline double increment_smoothing(const Density& f, const Profile& H, double h, double x) {
  std::vector<double> cuts(H.breaks.begin(), H.breaks.end());
  for (double b : f.breakpoints()) {
    const double u = (x - b) / h;
    if (u > H.breaks.front() && u < H.breaks.back()) cuts.push_back(u);
  }
  std::sort(cuts.begin(), cuts.end());
  const auto& gl = quad::gauss_legendre(32);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (!(cuts[i + 1] > cuts[i])) continue;
    s += gl.integrate([&](double u) { return f.increment(x, -h * u) * H(u); }, cuts[i], cuts[i + 1]);
  }
  return s;
}

}  // namespace detail

/// f * H_h (x) = h^{-1} int f(z) H((x - z)/h) dz.
inline double smooth(const Density& f, const Profile& H, double h, double x) {
  require(h > 0.0, ErrorCode::InvalidArgument, "bandwidth must be positive");
  if (detail::is_box(H)) return f.mass(x - 0.5 * h, x + 0.5 * h) / h;
  if (detail::is_step(H)) {
    double s = 0.0;
    for (const auto& p : H.pieces) s += p.coeffs[0] * f.mass(x - h * p.hi, x - h * p.lo);
    return s / h;
  }
  if (auto e = f.model().smoothing_error(x, h, H)) return H.integral * f.pdf(x) + *e;
  if (!f.rough() && !detail::singular_near(f, x - 0.5 * h, x + 0.5 * h))
    return H.integral * f.pdf(x) + detail::increment_smoothing(f, H, h, x);
  std::vector<double> extra;
  for (double b : H.breaks) extra.push_back(x - h * b);
  return f.integrate([&](double z) { return f.pdf(z) * H((x - z) / h); }, x - 0.5 * h, x + 0.5 * h, extra) / h;
}

/// f * H_h (x) - I(H) f(x), evaluated through increments where possible.
inline double smoothing_error(const Density& f, const Profile& H, double h, double x) {
  if (auto e = f.model().smoothing_error(x, h, H)) return *e;
  if (f.rough() || detail::singular_near(f, x - 0.5 * h, x + 0.5 * h)) return smooth(f, H, h, x) - H.integral * f.pdf(x);
  return detail::increment_smoothing(f, H, h, x);
}

struct RegularSet {
  IntervalSet intervals;
  double lambda = 0.0;
  double beta_n = 0.0;
  double d_n = 0.0;
  double phi_n = 0.0;
};

namespace detail {

/// Sample points covering [a,b]: step `step` when affordable, else `cap` points plus
/// geometric refinement near both ends.
inline std::vector<double> sup_grid(double a, double b, double step, std::size_t cap, const std::vector<double>& hints) {
  std::vector<double> xs;
  const double span = b - a;
  if (!(span > 0.0)) return {a};
  const double count = std::ceil(span / step);
  if (count <= static_cast<double>(cap)) {
    const auto n = static_cast<std::size_t>(count);
    for (std::size_t i = 0; i <= n; ++i) xs.push_back(i == n ? b : a + span * static_cast<double>(i) / static_cast<double>(n));
  } else {
    for (std::size_t i = 0; i <= cap; ++i) xs.push_back(a + span * static_cast<double>(i) / static_cast<double>(cap));
    for (double off = span / static_cast<double>(cap); off > 0.25 * step; off *= 0.5) {
      xs.push_back(a + off);
      xs.push_back(b - off);
      xs.push_back(a + 1.5 * off);
      xs.push_back(b - 1.5 * off);
    }
  }
  for (double hnt : hints)
    if (hnt >= a && hnt <= b) xs.push_back(hnt);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

/// int_a^b g with panels growing geometrically away from both ends (first width `w0`),
/// each refined by adaptive Simpson relative to its own size.
template <class G>
double graded_integral(const G& g, double a, double b, double w0) {
  std::vector<double> left{a}, right{b};
  const double mid = 0.5 * (a + b);
  const double cap = (b - a) / 64.0;
  double w = std::min(w0, cap);
  while (left.back() + w < mid) {
    left.push_back(left.back() + w);
    right.push_back(right.back() - w);
    w = std::min(2.0 * w, cap);
  }
  std::vector<double> nodes = left;
  nodes.push_back(mid);
  nodes.insert(nodes.end(), right.rbegin(), right.rend());
  const auto& gl = quad::gauss_legendre(16);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double lo = nodes[i], hi = nodes[i + 1];
    if (!(hi > lo)) continue;
    const double est = gl.integrate(g, lo, hi);
    const double tol = 1e-10 * std::abs(est) + 1e-300;
    total += quad::adaptive_simpson(g, lo, hi, tol, 20).value;
  }
  return total;
}

/// Max of g over a sorted grid, polished by golden section around the best few points.
template <class G>
std::pair<double, double> grid_max(const G& g, const std::vector<double>& xs, int polish = 4) {
  std::vector<std::pair<double, std::size_t>> vals;
  vals.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) vals.emplace_back(g(xs[i]), i);
  const auto top = std::min<std::size_t>(static_cast<std::size_t>(polish), vals.size());
  std::partial_sort(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(top), vals.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = vals.front().first;
  double arg = xs[vals.front().second];
  for (std::size_t k = 0; k < top; ++k) {
    const std::size_t i = vals[k].second;
    const double lo = xs[i == 0 ? 0 : i - 1];
    const double hi = xs[std::min(i + 1, xs.size() - 1)];
    if (hi > lo) {
      const auto r = quad::golden_max(g, lo, hi, 60);
      if (r.second > best) {
        best = r.second;
        arg = r.first;
      }
    }
  }
  return {arg, best};
}

}  // namespace detail

/// (inf f, sup f) over an interval union.
inline std::pair<double, double> density_range(const Density& f, const IntervalSet& set) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& p : set.parts()) {
    if (auto b = f.model().bounds_on(p)) {
      lo = std::min(lo, b->first);
      hi = std::max(hi, b->second);
      continue;
    }
    const auto xs = detail::sup_grid(p.lo, p.hi, p.length() / 20000.0, 20000, f.model().hints());
    // sample strictly inside [lo, hi) so jumps at the right end are not picked up
    auto val = [&](double x) { return f.pdf(std::min(x, std::nextafter(p.hi, p.lo))); };
    lo = std::min(lo, -detail::grid_max([&](double x) { return -val(x); }, xs).second);
    hi = std::max(hi, detail::grid_max(val, xs).second);
  }
  return {lo, hi};
}

/// E_n with beta_n, D_n, lambda and phi_n = 1 - P(E_n).
inline RegularSet density_bounds(const Density& f, const IntervalSet& set) {
  require(!set.empty(), ErrorCode::EmptySet, "regular set is empty");
  RegularSet r;
  r.intervals = set;
  r.lambda = set.measure();
  const auto [lo, hi] = density_range(f, set);
  if (!(lo > 0.0)) throw Error(ErrorCode::DegenerateSet, "inf f on the set is 0");
  r.beta_n = lo;
  r.d_n = hi;
  const Interval s = f.support();
  r.phi_n = prob(f, set.complement_in({std::min(s.lo, set.lower()) - 1.0, std::max(s.hi, set.upper()) + 1.0}));
  return r;
}

struct SupResult {
  double value = 0.0;
  double argmax = 0.0;
  double grid_step = 0.0;
  std::size_t grid_points = 0;
  std::string profile;
};

/// eps_n = sup_{H in {K, K^2, |K|^3, box}} sup_{x in E} |f*H_h(x) - I(H) f(x)|.
inline SupResult epsilon_n(const Density& f, const RegularSet& e, const Kernel& k, double h) {
  SupResult out;
  const double step = h / 20.0;
  std::vector<const Profile*> profiles{&k.profile(1), &k.profile(2), &k.profile(3), &k.profile(0)};
  if (k.is_uniform()) profiles = {&k.profile(0)};
  for (const auto& part : e.intervals.parts()) {
    const auto xs = detail::sup_grid(part.lo, part.hi, step, 20000, f.model().hints());
    out.grid_points += xs.size();
    out.grid_step = std::max(out.grid_step, xs.size() > 1 ? part.length() / static_cast<double>(xs.size() - 1) : 0.0);
    for (const Profile* H : profiles) {
      const auto r = detail::grid_max([&](double x) { return std::abs(smoothing_error(f, *H, h, std::clamp(x, part.lo, part.hi))); }, xs);
      if (r.second > out.value) {
        out.value = r.second;
        out.argmax = r.first;
        out.profile = H->name;
      }
    }
  }
  return out;
}

/// P_n = max_x P([x, x + 2h]).
inline double small_interval_mass(const Density& f, double h) {
  require(h > 0.0, ErrorCode::InvalidArgument, "bandwidth must be positive");
  const double w = 2.0 * h;
  if (auto v = f.model().max_window_mass(w)) return *v;
  const Interval s = f.support();
  std::vector<double> hints;
  for (double x : f.model().hints()) {
    hints.push_back(x - w);
    hints.push_back(x - h);
    hints.push_back(x);
  }
  const auto xs = detail::sup_grid(s.lo - w, s.hi, 0.25 * h, 40000, hints);
  return detail::grid_max([&](double x) { return f.mass(x, x + w); }, xs, 6).second;
}

/// L(n,B) = int_B |h^{-1} P{X in [x - h/2, x + h/2]} - f(x)| dx; B defaults to the whole line.
inline double l1_smoothing_error(const Density& f, double h, std::optional<IntervalSet> b = std::nullopt) {
  require(h > 0.0, ErrorCode::InvalidArgument, "bandwidth must be positive");
  const Interval s = f.support();
  const Interval padded{s.lo - 0.5 * h, s.hi + 0.5 * h};
  const IntervalSet domain = b ? b->intersect(padded) : IntervalSet{padded};
  const Profile box = box_profile();
  std::vector<double> extra;
  for (double p : f.breakpoints()) {
    extra.push_back(p - 0.5 * h);
    extra.push_back(p + 0.5 * h);
  }
  for (const auto& sg : f.singularities()) {
    extra.push_back(sg.at - 0.5 * h);
    extra.push_back(sg.at + 0.5 * h);
  }
  auto integrand = [&](double x) { return std::abs(smoothing_error(f, box, h, x)); };
  double total = 0.0;
  for (const auto& part : domain.parts()) {
    if (f.rough()) {
      // Holder densities: fixed rules resolving the scale h.
      const auto cuts = detail::cuts_within(part.lo, part.hi, [&] {
        auto pts = extra;
        for (double p : f.breakpoints()) pts.push_back(p);
        return pts;
      }());
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double len = cuts[i + 1] - cuts[i];
        const double panels = std::ceil(len / (0.5 * h));
        if (panels <= 200000.0) {
          total += quad::composite_gl(integrand, cuts[i], cuts[i + 1], static_cast<int>(std::max(1.0, panels)), 8);
        } else {
          total += quad::kronecker(integrand, cuts[i], cuts[i + 1], 1600000);
        }
      }
    } else {
      auto pts = extra;
      for (double p : f.breakpoints()) pts.push_back(p);
      const auto cuts = detail::cuts_within(part.lo, part.hi, pts);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        bool sing = false;
        for (const auto& sg : f.singularities()) sing = sing || sg.at == cuts[i] || sg.at == cuts[i + 1];
        if (sing) {
          total += f.integrate(integrand, cuts[i], cuts[i + 1]);
        } else {
          total += detail::graded_integral(integrand, cuts[i], cuts[i + 1], 0.25 * h);
        }
      }
    }
  }
  return total;
}

/// N_n = int_E f^{3/2}.
inline double three_halves_integral(const Density& f, const IntervalSet& e) {
  double s = 0.0;
  for (const auto& p : e.parts()) {
    if (auto v = f.model().three_halves(p)) {
      s += *v;
    } else {
      s += f.integrate([&](double x) { const double v = f.pdf(x); return v * std::sqrt(v); }, p.lo, p.hi, {}, 1.5, 1e-11);
    }
  }
  return s;
}

struct TailCutoff {
  double m = 0.0;
  bool compact_flag = false;  // alpha not attainable: support radius returned
};

/// M with P(|X| > M) = alpha.
inline TailCutoff tail_cutoff(const Density& f, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  const Interval s = f.support();
  const double radius = std::max(std::abs(s.lo), std::abs(s.hi));
  auto tail = [&](double m) { return f.cdf(-m) + f.sf(m); };
  if (tail(0.0) < alpha) return {0.0, true};
  if (tail(radius) >= alpha && f.family() != "gaussian") return {radius, true};
  double lo = 0.0, hi = radius;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) > alpha ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false};
}

}  // namespace l1clt
