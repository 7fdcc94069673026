#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "l1clt/blocks.hpp"
#include "l1clt/density.hpp"
#include "l1clt/errors.hpp"
#include "l1clt/kde.hpp"
#include "l1clt/kernel.hpp"
#include "l1clt/parallel.hpp"
#include "l1clt/random.hpp"
#include "l1clt/rates.hpp"
#include "l1clt/stats.hpp"

namespace l1clt {

/// log* b = max{e, log b}.
inline double log_star(double x) {
  require(x > 0.0, ErrorCode::DomainError, "log* needs a positive argument");
  return std::max(std::numbers::e, std::log(x));
}

enum class StatisticKind { L1Centered, SN, XiN, ConditionalSN };

inline const char* to_string(StatisticKind k) {
  switch (k) {
    case StatisticKind::L1Centered: return "l1_centered";
    case StatisticKind::SN: return "s_n";
    case StatisticKind::XiN: return "xi_n";
    case StatisticKind::ConditionalSN: return "conditional_s_n";
  }
  return "?";
}

struct ReplicatePool {
  std::vector<double> stats;
  double n = 0.0;
  double h = 0.0;
  Seed master_seed = 0;
  std::size_t replicate_count = 0;
  StatisticKind statistic_kind = StatisticKind::L1Centered;
};

struct DistanceReport {
  double ks = 0.0;
  double levy_prokhorov_upper = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double ks_se = 0.0;  // null sd of the KS statistic at this pool size
  double mean_se = 0.0;
  double variance_se = 0.0;
};

// ---------------------------------------------------------------- L1 replicates

namespace detail {

/// Computes ||f_n - E f_n|| for one sample: exact sweep for the uniform kernel, grid otherwise.
class L1Evaluator {
 public:
  L1Evaluator(Density f, Kernel k, double h) : f_(std::move(f)), k_(std::move(k)), h_(h) {
    window_ = default_window(f_, h_);
    if (!k_.is_uniform()) grid_ = mean_grid(f_, k_, h_, window_, h_ / 20.0);
  }
  double operator()(const Sample& s) const {
    if (k_.is_uniform()) return l1_deviation_uniform_exact(s, h_, f_, window_);
    return l1_deviation(s, k_, h_, *grid_).l1_deviation;
  }

 private:
  Density f_;
  Kernel k_;
  double h_;
  Interval window_;
  std::optional<MeanGrid> grid_;
};

}  // namespace detail

/// Raw ||f_n - E f_n|| over `replicates` fixed-n samples; stream separates schedule rows.
inline std::vector<double> l1_replicates(const Density& f, const Kernel& k, double h, std::size_t n,
                                         std::size_t replicates, Seed seed, unsigned threads, std::uint64_t stream = 0) {
  const detail::L1Evaluator eval(f, k, h);
  std::vector<double> out(replicates);
  parallel_for(replicates, threads, [&](std::size_t i) { out[i] = eval(sample(f, n, derive_seed(seed, stream, i))); });
  return out;
}

/// sqrt(n) (T - mean T) / sigma, the centred statistic's pool.
inline ReplicatePool normalized_pool(std::vector<double> raw, double n, double h, double sigma, Seed seed) {
  ReplicatePool pool;
  const double m = stats::mean(raw);
  for (double& v : raw) v = std::sqrt(n) * (v - m) / sigma;
  pool.stats = std::move(raw);
  pool.n = n;
  pool.h = h;
  pool.master_seed = seed;
  pool.replicate_count = pool.stats.size();
  pool.statistic_kind = StatisticKind::L1Centered;
  return pool;
}

inline DistanceReport distance_report(std::span<const double> z) {
  DistanceReport r;
  r.ks = stats::ks_to_normal(z);
  r.levy_prokhorov_upper = stats::prokhorov_upper(z);
  r.mean = stats::mean(z);
  r.variance = stats::variance(z);
  const double n = static_cast<double>(z.size());
  r.ks_se = 0.2619 / std::sqrt(n);  // sd of the Kolmogorov limit law
  r.mean_se = std::sqrt(r.variance / n);
  r.variance_se = r.variance * std::sqrt(2.0 / (n - 1.0));
  return r;
}

struct CltResult {
  ReplicatePool pool;
  DistanceReport report;
  double sigma_sq = 0.0;
  double raw_mean = 0.0;
  double proxy_mean = 0.0;  // Gaussian-proxy value of E ||f_n - E f_n||
};

inline CltResult run_clt_experiment(const Density& f, const Kernel& k, double h, std::size_t n, std::size_t replicates,
                                    Seed seed, unsigned threads = 1, std::uint64_t stream = 0) {
  require(replicates >= 500, ErrorCode::InvalidArgument, "run_clt_experiment needs >= 500 replicates");
  CltResult out;
  out.sigma_sq = asymptotic_variance(k).sigma_sq;
  auto raw = l1_replicates(f, k, h, n, replicates, seed, threads, stream);
  out.raw_mean = stats::mean(raw);
  const Interval w = default_window(f, h);
  RegularSet all;
  all.intervals = IntervalSet{w};
  out.proxy_mean = gaussian_mean_approx(f, k, h, all, n);
  out.pool = normalized_pool(std::move(raw), static_cast<double>(n), h, std::sqrt(out.sigma_sq), seed);
  out.report = distance_report(out.pool.stats);
  return out;
}

// ---------------------------------------------------------------- variance convergence

struct VarianceRow {
  double n = 0.0;
  double h = 0.0;
  double n_var = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double ratio = 0.0;  // n Var / sigma^2
  double ks = 0.0;
  double skewness = 0.0;
};

struct VarianceTable {
  std::vector<VarianceRow> rows;
  std::vector<std::vector<double>> raw;  // per row, the replicate values
  double sigma_sq = 0.0;
  bool final_ci_contains = false;
  bool monotone_toward_one = false;  // |ratio - 1| non-increasing along the schedule
};

inline VarianceTable variance_convergence(const Density& f, const Kernel& k,
                                          const std::vector<std::pair<std::size_t, double>>& schedule,
                                          std::size_t replicates, Seed seed, unsigned threads = 1,
                                          std::size_t resamples = 1000) {
  require(!schedule.empty(), ErrorCode::InvalidArgument, "empty schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    const auto [n0, h0] = schedule[i - 1];
    const auto [n1, h1] = schedule[i];
    if (!(static_cast<double>(n1) * h1 * h1 > static_cast<double>(n0) * h0 * h0) || !(h1 < h0))
      throw Error(ErrorCode::ScheduleViolation, "schedule needs h decreasing and n h^2 increasing");
  }
  VarianceTable t;
  t.sigma_sq = asymptotic_variance(k).sigma_sq;
  for (std::size_t r = 0; r < schedule.size(); ++r) {
    const auto [n, h] = schedule[r];
    auto raw = l1_replicates(f, k, h, n, replicates, seed, threads, 100 + r);
    VarianceRow row;
    row.n = static_cast<double>(n);
    row.h = h;
    row.n_var = row.n * stats::variance(raw);
    const auto boot = stats::bootstrap(raw, resamples, derive_seed(seed, 200 + r, 0),
                                       [&](std::span<const double> x) { return row.n * stats::variance(x); });
    row.ci_lo = stats::quantile(boot, 0.025);
    row.ci_hi = stats::quantile(boot, 0.975);
    row.ratio = row.n_var / t.sigma_sq;
    const auto ks = stats::k_statistics(raw);
    row.skewness = ks.k3 / std::pow(ks.k2, 1.5);
    auto z = normalized_pool(raw, row.n, h, std::sqrt(t.sigma_sq), seed);
    row.ks = stats::ks_to_normal(z.stats);
    t.rows.push_back(row);
    t.raw.push_back(std::move(raw));
  }
  t.final_ci_contains = t.rows.back().ci_lo <= t.sigma_sq && t.sigma_sq <= t.rows.back().ci_hi;
  t.monotone_toward_one = true;
  for (std::size_t r = 1; r < t.rows.size(); ++r)
    if (std::abs(t.rows[r].ratio - 1.0) > std::abs(t.rows[r - 1].ratio - 1.0)) t.monotone_toward_one = false;
  return t;
}

// ---------------------------------------------------------------- moderate deviations

struct TailRow {
  double x = 0.0;
  std::size_t lower_hits = 0, upper_hits = 0;
  double lower_ratio = 0.0, lower_lo = 0.0, lower_hi = 0.0;  // F(-x)/Phi(-x)
  double upper_ratio = 0.0, upper_lo = 0.0, upper_hi = 0.0;  // (1 - F(x))/(1 - Phi(x))
  bool too_few_tail_hits = false;
  bool contains_one = false;
};

/// Tail ratios with Wilson intervals at joint level `confidence` (Bonferroni over 2|xs| intervals).
inline std::vector<TailRow> moderate_deviation_ratio(const ReplicatePool& pool, const std::vector<double>& xs,
                                                     double confidence = 0.95, std::size_t min_hits = 20) {
  require(!pool.stats.empty(), ErrorCode::InvalidArgument, "empty pool");
  const std::size_t n = pool.stats.size();
  const double level = 1.0 - (1.0 - confidence) / static_cast<double>(2 * std::max<std::size_t>(xs.size(), 1));
  std::vector<TailRow> out;
  for (double x : xs) {
    TailRow r;
    r.x = x;
    for (double v : pool.stats) {
      if (v <= -x) ++r.lower_hits;
      if (v > x) ++r.upper_hits;
    }
    const double tail = stats::normal_cdf(-x);
    const auto lo = stats::wilson_interval(r.lower_hits, n, level);
    const auto hi = stats::wilson_interval(r.upper_hits, n, level);
    r.lower_ratio = static_cast<double>(r.lower_hits) / static_cast<double>(n) / tail;
    r.upper_ratio = static_cast<double>(r.upper_hits) / static_cast<double>(n) / tail;
    r.lower_lo = lo.lo / tail;
    r.lower_hi = lo.hi / tail;
    r.upper_lo = hi.lo / tail;
    r.upper_hi = hi.hi / tail;
    r.too_few_tail_hits = x > 0.0 && std::min(r.lower_hits, r.upper_hits) < min_hits;
    r.contains_one = (r.lower_lo <= 1.0 && 1.0 <= r.lower_hi && r.upper_lo <= 1.0 && 1.0 <= r.upper_hi);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------- exponential moments

struct SeriesBound {
  double log_rhs = 0.0;   // log of 4 exp(sum)
  double sum = 0.0;       // sum_{m >= 2} ...
  int terms = 0;
  bool converged = true;
};

/// log of 4 exp(sum_{m>=2} (720 e lambda kappa / log m)^m (Omega^{m/2} + n^{1-m/2} Omega)).
inline SeriesBound exponential_series_bound(double lambda, double kappa, double omega, double n, int max_terms = 200) {
  require(lambda >= 0.0 && omega >= 0.0 && n >= 1.0, ErrorCode::InvalidArgument, "bad series arguments");
  SeriesBound b;
  b.log_rhs = std::log(4.0);
  if (lambda == 0.0 || omega == 0.0) return b;
  const double c = 720.0 * std::numbers::e * lambda * kappa;
  double log_acc = -std::numeric_limits<double>::infinity();
  double last = 0.0;
  for (int m = 2; m <= max_terms; ++m) {
    const double md = static_cast<double>(m);
    const double a = 0.5 * md * std::log(omega);
    const double bb = (1.0 - 0.5 * md) * std::log(n) + std::log(omega);
    const double log_inner = std::max(a, bb) + std::log1p(std::exp(std::min(a, bb) - std::max(a, bb)));
    last = md * std::log(c / std::log(md)) + log_inner;
    log_acc = std::max(log_acc, last) + std::log1p(std::exp(std::min(log_acc, last) - std::max(log_acc, last)));
    b.terms = m - 1;
    if (last < log_acc + std::log(1e-18)) break;
  }
  b.converged = last < log_acc + std::log(1e-18);
  if (!b.converged) throw Error(ErrorCode::SeriesDiverges, "series terms fail to decay by m = 200");
  b.sum = std::exp(log_acc);
  b.log_rhs += b.sum;
  return b;
}

struct ExpMomentRow {
  double lambda = 0.0;
  double lhs = 0.0;  // MC E exp(lambda |xi|)
  double lhs_se = 0.0;
  double log_rhs = 0.0;
  bool pass = false;
};

struct TailBoundRow {
  double z = 0.0;
  double empirical = 0.0;
  double empirical_se = 0.0;
  double bound = 0.0;  // exp(-kappa^{-1} Omega^{-1/2} z log* log*(z / (kappa Omega^{1/2}))), A = 1
  double slack = 0.0;  // bound / empirical
  bool pass = false;
};

struct ExpMomentReport {
  std::vector<ExpMomentRow> rows;
  std::vector<TailBoundRow> tails;
  ReplicatePool xi;
  double omega = 0.0;
  double sd_xi = 0.0;
};

namespace detail {

/// E|N - n p| for N ~ Binomial(n, p) (de Moivre).
inline double binomial_mad(double n, double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  const double nu = std::floor(n * p) + 1.0;
  if (nu > n) return 0.0;
  const double lg = std::lgamma(n + 1.0) - std::lgamma(nu + 1.0) - std::lgamma(n - nu + 1.0);
  return 2.0 * nu * std::exp(lg + nu * std::log(p) + (n - nu + 1.0) * std::log1p(-p));
}

/// sqrt(n) int_B |f_n - E f_n| for the uniform kernel.
inline double l1_on_set(const Sample& s, double h, const Density& f, const IntervalSet& b) {
  double acc = 0.0;
  for (const auto& part : b.parts()) acc += l1_uniform_kernel(s, h, f, part);
  return std::sqrt(static_cast<double>(s.nominal_n)) * acc;
}

}  // namespace detail

/// Boundary strips of E of total mass `omega` (so L(n, B) = 0 when E keeps windows inside the support).
inline IntervalSet boundary_strips(const Density& f, const IntervalSet& e, double omega) {
  require(!e.empty() && omega > 0.0, ErrorCode::InvalidArgument, "need a nonempty E and omega > 0");
  const double lo = e.lower(), hi = e.upper();
  auto width_for = [&](double a, bool left, double target) {
    double wl = 0.0, wh = hi - lo;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (wl + wh);
      const double mass = left ? f.mass(a, a + m) : f.mass(a - m, a);
      (mass < target ? wl : wh) = m;
    }
    return 0.5 * (wl + wh);
  };
  const double wl = width_for(lo, true, 0.5 * omega);
  const double wr = width_for(hi, false, 0.5 * omega);
  return IntervalSet{{lo, lo + wl}, {hi - wr, hi}};
}

/// E exp(lambda |xi_n|), xi_n = int_B (Delta_n - E Delta_n), uniform kernel, exact binomial centring.
inline ExpMomentReport exponential_moment_check(const Density& f, const Kernel& k, double h, std::size_t n,
                                                const IntervalSet& b, const std::vector<double>& lambdas,
                                                std::size_t replicates, Seed seed, unsigned threads = 1) {
  require(k.is_uniform(), ErrorCode::InvalidArgument, "exponential_moment_check supports the uniform kernel");
  ExpMomentReport rep;
  const double dn = static_cast<double>(n);
  // E Delta_n(x) = E|N - n p(x)| / (sqrt(n) h), p(x) = P([x - h/2, x + h/2]); integrated by GL over B
  double centre = 0.0;
  for (const auto& part : b.parts())
    centre += quad::composite_gl([&](double x) { return detail::binomial_mad(dn, f.mass(x - 0.5 * h, x + 0.5 * h)); },
                                 part.lo, part.hi, 4, 8);
  centre /= std::sqrt(dn) * h;
  rep.xi.stats.resize(replicates);
  parallel_for(replicates, threads, [&](std::size_t i) {
    const auto s = sample(f, n, derive_seed(seed, 0xe4, i));
    rep.xi.stats[i] = detail::l1_on_set(s, h, f, b) - centre;
  });
  rep.xi.n = dn;
  rep.xi.h = h;
  rep.xi.master_seed = seed;
  rep.xi.replicate_count = replicates;
  rep.xi.statistic_kind = StatisticKind::XiN;
  const auto db = d_bound(f, k, h, b);
  rep.omega = db.omega;
  rep.sd_xi = std::sqrt(stats::variance(rep.xi.stats));
  for (double lambda : lambdas) {
    ExpMomentRow row;
    row.lambda = lambda;
    std::vector<double> e(replicates);
    for (std::size_t i = 0; i < replicates; ++i) e[i] = std::exp(lambda * std::abs(rep.xi.stats[i]));
    row.lhs = stats::mean(e);
    row.lhs_se = std::sqrt(stats::variance(e) / static_cast<double>(replicates));
    row.log_rhs = exponential_series_bound(lambda, k.kappa(), rep.omega, dn).log_rhs;
    row.pass = std::log(std::max(row.lhs - 3.0 * row.lhs_se, std::numeric_limits<double>::min())) <= row.log_rhs;
    rep.rows.push_back(row);
  }
  const double scale = k.kappa() * std::sqrt(rep.omega);
  for (double mult : {1.0, 2.0, 3.0}) {
    TailBoundRow t;
    t.z = mult * rep.sd_xi;
    std::size_t hits = 0;
    for (double v : rep.xi.stats) hits += std::abs(v) >= t.z;
    t.empirical = static_cast<double>(hits) / static_cast<double>(replicates);
    t.empirical_se = std::sqrt(t.empirical * (1.0 - t.empirical) / static_cast<double>(replicates));
    t.bound = t.z > 0.0 ? std::exp(-t.z / scale * log_star(log_star(t.z / scale))) : 1.0;
    t.slack = t.empirical > 0.0 ? t.bound / t.empirical : std::numeric_limits<double>::infinity();
    t.pass = t.empirical <= t.bound + 3.0 * t.empirical_se;
    rep.tails.push_back(t);
  }
  return rep;
}

// ---------------------------------------------------------------- Lemma 2.1

struct VarianceBoundCheck {
  double var = 0.0;
  double var_se = 0.0;
  double d = 0.0;
  bool pass = false;
};

/// Var(sqrt(n) int_B |f_n - E f_n|) against d(n, B); uniform kernel.
inline VarianceBoundCheck variance_bound_check(const Density& f, const Kernel& k, double h, std::size_t n,
                                               const IntervalSet& b, std::size_t replicates, Seed seed,
                                               unsigned threads = 1) {
  require(k.is_uniform(), ErrorCode::InvalidArgument, "variance_bound_check supports the uniform kernel");
  std::vector<double> v(replicates);
  parallel_for(replicates, threads,
               [&](std::size_t i) { v[i] = detail::l1_on_set(sample(f, n, derive_seed(seed, 0xdb, i)), h, f, b); });
  VarianceBoundCheck c;
  std::tie(c.var, c.var_se) = detail::variance_with_error(v);
  c.d = d_bound(f, k, h, b).d;
  c.pass = c.var <= c.d + 3.0 * c.var_se;
  return c;
}

// ---------------------------------------------------------------- de-Poissonization

struct DepoissonReport {
  stats::TwoSampleResult test;
  std::size_t accepted = 0;
  std::size_t tried = 0;
  double acceptance_rate = 0.0;
  double expected_rate = 0.0;  // P{Poisson(n) = n}
  double stirling_rate = 0.0;  // 1/sqrt(2 pi n)
  ReplicatePool fixed;
  ReplicatePool conditional;
  bool pass = false;
};

/// Fixed-n block statistic vs Poissonized S_n kept only when eta = n.
inline DepoissonReport depoissonization_check(const BlockSimulator& sim, std::size_t replicates, Seed seed,
                                              unsigned threads = 1, std::size_t permutations = 1000) {
  const double n = sim.partition().n;
  DepoissonReport rep;
  rep.fixed.stats.resize(replicates);
  parallel_for(replicates, threads,
               [&](std::size_t i) { rep.fixed.stats[i] = sim.draw_fixed(derive_seed(seed, 0xf1, i)).s_total; });
  const auto target = static_cast<std::int64_t>(std::llround(n));
  const double floor_rate = 1.0 / (10.0 * std::sqrt(n));
  const std::size_t batch = std::max<std::size_t>(1024, replicates);
  std::vector<double> kept;
  while (kept.size() < replicates) {
    std::vector<double> s(batch);
    std::vector<char> ok(batch, 0);
    const std::size_t base = rep.tried;
    parallel_for(batch, threads, [&](std::size_t i) {
      const auto d = sim.draw(derive_seed(seed, 0xc0, base + i));
      ok[i] = d.eta == target;
      s[i] = d.s_total;
    });
    for (std::size_t i = 0; i < batch && kept.size() < replicates; ++i) {
      ++rep.tried;
      if (ok[i]) kept.push_back(s[i]);
    }
    const double rate = static_cast<double>(kept.size()) / static_cast<double>(rep.tried);
    if (rep.tried >= 20 * static_cast<std::size_t>(std::sqrt(n) * 10.0) && rate < floor_rate)
      throw Error(ErrorCode::RejectionTooSlow, "acceptance rate below 1/(10 sqrt n)");
  }
  rep.accepted = kept.size();
  rep.acceptance_rate = static_cast<double>(rep.accepted) / static_cast<double>(rep.tried);
  rep.expected_rate = std::exp(n * std::log(n) - n - std::lgamma(n + 1.0));
  rep.stirling_rate = 1.0 / std::sqrt(2.0 * std::numbers::pi * n);
  rep.conditional.stats = std::move(kept);
  for (auto* p : {&rep.fixed, &rep.conditional}) {
    p->n = n;
    p->h = sim.partition().h;
    p->master_seed = seed;
    p->replicate_count = p->stats.size();
  }
  rep.fixed.statistic_kind = StatisticKind::SN;
  rep.conditional.statistic_kind = StatisticKind::ConditionalSN;
  rep.test = stats::ks_permutation_test(rep.fixed.stats, rep.conditional.stats, permutations, derive_seed(seed, 0x9e, 0));
  rep.pass = rep.test.permutation_p >= 0.01;
  return rep;
}

}  // namespace l1clt
