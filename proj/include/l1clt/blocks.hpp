#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "l1clt/density.hpp"
#include "l1clt/errors.hpp"
#include "l1clt/intervals.hpp"
#include "l1clt/kde.hpp"
#include "l1clt/kernel.hpp"
#include "l1clt/parallel.hpp"
#include "l1clt/random.hpp"
#include "l1clt/rates.hpp"
#include "l1clt/stats.hpp"

namespace l1clt {

// ---------------------------------------------------------------- partition

enum class BlockClass { Edge, Y1, Y2, Y3 };

inline const char* to_string(BlockClass c) {
  switch (c) {
    case BlockClass::Edge: return "edge";
    case BlockClass::Y1: return "Y1";
    case BlockClass::Y2: return "Y2";
    case BlockClass::Y3: return "Y3";
  }
  return "?";
}

struct Block {
  Interval interval;  // [z_{i-1}, z_i)
  IntervalSet i_set;  // interval intersected with E
  double p = 0.0;
  double q = 0.0;
  double r_n = 0.0;  // R_n(I_i, E)
  BlockClass cls = BlockClass::Edge;
};

struct PartitionParams {
  double alpha = 0.1;                     // tail mass outside [-M, M]
  std::optional<double> psi_multiplier;   // defaults to 256 kappa^2 / sigma^2
};

struct Partition {
  double m_cut = 0.0;
  double h_star = 0.0;
  double h = 0.0;
  double n = 0.0;
  long m = 0;
  double alpha = 0.0;  // P(|X| > M), recomputed from M
  bool compact_flag = false;
  double p_n = 0.0;
  double psi_n = 0.0;
  double psi_multiplier = 0.0;
  double sigma_sq = 0.0;
  double kappa = 0.0;
  double l2sq = 0.0;
  double l3 = 0.0;
  double rn_total = 0.0;  // R_n(E, E)
  RegularSet e;
  std::vector<long> ls;  // l_1 .. l_{s-1}
  std::vector<double> cuts;
  std::vector<Block> blocks;
  std::vector<std::size_t> upsilon1, upsilon2, upsilon3;  // 0-based block indices
  IntervalSet c_set;

  std::size_t s() const { return blocks.size(); }
};

namespace detail {

/// The greedy recurrence over multiples of h*: returns l_1..l_{s-1}.
inline std::vector<long> partition_walk(const Density& f, long m, double h_star, double psi) {
  auto mass = [&](long a, long b) { return f.mass(static_cast<double>(a) * h_star, static_cast<double>(b) * h_star); };
  std::vector<long> ls{-m};
  while (true) {
    const long prev = ls.back();
    long l = prev + 1;
    while (l < m && mass(prev, l) < psi) ++l;
    if (l >= m || mass(l, m) < psi) {
      ls.push_back(m);
      return ls;
    }
    ls.push_back(l);
  }
}

}  // namespace detail

inline Partition build_partition(const Density& f, const RegularSet& e, const Kernel& k, double h, double n,
                                 double sigma_sq, const PartitionParams& params = {}) {
  require(h > 0.0 && n > 0.0 && sigma_sq > 0.0, ErrorCode::InvalidArgument, "h, n, sigma^2 must be positive");
  Partition P;
  const auto tc = tail_cutoff(f, params.alpha);
  P.m_cut = tc.m;
  P.compact_flag = tc.compact_flag;
  P.alpha = f.cdf(-P.m_cut) + f.sf(P.m_cut);
  P.h = h;
  P.n = n;
  P.sigma_sq = sigma_sq;
  P.kappa = k.kappa();
  P.l2sq = k.l2sq();
  P.l3 = k.l3();
  P.e = e;
  P.m = static_cast<long>(std::floor(P.m_cut / h)) - 1;
  require(P.m >= 2, ErrorCode::PartitionDegenerate, "bandwidth too large for the tail cutoff M");
  P.h_star = (P.m_cut - h) / static_cast<double>(P.m);
  P.p_n = small_interval_mass(f, h);
  P.psi_multiplier = params.psi_multiplier ? *params.psi_multiplier : 256.0 * P.kappa * P.kappa / sigma_sq;
  P.psi_n = P.psi_multiplier * std::min(P.p_n, e.d_n * h);
  require(f.mass(-P.m_cut + h, P.m_cut - h) > P.psi_n, ErrorCode::PartitionDegenerate,
          "P([-M+h, M-h]) <= psi_n; decrease h or psi_multiplier");

  P.ls = detail::partition_walk(f, P.m, P.h_star, P.psi_n);
  P.cuts.push_back(-P.m_cut);
  for (long l : P.ls) P.cuts.push_back(static_cast<double>(l) * P.h_star);
  P.cuts.push_back(P.m_cut);
  require(P.cuts.size() >= 4, ErrorCode::PartitionDegenerate, "fewer than three blocks");

  const auto band = band_profile(f, k, h, 1.0, e);
  P.rn_total = band.sum(band.r);
  const std::size_t s = P.cuts.size() - 1;
  for (std::size_t i = 0; i < s; ++i) {
    Block b;
    b.interval = {P.cuts[i], P.cuts[i + 1]};
    b.i_set = e.intervals.intersect(b.interval);
    b.q = f.mass(b.interval.lo, b.interval.hi);
    b.p = prob(f, b.i_set);
    if (i == 0 || i + 1 == s) {
      b.cls = BlockClass::Edge;
    } else {
      double r = 0.0;
      for (std::size_t j = 0; j < band.xs.size(); ++j)
        if (band.xs[j] >= b.interval.lo && band.xs[j] < b.interval.hi) r += band.weights[j] * band.r[j];
      b.r_n = r;
      if (4.0 * P.l2sq * r >= b.p * sigma_sq) {
        b.cls = BlockClass::Y1;
        P.upsilon1.push_back(i);
      } else if (b.p <= b.q - b.p) {
        b.cls = BlockClass::Y2;
        P.upsilon2.push_back(i);
      } else {
        b.cls = BlockClass::Y3;
        P.upsilon3.push_back(i);
      }
    }
    P.blocks.push_back(std::move(b));
  }
  std::vector<Interval> c;
  for (std::size_t i : P.upsilon3)
    for (const auto& part : P.blocks[i].i_set.parts()) c.push_back(part);
  P.c_set = IntervalSet(std::move(c));
  return P;
}

/// Violated invariants (empty when the partition is sound). `slack` absorbs rounding in mass sums only.
inline std::vector<std::string> check_partition(const Partition& P, const Density& f, double slack = 1e-12) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& s) { bad.push_back(s); };
  const std::size_t s = P.blocks.size();
  for (std::size_t i = 0; i + 1 < P.cuts.size(); ++i)
    if (!(P.cuts[i + 1] > P.cuts[i])) fail("cuts not strictly increasing at " + std::to_string(i));
  if (s < 3) fail("fewer than three blocks");
  if (std::abs(P.cuts[1] - (-P.m_cut + P.h)) > 1e-12 * (1.0 + P.m_cut)) fail("z_1 != -M + h");
  if (std::abs(P.cuts[s - 1] - (P.m_cut - P.h)) > 1e-12 * (1.0 + P.m_cut)) fail("z_{s-1} != M - h");
  if (!(P.h_star >= P.h * (1.0 - 1e-12) && P.h_star <= 2.0 * P.h * (1.0 + 1e-12))) fail("h* outside [h, 2h]");
  double qsum = 0.0, y1 = 0.0, y2 = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    const auto& b = P.blocks[i];
    qsum += b.q;
    const std::string tag = " (block " + std::to_string(i + 1) + ")";
    if (b.p > b.q * (1.0 + slack) + slack) fail("p > q" + tag);
    if (b.interval.hi - b.interval.lo < P.h * (1.0 - 1e-12)) fail("gap < h" + tag);
    if (i == 0 || i + 1 == s) {
      if (b.q > P.p_n * (1.0 + slack)) fail("edge q > P_n" + tag);
    } else {
      if (b.q < P.psi_n * (1.0 - slack)) fail("q < psi_n" + tag);
      if (b.q > (P.p_n + 2.0 * P.psi_n) * (1.0 + slack)) fail("q > P_n + 2 psi_n" + tag);
    }
    if (b.cls == BlockClass::Y1) y1 += b.p;
    if (b.cls == BlockClass::Y2) y2 += b.p;
  }
  const double total = f.mass(-P.m_cut, P.m_cut);
  if (std::abs(qsum - total) > slack * (1.0 + total) * static_cast<double>(s)) fail("sum q != P([-M, M])");
  if (y1 > 4.0 * P.l2sq * P.rn_total / P.sigma_sq * (1.0 + slack) + slack) fail("Y1 mass > 4||K^2|| R_n(E,E)/sigma^2");
  if (y2 > P.e.phi_n * (1.0 + slack) + slack) fail("Y2 mass > phi_n");
  const auto& cp = P.c_set.parts();
  for (std::size_t i = 0; i + 1 < cp.size(); ++i)
    if (cp[i + 1].lo < cp[i].hi) fail("C_n parts overlap");
  double cm = 0.0;
  for (std::size_t i : P.upsilon3) cm += P.blocks[i].i_set.measure();
  if (std::abs(cm - P.c_set.measure()) > 1e-12 * (1.0 + cm)) fail("C_n is not the disjoint union of Y3 blocks");
  return bad;
}

/// gamma_n with A = 1: Psi^{3/2} max_{Y3} sqrt(p) + max_i sqrt(q).
inline double gamma_n(const Partition& P) {
  const double psi_cap = P.l2sq * P.e.d_n / P.e.beta_n * P.kappa * P.kappa / (P.sigma_sq * P.sigma_sq);
  double pmax = 0.0, qmax = 0.0;
  for (std::size_t i : P.upsilon3) pmax = std::max(pmax, P.blocks[i].p);
  for (const auto& b : P.blocks) qmax = std::max(qmax, b.q);
  return std::pow(psi_cap, 1.5) * std::sqrt(pmax) + std::sqrt(qmax);
}

// ---------------------------------------------------------------- block draws

struct BlockDraw {
  std::vector<double> deltas;
  std::vector<double> us;
  double s_total = 0.0;
  double u_total = 0.0;
  double v_total = 0.0;
  std::int64_t eta = 0;
  Seed seed = 0;
};

enum class Centering { Proxy, Exact };

struct SimOptions {
  int grid_per_h = 10;  // grid step h / grid_per_h (even)
  Centering centering = Centering::Proxy;
  std::optional<double> sigma_c;  // overrides the theory value of sigma_n(C_n)
};

namespace detail {

/// E|N - mu| for N ~ Poisson(mu): 2 mu P{N = floor(mu)}.
inline double poisson_mad(double mu) {
  if (mu <= 0.0) return 0.0;
  const double k = std::floor(mu);
  return 2.0 * mu * std::exp(k * std::log(mu) - mu - std::lgamma(k + 1.0));
}

/// int_a^c of the hat function centred at x with half-width b.
inline double hat_integral(double x, double b, double a, double c) {
  a = std::max(a, x - b);
  c = std::min(c, x + b);
  if (!(c > a)) return 0.0;
  auto prim = [&](double t) {  // antiderivative of 1 - |t - x|/b
    const double d = t - x;
    return d - d * std::abs(d) / (2.0 * b);
  };
  return prim(c) - prim(a);
}

}  // namespace detail

/// Poissonized block sums on a grid of step h/grid_per_h. For the uniform kernel the
/// process is simulated through independent Poisson bin counts (bins refine the grid
/// by the partition cuts), so window counts at grid points and block counts are exact;
/// other kernels draw point positions.
class BlockSimulator {
 public:
  BlockSimulator(Partition partition, Density f, Kernel k, SimOptions opt = {})
      : P_(std::move(partition)), f_(std::move(f)), k_(std::move(k)), opt_(opt) {
    require(opt_.grid_per_h >= 2 && opt_.grid_per_h % 2 == 0, ErrorCode::InvalidArgument, "grid_per_h must be even >= 2");
    require(!P_.c_set.empty(), ErrorCode::PartitionDegenerate, "C_n is empty");
    binned_ = k_.is_uniform();
    const double h = P_.h, M = P_.m_cut;
    step_ = h / opt_.grid_per_h;
    const auto J = static_cast<long>(std::floor(2.0 * M / step_ + 1e-9));
    for (long j = 0; j <= J; ++j) grid_.push_back(-M + static_cast<double>(j) * step_);
    half_ = opt_.grid_per_h / 2;

    // bins: grid edges refined by the cuts
    std::vector<double> edges = grid_;
    for (double z : P_.cuts) edges.push_back(z);
    edges.push_back(M);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [&](double a, double b) { return std::abs(a - b) <= 1e-12 * step_; }),
                edges.end());
    edges_ = edges;
    grid_edge_.resize(grid_.size());
    for (std::size_t j = 0; j < grid_.size(); ++j) grid_edge_[j] = nearest_edge(grid_[j]);
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i) bin_mass_.push_back(f_.mass(edges_[i], edges_[i + 1]));
    outside_mass_ = P_.alpha;
    for (std::size_t i = 0; i + 1 < P_.cuts.size(); ++i) block_edges_.push_back({nearest_edge(P_.cuts[i]), nearest_edge(P_.cuts[i + 1])});

    // hat weights of the grid interpolant restricted to each I_i, i in Y3
    weights_.resize(P_.blocks.size());
    j_lo_ = grid_.size();
    j_hi_ = 0;
    for (std::size_t i : P_.upsilon3) {
      for (const auto& part : P_.blocks[i].i_set.parts()) {
        const auto j0 = static_cast<long>(std::floor((part.lo + M) / step_)) - 1;
        const auto j1 = static_cast<long>(std::ceil((part.hi + M) / step_)) + 1;
        for (long j = std::max(0L, j0); j <= std::min(J, j1); ++j) {
          const double w = detail::hat_integral(grid_[j], step_, part.lo, part.hi);
          if (w > 0.0) weights_[i].push_back({static_cast<std::size_t>(j), w});
        }
      }
      for (const auto& [j, w] : weights_[i]) {
        j_lo_ = std::min(j_lo_, j);
        j_hi_ = std::max(j_hi_, j);
      }
    }
    require(j_lo_ >= static_cast<std::size_t>(half_) && j_hi_ + half_ < grid_.size(), ErrorCode::InvalidArgument,
            "C_n windows leave [-M, M]");

    // per-grid-point mean and centering
    const double n = P_.n, rn = std::sqrt(n);
    mean_.assign(grid_.size(), 0.0);
    centre_.assign(grid_.size(), 0.0);
    for (std::size_t j = j_lo_; j <= j_hi_; ++j) {
      const double x = grid_[j];
      if (binned_) {
        const double mu = n * f_.mass(x - 0.5 * h, x + 0.5 * h);
        mean_[j] = mu;
        centre_[j] = (opt_.centering == Centering::Exact ? detail::poisson_mad(mu) : stats::kMeanAbsNormal * std::sqrt(mu)) /
                     (rn * h);
      } else {
        mean_[j] = mean_fn(f_, k_, h, x);
        centre_[j] = stats::kMeanAbsNormal * std::sqrt(kn(f_, k_, h, x));
      }
    }
    sigma_c_ = opt_.sigma_c ? *opt_.sigma_c : std::sqrt(sigma_n_sq_theory(f_, k_, h, P_.c_set));
    require(sigma_c_ > 0.0, ErrorCode::DegenerateDenominator, "sigma_n(C_n) = 0");
  }

  const Partition& partition() const { return P_; }
  double sigma_c() const { return sigma_c_; }
  double theory_sigma_c() const { return std::sqrt(sigma_n_sq_theory(f_, k_, P_.h, P_.c_set)); }
  std::size_t bins() const { return bin_mass_.size(); }

  /// sigma_n(C_n) from `draws` pilot draws on their own seed stream.
  void calibrate(std::size_t draws, Seed seed) {
    std::vector<double> raw(draws);
    const double keep = sigma_c_;
    sigma_c_ = 1.0;
    for (std::size_t d = 0; d < draws; ++d) raw[d] = draw(derive_seed(seed, 0xca1, d)).s_total;
    sigma_c_ = keep;
    sigma_c_ = std::sqrt(stats::variance(raw));
  }

  /// One Poissonized draw.
  BlockDraw draw(Seed seed) const {
    Rng rng(seed);
    std::vector<std::int64_t> counts(bin_mass_.size());
    std::int64_t outside = 0;
    if (binned_) {
      for (std::size_t b = 0; b < counts.size(); ++b) counts[b] = poisson(rng, P_.n * bin_mass_[b]);
      outside = poisson(rng, P_.n * outside_mass_);
      auto d = from_counts(counts, outside);
      d.seed = seed;
      return d;
    }
    auto s = sample_poissonized(f_, static_cast<std::size_t>(P_.n), seed);
    auto d = from_points(s.points);
    d.seed = seed;
    return d;
  }

  /// Fixed-n draw (multinomial bin counts, or n points).
  BlockDraw draw_fixed(Seed seed) const {
    if (!binned_) {
      auto s = sample(f_, static_cast<std::size_t>(P_.n), seed);
      auto d = from_points(s.points);
      d.seed = seed;
      return d;
    }
    Rng rng(seed);
    std::vector<std::int64_t> counts(bin_mass_.size());
    auto left = static_cast<std::int64_t>(std::llround(P_.n));
    double rest = 1.0;
    for (std::size_t b = 0; b < counts.size() && left > 0; ++b) {
      const double p = rest > 0.0 ? std::clamp(bin_mass_[b] / rest, 0.0, 1.0) : 1.0;
      counts[b] = rng.binomial(left, p);
      left -= counts[b];
      rest -= bin_mass_[b];
    }
    auto d = from_counts(counts, left);
    d.seed = seed;
    return d;
  }

  /// Block statistics from bin counts (size bins()) and the count outside [-M, M].
  BlockDraw from_counts(const std::vector<std::int64_t>& counts, std::int64_t outside) const {
    require(binned_ && counts.size() == bin_mass_.size(), ErrorCode::InvalidArgument, "bin count mismatch");
    std::vector<std::int64_t> prefix(counts.size() + 1, 0);
    for (std::size_t b = 0; b < counts.size(); ++b) prefix[b + 1] = prefix[b] + counts[b];
    const double rn = std::sqrt(P_.n);
    const double scale = 1.0 / (rn * P_.h);
    std::vector<double> w(grid_.size(), 0.0);
    for (std::size_t j = j_lo_; j <= j_hi_; ++j) {
      const auto c = prefix[grid_edge_[j + half_]] - prefix[grid_edge_[j - half_]];
      w[j] = std::abs(static_cast<double>(c) - mean_[j]) * scale - centre_[j];
    }
    BlockDraw d;
    d.eta = prefix.back() + outside;
    finish(d, w, [&](std::size_t i) {
      return static_cast<double>(prefix[block_edges_[i].second] - prefix[block_edges_[i].first]);
    });
    d.v_total = (static_cast<double>(outside) - P_.n * outside_mass_) / rn;
    return d;
  }

 private:
  static std::int64_t poisson(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng.engine());
  }

  std::size_t nearest_edge(double x) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), x - 1e-12 * step_);
    require(it != edges_.end(), ErrorCode::InvalidArgument, "edge lookup failed");
    return static_cast<std::size_t>(it - edges_.begin());
  }

  template <class BlockCount>
  void finish(BlockDraw& d, const std::vector<double>& w, const BlockCount& count) const {
    const std::size_t s = P_.blocks.size();
    const double rn = std::sqrt(P_.n);
    d.deltas.assign(s, 0.0);
    d.us.assign(s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
      double acc = 0.0;
      for (const auto& [j, wt] : weights_[i]) acc += wt * w[j];
      d.deltas[i] = acc / sigma_c_;
      d.us[i] = (count(i) - P_.n * P_.blocks[i].q) / rn;
      d.s_total += d.deltas[i];
      d.u_total += d.us[i];
    }
  }

  BlockDraw from_points(const std::vector<double>& pts) const {
    const double rn = std::sqrt(P_.n);
    Sample s;
    s.points = pts;
    s.nominal_n = static_cast<std::size_t>(P_.n);
    s.actual_count = pts.size();
    std::vector<double> xs(grid_.begin() + static_cast<long>(j_lo_), grid_.begin() + static_cast<long>(j_hi_) + 1);
    const auto fn = evaluate_fn(s, k_, P_.h, xs);
    std::vector<double> w(grid_.size(), 0.0);
    for (std::size_t j = j_lo_; j <= j_hi_; ++j) w[j] = rn * std::abs(fn[j - j_lo_] - mean_[j]) - centre_[j];
    auto count_in = [&](double a, double b) {
      return static_cast<double>(std::lower_bound(pts.begin(), pts.end(), b) - std::lower_bound(pts.begin(), pts.end(), a));
    };
    BlockDraw d;
    d.eta = static_cast<std::int64_t>(pts.size());
    finish(d, w, [&](std::size_t i) { return count_in(P_.blocks[i].interval.lo, P_.blocks[i].interval.hi); });
    const double in = count_in(-P_.m_cut, P_.m_cut);
    d.v_total = (static_cast<double>(pts.size()) - in - P_.n * outside_mass_) / rn;
    return d;
  }

  Partition P_;
  Density f_;
  Kernel k_;
  SimOptions opt_;
  bool binned_ = true;
  double step_ = 0.0;
  int half_ = 0;
  std::vector<double> grid_, edges_, bin_mass_;
  std::vector<std::size_t> grid_edge_;
  std::vector<std::pair<std::size_t, std::size_t>> block_edges_;
  double outside_mass_ = 0.0;
  std::vector<std::vector<std::pair<std::size_t, double>>> weights_;
  std::size_t j_lo_ = 0, j_hi_ = 0;
  std::vector<double> mean_, centre_;
  double sigma_c_ = 1.0;
};

/// One Poissonized draw.
inline BlockDraw block_statistics(const BlockSimulator& sim, Seed seed) { return sim.draw(seed); }

/// `count` draws with per-draw derived seeds; identical for any thread count.
inline std::vector<BlockDraw> block_pool(const BlockSimulator& sim, std::size_t count, Seed master, unsigned threads) {
  std::vector<BlockDraw> pool(count);
  parallel_for(count, threads, [&](std::size_t i) { pool[i] = sim.draw(derive_seed(master, 0xb10c, i)); });
  return pool;
}

// ---------------------------------------------------------------- pooled checks

namespace detail {

inline std::vector<double> column(const std::vector<BlockDraw>& pool, std::size_t i, bool delta) {
  std::vector<double> out(pool.size());
  for (std::size_t r = 0; r < pool.size(); ++r) out[r] = delta ? pool[r].deltas[i] : pool[r].us[i];
  return out;
}

template <class Get>
std::vector<double> pick(const std::vector<BlockDraw>& pool, const Get& get) {
  std::vector<double> out(pool.size());
  for (std::size_t r = 0; r < pool.size(); ++r) out[r] = get(pool[r]);
  return out;
}

}  // namespace detail

struct PoolSummary {
  double var_s = 0.0, var_s_se = 0.0;
  double var_u = 0.0, var_u_se = 0.0;
  double var_v = 0.0;
  double sum_var_delta = 0.0, sum_var_delta_se = 0.0;
  std::size_t draws = 0;
};

namespace detail {

// variance and its standard error from the fourth central moment
inline std::pair<double, double> variance_with_error(std::span<const double> xs) {
  const double v = stats::variance(xs);
  const double m = stats::mean(xs);
  double m4 = 0.0;
  for (double x : xs) m4 += std::pow(x - m, 4);
  m4 /= static_cast<double>(xs.size());
  return {v, std::sqrt(std::max(0.0, m4 - v * v) / static_cast<double>(xs.size()))};
}

}  // namespace detail

inline PoolSummary summarize_pool(const std::vector<BlockDraw>& pool) {
  require(pool.size() >= 4, ErrorCode::InvalidArgument, "pool too small");
  PoolSummary s;
  s.draws = pool.size();
  const auto S = detail::pick(pool, [](const BlockDraw& d) { return d.s_total; });
  const auto U = detail::pick(pool, [](const BlockDraw& d) { return d.u_total; });
  const auto V = detail::pick(pool, [](const BlockDraw& d) { return d.v_total; });
  std::tie(s.var_s, s.var_s_se) = detail::variance_with_error(S);
  std::tie(s.var_u, s.var_u_se) = detail::variance_with_error(U);
  s.var_v = stats::variance(V);
  double se2 = 0.0;
  for (std::size_t i = 0; i < pool.front().deltas.size(); ++i) {
    const auto [v, se] = detail::variance_with_error(detail::column(pool, i, true));
    s.sum_var_delta += v;
    se2 += se * se;
  }
  s.sum_var_delta_se = std::sqrt(se2);
  return s;
}

struct DependenceReport {
  double max_abs_z = 0.0;  // over |i - j| >= 2
  std::size_t worst_i = 0, worst_j = 0;
  std::size_t pairs = 0;
  double max_adjacent_corr = 0.0;
  double z_sv = 0.0;  // standardized cov(S, V)
  double z_uv = 0.0;  // standardized cov(U, V)
  bool pass = false;
};

inline DependenceReport one_dependence_test(const std::vector<BlockDraw>& pool, double band = 4.0) {
  require(pool.size() >= 100, ErrorCode::InvalidArgument, "pool too small");
  DependenceReport rep;
  const std::size_t s = pool.front().deltas.size();
  std::vector<std::vector<double>> cols;
  std::vector<bool> live(s);
  for (std::size_t i = 0; i < s; ++i) {
    cols.push_back(detail::column(pool, i, true));
    live[i] = stats::variance(cols.back()) > 0.0;
  }
  for (std::size_t i = 0; i < s; ++i) {
    if (!live[i]) continue;
    for (std::size_t j = i + 1; j < s; ++j) {
      if (!live[j]) continue;
      const auto c = stats::covariance_with_error(cols[i], cols[j]);
      if (j == i + 1) {
        const double corr = c.cov / std::sqrt(stats::variance(cols[i]) * stats::variance(cols[j]));
        rep.max_adjacent_corr = std::max(rep.max_adjacent_corr, std::abs(corr));
        continue;
      }
      ++rep.pairs;
      const double z = c.std_error > 0.0 ? std::abs(c.cov) / c.std_error : 0.0;
      if (z > rep.max_abs_z) {
        rep.max_abs_z = z;
        rep.worst_i = i + 1;
        rep.worst_j = j + 1;
      }
    }
  }
  const auto S = detail::pick(pool, [](const BlockDraw& d) { return d.s_total; });
  const auto U = detail::pick(pool, [](const BlockDraw& d) { return d.u_total; });
  const auto V = detail::pick(pool, [](const BlockDraw& d) { return d.v_total; });
  auto z = [](const stats::CovEstimate& c) { return c.std_error > 0.0 ? c.cov / c.std_error : 0.0; };
  rep.z_sv = z(stats::covariance_with_error(S, V));
  rep.z_uv = z(stats::covariance_with_error(U, V));
  rep.pass = rep.max_abs_z <= band && std::abs(rep.z_sv) <= band && std::abs(rep.z_uv) <= band;
  return rep;
}

struct CovarianceReport {
  double chi_hat = 0.0;
  double std_error = 0.0;
  double bound = 0.0;  // A ||K^3|| lambda(E) / (sigma ||K^2|| sqrt(n h^2)), A = 1
  double max_block_corr = 0.0;  // max_i |corr(delta_i, u_i)| over Y3
};

inline CovarianceReport covariance_sn_un(const std::vector<BlockDraw>& pool, const Partition& P) {
  require(pool.size() >= 100, ErrorCode::InvalidArgument, "pool too small");
  CovarianceReport rep;
  const auto S = detail::pick(pool, [](const BlockDraw& d) { return d.s_total; });
  const auto U = detail::pick(pool, [](const BlockDraw& d) { return d.u_total; });
  const auto c = stats::covariance_with_error(S, U);
  rep.chi_hat = c.cov;
  rep.std_error = c.std_error;
  rep.bound = P.l3 * P.e.lambda / (std::sqrt(P.sigma_sq) * P.l2sq * std::sqrt(P.n * P.h * P.h));
  for (std::size_t i : P.upsilon3) {
    const auto d = detail::column(pool, i, true);
    const auto u = detail::column(pool, i, false);
    const double vd = stats::variance(d), vu = stats::variance(u);
    if (vd > 0.0 && vu > 0.0)
      rep.max_block_corr = std::max(rep.max_block_corr, std::abs(stats::covariance(d, u)) / std::sqrt(vd * vu));
  }
  return rep;
}

struct MomentReport {
  int r = 0;
  std::vector<double> ratios;  // per Y3 block: E|delta|^r / (r^r p^{r/2-1} Psi^{r/2} Var delta)
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  double bern_delta = 0.0;  // max_i E|delta_i|^r / (r! gamma_n^{r-2} Var delta_i)
  double bern_u = 0.0;      // same for u_i over all blocks
  double gamma = 0.0;
  double standardized_moment = 0.0;  // mean over Y3 of E|delta|^r / Var^{r/2}
};

inline MomentReport moment_growth_check(const std::vector<BlockDraw>& pool, const Partition& P, int r) {
  require(r >= 2, ErrorCode::InvalidArgument, "r must be >= 2");
  MomentReport rep;
  rep.r = r;
  rep.gamma = gamma_n(P);
  const double psi_cap = P.l2sq * P.e.d_n / P.e.beta_n * P.kappa * P.kappa / (P.sigma_sq * P.sigma_sq);
  const double rr = std::pow(static_cast<double>(r), r);
  const double rfact = std::tgamma(static_cast<double>(r) + 1.0);
  auto abs_moment = [&](const std::vector<double>& x) {
    const double m = stats::mean(x);
    double a = 0.0;
    for (double v : x) a += std::pow(std::abs(v - m), r);
    return a / static_cast<double>(x.size());
  };
  rep.min_ratio = std::numeric_limits<double>::infinity();
  double std_sum = 0.0;
  for (std::size_t i : P.upsilon3) {
    const auto d = detail::column(pool, i, true);
    const double v = stats::variance(d);
    if (!(v > 0.0)) continue;
    const double em = abs_moment(d);
    const double p = P.blocks[i].p;
    const double ratio = em / (rr * std::pow(p, 0.5 * r - 1.0) * std::pow(psi_cap, 0.5 * r) * v);
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.bern_delta = std::max(rep.bern_delta, em / (rfact * std::pow(rep.gamma, r - 2) * v));
    std_sum += em / std::pow(v, 0.5 * r);
  }
  if (rep.ratios.empty()) rep.min_ratio = 0.0;
  rep.standardized_moment = rep.ratios.empty() ? 0.0 : std_sum / static_cast<double>(rep.ratios.size());
  for (std::size_t i = 0; i < P.blocks.size(); ++i) {
    const auto u = detail::column(pool, i, false);
    const double v = stats::variance(u);
    if (v > 0.0) rep.bern_u = std::max(rep.bern_u, abs_moment(u) / (rfact * std::pow(rep.gamma, r - 2) * v));
  }
  return rep;
}

struct CumulantEstimate {
  double gamma_r = 0.0;
  double std_error = 0.0;
  double k2 = 0.0;
};

/// k-statistic of order r (3 or 4) with a bootstrap standard error over replicates.
inline CumulantEstimate cumulant_of(std::span<const double> xs, int r, std::size_t resamples = 200, Seed seed = 0x5eed) {
  require(r == 3 || r == 4, ErrorCode::InvalidArgument, "r must be 3 or 4");
  auto pick_k = [r](std::span<const double> v) {
    const auto k = stats::k_statistics(v);
    return r == 3 ? k.k3 : k.k4;
  };
  CumulantEstimate out;
  out.gamma_r = pick_k(xs);
  out.k2 = stats::k_statistics(xs).k2;
  const auto boot = stats::bootstrap(xs, resamples, seed, pick_k);
  out.std_error = std::sqrt(stats::variance(boot));
  return out;
}

inline CumulantEstimate cumulant_estimate(const std::vector<BlockDraw>& pool, double t1, double t2, int r,
                                          std::size_t resamples = 200) {
  const double norm = std::hypot(t1, t2);
  require(norm > 0.0, ErrorCode::InvalidArgument, "direction must be nonzero");
  const auto x = detail::pick(pool, [&](const BlockDraw& d) { return (t1 * d.s_total + t2 * d.u_total) / norm; });
  return cumulant_of(x, r, resamples);
}

// ---------------------------------------------------------------- Chebyshev

/// Integer coefficients of T_r (index = power), by T_r = 2x T_{r-1} - T_{r-2}.
inline std::vector<std::int64_t> chebyshev_coeffs(int r) {
  require(r >= 0, ErrorCode::InvalidArgument, "r must be >= 0");
  if (r > 40) throw Error(ErrorCode::Overflow, "coefficients of T_r exceed 64-bit range for r > 40");
  std::vector<std::int64_t> prev{1};
  if (r == 0) return prev;
  std::vector<std::int64_t> cur{0, 1};
  for (int k = 2; k <= r; ++k) {
    std::vector<std::int64_t> next(static_cast<std::size_t>(k) + 1, 0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += 2 * cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace l1clt
