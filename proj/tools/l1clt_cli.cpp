#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "l1clt/blocks.hpp"
#include "l1clt/mc_lab.hpp"
#include "l1clt/parallel.hpp"
#include "l1clt/rates.hpp"
#include "l1clt/report.hpp"
#include "l1clt/setup.hpp"

namespace fs = std::filesystem;
using namespace l1clt;
using report::Config;
using report::Csv;
using report::Json;
using report::metric;

namespace {

enum Exit { kPass = 0, kInternal = 1, kConfig = 2, kRegime = 3, kStatistical = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  unsigned threads = default_threads();
  std::string kernel;
};

struct Run {
  Config cfg;
  Seed seed = 0;
  unsigned threads = 1;
  fs::path dir;
};

Config load(const Common& c) {
  if (c.config.empty()) return Config{};
  if (!fs::exists(c.config)) throw Error(ErrorCode::ConfigError, "config file not found: " + c.config);
  return Config::from_file(c.config);
}

Run prepare(const Common& c, const std::string& command, bool needs_seed) {
  Run r;
  r.cfg = load(c);
  if (c.seed) r.cfg.set("run.seed", std::to_string(*c.seed));
  if (needs_seed) r.seed = r.cfg.get_seed("run.seed");
  r.threads = std::max(1u, c.threads);
  r.dir = c.out_dir.empty() ? fs::path("out") / command : fs::path(c.out_dir);
  return r;
}

Kernel kernel_of(const Config& cfg, const std::string& fallback) {
  if (cfg.has("kernel.file")) return setup::kernel_from(cfg.get_string("kernel.file"));
  return setup::kernel_from(cfg.get_string("kernel.name", fallback));
}

std::size_t count_of(const Config& cfg, const std::string& key, std::int64_t fallback = -1) {
  const auto v = fallback < 0 ? cfg.get_int(key) : cfg.get_int(key, fallback);
  if (v <= 0) throw Error(ErrorCode::ConfigError, "config key '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

int verdict(const Json& checks) {
  for (const auto& [name, m] : checks.items())
    if (m.contains("pass") && m["pass"].is_boolean() && !m["pass"].get<bool>()) return kStatistical;
  return kPass;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

Json summary_head(const std::string& command, const Run& r) {
  Json j;
  j["command"] = command;
  j["config_digest"] = report::config_digest(r.cfg);
  j["master_seed"] = r.seed;
  return j;
}

// ---------------------------------------------------------------- sigma2

int cmd_sigma2(const Common& c) {
  auto r = prepare(c, "sigma2", false);
  const Kernel k = c.kernel.empty() ? kernel_of(r.cfg, "uniform") : setup::kernel_from(c.kernel);
  const auto v = asymptotic_variance(k);
  report::RunWriter w(r.dir, "sigma2", report::config_digest(r.cfg), 0);
  Csv rho({"t", "rho", "phi_rho"});
  for (int i = -100; i <= 100; ++i) {
    const double t = i / 100.0;
    const double p = autocorrelation(k, t);
    rho.row(std::vector<double>{t, p, phi(p)});
  }
  w.write_csv("rho.csv", rho);
  Json j;
  j["kernel"] = k.name();
  j["sigma_sq"] = v.sigma_sq;
  j["quadrature_error_estimate"] = v.quadrature_error_estimate;
  j["norms"] = {{"kappa", k.kappa()}, {"l2sq", k.l2sq()}, {"l3", k.l3()}};
  j["rho_table"] = (w.dir() / "rho.csv").string();
  w.write_json("summary.json", j);
  w.finish(kPass);
  std::cout << j.dump(2) << "\n";
  return kPass;
}

// ---------------------------------------------------------------- rates

int cmd_rates(const Common& c) {
  auto r = prepare(c, "rates", false);
  const auto& g = r.cfg;
  AuditConfig a;
  const int id = static_cast<int>(g.get_int("rates.example"));
  a.kernel = g.get_string("kernel.name", a.kernel);
  a.ex1_gamma = g.get_double("rates.gamma", a.ex1_gamma);
  a.ex3_gamma = g.get_double("rates.gamma", a.ex3_gamma);
  a.a_const = g.get_double("rates.a_const", 1.0);
  a.tol = g.get_double("rates.tolerance", a.tol);
  a.tol_double = g.get_double("rates.tolerance_double", a.tol_double);
  if (g.has("rates.h")) a.hs = g.get_list("rates.h");
  if (g.has("rates.n"))
    for (double n : g.get_list("rates.n")) a.hs.push_back(std::pow(n, -1.0 / 3.0));
  for (std::size_t i = 1; i < a.hs.size(); ++i)
    if (!(a.hs[i] < a.hs[i - 1])) throw Error(ErrorCode::ScheduleViolation, "rates schedule needs decreasing h");
  std::vector<RateLedger> ledgers;
  const auto rows = rate_audit(id, a, &ledgers);

  report::RunWriter w(r.dir, "rates", report::config_digest(g), 0);
  Csv ledger(ledger_columns());
  for (const auto& L : ledgers) ledger.row(ledger_values(L));
  w.write_csv("ledger.csv", ledger);
  Csv slopes({"quantity", "slope", "target", "tolerance", "r_squared", "h_hi", "h_lo", "pass"});
  Json j = summary_head("rates", r);
  j["example"] = id;
  Json checks = Json::object();
  for (const auto& row : rows) {
    slopes.row(std::vector<std::string>{row.quantity, report::format_number(row.slope), report::format_number(row.target),
                                        report::format_number(row.tolerance), report::format_number(row.r_squared),
                                        report::format_number(row.h_hi), report::format_number(row.h_lo),
                                        row.pass ? "1" : "0"});
    checks["slope_" + row.quantity] = metric(row.slope, row.target - row.tolerance, row.target + row.tolerance, row.pass);
  }
  w.write_csv("slopes.csv", slopes);
  bool all_early = !ledgers.empty();
  for (const auto& L : ledgers) all_early = all_early && L.not_yet_asymptotic;
  j["not_yet_asymptotic"] = all_early;
  j["checks"] = checks;
  w.write_json("summary.json", j);
  int code = verdict(checks);
  if (all_early) {
    std::cerr << "NotYetAsymptotic: tau* >= 1 or psi_n >= 1 at every bandwidth. Slopes are still reported;"
                 " lower rates.a_const or extend the schedule to smaller h for level statements.\n";
    code = kRegime;
  }
  w.finish(code);
  return code;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Common& c) {
  auto r = prepare(c, "simulate", true);
  const auto& g = r.cfg;
  const Density f = setup::density_from(g);
  const Kernel k = kernel_of(g, "uniform");
  const auto ns = g.get_list("simulate.n");
  std::vector<std::pair<std::size_t, double>> schedule;
  for (double n : ns) {
    if (!(n >= 1.0) || n != std::floor(n)) throw Error(ErrorCode::ConfigError, "simulate.n entries must be positive integers");
    schedule.push_back({static_cast<std::size_t>(n), setup::bandwidth_from(g, "simulate", n)});
  }
  if (g.has("simulate.h") && schedule.size() > 1)
    throw Error(ErrorCode::ConfigError, "a fixed simulate.h needs a single n; use simulate.h_exponent for schedules");
  const std::size_t reps = count_of(g, "simulate.replicates");
  const auto table = variance_convergence(f, k, schedule, reps, r.seed, r.threads,
                                          count_of(g, "simulate.bootstrap", 1000));

  report::RunWriter w(r.dir, "simulate", report::config_digest(g), r.seed);
  Csv pool({"replicate_id", "seed", "n", "h", "actual_count", "l1_deviation", "window_lo", "window_hi", "grid_step", "z"});
  Csv var({"n", "h", "n_var", "ci_lo", "ci_hi", "ratio", "ks", "skewness"});
  const double sigma = std::sqrt(table.sigma_sq);
  std::optional<ReplicatePool> last;
  for (std::size_t row = 0; row < schedule.size(); ++row) {
    const auto [n, h] = schedule[row];
    const Interval win = default_window(f, h);
    const double step = k.is_uniform() ? 0.0 : h / 20.0;
    auto z = normalized_pool(table.raw[row], static_cast<double>(n), h, sigma, r.seed);
    const auto num = [](double v) { return report::format_number(v); };
    for (std::size_t i = 0; i < reps; ++i)
      pool.row(std::vector<std::string>{std::to_string(i), std::to_string(derive_seed(r.seed, 100 + row, i)),
                                        std::to_string(n), num(h), std::to_string(n), num(table.raw[row][i]),
                                        num(win.lo), num(win.hi), num(step), num(z.stats[i])});
    const auto& v = table.rows[row];
    var.row(std::vector<double>{v.n, v.h, v.n_var, v.ci_lo, v.ci_hi, v.ratio, v.ks, v.skewness});
    last = std::move(z);
  }
  w.write_csv("pool.csv", pool);
  w.write_csv("variance.csv", var);

  const auto d = distance_report(last->stats);
  Json j = summary_head("simulate", r);
  j["sigma_sq"] = table.sigma_sq;
  j["distance"] = {{"ks", d.ks},       {"levy_prokhorov_upper", d.levy_prokhorov_upper},
                   {"mean", d.mean},   {"variance", d.variance},
                   {"ks_se", d.ks_se}, {"mean_se", d.mean_se},
                   {"variance_se", d.variance_se}};
  Json checks = Json::object();
  const auto& fin = table.rows.back();
  std::optional<bool> ci_ok, mono_ok, ks_ok;
  if (g.get_string("simulate.require_ci_contains", "false") == "true") ci_ok = table.final_ci_contains;
  if (g.get_string("simulate.require_monotone", "false") == "true") mono_ok = table.monotone_toward_one;
  if (g.has("simulate.ks_max")) ks_ok = d.ks <= g.get_double("simulate.ks_max");
  checks["final_n_var"] = metric(fin.n_var, fin.ci_lo, fin.ci_hi, ci_ok);
  checks["ratio_monotone"] = metric(table.monotone_toward_one ? 1.0 : 0.0, std::nullopt, std::nullopt, mono_ok);
  checks["ks"] = metric(d.ks, std::nullopt, std::nullopt, ks_ok);
  if (g.has("simulate.tail_x")) {
    Csv tails({"x", "lower_ratio", "lower_lo", "lower_hi", "upper_ratio", "upper_lo", "upper_hi", "lower_hits", "upper_hits"});
    for (const auto& t : moderate_deviation_ratio(*last, g.get_list("simulate.tail_x"))) {
      tails.row(std::vector<double>{t.x, t.lower_ratio, t.lower_lo, t.lower_hi, t.upper_ratio, t.upper_lo, t.upper_hi,
                                    static_cast<double>(t.lower_hits), static_cast<double>(t.upper_hits)});
      checks["tail_upper_x" + label(t.x)] = metric(t.upper_ratio, t.upper_lo, t.upper_hi, t.contains_one);
      checks["tail_lower_x" + label(t.x)] = metric(t.lower_ratio, t.lower_lo, t.lower_hi, t.contains_one);
    }
    w.write_csv("tails.csv", tails);
  }
  j["checks"] = checks;
  w.write_json("summary.json", j);
  const int code = verdict(checks);
  w.finish(code);
  return code;
}

// ---------------------------------------------------------------- blocks

struct BlockSetup {
  Density f;
  Kernel k;
  Partition P;
};

BlockSetup block_setup(const Config& g, const std::string& sec) {
  const Density f = setup::density_from(g);
  const Kernel k = kernel_of(g, "uniform");
  const double n = g.get_double(sec + ".n");
  const double h = setup::bandwidth_from(g, sec, n);
  const auto e = setup::set_from(g, sec, f, h);
  PartitionParams pp;
  pp.alpha = g.get_double(sec + ".alpha", pp.alpha);
  if (g.has(sec + ".psi_multiplier")) pp.psi_multiplier = g.get_double(sec + ".psi_multiplier");
  const double s2 = asymptotic_variance(k).sigma_sq;
  return {f, k, build_partition(f, e, k, h, n, s2, pp)};
}

SimOptions sim_options(const Config& g, const std::string& sec) {
  SimOptions o;
  o.grid_per_h = static_cast<int>(g.get_int(sec + ".grid_per_h", o.grid_per_h));
  const auto cent = g.get_string(sec + ".centering", "proxy");
  if (cent == "exact") o.centering = Centering::Exact;
  else if (cent != "proxy") throw Error(ErrorCode::ConfigError, sec + ".centering must be proxy or exact");
  return o;
}

int cmd_blocks(const Common& c) {
  auto r = prepare(c, "blocks", true);
  const auto& g = r.cfg;
  auto bs = block_setup(g, "blocks");
  const auto& P = bs.P;
  report::RunWriter w(r.dir, "blocks", report::config_digest(g), r.seed);
  Csv part({"i", "z_lo", "z_hi", "p", "q", "class"});
  for (std::size_t i = 0; i < P.blocks.size(); ++i) {
    const auto& b = P.blocks[i];
    part.row(std::vector<std::string>{std::to_string(i + 1), report::format_number(b.interval.lo),
                                      report::format_number(b.interval.hi), report::format_number(b.p),
                                      report::format_number(b.q), to_string(b.cls)});
  }
  w.write_csv("partition.csv", part);

  Json j = summary_head("blocks", r);
  j["partition"] = {{"n", P.n},
                    {"h", P.h},
                    {"h_star", P.h_star},
                    {"m_cut", P.m_cut},
                    {"blocks", P.blocks.size()},
                    {"upsilon1", P.upsilon1.size()},
                    {"upsilon2", P.upsilon2.size()},
                    {"upsilon3", P.upsilon3.size()},
                    {"psi_n", P.psi_n},
                    {"p_n", P.p_n},
                    {"alpha", P.alpha},
                    {"gamma_n", gamma_n(P)}};
  Json checks = Json::object();
  const auto bad = check_partition(P, bs.f);
  j["violations"] = bad;
  checks["partition_violations"] = metric(static_cast<double>(bad.size()), std::nullopt, std::nullopt, bad.empty());

  const std::size_t draws = static_cast<std::size_t>(g.get_int("blocks.draws", 0));
  if (draws > 0) {
    BlockSimulator sim(P, bs.f, bs.k, sim_options(g, "blocks"));
    const auto pool = block_pool(sim, draws, r.seed, r.threads);
    Csv pc({"S", "U", "V", "eta"});
    for (const auto& d : pool) pc.row(std::vector<double>{d.s_total, d.u_total, d.v_total, static_cast<double>(d.eta)});
    w.write_csv("pool.csv", pc);
    const auto s = summarize_pool(pool);
    const double ts = g.get_double("blocks.var_s_tol", 0.05), tu = g.get_double("blocks.var_u_tol", 0.03);
    checks["var_s"] = metric(s.var_s, 1.0 - ts, 1.0 + ts, std::abs(s.var_s - 1.0) <= ts);
    checks["var_u"] = metric(s.var_u, 1.0 - P.alpha - tu, 1.0 - P.alpha + tu, std::abs(s.var_u - (1.0 - P.alpha)) <= tu);
    checks["sum_var_delta"] = metric(s.sum_var_delta, std::nullopt, 4.0 + 5.0 * s.sum_var_delta_se,
                                     s.sum_var_delta <= 4.0 + 5.0 * s.sum_var_delta_se);
    const auto dep = one_dependence_test(pool, g.get_double("blocks.dependence_band", 4.0));
    checks["one_dependence_max_z"] = metric(dep.max_abs_z, std::nullopt, std::nullopt, dep.pass);
    j["dependence"] = {{"pairs", dep.pairs}, {"worst_i", dep.worst_i}, {"worst_j", dep.worst_j},
                       {"max_adjacent_corr", dep.max_adjacent_corr}, {"z_sv", dep.z_sv}, {"z_uv", dep.z_uv}};
    const auto cov = covariance_sn_un(pool, P);
    j["covariance_sn_un"] = {{"chi_hat", cov.chi_hat}, {"std_error", cov.std_error}, {"bound", cov.bound},
                             {"max_block_corr", cov.max_block_corr}};
  }
  j["checks"] = checks;
  w.write_json("summary.json", j);
  const int code = verdict(checks);
  w.finish(code);
  return code;
}

// ---------------------------------------------------------------- depoisson

int cmd_depoisson(const Common& c) {
  auto r = prepare(c, "depoisson", true);
  const auto& g = r.cfg;
  auto bs = block_setup(g, "depoisson");
  BlockSimulator sim(bs.P, bs.f, bs.k, sim_options(g, "depoisson"));
  const std::size_t reps = count_of(g, "depoisson.replicates");
  const auto rep = depoissonization_check(sim, reps, r.seed, r.threads, count_of(g, "depoisson.permutations", 1000));

  report::RunWriter w(r.dir, "depoisson", report::config_digest(g), r.seed);
  Csv sc({"i", "fixed", "conditional"});
  for (std::size_t i = 0; i < reps; ++i)
    sc.row(std::vector<double>{static_cast<double>(i), rep.fixed.stats[i], rep.conditional.stats[i]});
  w.write_csv("samples.csv", sc);
  Json j = summary_head("depoisson", r);
  j["two_sample"] = {{"ks", rep.test.ks},
                     {"permutation_p", rep.test.permutation_p},
                     {"asymptotic_p", rep.test.asymptotic_p},
                     {"permutations", rep.test.permutations}};
  j["accepted"] = rep.accepted;
  j["tried"] = rep.tried;
  j["acceptance_rate"] = rep.acceptance_rate;
  j["expected_rate"] = rep.expected_rate;
  j["stirling_rate"] = rep.stirling_rate;
  const double p_min = g.get_double("depoisson.p_min", 0.01);
  const double rate_tol = g.get_double("depoisson.rate_tol", 0.25);
  Json checks = Json::object();
  checks["permutation_p"] = metric(rep.test.permutation_p, p_min, 1.0, rep.test.permutation_p >= p_min);
  checks["acceptance_rate"] = metric(rep.acceptance_rate, (1.0 - rate_tol) * rep.stirling_rate,
                                     (1.0 + rate_tol) * rep.stirling_rate,
                                     std::abs(rep.acceptance_rate / rep.stirling_rate - 1.0) <= rate_tol);
  j["checks"] = checks;
  w.write_json("summary.json", j);
  const int code = verdict(checks);
  w.finish(code);
  return code;
}

// ---------------------------------------------------------------- expbound

int cmd_expbound(const Common& c) {
  auto r = prepare(c, "expbound", true);
  const auto& g = r.cfg;
  const Density f = setup::density_from(g);
  const Kernel k = kernel_of(g, "uniform");
  const auto n = static_cast<std::size_t>(count_of(g, "expbound.n"));
  const double h = setup::bandwidth_from(g, "expbound", static_cast<double>(n));
  const auto e = setup::set_from(g, "expbound", f, h);
  const IntervalSet b = g.has("expbound.omega") ? boundary_strips(f, e.intervals, g.get_double("expbound.omega")) : e.intervals;
  const auto rep = exponential_moment_check(f, k, h, n, b, g.get_list("expbound.lambdas", {0.05, 0.1, 0.2}),
                                            count_of(g, "expbound.replicates"), r.seed, r.threads);

  report::RunWriter w(r.dir, "expbound", report::config_digest(g), r.seed);
  Csv xc({"i", "xi"});
  for (std::size_t i = 0; i < rep.xi.stats.size(); ++i) xc.row(std::vector<double>{static_cast<double>(i), rep.xi.stats[i]});
  w.write_csv("xi.csv", xc);
  Csv rc({"lambda", "lhs", "lhs_se", "log_rhs", "pass"});
  Json j = summary_head("expbound", r);
  j["omega"] = rep.omega;
  j["sd_xi"] = rep.sd_xi;
  Json checks = Json::object();
  for (const auto& row : rep.rows) {
    rc.row(std::vector<double>{row.lambda, row.lhs, row.lhs_se, row.log_rhs, row.pass ? 1.0 : 0.0});
    checks["exp_moment_lambda" + label(row.lambda)] =
        metric(std::log(row.lhs), std::nullopt, row.log_rhs, row.pass);
  }
  w.write_csv("moments.csv", rc);
  Csv tc({"z", "empirical", "empirical_se", "bound", "slack", "pass"});
  for (const auto& t : rep.tails) {
    tc.row(std::vector<double>{t.z, t.empirical, t.empirical_se, t.bound, t.slack, t.pass ? 1.0 : 0.0});
    checks["tail_" + label(t.z / rep.sd_xi) + "sd"] = metric(t.empirical, std::nullopt, t.bound, t.pass);
  }
  w.write_csv("tails.csv", tc);
  j["checks"] = checks;
  w.write_json("summary.json", j);
  const int code = verdict(checks);
  w.finish(code);
  return code;
}

// ---------------------------------------------------------------- report

int cmd_report(const Common& c) {
  auto r = prepare(c, "report", false);
  std::vector<fs::path> runs;
  if (r.cfg.has("report.inputs")) {
    std::stringstream ss(r.cfg.get_string("report.inputs"));
    std::string item;
    while (std::getline(ss, item, ','))
      if (item.find_first_not_of(' ') != std::string::npos) runs.push_back(item.substr(item.find_first_not_of(' ')));
  } else if (fs::is_directory(r.dir)) {
    for (const auto& entry : fs::directory_iterator(r.dir))
      if (entry.is_directory()) runs.push_back(entry.path());
  }
  std::sort(runs.begin(), runs.end());
  Csv out({"run", "command", "check", "value", "ci_lo", "ci_hi", "pass"});
  Json j;
  j["runs"] = Json::array();
  int failures = 0, found = 0;
  auto cell = [](const Json& v) { return v.is_number() ? report::format_number(v.get<double>()) : std::string(""); };
  for (const auto& run : runs) {
    const auto path = run / "summary.json";
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    Json s;
    try {
      s = Json::parse(in);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ConfigError, "cannot parse " + path.string() + ": " + e.what());
    }
    ++found;
    const std::string name = run.filename().string();
    Json entry;
    entry["run"] = name;
    entry["command"] = s.value("command", "");
    entry["checks"] = s.value("checks", Json::object());
    for (const auto& [check, m] : entry["checks"].items()) {
      const std::string pass = m["pass"].is_boolean() ? (m["pass"].get<bool>() ? "1" : "0") : "";
      failures += pass == "0";
      out.row(std::vector<std::string>{name, entry["command"].get<std::string>(), check, cell(m["value"]),
                                       cell(m["ci_lo"]), cell(m["ci_hi"]), pass});
    }
    j["runs"].push_back(entry);
  }
  if (found == 0) throw Error(ErrorCode::ConfigError, "no run summaries found under " + r.dir.string());
  j["failures"] = failures;
  report::RunWriter w(r.dir, "report", report::config_digest(r.cfg), 0);
  w.write_csv("report.csv", out);
  w.write_json("report.json", j);
  const int code = failures ? kStatistical : kPass;
  w.finish(code);
  std::cout << found << " runs, " << failures << " failed checks\n";
  return code;
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonUnitIntegral:
    case ErrorCode::Unbounded:
    case ErrorCode::DomainError:
    case ErrorCode::EmptySet:
    case ErrorCode::DegenerateSet:
    case ErrorCode::NonPositiveValue:
    case ErrorCode::WindowTooSmall:
    case ErrorCode::ScheduleViolation: return kConfig;
    case ErrorCode::PartitionDegenerate: return kRegime;
    case ErrorCode::RejectionTooSlow: return kStatistical;
    default: return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Central limit theorem experiments for the L1 error of kernel density estimators"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "INI config file");
    sub->add_option("--seed", common.seed, "master seed (overrides run.seed)");
    sub->add_option("--out-dir", common.out_dir, "output directory");
    sub->add_option("--threads", common.threads, "worker threads (default: L1CLT_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    return sub;
  };
  auto* s_sigma2 = add_common(app.add_subcommand("sigma2", "asymptotic variance of a kernel"));
  s_sigma2->add_option("--kernel", common.kernel, "built-in kernel name or kernel INI file");
  auto* s_rates = add_common(app.add_subcommand("rates", "rate ledger and slope audit for an example"));
  auto* s_sim = add_common(app.add_subcommand("simulate", "replicate pool of the L1 statistic"));
  auto* s_blocks = add_common(app.add_subcommand("blocks", "partition and block-sum checks"));
  auto* s_dep = add_common(app.add_subcommand("depoisson", "fixed-n vs conditioned Poissonized block sums"));
  auto* s_exp = add_common(app.add_subcommand("expbound", "exponential moment bound on strips"));
  auto* s_rep = add_common(app.add_subcommand("report", "collect run summaries into one table"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  try {
    if (*s_sigma2) return cmd_sigma2(common);
    if (*s_rates) return cmd_rates(common);
    if (*s_sim) return cmd_simulate(common);
    if (*s_blocks) return cmd_blocks(common);
    if (*s_dep) return cmd_depoisson(common);
    if (*s_exp) return cmd_expbound(common);
    if (*s_rep) return cmd_report(common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
