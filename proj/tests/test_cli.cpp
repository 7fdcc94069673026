#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "l1clt/report.hpp"

namespace fs = std::filesystem;
using l1clt::report::Json;

namespace {

const fs::path kSource = L1CLT_SOURCE_DIR;

fs::path work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("l1clt_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Result {
  int code;
  std::string err;
};

Result cli(const std::string& args, const std::string& env = "") {
  const auto err = work() / "stderr.txt";
  const std::string cmd = env + " " + L1CLT_CLI_PATH + " " + args + " > " + (work() / "stdout.txt").string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = work() / name;
  std::ofstream(p) << text;
  return p;
}

std::string config(const fs::path& p) { return "--config " + p.string(); }
std::string smoke() { return config(kSource / "configs" / "smoke.ini"); }

}  // namespace

TEST(Cli, Sigma2PassesAndWritesOutputs) {
  const auto out = work() / "sigma2";
  ASSERT_EQ(cli("sigma2 --kernel uniform --out-dir " + out.string()).code, 0);
  const auto s = Json::parse(slurp(out / "summary.json"));
  EXPECT_NEAR(s["sigma_sq"].get<double>(), 1.5 - 4.0 / std::numbers::pi, 1e-8);
  EXPECT_TRUE(fs::exists(out / "rho.csv"));
  const auto m = Json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["command"], "sigma2");
  EXPECT_EQ(m["exit_code"], 0);
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(cli("no-such-command").code, 2);
  EXPECT_EQ(cli("simulate --config " + (work() / "absent.ini").string()).code, 2);
  EXPECT_EQ(cli("sigma2 --threads 0").code, 2);
  const auto bad = write_config("bad_kernel.ini", "[kernel]\nname = bad\nbreaks = -0.5, 0.5\ncoeffs = 3\n");
  const auto r = cli("sigma2 --kernel " + bad.string() + " --out-dir " + (work() / "bad").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("NonUnitIntegral"), std::string::npos) << r.err;
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, MissingSeedNamesTheKey) {
  const auto cfg = write_config("noseed.ini", "[density]\nfamily = uniform\n[simulate]\nn = 100\nh = 0.2\nreplicates = 10\n");
  const auto r = cli("simulate " + config(cfg) + " --out-dir " + (work() / "noseed").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("run.seed"), std::string::npos) << r.err;
  // --seed supplies it
  EXPECT_EQ(cli("simulate " + config(cfg) + " --seed 3 --out-dir " + (work() / "withseed").string()).code, 0);
}

TEST(Cli, RegimeExitThree) {
  const auto big_h = write_config("big_h.ini", "[run]\nseed = 1\n[density]\nfamily = uniform\n[blocks]\nn = 1000\nh = 0.5\n");
  EXPECT_EQ(cli("blocks " + config(big_h) + " --out-dir " + (work() / "regime_blocks").string()).code, 3);
  const auto rates = write_config("rates_short.ini", "[kernel]\nname = linear\n[rates]\nexample = 2\nh = 0.05, 0.02\n");
  const auto r = cli("rates " + config(rates) + " --out-dir " + (work() / "regime_rates").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(r.err.empty());
  EXPECT_TRUE(fs::exists(work() / "regime_rates" / "ledger.csv"));
}

TEST(Cli, StatisticalFailureExitFour) {
  // a KS ceiling no finite pool meets
  const auto cfg = write_config("strict.ini",
                                "[run]\nseed = 2\n[density]\nfamily = uniform\n[simulate]\nn = 200\nh = 0.2\nreplicates = 100\nks_max = 1e-9\n");
  EXPECT_EQ(cli("simulate " + config(cfg) + " --out-dir " + (work() / "strict").string()).code, 4);
}

TEST(Cli, SmokeRunIsFastAndByteIdentical) {
  const auto a = work() / "smoke_a", b = work() / "smoke_b", c = work() / "smoke_c";
  const auto t0 = std::chrono::steady_clock::now();
  ASSERT_EQ(cli("simulate " + smoke() + " --threads 1 --out-dir " + a.string()).code, 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 60.0);
  ASSERT_EQ(cli("simulate " + smoke() + " --threads 1 --out-dir " + b.string()).code, 0);
  ASSERT_EQ(cli("simulate " + smoke() + " --out-dir " + c.string(), "L1CLT_THREADS=3").code, 0);
  for (const char* f : {"pool.csv", "variance.csv", "summary.json"}) {
    const auto ref = slurp(a / f);
    ASSERT_FALSE(ref.empty()) << f;
    EXPECT_EQ(ref, slurp(b / f)) << f;
    EXPECT_EQ(ref, slurp(c / f)) << f;
  }
  const auto header = slurp(a / "pool.csv").substr(0, slurp(a / "pool.csv").find('\n'));
  EXPECT_EQ(header, "replicate_id,seed,n,h,actual_count,l1_deviation,window_lo,window_hi,grid_step,z");
}

TEST(Cli, DigestIgnoresKeyOrder) {
  const auto x = write_config("order_x.ini", "[run]\nseed = 4\n[kernel]\nname = epanechnikov\n");
  const auto y = write_config("order_y.ini", "[kernel]\nname=epanechnikov\n[run]\nseed=4\n");
  ASSERT_EQ(cli("sigma2 " + config(x) + " --out-dir " + (work() / "order_x").string()).code, 0);
  ASSERT_EQ(cli("sigma2 " + config(y) + " --out-dir " + (work() / "order_y").string()).code, 0);
  const auto mx = Json::parse(slurp(work() / "order_x" / "manifest.json"));
  const auto my = Json::parse(slurp(work() / "order_y" / "manifest.json"));
  EXPECT_EQ(mx["config_digest"], my["config_digest"]);
  EXPECT_EQ(mx["config_digest"].get<std::string>().size(), 16u);
}

TEST(Cli, ReportAggregatesRuns) {
  const auto root = work() / "agg";
  ASSERT_EQ(cli("simulate " + smoke() + " --out-dir " + (root / "smoke").string()).code, 0);
  ASSERT_EQ(cli("sigma2 --kernel uniform --out-dir " + (root / "sigma2").string()).code, 0);
  ASSERT_EQ(cli("report --out-dir " + root.string()).code, 0);
  const auto j = Json::parse(slurp(root / "report.json"));
  EXPECT_EQ(j["runs"].size(), 2u);
  EXPECT_EQ(j["failures"], 0);
  EXPECT_EQ(slurp(root / "report.csv").substr(0, 37), "run,command,check,value,ci_lo,ci_hi,p");
  EXPECT_EQ(cli("report --out-dir " + (work() / "empty_report").string()).code, 2);
}
