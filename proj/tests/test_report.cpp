#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "l1clt/report.hpp"
#include "l1clt/setup.hpp"

using namespace l1clt;
using namespace l1clt::report;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("l1clt_report_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(ConfigDigest, StableUnderReordering) {
  const auto a = Config::from_string("[run]\nseed = 5\n[simulate]\nn = 1000\nreplicates = 200\n");
  const auto b = Config::from_string("[simulate]\nreplicates=200\n  n =   1000\n\n[run]\nseed=5\n");
  EXPECT_EQ(config_digest(a), config_digest(b));
  const auto c = Config::from_string("[run]\nseed = 6\n[simulate]\nn = 1000\nreplicates = 200\n");
  EXPECT_NE(config_digest(a), config_digest(c));
  EXPECT_EQ(a.canonical(), "run.seed=5\nsimulate.n=1000\nsimulate.replicates=200\n");
}

TEST(Config, MissingKeyNamesTheKey) {
  const auto c = Config::from_string("[run]\n");
  try {
    c.get_seed("run.seed");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("'run.seed'"), std::string::npos);
  }
}

TEST(Config, TypedAccess) {
  const auto c = Config::from_string("[a]\nx = 0.25\nk = 12\nlist = 1, 2.5 ,3\nbad = 1.5x\nseed = 0x10\nfrac = 2.5\n");
  EXPECT_DOUBLE_EQ(c.get_double("a.x"), 0.25);
  EXPECT_EQ(c.get_int("a.k"), 12);
  EXPECT_EQ(c.get_list("a.list"), (std::vector<double>{1.0, 2.5, 3.0}));
  EXPECT_EQ(c.get_seed("a.seed"), 16u);
  EXPECT_DOUBLE_EQ(c.get_double("a.missing", 7.0), 7.0);
  EXPECT_THROW(c.get_double("a.bad"), Error);
  EXPECT_THROW(c.get_int("a.frac"), Error);
  EXPECT_THROW(c.get_seed("a.x"), Error);
  EXPECT_THROW(Config::from_string("[broken\n"), Error);
}

TEST(FormatNumber, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 0.22676045526486882, -1e-300, 6.02214076e23, 0.0}) {
    const auto s = format_number(v);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
  }
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-HUGE_VAL), "-inf");
}

TEST(Csv, HeaderAndRows) {
  Csv c({"a", "b"});
  c.row(std::vector<double>{0.5, 2.0});
  c.row(std::vector<std::string>{"x", "y"});
  EXPECT_EQ(c.str(), "a,b\n0.5,2\nx,y\n");
  EXPECT_EQ(c.size(), 2u);
  EXPECT_THROW(c.row(std::vector<double>{1.0}), Error);
}

TEST(WriteAtomic, ReplacesWithoutLeftovers) {
  const auto dir = scratch("atomic");
  write_atomic(dir / "sub" / "f.txt", "first");
  write_atomic(dir / "sub" / "f.txt", "second");
  EXPECT_EQ(slurp(dir / "sub" / "f.txt"), "second");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "sub")) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
  fs::remove_all(dir);
}

TEST(RunWriter, ManifestListsOutputs) {
  const auto dir = scratch("writer");
  RunWriter w(dir, "sigma2", "00ff", 42);
  Csv c({"t"});
  c.row(std::vector<double>{1.0});
  w.write_csv("x.csv", c);
  w.write_json("summary.json", Json{{"k", 1}});
  w.finish(0);
  const auto m = Json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["command"], "sigma2");
  EXPECT_EQ(m["config_digest"], "00ff");
  EXPECT_EQ(m["master_seed"], 42);
  EXPECT_EQ(m["tool_version"], kToolVersion);
  EXPECT_EQ(m["csv_schema"], kCsvSchema);
  EXPECT_EQ(m["outputs"], (Json{"x.csv", "summary.json"}));
  EXPECT_EQ(m["exit_code"], 0);
  fs::remove_all(dir);
}

TEST(Metric, NullsForMissingParts) {
  const auto m = metric(1.5);
  EXPECT_TRUE(m["ci_lo"].is_null());
  EXPECT_TRUE(m["pass"].is_null());
  const auto full = metric(1.0, 0.5, 2.0, true);
  EXPECT_EQ(full["ci_hi"], 2.0);
  EXPECT_EQ(full["pass"], true);
}

TEST(Setup, KernelFromFile) {
  const auto dir = scratch("kernel");
  std::ofstream(dir / "tri.ini") << "[kernel]\nname = tent\nbreaks = -0.5, 0, 0.5\ncoeffs = 2, 4 | 2, -4\n";
  const auto k = setup::kernel_from((dir / "tri.ini").string());
  EXPECT_NEAR(k(0.0), 2.0, 1e-12);
  EXPECT_NEAR(k(0.25), 1.0, 1e-12);
  EXPECT_NEAR(k.l2sq(), 4.0 / 3.0, 1e-12);
  std::ofstream(dir / "bad.ini") << "[kernel]\nname = bad\nbreaks = -0.5, 0.5\ncoeffs = 2\n";
  try {
    setup::kernel_from((dir / "bad.ini").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonUnitIntegral);
  }
  EXPECT_NEAR(setup::kernel_from("epanechnikov").l2sq(), 1.2, 1e-12);
  fs::remove_all(dir);
}

TEST(Setup, DensityAndBandwidth) {
  const auto c = Config::from_string("[density]\nfamily = gaussian\nmean = 1\nsd = 2\n[s]\nh_exponent = 0.25\n[t]\nh = 0.3\n[u]\nh_exponent = 0.7\n");
  const auto f = setup::density_from(c);
  EXPECT_NEAR(f.pdf(1.0), 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi)), 1e-12);
  EXPECT_NEAR(setup::bandwidth_from(c, "s", 1e4), 0.1, 1e-12);
  EXPECT_DOUBLE_EQ(setup::bandwidth_from(c, "t", 1e4), 0.3);
  EXPECT_THROW(setup::bandwidth_from(c, "u", 1e4), Error);
  // E defaults to the (truncated) support
  EXPECT_NEAR(setup::set_from(c, "s", f, 0.1).intervals.lower(), 1.0 - 24.0, 1e-12);
  EXPECT_THROW(setup::density_from(Config::from_string("[density]\nfamily = cauchy\n")), Error);
}
