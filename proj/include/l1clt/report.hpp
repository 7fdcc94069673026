#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "l1clt/errors.hpp"
#include "l1clt/random.hpp"

namespace l1clt::report {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kCsvSchema = "1";

// ---------------------------------------------------------------- config

/// Flat INI tables: [section] key = value, addressed as "section.key".
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    Config c;
    try {
      boost::property_tree::read_ini(path, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error(ErrorCode::ConfigError, std::string("cannot parse config: ") + e.what());
    }
    return c;
  }

  static Config from_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    try {
      boost::property_tree::read_ini(in, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error(ErrorCode::ConfigError, std::string("cannot parse config: ") + e.what());
    }
    return c;
  }

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  void set(const std::string& key, const std::string& value) { tree_.put(key, value); }

  std::string get_string(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) throw Error(ErrorCode::ConfigError, "missing config key '" + key + "'");
    return *v;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const { return parse<double>(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  std::int64_t get_int(const std::string& key) const {
    const double v = get_double(key);
    if (v != std::floor(v)) throw Error(ErrorCode::ConfigError, "config key '" + key + "' must be an integer");
    return static_cast<std::int64_t>(v);
  }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const { return has(key) ? get_int(key) : fallback; }

  std::uint64_t get_seed(const std::string& key) const {
    const std::string s = get_string(key);
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(s, &pos, 0);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "config key '" + key + "' is not an unsigned integer");
    }
  }

  /// Comma-separated list of numbers.
  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get_string(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.find_first_not_of(" \t") == std::string::npos) continue;
      out.push_back(parse<double>(key, item));
    }
    if (out.empty()) throw Error(ErrorCode::ConfigError, "config key '" + key + "' is an empty list");
    return out;
  }
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? get_list(key) : fallback;
  }

  /// "section.key=value" lines, sorted; independent of file order and whitespace.
  std::string canonical() const {
    std::map<std::string, std::string> flat;
    flatten(tree_, "", flat);
    std::string out;
    for (const auto& [k, v] : flat) out += k + "=" + v + "\n";
    return out;
  }

  std::map<std::string, std::string> entries() const {
    std::map<std::string, std::string> flat;
    flatten(tree_, "", flat);
    return flat;
  }

 private:
  template <class T>
  static T parse(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T v{};
    in >> v;
    if (in.fail()) throw Error(ErrorCode::ConfigError, "config key '" + key + "' has a malformed value '" + text + "'");
    in >> std::ws;
    if (!in.eof()) throw Error(ErrorCode::ConfigError, "config key '" + key + "' has trailing text '" + text + "'");
    return v;
  }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static void flatten(const boost::property_tree::ptree& t, const std::string& prefix,
                      std::map<std::string, std::string>& out) {
    for (const auto& [k, child] : t) {
      const std::string key = prefix.empty() ? k : prefix + "." + k;
      if (child.empty()) {
        out[key] = trim(child.data());
      } else {
        flatten(child, key, out);
      }
    }
  }

  boost::property_tree::ptree tree_;
};

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_digest(const Config& c) { return hex64(fnv1a(c.canonical())); }

// ---------------------------------------------------------------- output

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes to a temporary sibling and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(const std::vector<double>& values) {
    require(values.size() == header_.size(), ErrorCode::InvalidArgument, "CSV row width mismatch");
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    rows_.push_back(std::move(cells));
  }

  void row(const std::vector<std::string>& cells) {
    require(cells.size() == header_.size(), ErrorCode::InvalidArgument, "CSV row width mismatch");
    rows_.push_back(cells);
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

using Json = nlohmann::ordered_json;

/// {value, ci_lo, ci_hi, pass}
inline Json metric(double value, std::optional<double> lo = std::nullopt, std::optional<double> hi = std::nullopt,
                   std::optional<bool> pass = std::nullopt) {
  Json j;
  j["value"] = value;
  j["ci_lo"] = lo ? Json(*lo) : Json(nullptr);
  j["ci_hi"] = hi ? Json(*hi) : Json(nullptr);
  j["pass"] = pass ? Json(*pass) : Json(nullptr);
  return j;
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string command;
  std::string config_digest;
  Seed master_seed = 0;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;
  int exit_code = 0;

  Json to_json() const {
    Json j;
    j["command"] = command;
    j["config_digest"] = config_digest;
    j["master_seed"] = master_seed;
    j["tool_version"] = tool_version;
    j["csv_schema"] = kCsvSchema;
    j["started"] = started;
    j["finished"] = finished;
    j["outputs"] = outputs;
    j["exit_code"] = exit_code;
    return j;
  }
};

/// Collects outputs of one run under a directory and emits the manifest last.
class RunWriter {
 public:
  RunWriter(std::filesystem::path dir, std::string command, std::string digest, Seed seed) : dir_(std::move(dir)) {
    manifest_.command = std::move(command);
    manifest_.config_digest = std::move(digest);
    manifest_.master_seed = seed;
    manifest_.started = utc_now();
  }

  void write(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    manifest_.outputs.push_back(name);
  }
  void write_csv(const std::string& name, const Csv& csv) { write(name, csv.str()); }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  void finish(int exit_code) {
    manifest_.finished = utc_now();
    manifest_.exit_code = exit_code;
    write_atomic(dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
  }

  const std::filesystem::path& dir() const { return dir_; }
  const RunManifest& manifest() const { return manifest_; }

 private:
  std::filesystem::path dir_;
  RunManifest manifest_;
};

}  // namespace l1clt::report
