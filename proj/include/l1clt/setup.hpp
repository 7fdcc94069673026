#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "l1clt/density.hpp"
#include "l1clt/errors.hpp"
#include "l1clt/kernel.hpp"
#include "l1clt/rates.hpp"
#include "l1clt/report.hpp"

// Config tables -> model objects.
namespace l1clt::setup {

/// `spec` is a built-in name or a path to an INI file:
///   [kernel] name = ..., breaks = -0.5, 0, 0.5, coeffs = 2, 4 | 2, -4   (ascending powers per piece)
inline Kernel kernel_from(const std::string& spec) {
  if (spec == "uniform" || spec == "epanechnikov" || spec == "linear" || spec == "triangular")
    return builtin_kernel(spec);
  const auto c = report::Config::from_file(spec);
  const auto breaks = c.get_list("kernel.breaks");
  std::vector<std::vector<double>> coeffs;
  std::stringstream ss(c.get_string("kernel.coeffs"));
  std::string piece;
  while (std::getline(ss, piece, '|')) {
    report::Config tmp;
    tmp.set("p", piece);
    coeffs.push_back(tmp.get_list("p"));
  }
  if (coeffs.size() + 1 != breaks.size())
    throw Error(ErrorCode::ConfigError, "kernel file needs one coefficient list per piece");
  return validate_kernel(piecewise_polynomial_spec(c.get_string("kernel.name", "custom"), breaks, coeffs));
}

/// [density] family = uniform | gaussian | power_law | holder | example, with its parameters.
inline Density density_from(const report::Config& c, const std::string& sec = "density") {
  const std::string fam = c.get_string(sec + ".family");
  if (fam == "uniform") return uniform_density(c.get_double(sec + ".lo", 0.0), c.get_double(sec + ".hi", 1.0));
  if (fam == "gaussian") return gaussian_density(c.get_double(sec + ".mean", 0.0), c.get_double(sec + ".sd", 1.0));
  if (fam == "power_law") return power_law_density(c.get_double(sec + ".gamma"));
  if (fam == "holder") return holder_density(c.get_double(sec + ".gamma"));
  if (fam == "example") {
    AuditConfig a;
    a.ex1_gamma = c.get_double(sec + ".gamma", a.ex1_gamma);
    a.ex3_gamma = c.get_double(sec + ".gamma", a.ex3_gamma);
    return example_density(static_cast<int>(c.get_int(sec + ".example")), a);
  }
  throw Error(ErrorCode::ConfigError, "unknown density family '" + fam + "'");
}

/// Bandwidth from `sec.h`, or n^{-sec.h_exponent}.
inline double bandwidth_from(const report::Config& c, const std::string& sec, double n) {
  if (c.has(sec + ".h")) return c.get_double(sec + ".h");
  const double e = c.get_double(sec + ".h_exponent");
  if (!(e > 0.0 && e < 0.5)) throw Error(ErrorCode::ConfigError, sec + ".h_exponent must lie in (0, 1/2)");
  return std::pow(n, -e);
}

/// E: the example set when `sec.example` is given, else the support (or [lo, hi] when set).
inline RegularSet set_from(const report::Config& c, const std::string& sec, const Density& f, double h) {
  if (c.has(sec + ".example")) return example_sets(static_cast<int>(c.get_int(sec + ".example")), f, h);
  const Interval s = f.support();
  double lo = c.get_double(sec + ".e_lo", s.lo), hi = c.get_double(sec + ".e_hi", s.hi);
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::ConfigError, sec + ".e_lo and " + sec + ".e_hi are required for unbounded support");
  return density_bounds(f, IntervalSet{Interval{lo, hi}});
}

}  // namespace l1clt::setup
