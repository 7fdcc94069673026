#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <vector>

namespace l1clt {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi > lo ? hi - lo : 0.0; }
  bool empty() const { return !(hi > lo); }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

inline Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

/// Finite union of disjoint intervals kept sorted; endpoints are treated as closed,
/// which is immaterial for every measure computed here.
class IntervalSet {
 public:
  IntervalSet() = default;
  IntervalSet(std::initializer_list<Interval> parts) : parts_(parts) { normalize(); }
  explicit IntervalSet(std::vector<Interval> parts) : parts_(std::move(parts)) { normalize(); }

  const std::vector<Interval>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  std::size_t size() const { return parts_.size(); }

  double measure() const {
    double s = 0.0;
    for (const auto& p : parts_) s += p.length();
    return s;
  }

  double lower() const { return parts_.empty() ? 0.0 : parts_.front().lo; }
  double upper() const { return parts_.empty() ? 0.0 : parts_.back().hi; }

  bool contains(double x) const {
    auto it = std::upper_bound(parts_.begin(), parts_.end(), x, [](double v, const Interval& p) { return v < p.lo; });
    if (it == parts_.begin()) return false;
    --it;
    return x <= it->hi;
  }

  IntervalSet intersect(const Interval& w) const {
    std::vector<Interval> out;
    for (const auto& p : parts_) {
      Interval q = l1clt::intersect(p, w);
      if (!q.empty()) out.push_back(q);
    }
    return IntervalSet(std::move(out));
  }

  IntervalSet intersect(const IntervalSet& other) const {
    std::vector<Interval> out;
    for (const auto& p : parts_)
      for (const auto& q : other.parts_) {
        Interval r = l1clt::intersect(p, q);
        if (!r.empty()) out.push_back(r);
      }
    return IntervalSet(std::move(out));
  }

  /// w minus this set.
  IntervalSet complement_in(const Interval& w) const {
    std::vector<Interval> out;
    double cursor = w.lo;
    for (const auto& p : parts_) {
      if (p.hi <= w.lo || p.lo >= w.hi) continue;
      if (p.lo > cursor) out.push_back({cursor, std::min(p.lo, w.hi)});
      cursor = std::max(cursor, p.hi);
    }
    if (cursor < w.hi) out.push_back({cursor, w.hi});
    return IntervalSet(std::move(out));
  }

  IntervalSet unite(const IntervalSet& other) const {
    std::vector<Interval> all = parts_;
    all.insert(all.end(), other.parts_.begin(), other.parts_.end());
    return IntervalSet(std::move(all));
  }

 private:
  void normalize() {
    std::erase_if(parts_, [](const Interval& p) { return p.empty(); });
    std::sort(parts_.begin(), parts_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& p : parts_) {
      if (!merged.empty() && p.lo <= merged.back().hi) {
        merged.back().hi = std::max(merged.back().hi, p.hi);
      } else {
        merged.push_back(p);
      }
    }
    parts_ = std::move(merged);
  }

  std::vector<Interval> parts_;
};

}  // namespace l1clt
