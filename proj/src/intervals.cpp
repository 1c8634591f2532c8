#include "diar/intervals.hpp"

#include <algorithm>

namespace diar {

IntervalList interval_union(IntervalList intervals) {
  std::erase_if(intervals, [](const Interval& x) { return x.empty(); });
  std::sort(intervals.begin(), intervals.end());
  IntervalList out;
  for (const Interval& x : intervals) {
    if (!out.empty() && x.start <= out.back().end) {
      out.back().end = std::max(out.back().end, x.end);
    } else {
      out.push_back(x);
    }
  }
  return out;
}

Millis total_length(const IntervalList& xs) {
  Millis total = 0;
  for (const Interval& x : xs) total += x.length();
  return total;
}

IntervalList interval_intersection(const IntervalList& a, const IntervalList& b) {
  IntervalList out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    Millis lo = std::max(a[i].start, b[j].start);
    Millis hi = std::min(a[i].end, b[j].end);
    if (lo < hi) out.push_back({lo, hi});
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

Millis interval_intersection_length(const IntervalList& a, const IntervalList& b) {
  Millis total = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    Millis lo = std::max(a[i].start, b[j].start);
    Millis hi = std::min(a[i].end, b[j].end);
    if (lo < hi) total += hi - lo;
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return total;
}

IntervalList clip_intervals(const IntervalList& xs, Interval window) {
  IntervalList out;
  for (const Interval& x : xs) {
    Millis lo = std::max(x.start, window.start);
    Millis hi = std::min(x.end, window.end);
    if (lo < hi) out.push_back({lo, hi});
  }
  return out;
}

bool is_disjoint_sorted(const IntervalList& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].empty()) return false;
    if (i > 0 && xs[i].start < xs[i - 1].end) return false;
    if (i > 0 && xs[i].start < xs[i - 1].start) return false;
  }
  return true;
}

}  // namespace diar
