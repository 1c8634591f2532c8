#pragma once

#include <vector>

#include "diar/common.hpp"

namespace diar {

// Half-open interval [start, end) in integer milliseconds. Half-open bounds
// make unions and complements compose without double counting.
struct Interval {
  Millis start = 0;
  Millis end = 0;

  Millis length() const { return end - start; }
  bool empty() const { return end <= start; }
  bool contains(Millis t) const { return start <= t && t < end; }

  friend bool operator==(const Interval&, const Interval&) = default;
  friend auto operator<=>(const Interval&, const Interval&) = default;
};

using IntervalList = std::vector<Interval>;

// Disjoint sorted union of arbitrary intervals; abutting intervals merge and
// empty ones vanish. The result covers exactly the same point set.
IntervalList interval_union(IntervalList intervals);

// Sum of lengths. Requires (and all functions here produce) a disjoint
// sorted list, so this equals the measure of the covered point set.
Millis total_length(const IntervalList& xs);

// Pointwise intersection of two disjoint sorted lists.
IntervalList interval_intersection(const IntervalList& a, const IntervalList& b);

Millis interval_intersection_length(const IntervalList& a, const IntervalList& b);

// Restrict a disjoint sorted list to a window.
IntervalList clip_intervals(const IntervalList& xs, Interval window);

bool is_disjoint_sorted(const IntervalList& xs);

}  // namespace diar
