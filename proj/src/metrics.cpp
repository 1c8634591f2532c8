#include "diar/metrics.hpp"

#include <algorithm>
#include <limits>

namespace diar {

void DerBreakdown::add(const DerBreakdown& other) {
  missed += other.missed;
  false_alarm += other.false_alarm;
  confusion += other.confusion;
  correct += other.correct;
  scored_speech += other.scored_speech;
}

void DerBreakdown::finalize() {
  der = scored_speech > 0
            ? 100.0 * static_cast<double>(missed + false_alarm + confusion) /
                  static_cast<double>(scored_speech)
            : 0.0;
}

// --------------------------------------------------------------------------
// Assignment
// --------------------------------------------------------------------------

std::vector<int> solve_assignment_min_cost(
    const std::vector<std::vector<std::int64_t>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != n)
      throw ValidationError("assignment cost matrix must be square");

  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  // Potentials-based Hungarian algorithm, 1-indexed scratch arrays.
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = match[j0], j1 = 0;
      std::int64_t delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

std::vector<int> solve_assignment_max_value(
    const std::vector<std::vector<std::int64_t>>& value) {
  const int rows = static_cast<int>(value.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(value[0].size());
  const int n = std::max(rows, cols);
  std::int64_t top = 0;
  for (const auto& row : value) {
    if (static_cast<int>(row.size()) != cols)
      throw ValidationError("assignment value matrix is ragged");
    for (std::int64_t x : row) {
      if (x < 0) throw ValidationError("assignment values must be non-negative");
      top = std::max(top, x);
    }
  }
  // Pad to square and convert maximization to min-cost.
  std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n, top));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) cost[i][j] = top - value[i][j];
  std::vector<int> match = solve_assignment_min_cost(cost);
  std::vector<int> out(rows, -1);
  for (int i = 0; i < rows; ++i)
    if (match[i] < cols) out[i] = match[i];
  return out;
}

// --------------------------------------------------------------------------
// DER
// --------------------------------------------------------------------------

namespace {

struct SweepContext {
  std::vector<std::string> ref_speakers;
  std::vector<std::string> hyp_speakers;
  // Boundary-sorted change events: time -> list of (speaker index, delta,
  // from_ref).
  struct Event {
    Millis time;
    int speaker;
    int delta;
    bool ref;
  };
  std::vector<Event> events;
  std::vector<Millis> boundaries;
};

SweepContext build_sweep(const Annotation& ref, const Annotation& hyp) {
  SweepContext ctx;
  ctx.ref_speakers = ref.speakers();
  ctx.hyp_speakers = hyp.speakers();
  auto index_of = [](const std::vector<std::string>& xs, const std::string& x) {
    return static_cast<int>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
  };
  for (const SpeakerTurn& t : ref.turns()) {
    int s = index_of(ctx.ref_speakers, t.speaker_id);
    ctx.events.push_back({t.onset, s, +1, true});
    ctx.events.push_back({t.end(), s, -1, true});
  }
  for (const SpeakerTurn& t : hyp.turns()) {
    int s = index_of(ctx.hyp_speakers, t.speaker_id);
    ctx.events.push_back({t.onset, s, +1, false});
    ctx.events.push_back({t.end(), s, -1, false});
  }
  std::sort(ctx.events.begin(), ctx.events.end(),
            [](const auto& a, const auto& b) { return a.time < b.time; });
  for (const auto& e : ctx.events)
    if (ctx.boundaries.empty() || ctx.boundaries.back() != e.time)
      ctx.boundaries.push_back(e.time);
  return ctx;
}

// Visits every elementary slice [t1, t2) with constant active sets; `eff`
// is the slice length clipped to the evaluation regions.
template <typename Fn>
void sweep(const SweepContext& ctx, const IntervalList* uem, Fn&& visit) {
  std::vector<int> ref_active(ctx.ref_speakers.size(), 0);
  std::vector<int> hyp_active(ctx.hyp_speakers.size(), 0);
  std::size_t e = 0;
  std::size_t u = 0;
  for (std::size_t b = 0; b + 1 <= ctx.boundaries.size(); ++b) {
    Millis t1 = ctx.boundaries[b];
    while (e < ctx.events.size() && ctx.events[e].time == t1) {
      auto& ev = ctx.events[e];
      (ev.ref ? ref_active : hyp_active)[ev.speaker] += ev.delta;
      ++e;
    }
    if (b + 1 == ctx.boundaries.size()) break;
    Millis t2 = ctx.boundaries[b + 1];

    Millis eff = t2 - t1;
    if (uem != nullptr) {
      eff = 0;
      while (u < uem->size() && (*uem)[u].end <= t1) ++u;
      for (std::size_t w = u; w < uem->size() && (*uem)[w].start < t2; ++w) {
        Millis lo = std::max(t1, (*uem)[w].start);
        Millis hi = std::min(t2, (*uem)[w].end);
        if (lo < hi) eff += hi - lo;
      }
    }
    if (eff > 0) visit(eff, ref_active, hyp_active);
  }
}

int count_active(const std::vector<int>& active) {
  int n = 0;
  for (int a : active) n += a > 0 ? 1 : 0;
  return n;
}

}  // namespace

DerBreakdown der(const Annotation& ref, const Annotation& hyp,
                 const std::optional<IntervalList>& uem) {
  if (ref.empty()) throw ValidationError("der: empty reference for " + ref.recording_id());
  const IntervalList* uem_ptr = uem ? &*uem : nullptr;
  if (uem && !is_disjoint_sorted(*uem))
    throw ValidationError("der: UEM regions must be disjoint and sorted");

  SweepContext ctx = build_sweep(ref, hyp);
  const int nr = static_cast<int>(ctx.ref_speakers.size());
  const int nh = static_cast<int>(ctx.hyp_speakers.size());

  DerBreakdown out;
  std::vector<std::vector<std::int64_t>> cooc(
      nr, std::vector<std::int64_t>(std::max(nh, 1), 0));

  sweep(ctx, uem_ptr, [&](Millis eff, const std::vector<int>& ra,
                          const std::vector<int>& ha) {
    int n_ref = count_active(ra);
    int n_hyp = count_active(ha);
    out.scored_speech += eff * n_ref;
    out.missed += eff * std::max(0, n_ref - n_hyp);
    out.false_alarm += eff * std::max(0, n_hyp - n_ref);
    for (int r = 0; r < nr; ++r) {
      if (ra[r] <= 0) continue;
      for (int h = 0; h < nh; ++h)
        if (ha[h] > 0) cooc[r][h] += eff;
    }
  });

  if (out.scored_speech == 0)
    throw ValidationError("der: reference has no scored speech for " +
                          ref.recording_id());

  std::vector<int> mapping(nr, -1);
  if (nh > 0) mapping = solve_assignment_max_value(cooc);

  sweep(ctx, uem_ptr, [&](Millis eff, const std::vector<int>& ra,
                          const std::vector<int>& ha) {
    int n_ref = count_active(ra);
    int n_hyp = count_active(ha);
    int n_correct = 0;
    for (int r = 0; r < nr; ++r)
      if (ra[r] > 0 && mapping[r] >= 0 && ha[mapping[r]] > 0) ++n_correct;
    out.correct += eff * n_correct;
    out.confusion += eff * (std::min(n_ref, n_hyp) - n_correct);
  });

  for (int r = 0; r < nr; ++r)
    if (mapping[r] >= 0 && cooc[r][mapping[r]] > 0)
      out.speaker_map[ctx.ref_speakers[r]] = ctx.hyp_speakers[mapping[r]];

  out.finalize();
  return out;
}

double vad_accuracy(const VadLabels& ref, const VadLabels& hyp) {
  ref.validate();
  hyp.validate();
  if (ref.labels.size() != hyp.labels.size())
    throw ValidationError("vad_accuracy: frame count mismatch (" +
                          std::to_string(ref.labels.size()) + " vs " +
                          std::to_string(hyp.labels.size()) + ")");
  if (ref.frame_step != hyp.frame_step)
    throw ValidationError("vad_accuracy: frame_step mismatch");
  if (ref.labels.empty()) throw ValidationError("vad_accuracy: empty label sequences");
  std::size_t equal = 0;
  for (std::size_t i = 0; i < ref.labels.size(); ++i)
    equal += ref.labels[i] == hyp.labels[i] ? 1 : 0;
  return 100.0 * static_cast<double>(equal) / static_cast<double>(ref.labels.size());
}

}  // namespace diar
