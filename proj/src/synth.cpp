#include "diar/synth.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "diar/rng.hpp"

namespace diar {

void CorpusProfile::validate() const {
  if (n_recordings < 1) throw ValidationError("profile: n_recordings must be >= 1");
  if (min_duration_s <= 0 || max_duration_s < min_duration_s)
    throw ValidationError("profile: bad duration range");
  if (min_speakers < 1 || max_speakers < min_speakers || max_speakers > 26)
    throw ValidationError("profile: bad speaker range");
  if (target_speech_pct <= 0.0 || target_speech_pct > 100.0)
    throw ValidationError("profile: speech percentage must be in (0, 100]");
  if (target_overlap_pct < 0.0)
    throw ValidationError("profile: overlap percentage must be non-negative");
  if (target_overlap_pct >= 50.0)
    throw ValidationError("profile: infeasible targets (overlap time would exceed speech time)");
  if (embedding_dim < 1) throw ValidationError("profile: embedding_dim must be >= 1");
  if (embedding_dim < max_speakers + 1)
    throw ValidationError("profile: embedding_dim must exceed max_speakers "
                          "(orthogonal speaker sources)");
  if (between_spread <= 0.0 || within_spread <= 0.0)
    throw ValidationError("profile: spreads must be positive");
  if (frame_step <= 0) throw ValidationError("profile: frame_step must be positive");
  segmenter.validate();
}

namespace {

struct BaseTurn {
  Millis onset;
  Millis duration;
  int speaker;
};

// Lays out non-overlapping base turns whose durations sum exactly to
// `speech_budget` inside [0, duration), with the remaining time split into
// random gaps. Speakers rotate through a reshuffled order each cycle so all
// of them appear.
std::vector<BaseTurn> layout_base_turns(Millis duration, Millis speech_budget,
                                        int n_speakers, Rng& rng) {
  std::vector<Millis> lens;
  Millis remaining = speech_budget;
  while (remaining > 0) {
    Millis len = ms_from_seconds(rng.lognormal(std::log(2.5), 0.5));
    len = std::clamp<Millis>(len, 600, 12000);
    if (len > remaining || remaining - len < 300) len = remaining;
    lens.push_back(len);
    remaining -= len;
  }

  // Random gap proportions over len+1 slots.
  Millis gap_budget = duration - speech_budget;
  std::vector<Millis> gaps(lens.size() + 1, 0);
  std::vector<double> props(gaps.size());
  double total = 0.0;
  for (double& p : props) {
    p = rng.uniform(0.2, 1.0);
    total += p;
  }
  Millis given = 0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    gaps[i] = static_cast<Millis>(static_cast<double>(gap_budget) * props[i] / total);
    given += gaps[i];
  }
  gaps.back() += gap_budget - given;  // rounding remainder

  // Speaker order: reshuffled cycles, avoiding immediate repeats.
  std::vector<int> order(n_speakers);
  for (int i = 0; i < n_speakers; ++i) order[i] = i;
  std::vector<BaseTurn> turns;
  int prev = -1;
  std::size_t pos = 0;
  Millis cursor = 0;
  for (std::size_t i = 0; i < lens.size(); ++i) {
    cursor += gaps[i];
    if (pos == 0 && n_speakers > 1) {
      for (int j = n_speakers - 1; j > 0; --j)
        std::swap(order[j], order[rng.uniform_int(0, j)]);
      if (order[0] == prev) std::swap(order[0], order[n_speakers - 1]);
    }
    int spk = order[pos];
    pos = (pos + 1) % n_speakers;
    turns.push_back({cursor, lens[i], spk});
    cursor += lens[i];
    prev = spk;
  }
  return turns;
}

}  // namespace

SynthCorpus generate_corpus(const CorpusProfile& profile) {
  profile.validate();
  SynthCorpus corpus;
  Rng root(profile.rng_seed);

  for (int rec = 0; rec < profile.n_recordings; ++rec) {
    Rng rng = root.fork(static_cast<std::uint64_t>(rec) + 1);
    SynthRecording r;

    const Millis duration =
        ms_from_seconds(rng.uniform(profile.min_duration_s, profile.max_duration_s));
    const int n_speakers =
        static_cast<int>(rng.uniform_int(profile.min_speakers, profile.max_speakers));
    std::string rec_id = "synth" + std::to_string(rec);

    // Exact budgets: union U = R% * D; overlap time V = U * O / (1 - O).
    const Millis speech_budget = static_cast<Millis>(
        static_cast<double>(duration) * profile.target_speech_pct / 100.0);
    double o = n_speakers > 1 ? profile.target_overlap_pct / 100.0 : 0.0;
    Millis overlap_budget = static_cast<Millis>(
        static_cast<double>(speech_budget) * o / (1.0 - o));

    std::vector<BaseTurn> base =
        layout_base_turns(duration, speech_budget, n_speakers, rng);

    std::vector<SpeakerTurn> turns;
    auto speaker_name = [](int s) { return "spk" + std::string(1, char('A' + s)); };
    for (const BaseTurn& b : base) {
      SpeakerTurn t;
      t.recording_id = rec_id;
      t.onset = b.onset;
      t.duration = b.duration;
      t.speaker_id = speaker_name(b.speaker);
      turns.push_back(std::move(t));
    }

    // Overlap insertions: a second speaker strictly inside a base turn.
    Millis placed = 0;
    if (n_speakers > 1 && overlap_budget > 0) {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < base.size(); ++i)
        if (base[i].duration >= 800) eligible.push_back(i);
      // Random visiting order.
      for (std::size_t j = eligible.size(); j > 1; --j)
        std::swap(eligible[j - 1], eligible[rng.uniform_int(0, j - 1)]);
      for (std::size_t idx : eligible) {
        if (placed >= overlap_budget) break;
        const BaseTurn& host = base[idx];
        Millis room = host.duration - 200;  // 100 ms margin each side
        Millis want = std::min<Millis>(overlap_budget - placed,
                                       rng.uniform_int(200, room));
        if (want < 100) want = std::min<Millis>(100, room);
        Millis start =
            host.onset + 100 + rng.uniform_int(0, room - want);
        int other = static_cast<int>(rng.uniform_int(0, n_speakers - 2));
        if (other >= host.speaker) ++other;
        SpeakerTurn t;
        t.recording_id = rec_id;
        t.onset = start;
        t.duration = want;
        t.speaker_id = speaker_name(other);
        turns.push_back(std::move(t));
        placed += want;
        r.overlap_regions.push_back({start, start + want});
      }
      if (placed < overlap_budget)
        log_warning(rec_id + ": placed " + std::to_string(placed) + " of " +
                    std::to_string(overlap_budget) + " ms overlap budget");
    }
    r.overlap_regions = interval_union(std::move(r.overlap_regions));

    r.planned_speech_union = speech_budget;
    r.planned_speaker_time = speech_budget + placed;
    r.reference = Annotation::from_turns(rec_id, std::move(turns), duration);

    // --- speaker sources ---
    // Mutually orthogonal directions (QR of a Gaussian draw), scaled so the
    // mean norm matches an isotropic N(0, between^2 I) draw. Random means
    // can land at arbitrary angles; the corpus is supposed to carry
    // separable clusters with known truth.
    auto draw_orthogonal_means = [&](int rows) {
      const int d = profile.embedding_dim;
      Eigen::MatrixXd gauss(d, rows);
      for (Eigen::Index i = 0; i < gauss.size(); ++i)
        gauss.data()[i] = rng.normal();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, rows);
      double norm = profile.between_spread * std::sqrt(static_cast<double>(d));
      return Eigen::MatrixXd(norm * q.transpose());
    };
    Eigen::MatrixXd emb_means = draw_orthogonal_means(n_speakers);
    Eigen::MatrixXd feat_means = draw_orthogonal_means(n_speakers + 1);  // + silence

    // --- embeddings over uniform segments ---
    IntervalList speech = r.reference.speech_union();
    std::vector<Segment> segments = uniform_segment(speech, profile.segmenter);
    r.embeddings.recording_id = rec_id;
    r.embeddings.segments = segments;
    r.embeddings.vectors.resize(static_cast<Eigen::Index>(segments.size()),
                                profile.embedding_dim);
    std::vector<std::string> names = r.reference.speakers();
    for (std::size_t i = 0; i < segments.size(); ++i) {
      auto label = assign_reference_label(segments[i], r.reference, profile.segmenter);
      // Map back to the generator speaker index via the name ("spkA" -> 0).
      int gen_idx = label ? (*label)[3] - 'A' : 0;
      for (int j = 0; j < profile.embedding_dim; ++j)
        r.embeddings.vectors(i, j) =
            emb_means(gen_idx, j) + profile.within_spread * rng.normal();
    }
    r.embeddings.validate();

    // --- frame features and VAD ---
    const int t = static_cast<int>(duration / profile.frame_step);
    r.features.recording_id = rec_id;
    r.features.frame_step = profile.frame_step;
    r.features.frame_length = profile.frame_length;
    r.features.frames.resize(t, profile.embedding_dim);
    r.vad.recording_id = rec_id;
    r.vad.frame_step = profile.frame_step;
    r.vad.labels.assign(t, 0);

    std::vector<IntervalList> per_speaker;
    for (const auto& name : names) per_speaker.push_back(r.reference.speaker_regions(name));
    for (int i = 0; i < t; ++i) {
      Millis center = i * profile.frame_step + profile.frame_step / 2;
      int active = -1;
      for (std::size_t s = 0; s < per_speaker.size(); ++s) {
        for (const Interval& iv : per_speaker[s]) {
          if (iv.contains(center)) {
            active = names[s][3] - 'A';
            break;
          }
        }
        if (active >= 0) break;
      }
      int source = active >= 0 ? active : n_speakers;  // silence source
      r.vad.labels[i] = active >= 0 ? 1 : 0;
      for (int j = 0; j < profile.embedding_dim; ++j)
        r.features.frames(i, j) =
            feat_means(source, j) + profile.within_spread * rng.normal();
    }
    r.features.validate();

    corpus.recordings.push_back(std::move(r));
  }
  return corpus;
}

CorpusProfile profile_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  CorpusProfile p;
  p.n_recordings = j.value("n_recordings", p.n_recordings);
  p.min_duration_s = j.value("min_duration_s", p.min_duration_s);
  p.max_duration_s = j.value("max_duration_s", p.max_duration_s);
  p.min_speakers = j.value("min_speakers", p.min_speakers);
  p.max_speakers = j.value("max_speakers", p.max_speakers);
  p.target_speech_pct = j.value("target_speech_pct", p.target_speech_pct);
  p.target_overlap_pct = j.value("target_overlap_pct", p.target_overlap_pct);
  p.embedding_dim = j.value("embedding_dim", p.embedding_dim);
  p.between_spread = j.value("between_spread", p.between_spread);
  p.within_spread = j.value("within_spread", p.within_spread);
  p.rng_seed = j.value("rng_seed", p.rng_seed);
  if (j.contains("window_s")) p.segmenter.window = ms_from_seconds(j["window_s"].get<double>());
  if (j.contains("step_s")) p.segmenter.step = ms_from_seconds(j["step_s"].get<double>());
  p.validate();
  return p;
}

}  // namespace diar
