#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "diar/metadata.hpp"
#include "diar/synth.hpp"

using namespace diar;

namespace {

CorpusProfile small_profile() {
  CorpusProfile p;
  p.n_recordings = 4;
  p.min_duration_s = 40;
  p.max_duration_s = 90;
  p.min_speakers = 2;
  p.max_speakers = 4;
  p.target_speech_pct = 76.0;
  p.target_overlap_pct = 10.8;
  p.embedding_dim = 8;
  p.rng_seed = 314;
  return p;
}

}  // namespace

TEST_CASE("generated corpora hit the Table-style targets") {
  CorpusProfile p = small_profile();
  SynthCorpus corpus = generate_corpus(p);
  REQUIRE(corpus.recordings.size() == 4);
  for (const SynthRecording& r : corpus.recordings) {
    double speech = speech_percentage(r.reference);
    double overlap = overlapped_error(r.reference);
    CHECK(std::abs(speech - p.target_speech_pct) < 5.0);
    CHECK(std::abs(overlap - p.target_overlap_pct) < 5.0);
  }
}

TEST_CASE("generator bookkeeping equals the metadata measurement exactly") {
  SynthCorpus corpus = generate_corpus(small_profile());
  for (const SynthRecording& r : corpus.recordings) {
    CHECK(total_length(r.reference.speech_union()) == r.planned_speech_union);
    CHECK(r.reference.total_speaker_time() == r.planned_speaker_time);
  }
}

TEST_CASE("single-speaker profile has exactly zero overlap") {
  CorpusProfile p = small_profile();
  p.min_speakers = p.max_speakers = 1;
  p.target_overlap_pct = 10.0;  // silently forced to 0 for 1 speaker
  SynthCorpus corpus = generate_corpus(p);
  for (const SynthRecording& r : corpus.recordings) {
    CHECK(overlapped_error(r.reference) == 0.0);
    CHECK(r.overlap_regions.empty());
  }
}

TEST_CASE("same seed gives identical corpora") {
  SynthCorpus a = generate_corpus(small_profile());
  SynthCorpus b = generate_corpus(small_profile());
  REQUIRE(a.recordings.size() == b.recordings.size());
  for (std::size_t i = 0; i < a.recordings.size(); ++i) {
    CHECK(a.recordings[i].reference == b.recordings[i].reference);
    CHECK(a.recordings[i].embeddings.vectors == b.recordings[i].embeddings.vectors);
    CHECK(a.recordings[i].features.frames == b.recordings[i].features.frames);
    CHECK(a.recordings[i].vad.labels == b.recordings[i].vad.labels);
  }
  CorpusProfile other = small_profile();
  other.rng_seed = 315;
  SynthCorpus c = generate_corpus(other);
  CHECK(a.recordings[0].reference != c.recordings[0].reference);
}

TEST_CASE("generated annotations satisfy core invariants") {
  SynthCorpus corpus = generate_corpus(small_profile());
  for (const SynthRecording& r : corpus.recordings) {
    const Annotation& ann = r.reference;
    for (const SpeakerTurn& t : ann.turns()) {
      CHECK(t.duration > 0);
      CHECK(t.onset >= 0);
      CHECK(t.end() <= ann.total_duration());
    }
    // Per-speaker turns disjoint.
    for (const std::string& spk : ann.speakers())
      CHECK(is_disjoint_sorted(ann.speaker_regions(spk)));
    // Embeddings sorted, finite, dimension consistent.
    r.embeddings.validate();
    r.features.validate();
    r.vad.validate();
    // Overlap regions are exactly where two speakers are active.
    Millis overlap_time = ann.total_speaker_time() - total_length(ann.speech_union());
    CHECK(total_length(r.overlap_regions) == overlap_time);
  }
}

TEST_CASE("infeasible profiles error") {
  CorpusProfile p = small_profile();
  p.target_overlap_pct = 60.0;
  CHECK_THROWS_AS(generate_corpus(p), ValidationError);
  p = small_profile();
  p.target_speech_pct = 0.0;
  CHECK_THROWS_AS(generate_corpus(p), ValidationError);
  p = small_profile();
  p.min_speakers = 3;
  p.max_speakers = 2;
  CHECK_THROWS_AS(generate_corpus(p), ValidationError);
}
