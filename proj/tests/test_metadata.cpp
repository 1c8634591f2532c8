#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "diar/metadata.hpp"
#include "diar/rng.hpp"
#include "oracles.hpp"

using namespace diar;

namespace {

SpeakerTurn turn(const std::string& spk, Millis onset, Millis end) {
  SpeakerTurn t;
  t.onset = onset;
  t.duration = end - onset;
  t.speaker_id = spk;
  return t;
}

Annotation random_annotation(Rng& rng, const std::string& rec) {
  std::vector<SpeakerTurn> turns;
  int n = static_cast<int>(rng.uniform_int(1, 14));
  for (int i = 0; i < n; ++i) {
    Millis onset = rng.uniform_int(0, 90000);
    turns.push_back(turn(std::string(1, static_cast<char>('A' + rng.uniform_int(0, 5))),
                         onset, onset + rng.uniform_int(1, 20000)));
  }
  return Annotation::from_turns(rec, turns, Millis{120000});
}

}  // namespace

TEST_CASE("speech percentage basics") {
  auto full = Annotation::from_turns("rec", {turn("A", 0, 100000)}, Millis{100000});
  CHECK(speech_percentage(full) == doctest::Approx(100.0));

  auto overlapped = Annotation::from_turns(
      "rec", {turn("A", 0, 60000), turn("B", 0, 60000)}, Millis{100000});
  CHECK(speech_percentage(overlapped) == doctest::Approx(60.0));

  auto zero = Annotation::from_turns("rec", {}, Millis{0});
  CHECK_THROWS_AS(speech_percentage(zero), ValidationError);
}

TEST_CASE("overlapped error basics") {
  auto single = Annotation::from_turns("rec", {turn("A", 0, 60000)}, Millis{100000});
  CHECK(overlapped_error(single) == doctest::Approx(0.0));

  auto both = Annotation::from_turns(
      "rec", {turn("A", 0, 60000), turn("B", 0, 60000)}, Millis{100000});
  CHECK(overlapped_error(both) == doctest::Approx(50.0));

  auto silent = Annotation::from_turns("rec", {}, Millis{100000});
  CHECK_THROWS_AS(overlapped_error(silent), ValidationError);
}

TEST_CASE("overlap error is zero iff no cross-speaker intersection") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    Annotation ann = random_annotation(rng, "rec");
    bool any_overlap = false;
    auto speakers = ann.speakers();
    for (std::size_t i = 0; i < speakers.size() && !any_overlap; ++i)
      for (std::size_t j = i + 1; j < speakers.size() && !any_overlap; ++j)
        any_overlap = interval_intersection_length(ann.speaker_regions(speakers[i]),
                                                   ann.speaker_regions(speakers[j])) > 0;
    CHECK((overlapped_error(ann) > 0.0) == any_overlap);
  }
}

TEST_CASE("formulas match the 1ms rasterization oracle") {
  Rng rng(20200817);
  for (int trial = 0; trial < 200; ++trial) {
    Annotation ann = random_annotation(rng, "rec");
    IntervalList all;
    for (const SpeakerTurn& t : ann.turns()) all.push_back({t.onset, t.end()});
    double oracle_speech = 100.0 *
                           static_cast<double>(oracle::grid_union_length(all)) /
                           static_cast<double>(ann.total_duration());
    CHECK(speech_percentage(ann) == doctest::Approx(oracle_speech).epsilon(1e-12));

    double speaker_time = static_cast<double>(ann.total_speaker_time());
    double oracle_overlap =
        100.0 * (speaker_time - static_cast<double>(oracle::grid_union_length(all))) /
        speaker_time;
    CHECK(overlapped_error(ann) == doctest::Approx(oracle_overlap).epsilon(1e-12));
  }
}

TEST_CASE("speech percentage invariant to splitting turns") {
  auto whole = Annotation::from_turns("rec", {turn("A", 1000, 9000)}, Millis{20000});
  auto split = Annotation::from_turns(
      "rec", {turn("A", 1000, 4000), turn("A", 4000, 6500), turn("A", 6500, 9000)},
      Millis{20000});
  CHECK(speech_percentage(whole) == speech_percentage(split));
}

TEST_CASE("domain report aggregates") {
  std::map<std::string, Annotation> anns;
  anns.emplace("a", Annotation::from_turns(
                        "a", {turn("A", 0, 50000), turn("B", 25000, 75000)},
                        Millis{100000}));
  anns.emplace("b", anns.at("a"));

  std::map<std::string, std::string> domains{{"a", "meeting"}, {"b", "meeting"}};
  DomainReport rep = domain_report(anns, domains);
  REQUIRE(rep.rows.size() == 1);
  // Two identical recordings pool to the single-recording value.
  CHECK(rep.rows[0].speech_pct == doctest::Approx(speech_percentage(anns.at("a"))));
  CHECK(rep.rows[0].overlap_err == doctest::Approx(overlapped_error(anns.at("a"))));
  CHECK(rep.all.n_audios == 2);
  CHECK(rep.all.min_speakers == 2);
  CHECK(rep.all.max_speakers == 2);

  std::map<std::string, std::string> incomplete{{"a", "meeting"}};
  CHECK_THROWS_AS(domain_report(anns, incomplete), ValidationError);
}

TEST_CASE("pooled aggregate equals independent per-recording recomputation") {
  Rng rng(9);
  std::map<std::string, Annotation> anns;
  std::map<std::string, std::string> domains;
  Millis speech_sum = 0, dur_sum = 0, spk_sum = 0;
  for (int i = 0; i < 12; ++i) {
    std::string rec = "rec" + std::to_string(i);
    Annotation ann = random_annotation(rng, rec);
    speech_sum += total_length(ann.speech_union());
    dur_sum += ann.total_duration();
    spk_sum += ann.total_speaker_time();
    domains[rec] = i % 2 ? "web" : "lab";
    anns.emplace(rec, std::move(ann));
  }
  DomainReport rep = domain_report(anns, domains);
  CHECK(rep.all.speech_pct ==
        doctest::Approx(100.0 * speech_sum / static_cast<double>(dur_sum)));
  CHECK(rep.all.overlap_err ==
        doctest::Approx(100.0 * (spk_sum - speech_sum) / static_cast<double>(spk_sum)));

  // Pooled aggregate sits between per-recording extremes.
  double lo = 100.0, hi = 0.0;
  for (const auto& [rec, ann] : anns) {
    lo = std::min(lo, speech_percentage(ann));
    hi = std::max(hi, speech_percentage(ann));
  }
  CHECK(rep.all.speech_pct >= lo);
  CHECK(rep.all.speech_pct <= hi);
}

TEST_CASE("report renders both formats") {
  std::map<std::string, Annotation> anns;
  anns.emplace("a", Annotation::from_turns("a", {turn("A", 0, 445000)}, Millis{445000}));
  std::map<std::string, std::string> domains{{"a", "audiobooks"}};
  DomainReport rep = domain_report(anns, domains);
  std::string tsv = render_domain_report_tsv(rep);
  CHECK(tsv.find("audiobooks") != std::string::npos);
  CHECK(tsv.find("ALL") != std::string::npos);
  CHECK(tsv.find("7min 25s") != std::string::npos);
  std::string text = render_domain_report_text(rep);
  CHECK(text.find("overlap") != std::string::npos);
}
