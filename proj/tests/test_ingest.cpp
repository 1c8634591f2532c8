#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "diar/io.hpp"
#include "diar/rng.hpp"

using namespace diar;

TEST_CASE("parse_rttm basics") {
  std::istringstream in(
      "SPEAKER rec1 1 0.00 10.00 <NA> <NA> A <NA> <NA>\n"
      "SPKR-INFO rec1 1 <NA> <NA> <NA> unknown A <NA> <NA>\n");
  auto anns = parse_rttm(in);
  REQUIRE(anns.size() == 1);
  const Annotation& ann = anns.at("rec1");
  REQUIRE(ann.turns().size() == 1);
  CHECK(ann.turns()[0].onset == 0);
  CHECK(ann.turns()[0].duration == 10000);
  CHECK(ann.turns()[0].speaker_id == "A");
}

TEST_CASE("parse_rttm merges same-speaker overlap") {
  std::istringstream in(
      "SPEAKER rec1 1 0.00 5.00 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER rec1 1 3.00 5.00 <NA> <NA> A <NA> <NA>\n");
  auto anns = parse_rttm(in);
  const Annotation& ann = anns.at("rec1");
  REQUIRE(ann.turns().size() == 1);
  CHECK(ann.turns()[0].onset == 0);
  CHECK(ann.turns()[0].end() == 8000);
}

TEST_CASE("parse_rttm errors carry line numbers") {
  std::istringstream bad_fields("SPEAKER rec1 1 0.00 10.00 <NA> <NA> A <NA>\n");
  CHECK_THROWS_WITH_AS(parse_rttm(bad_fields),
                       doctest::Contains("line 1"), ParseError);

  std::istringstream bad_dur(
      "SPEAKER rec1 1 0.00 10.00 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER rec1 1 5.00 -1.00 <NA> <NA> B <NA> <NA>\n");
  CHECK_THROWS_WITH_AS(parse_rttm(bad_dur), doctest::Contains("line 2"), ParseError);

  std::istringstream garbage("SPEAKER rec1 1 0.00 10.x0 <NA> <NA> A <NA> <NA>\n");
  CHECK_THROWS_AS(parse_rttm(garbage), ParseError);
}

TEST_CASE("rttm round trip on randomized annotations") {
  Rng rng(555);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SpeakerTurn> turns;
    int n = static_cast<int>(rng.uniform_int(0, 12));
    for (int i = 0; i < n; ++i) {
      SpeakerTurn t;
      t.recording_id = "rec";
      t.onset = rng.uniform_int(0, 60000);
      t.duration = rng.uniform_int(1, 15000);
      t.speaker_id = std::string(1, static_cast<char>('A' + rng.uniform_int(0, 4)));
      turns.push_back(std::move(t));
    }
    Annotation ann = Annotation::from_turns("rec", turns);
    if (ann.empty()) continue;
    std::istringstream in(rttm_to_string(ann));
    auto parsed = parse_rttm(in);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed.at("rec") == ann);
  }
}

TEST_CASE("empty annotation emits nothing") {
  Annotation ann = Annotation::from_turns("rec", {});
  CHECK(rttm_to_string(ann).empty());
}

TEST_CASE("uem parsing and regions") {
  std::istringstream in(
      "rec1 1 0.5 10.0\n"
      "rec1 1 9.0 12.5\n"
      "rec2 1 0.0 5.0\n");
  auto uem = parse_uem(in);
  REQUIRE(uem.size() == 2);
  REQUIRE(uem.at("rec1").size() == 1);
  CHECK(uem.at("rec1")[0] == Interval{500, 12500});

  std::istringstream bad("rec1 1 5.0 5.0\n");
  CHECK_THROWS_AS(parse_uem(bad), ParseError);
}

TEST_CASE("region triples parsing") {
  std::istringstream in(
      "rec1 0.0 2.0\n"
      "rec1 1.5 1.0\n");
  auto regions = parse_region_triples(in);
  REQUIRE(regions.at("rec1").size() == 1);
  CHECK(regions.at("rec1")[0] == Interval{0, 2500});

  std::istringstream bad("rec1 0.0 2.0 junk\n");
  CHECK_THROWS_AS(parse_region_triples(bad), ParseError);
}

TEST_CASE("embedding text format") {
  std::istringstream in(
      "3 2\n"
      "0.0 1.5 1.0 2.0\n"
      "0.75 2.25 3.0 4.0\n"
      "1.5 3.0 5.0 6.0\n");
  EmbeddingSet set = parse_embeddings(in, "rec");
  CHECK(set.size() == 3);
  CHECK(set.dim() == 2);
  CHECK(set.vectors(1, 1) == 4.0);
  CHECK(set.segments[2].start == 1500);
}

TEST_CASE("embedding error cases") {
  std::istringstream empty("0 4\n");
  CHECK_THROWS_WITH_AS(parse_embeddings(empty, "rec"),
                       doctest::Contains("empty embedding set"), ParseError);

  std::istringstream short_row(
      "1 3\n"
      "0.0 1.0 1.0 2.0\n");
  CHECK_THROWS_AS(parse_embeddings(short_row, "rec"), ParseError);

  std::istringstream trailing(
      "1 2\n"
      "0.0 1.0 1.0 2.0 9.9\n");
  CHECK_THROWS_AS(parse_embeddings(trailing, "rec"), ParseError);
}

TEST_CASE("embedding round trip, text and binary") {
  Rng rng(808);
  for (int trial = 0; trial < 50; ++trial) {
    int n = static_cast<int>(rng.uniform_int(1, 20));
    int d = static_cast<int>(rng.uniform_int(1, 8));
    EmbeddingSet set;
    set.recording_id = "rec";
    set.segments.resize(n);
    set.vectors.resize(n, d);
    Millis t = 0;
    for (int i = 0; i < n; ++i) {
      set.segments[i] = {t, t + rng.uniform_int(1, 2000), std::nullopt};
      t += rng.uniform_int(1, 1000);
      for (int j = 0; j < d; ++j) set.vectors(i, j) = rng.normal() * 1e3;
    }
    std::ostringstream text;
    emit_embeddings(set, text);
    std::istringstream in(text.str());
    EmbeddingSet back = parse_embeddings(in, "rec");
    CHECK(back.segments == set.segments);
    CHECK(back.vectors == set.vectors);

    std::ostringstream binary(std::ios::binary);
    emit_embeddings_binary(set, binary);
    std::string blob = binary.str();
    CHECK(blob.substr(0, 4) == "DKEB");
  }
}

TEST_CASE("score matrix format") {
  std::istringstream in(
      "2\n"
      "0.0 0.5\n"
      "0.25 1.0\n");
  ScoreMatrix m = parse_score_matrix(in);
  CHECK(m.size() == 2);
  CHECK(m.values(1, 0) == 0.25);

  std::istringstream nonsquare(
      "2\n"
      "0.0 0.5 1.0\n"
      "0.25 1.0 2.0\n");
  CHECK_THROWS_AS(parse_score_matrix(nonsquare), ParseError);
}

TEST_CASE("score matrix round trip") {
  Rng rng(70);
  for (int trial = 0; trial < 50; ++trial) {
    int n = static_cast<int>(rng.uniform_int(1, 12));
    ScoreMatrix m;
    m.values.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m.values(i, j) = rng.normal();
    std::ostringstream out;
    emit_score_matrix(m, out);
    std::istringstream in(out.str());
    ScoreMatrix back = parse_score_matrix(in);
    CHECK(back.values == m.values);
  }
}

TEST_CASE("feature format round trip") {
  Rng rng(31);
  FrameFeatures f;
  f.recording_id = "rec";
  f.frame_step = 10;
  f.frame_length = 25;
  f.frames.resize(7, 3);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) f.frames(i, j) = rng.normal();
  std::ostringstream out;
  emit_features(f, out);
  std::istringstream in(out.str());
  FrameFeatures back = parse_features(in, "rec");
  CHECK(back.frame_step == 10);
  CHECK(back.frame_length == 25);
  CHECK(back.frames == f.frames);
}

TEST_CASE("segment list round trip") {
  std::vector<Segment> segs{{0, 1500, std::nullopt}, {750, 2250, std::nullopt}};
  std::ostringstream out;
  emit_segments("rec", segs, out);
  std::istringstream in(out.str());
  auto parsed = parse_segments(in);
  REQUIRE(parsed.at("rec").size() == 2);
  CHECK(parsed.at("rec")[1].start == 750);
  CHECK(parsed.at("rec")[1].end == 2250);
}

TEST_CASE("golden files re-emit byte for byte") {
  // Canonical RTTM: emit(parse(x)) == x.
  const std::string rttm =
      "SPEAKER rec1 1 0.000 10.000 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER rec1 1 5.500 2.250 <NA> <NA> B <NA> <NA>\n"
      "SPEAKER rec2 2 0.010 0.990 <NA> <NA> C <NA> <NA>\n";
  std::istringstream rttm_in(rttm);
  std::ostringstream rttm_out;
  emit_rttm(parse_rttm(rttm_in), rttm_out);
  CHECK(rttm_out.str() == rttm);

  const std::string uem = "rec1 1 0.000 60.000\nrec2 1 0.500 30.250\n";
  std::istringstream uem_in(uem);
  std::ostringstream uem_out;
  emit_uem(parse_uem(uem_in), uem_out);
  CHECK(uem_out.str() == uem);

  const std::string triples = "rec1 0.000 2.000\nrec1 5.000 1.500\n";
  std::istringstream tri_in(triples);
  std::ostringstream tri_out;
  for (const auto& [rec, xs] : parse_region_triples(tri_in))
    emit_region_triples(rec, xs, tri_out);
  CHECK(tri_out.str() == triples);
}

TEST_CASE("matrix block round trip") {
  Eigen::MatrixXd m(2, 3);
  m << 1.5, -2.25, 3.125, 4.0, 5.5, -6.75;
  std::ostringstream out;
  emit_matrix(m, out);
  std::istringstream in(out.str());
  Eigen::MatrixXd back = parse_matrix(in, "test");
  CHECK(back == m);
}
