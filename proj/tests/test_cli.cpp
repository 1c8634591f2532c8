// Drives the diarkit binary through the subcommand surface: synth -> run,
// individual stages, and exit-code conventions.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "diar/io.hpp"
#include "diar/rng.hpp"
#include "diar/scoring.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli() { return DIARKIT_CLI_PATH; }

int run_cmd(const std::string& args, std::string* output = nullptr) {
  fs::path log = fs::temp_directory_path() / "diar_cli_out.txt";
  std::string cmd = std::string(cli()) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  if (output != nullptr) *output = diar::read_text_file(log.string());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

fs::path workdir() {
  fs::path dir = fs::temp_directory_path() / "diar_cli_test";
  return dir;
}

void make_corpus(const fs::path& dir) {
  json profile = {{"n_recordings", 2},   {"min_duration_s", 40},
                  {"max_duration_s", 60}, {"min_speakers", 2},
                  {"max_speakers", 2},    {"target_speech_pct", 80.0},
                  {"target_overlap_pct", 0.0}, {"embedding_dim", 8},
                  {"between_spread", 3.0}, {"within_spread", 0.3},
                  {"rng_seed", 99}};
  fs::create_directories(dir);
  diar::write_text_file((dir / "profile.json").string(), profile.dump(2));
  REQUIRE(run_cmd("synth --profile " + (dir / "profile.json").string() + " --out " +
                  (dir / "corpus").string()) == 0);
}

}  // namespace

TEST_CASE("cli: synth then run end to end") {
  fs::path dir = workdir();
  fs::remove_all(dir);
  make_corpus(dir);
  REQUIRE(fs::exists(dir / "corpus" / "manifest.jsonl"));
  REQUIRE(fs::exists(dir / "corpus" / "ref.rttm"));

  json config = {{"manifest", "corpus/manifest.jsonl"},
                 {"seed", 5},
                 {"output_dir", (dir / "out").string()},
                 {"stages", {{"overlap", false}}}};
  diar::write_text_file((dir / "config.json").string(), config.dump(2));

  std::string output;
  REQUIRE(run_cmd("run --config " + (dir / "config.json").string(), &output) == 0);
  CHECK(output.find("pooled_der") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "report.json"));

  // Byte-identical rerun.
  std::string first = diar::read_text_file((dir / "out" / "synth0" / "final.rttm").string());
  REQUIRE(run_cmd("run --config " + (dir / "config.json").string()) == 0);
  std::string second = diar::read_text_file((dir / "out" / "synth0" / "final.rttm").string());
  CHECK(first == second);
}

TEST_CASE("cli: stage-by-stage on one recording") {
  fs::path dir = workdir() / "stages";
  fs::remove_all(dir);
  make_corpus(dir);
  fs::path corpus = dir / "corpus";

  // metadata
  std::string table;
  REQUIRE(run_cmd("metadata --rttm " + (corpus / "ref.rttm").string() +
                      " --format tsv", &table) == 0);
  CHECK(table.find("ALL") != std::string::npos);

  // segment from the VAD triples
  REQUIRE(run_cmd("segment --regions " + (corpus / "synth0.vad").string() +
                  " --out " + (dir / "segments.txt").string()) == 0);

  // score with cosine
  REQUIRE(run_cmd("score --embeddings " + (corpus / "synth0.emb").string() +
                  " --backend cosine --out " + (dir / "scores.txt").string()) == 0);

  // cluster spectral
  REQUIRE(run_cmd("cluster --scores " + (dir / "scores.txt").string() +
                  " --segments " + (dir / "segments.txt").string() +
                  " --backend spectral --threshold 0.5 --seed 3 --out " +
                  (dir / "cluster.rttm").string()) == 0);
  auto clustered = diar::parse_rttm_file((dir / "cluster.rttm").string());
  CHECK(clustered.count("synth0") == 1);

  // resegment with per-speaker GMMs
  REQUIRE(run_cmd("resegment --method gmm --features " +
                  (corpus / "synth0.feats").string() + " --init " +
                  (dir / "cluster.rttm").string() + " --regions " +
                  (corpus / "synth0.vad").string() + " --out " +
                  (dir / "reseg.rttm").string()) == 0);

  // der against the reference
  std::string der_out;
  REQUIRE(run_cmd("der --ref " + (corpus / "synth0.rttm").string() + " --hyp " +
                      (dir / "reseg.rttm").string(), &der_out) == 0);
  CHECK(der_out.find("ALL") != std::string::npos);

  // fuse the matrix with itself
  REQUIRE(run_cmd("fuse --in " + (dir / "scores.txt").string() + " --in " +
                  (dir / "scores.txt").string() + " --out " +
                  (dir / "fused.txt").string()) == 0);

  // vad accuracy of the oracle regions against themselves
  std::string acc;
  REQUIRE(run_cmd("vad-acc --ref " + (corpus / "synth0.vad").string() + " --hyp " +
                      (corpus / "synth0.vad").string(), &acc) == 0);
  CHECK(acc.find("100.00") != std::string::npos);

  // overlap-assign with an empty overlap file leaves the RTTM equivalent
  diar::write_text_file((dir / "empty.overlap").string(), "");
  REQUIRE(run_cmd("overlap-assign --rttm " + (dir / "reseg.rttm").string() +
                  " --overlaps " + (dir / "empty.overlap").string() +
                  " --frame-step 0.01 --out " + (dir / "ovl.rttm").string()) == 0);
  CHECK(diar::parse_rttm_file((dir / "ovl.rttm").string()) ==
        diar::parse_rttm_file((dir / "reseg.rttm").string()));
}

TEST_CASE("cli: plda scoring with a trained model and whitener") {
  fs::path dir = workdir() / "plda";
  fs::remove_all(dir);
  make_corpus(dir);
  fs::path corpus = dir / "corpus";

  // Train PLDA + whitener on labeled vectors pooled from both recordings.
  diar::Rng rng(17);
  const int d = 8, per_spk = 60, n_spk = 4;
  std::vector<std::string> ids;
  Eigen::MatrixXd vectors(per_spk * n_spk, d);
  for (int s = 0; s < n_spk; ++s)
    for (int i = 0; i < per_spk; ++i) {
      for (int j = 0; j < d; ++j)
        vectors(s * per_spk + i, j) = (j == s ? 4.0 : 0.0) + 0.4 * rng.normal();
      ids.push_back("spk" + std::to_string(s));
    }
  diar::Whitener w = diar::fit_whitener(vectors);
  diar::PldaModel model =
      diar::fit_plda(ids, diar::apply_whitener(w, vectors, true));
  diar::write_whitener(w, (dir / "whitener.txt").string());
  diar::write_plda_model(model, (dir / "plda.txt").string());

  REQUIRE(run_cmd("score --embeddings " + (corpus / "synth0.emb").string() +
                  " --backend plda --plda-model " + (dir / "plda.txt").string() +
                  " --whitener " + (dir / "whitener.txt").string() + " --out " +
                  (dir / "plda_scores.txt").string()) == 0);
  diar::ScoreMatrix m =
      diar::parse_score_matrix_file((dir / "plda_scores.txt").string());
  CHECK(m.is_symmetric());
  // Diagonal (same segment scored against itself) should look same-speaker.
  CHECK(m.values.diagonal().minCoeff() > m.values.minCoeff());
}

TEST_CASE("cli: exit codes") {
  // Validation error (unknown flag / missing required): 2.
  CHECK(run_cmd("cluster --scores missing.txt") == 2);
  // Runtime error (file not found): 1.
  CHECK(run_cmd("der --ref does_not_exist.rttm --hyp also_missing.rttm") == 1);
  // Unknown subcommand: validation.
  CHECK(run_cmd("frobnicate") == 2);
}
