// Acceptance suite: runs every corpus-independent criterion at its stated
// tolerance and prints one PASS/FAIL line each. The Table 1 reproduction is
// conditional on DIHARD2_DEV_DIR pointing at the dev RTTMs (plus a UEM for
// durations) and reports SKIP when the data is absent.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "diar/clustering.hpp"
#include "diar/io.hpp"
#include "diar/metadata.hpp"
#include "diar/metrics.hpp"
#include "diar/pipeline.hpp"
#include "diar/reseg.hpp"
#include "diar/rng.hpp"
#include "diar/scoring.hpp"
#include "diar/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace diar;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool ok,
            const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << "criterion " << criterion << ": "
            << name << " — " << detail << "\n";
  if (!ok) ++failures;
}

void report_skip(int criterion, const std::string& name, const std::string& why) {
  std::cout << "[SKIP] criterion " << criterion << ": " << name << " — " << why
            << "\n";
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

SpeakerTurn turn(const std::string& spk, Millis onset, Millis end) {
  SpeakerTurn t;
  t.onset = onset;
  t.duration = end - onset;
  t.speaker_id = spk;
  return t;
}

Annotation random_annotation(Rng& rng, int max_speakers, Millis horizon,
                             const std::string& prefix) {
  std::vector<SpeakerTurn> turns;
  int n = static_cast<int>(rng.uniform_int(1, 12));
  for (int i = 0; i < n; ++i) {
    Millis onset = rng.uniform_int(0, horizon - 1000);
    Millis dur = std::min<Millis>(rng.uniform_int(100, horizon / 4), horizon - onset);
    turns.push_back(turn(prefix + std::to_string(rng.uniform_int(1, max_speakers)),
                         onset, onset + dur));
  }
  return Annotation::from_turns("rec", turns, horizon);
}

// --- criterion 1 -----------------------------------------------------------

void criterion_metadata_formulas() {
  auto start = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Annotation ann = random_annotation(rng, 6, 60000, "S");
    IntervalList all;
    for (const SpeakerTurn& t : ann.turns()) all.push_back({t.onset, t.end()});
    double grid_union = static_cast<double>(oracle::grid_union_length(all));
    double speech_expected = 100.0 * grid_union / static_cast<double>(ann.total_duration());
    double speech_got = speech_percentage(ann);
    worst = std::max(worst, std::abs(speech_got - speech_expected) /
                                std::max(1e-300, std::abs(speech_expected)));

    double spk_time = static_cast<double>(ann.total_speaker_time());
    double overlap_expected = 100.0 * (spk_time - grid_union) / spk_time;
    double overlap_got = overlapped_error(ann);
    double denom = std::max(1e-12, std::abs(overlap_expected));
    if (overlap_expected == 0.0) {
      worst = std::max(worst, std::abs(overlap_got));
    } else {
      worst = std::max(worst, std::abs(overlap_got - overlap_expected) / denom);
    }
  }
  double secs = elapsed_s(start);
  bool ok = worst < 1e-9 && secs < 10.0;
  std::ostringstream detail;
  detail << "1000 annotations, worst relative error " << worst << ", " << secs
         << " s";
  report(1, "metadata formulas vs 1 ms rasterization", ok, detail.str());
}

// --- criterion 2 -----------------------------------------------------------

void criterion_table1() {
  const char* dir = std::getenv("DIHARD2_DEV_DIR");
  if (dir == nullptr || !fs::exists(dir)) {
    report_skip(2, "Table 1 reproduction (ALL row 76.07 / 10.76)",
                "DIHARD2_DEV_DIR not set or missing; place the dev RTTMs "
                "(and a UEM for durations) there to enable");
    return;
  }
  std::map<std::string, Annotation> anns;
  std::map<std::string, std::string> domains;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() == ".rttm")
      for (auto& [rec, ann] : parse_rttm_file(e.path().string()))
        anns.emplace(rec, std::move(ann));
  }
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() == ".uem") {
      for (auto& [rec, regions] : parse_uem_file(e.path().string())) {
        auto it = anns.find(rec);
        if (it != anns.end() && !regions.empty())
          it->second.extend_total_duration(regions.back().end);
      }
    }
  }
  if (anns.empty()) {
    report_skip(2, "Table 1 reproduction", "no RTTMs under DIHARD2_DEV_DIR");
    return;
  }
  for (const auto& [rec, ann] : anns) domains[rec] = "all";
  DomainReport rep = domain_report(anns, domains, Aggregation::kPooled);
  bool ok = std::abs(rep.all.speech_pct - 76.07) <= 0.05 &&
            std::abs(rep.all.overlap_err - 10.76) <= 0.05;
  std::ostringstream detail;
  detail << anns.size() << " recordings, speech " << rep.all.speech_pct
         << "%, overlap " << rep.all.overlap_err << "%";
  report(2, "Table 1 reproduction (ALL row)", ok, detail.str());
}

// --- criterion 3 -----------------------------------------------------------

void criterion_der_oracle() {
  auto start = std::chrono::steady_clock::now();
  Rng rng(3003);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    Millis horizon = rng.uniform_int(10000, 120000);
    Annotation ref = random_annotation(rng, 6, horizon, "R");
    Annotation hyp = random_annotation(rng, 6, horizon, "H");
    DerBreakdown fast = der(ref, hyp);
    oracle::FrameDer slow = oracle::frame_der(ref, hyp);
    worst = std::max(worst, std::abs(fast.der - slow.der_pct));
  }
  double secs = elapsed_s(start);
  bool ok = worst <= 0.01 && secs < 30.0;
  std::ostringstream detail;
  detail << "500 pairs, worst |delta DER| " << worst << " points, " << secs << " s";
  report(3, "DER sweep vs frame-level exhaustive-mapping oracle", ok, detail.str());
}

// --- criterion 4 -----------------------------------------------------------

void criterion_plda() {
  PldaModel unit;
  unit.mean = Eigen::VectorXd::Zero(1);
  unit.between_cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
  unit.within_cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
  double got = plda_score(unit, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  double expected = -0.5 * std::log(0.75);
  bool analytic_ok = std::abs(got - expected) < 1e-10;

  Rng rng(4004);
  const int d = 5;
  Eigen::MatrixXd b_root(d, d), w_root(d, d);
  for (int i = 0; i < d * d; ++i) {
    b_root.data()[i] = rng.normal();
    w_root.data()[i] = 0.6 * rng.normal();
  }
  PldaModel model;
  model.mean = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) model.mean(i) = rng.normal();
  model.between_cov = b_root * b_root.transpose();
  model.within_cov = w_root * w_root.transpose() + 0.2 * Eigen::MatrixXd::Identity(d, d);
  PldaScorer scorer(model);

  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::MatrixXd f(d, d);
    for (int i = 0; i < d * d; ++i) f.data()[i] = 0.3 * rng.normal();
    f += Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd g(d);
    for (int i = 0; i < d; ++i) g(i) = rng.normal();
    PldaModel mapped;
    mapped.mean = f * model.mean + g;
    mapped.between_cov = f * model.between_cov * f.transpose();
    mapped.within_cov = f * model.within_cov * f.transpose();
    PldaScorer mapped_scorer(mapped);
    Eigen::VectorXd xi(d), xj(d);
    for (int i = 0; i < d; ++i) {
      xi(i) = rng.normal();
      xj(i) = rng.normal();
    }
    worst = std::max(worst, std::abs(mapped_scorer.score(f * xi + g, f * xj + g) -
                                     scorer.score(xi, xj)));
  }
  bool ok = analytic_ok && worst < 1e-8;
  std::ostringstream detail;
  detail << "analytic |err| " << std::abs(got - expected)
         << ", worst affine deviation " << worst;
  report(4, "PLDA analytic value and affine invariance", ok, detail.str());
}

// --- criterion 5 -----------------------------------------------------------

void criterion_spectral() {
  Rng rng(5005);
  int recovered = 0;
  bool eigs_ok = true;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    // Blocks of >= 6 keep the partition eigenvalues well below the default
    // threshold even when cross edges accumulate over n - m nodes; block
    // and cross similarity ranges sit inside the >= 0.8 / <= 0.2 bounds.
    int blocks = static_cast<int>(rng.uniform_int(2, 6));
    std::vector<int> sizes;
    int n = 0;
    for (int b = 0; b < blocks; ++b) {
      int size = static_cast<int>(rng.uniform_int(6, 10));
      if (n + size > 60) break;
      sizes.push_back(size);
      n += size;
    }
    if (sizes.size() < 2) {
      sizes = {6, 6};
      n = 12;
    }
    std::vector<int> truth;
    ScoreMatrix s;
    s.values.setZero(n, n);
    for (std::size_t b = 0; b < sizes.size(); ++b)
      for (int i = 0; i < sizes[b]; ++i) truth.push_back(static_cast<int>(b));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        bool same = truth[i] == truth[j];
        double v = same ? rng.uniform(0.85, 1.0) : rng.uniform(0.0, 0.05);
        s.values(i, j) = v;
        s.values(j, i) = v;
      }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        normalized_laplacian(s));
    if (eig.eigenvalues()(0) < -1e-8 || eig.eigenvalues()(n - 1) > 2.0 + 1e-8)
      eigs_ok = false;

    SpectralConfig cfg;
    cfg.rng_seed = 50000 + trial;
    ClusterAssignment a = spectral_cluster(s, cfg);
    if (a.k == static_cast<int>(sizes.size()) &&
        oracle::same_partition(a.labels, truth))
      ++recovered;
  }
  bool ok = recovered == trials && eigs_ok;
  std::ostringstream detail;
  detail << recovered << "/" << trials << " planted partitions recovered, "
         << "Laplacian spectrum within [-1e-8, 2+1e-8]: "
         << (eigs_ok ? "yes" : "no");
  report(5, "spectral clustering planted-partition recovery", ok, detail.str());
}

// --- criterion 6 -----------------------------------------------------------

void criterion_ahc() {
  Rng rng(6006);
  int agree = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    int n = static_cast<int>(rng.uniform_int(2, 12));
    ScoreMatrix s;
    s.values.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double v = rng.uniform01();
        s.values(i, j) = v;
        s.values(j, i) = v;
      }
    double threshold = rng.uniform01();
    if (ahc(s, threshold).labels == oracle::brute_force_ahc(s.values, threshold))
      ++agree;
  }
  report(6, "AHC vs brute-force reference", agree == trials,
         std::to_string(agree) + "/" + std::to_string(trials) + " exact matches");
}

// --- criterion 7 -----------------------------------------------------------

void criterion_gmm_reseg() {
  Rng rng(7007);
  int good = 0;
  const int trials = 50;
  bool monotone = true;
  for (int trial = 0; trial < trials; ++trial) {
    int n_speakers = 2 + static_cast<int>(rng.uniform_int(0, 2));
    const int t = 3000, d = 4;
    FrameFeatures feats;
    feats.recording_id = "rec";
    feats.frame_step = 10;
    feats.frames.resize(t, d);
    std::vector<int> truth(t);
    Eigen::MatrixXd centers(n_speakers, d);
    for (int s = 0; s < n_speakers; ++s)
      for (int j = 0; j < d; ++j) centers(s, j) = 6.0 * rng.normal();
    int i = 0, spk = 0;
    while (i < t) {
      int run = static_cast<int>(rng.uniform_int(80, 260));
      for (int k = 0; k < run && i < t; ++k, ++i) {
        truth[i] = spk;
        for (int j = 0; j < d; ++j)
          feats.frames(i, j) = centers(spk, j) + 0.5 * rng.normal();
      }
      spk = (spk + 1) % n_speakers;
    }

    // 5% boundary corruption.
    FrameAssignment init;
    init.labels = truth;
    int budget = t / 20;
    for (int f = 1; f < t && budget > 0; ++f) {
      if (truth[f] != truth[f - 1]) {
        for (int k = std::max(0, f - 5); k < std::min(t, f + 5) && budget > 0; ++k) {
          init.labels[k] = (truth[k] + 1) % n_speakers;
          --budget;
        }
      }
    }

    std::vector<int> mask(t, 1);
    GmmResegConfig cfg;
    cfg.rng_seed = 70000 + trial;
    try {
      FrameAssignment refined = gmm_resegment(feats, init, mask, cfg);
      std::size_t equal = 0;
      for (int f = 0; f < t; ++f) equal += refined.labels[f] == truth[f];
      if (static_cast<double>(equal) / t >= 0.99) ++good;
    } catch (const std::exception&) {
      monotone = false;  // fit_gmm aborts the run on a non-monotone EM step
    }
  }
  bool ok = good >= static_cast<int>(0.95 * trials) && monotone;
  std::ostringstream detail;
  detail << good << "/" << trials
         << " trials at >= 99% frame accuracy (need >= 47); EM monotone: "
         << (monotone ? "yes" : "no");
  report(7, "GMM resegmentation under 5% boundary corruption", ok, detail.str());
}

// --- criterion 8 -----------------------------------------------------------

void criterion_vb() {
  Rng rng(8008);
  int good = 0;
  const int trials = 50;
  bool rows_ok = true, elbo_ok = true;
  for (int trial = 0; trial < trials; ++trial) {
    const int c = 4, d = 6, r = 3, t = 1500;
    VbModel model;
    model.ubm.weights = Eigen::VectorXd::Constant(c, 1.0 / c);
    model.ubm.means.resize(c, d);
    model.ubm.covariances = Eigen::MatrixXd::Constant(c, d, 0.25);
    for (int k = 0; k < c; ++k)
      for (int j = 0; j < d; ++j) model.ubm.means(k, j) = 4.0 * rng.normal();
    model.tmat.resize(c * d, r);
    for (Eigen::Index i = 0; i < model.tmat.size(); ++i)
      model.tmat.data()[i] = 0.4 * rng.normal();

    Eigen::MatrixXd z(2, r);
    Eigen::VectorXd v(r);
    for (int j = 0; j < r; ++j) v(j) = rng.normal();
    v *= 2.0 / v.norm();
    z.row(0) = v;
    z.row(1) = -v;

    FrameFeatures feats;
    feats.recording_id = "rec";
    feats.frame_step = 10;
    feats.frames.resize(t, d);
    std::vector<int> truth(t);
    int spk = 0;
    for (int i = 0; i < t; ++i) {
      if (i > 0 && rng.uniform01() > 0.99) spk = 1 - spk;
      truth[i] = spk;
      int comp = static_cast<int>(rng.uniform_int(0, c - 1));
      Eigen::VectorXd mean =
          model.ubm.means.row(comp).transpose() +
          model.tmat.middleRows(static_cast<Eigen::Index>(comp) * d, d) *
              z.row(spk).transpose();
      for (int j = 0; j < d; ++j) feats.frames(i, j) = mean(j) + 0.5 * rng.normal();
    }

    FrameAssignment init;
    init.labels = truth;
    for (int i = 0; i < t; ++i)
      if (rng.uniform01() < 0.2) init.labels[i] = 1 - init.labels[i];

    VbConfig cfg;
    cfg.max_iters = 5;
    VbResult result = vb_resegment(feats, init, model, cfg);

    for (int i = 0; i < t; ++i)
      if (std::abs(result.assignment.posteriors->row(i).sum() - 1.0) > 1e-8)
        rows_ok = false;
    for (std::size_t i = 1; i < result.elbo_trace.size(); ++i)
      if (result.elbo_trace[i] <
          result.elbo_trace[i - 1] - 1e-8 * (1.0 + std::abs(result.elbo_trace[i - 1])))
        elbo_ok = false;

    std::size_t equal = 0, swapped = 0;
    for (int i = 0; i < t; ++i) {
      equal += result.assignment.labels[i] == truth[i];
      swapped += result.assignment.labels[i] == 1 - truth[i];
    }
    if (static_cast<double>(std::max(equal, swapped)) / t >= 0.98) ++good;
  }
  bool ok = good == trials && rows_ok && elbo_ok;
  std::ostringstream detail;
  detail << good << "/" << trials << " trials at >= 98% accuracy; rows sum to 1: "
         << (rows_ok ? "yes" : "no") << "; ELBO non-decreasing: "
         << (elbo_ok ? "yes" : "no");
  report(8, "VB resegmentation on model-generated data", ok, detail.str());
}

// --- criterion 9 -----------------------------------------------------------

void criterion_end_to_end() {
  fs::path dir = fs::temp_directory_path() / "diar_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir / "corpus");

  CorpusProfile profile;
  profile.n_recordings = 4;
  profile.min_duration_s = 45;
  profile.max_duration_s = 90;
  profile.min_speakers = 2;
  profile.max_speakers = 2;
  profile.target_speech_pct = 80.0;
  profile.target_overlap_pct = 0.0;
  profile.embedding_dim = 8;
  profile.between_spread = 3.0;
  profile.within_spread = 0.3;
  profile.rng_seed = 909;
  SynthCorpus corpus = generate_corpus(profile);

  PipelineConfig cfg;
  cfg.output_dir = (dir / "out_a").string();
  cfg.seed = 11;
  for (const SynthRecording& r : corpus.recordings) {
    const std::string rec = r.reference.recording_id();
    std::ostringstream emb, feat, vad, ref;
    emit_embeddings(r.embeddings, emb);
    emit_features(r.features, feat);
    emit_region_triples(rec, r.reference.speech_union(), vad);
    emit_rttm(r.reference, ref);
    fs::path base = dir / "corpus";
    write_text_file((base / (rec + ".emb")).string(), emb.str());
    write_text_file((base / (rec + ".feats")).string(), feat.str());
    write_text_file((base / (rec + ".vad")).string(), vad.str());
    write_text_file((base / (rec + ".rttm")).string(), ref.str());
    RecordingEntry e;
    e.recording_id = rec;
    e.embeddings = (base / (rec + ".emb")).string();
    e.features = (base / (rec + ".feats")).string();
    e.speech_regions = (base / (rec + ".vad")).string();
    e.reference = (base / (rec + ".rttm")).string();
    cfg.manifest.push_back(std::move(e));
  }

  PipelineResult first = run_pipeline(cfg);
  cfg.output_dir = (dir / "out_b").string();
  PipelineResult second = run_pipeline(cfg);

  bool identical = true;
  for (std::size_t i = 0; i < first.recordings.size(); ++i) {
    if (read_text_file(first.recordings[i].final_rttm_path) !=
        read_text_file(second.recordings[i].final_rttm_path))
      identical = false;
  }
  double der_pct = first.pooled_der ? first.pooled_der->der : 100.0;
  bool ok = identical && der_pct < 5.0;
  std::ostringstream detail;
  detail << "byte-identical RTTMs: " << (identical ? "yes" : "no")
         << "; end-to-end DER " << der_pct << "%";
  report(9, "pipeline determinism and clean-corpus DER", ok, detail.str());
}

// --- criterion 10 ----------------------------------------------------------

void criterion_ingest_round_trips() {
  Rng rng(1010);
  int failures_here = 0;
  int cases = 0;

  // 400 annotations, 200 embedding sets, 200 score matrices, 100 feature
  // blocks, 100 region lists: 1000 round trips.
  for (int trial = 0; trial < 400; ++trial, ++cases) {
    // RTTM carries no recording duration, so the canonical form after a
    // round trip has total_duration = max turn end.
    Annotation ann = random_annotation(rng, 5, 60000, "S");
    if (ann.empty()) continue;
    Annotation canonical = Annotation::from_turns("rec", ann.turns());
    std::istringstream in(rttm_to_string(ann));
    auto parsed = parse_rttm(in);
    if (parsed.size() != 1 || !(parsed.at("rec") == canonical)) ++failures_here;
  }
  for (int trial = 0; trial < 200; ++trial, ++cases) {
    int n = static_cast<int>(rng.uniform_int(1, 25));
    int d = static_cast<int>(rng.uniform_int(1, 12));
    EmbeddingSet set;
    set.recording_id = "rec";
    set.segments.resize(n);
    set.vectors.resize(n, d);
    Millis t0 = 0;
    for (int i = 0; i < n; ++i) {
      set.segments[i] = {t0, t0 + rng.uniform_int(1, 3000), std::nullopt};
      t0 += rng.uniform_int(1, 900);
      for (int j = 0; j < d; ++j) set.vectors(i, j) = rng.normal() * 100;
    }
    std::ostringstream out;
    emit_embeddings(set, out);
    std::istringstream in(out.str());
    EmbeddingSet back = parse_embeddings(in, "rec");
    if (!(back.segments == set.segments) || back.vectors != set.vectors)
      ++failures_here;
  }
  for (int trial = 0; trial < 200; ++trial, ++cases) {
    int n = static_cast<int>(rng.uniform_int(1, 15));
    ScoreMatrix m;
    m.values.resize(n, n);
    for (int i = 0; i < n * n; ++i) m.values.data()[i] = rng.normal() * 10;
    std::ostringstream out;
    emit_score_matrix(m, out);
    std::istringstream in(out.str());
    if (parse_score_matrix(in).values != m.values) ++failures_here;
  }
  for (int trial = 0; trial < 100; ++trial, ++cases) {
    int t = static_cast<int>(rng.uniform_int(1, 40));
    int d = static_cast<int>(rng.uniform_int(1, 10));
    FrameFeatures f;
    f.recording_id = "rec";
    f.frame_step = 10;
    f.frame_length = 25;
    f.frames.resize(t, d);
    for (int i = 0; i < t * d; ++i) f.frames.data()[i] = rng.normal();
    std::ostringstream out;
    emit_features(f, out);
    std::istringstream in(out.str());
    FrameFeatures back = parse_features(in, "rec");
    if (back.frames != f.frames || back.frame_step != f.frame_step) ++failures_here;
  }
  for (int trial = 0; trial < 100; ++trial, ++cases) {
    IntervalList xs;
    int n = static_cast<int>(rng.uniform_int(1, 10));
    for (int i = 0; i < n; ++i) {
      Millis a = rng.uniform_int(0, 50000);
      xs.push_back({a, a + rng.uniform_int(1, 5000)});
    }
    xs = interval_union(std::move(xs));
    std::ostringstream out;
    emit_region_triples("rec", xs, out);
    std::istringstream in(out.str());
    auto back = parse_region_triples(in);
    if (!(back.at("rec") == xs)) ++failures_here;
  }

  bool ok = failures_here == 0 && cases >= 1000;
  std::ostringstream detail;
  detail << cases << " randomized round trips, " << failures_here << " failures";
  report(10, "ingest parse/emit identities", ok, detail.str());
}

}  // namespace

int main() {
  criterion_metadata_formulas();
  criterion_table1();
  criterion_der_oracle();
  criterion_plda();
  criterion_spectral();
  criterion_ahc();
  criterion_gmm_reseg();
  criterion_vb();
  criterion_end_to_end();
  criterion_ingest_round_trips();

  if (failures == 0) {
    std::cout << "acceptance: all runnable criteria passed\n";
    return 0;
  }
  std::cout << "acceptance: " << failures << " criteria FAILED\n";
  return 1;
}
