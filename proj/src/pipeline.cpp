#include "diar/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace diar {

namespace {

json canonical_config_json(const PipelineConfig& c) {
  json j;
  j["stages"] = {{"segment", c.stages.segment}, {"score", c.stages.score},
                 {"cluster", c.stages.cluster}, {"resegment", c.stages.resegment},
                 {"overlap", c.stages.overlap}, {"der", c.stages.der}};
  j["segmenter"] = {{"window", c.segmenter.window},
                    {"step", c.segmenter.step},
                    {"central_fraction", c.segmenter.central_fraction}};
  j["scoring"] = {{"backend", c.score_backend},
                  {"plda_model", c.plda_model_path},
                  {"whitener", c.whitener_path},
                  {"length_normalize", c.length_normalize}};
  j["clustering"] = {{"backend", c.cluster_backend},
                     {"ahc_threshold", c.ahc_threshold},
                     {"eig_threshold", c.spectral.eig_threshold},
                     {"kmeans_restarts", c.spectral.kmeans_restarts},
                     {"kmeans_max_iters", c.spectral.kmeans_max_iters},
                     {"row_normalize", c.spectral.row_normalize}};
  j["reseg"] = {{"method", c.reseg_method},
                {"gmm_components", c.gmm.n_components},
                {"max_turns", c.gmm.max_turns},
                {"ubm", c.ubm_path},
                {"tmat", c.tmat_path},
                {"vb_max_iters", c.vb.max_iters},
                {"vb_downsample", c.vb.downsample},
                {"vb_loop_prob", c.vb.loop_prob},
                {"vb_stat_scale", c.vb.stat_scale}};
  j["overlap_frame_step"] = c.overlap_frame_step;
  j["uem"] = c.uem_path;
  j["seed"] = c.seed;
  json manifest = json::array();
  for (const RecordingEntry& e : c.manifest) {
    manifest.push_back({{"recording_id", e.recording_id},
                        {"domain", e.domain},
                        {"embeddings", e.embeddings},
                        {"features", e.features},
                        {"speech_regions", e.speech_regions},
                        {"overlaps", e.overlaps},
                        {"reference", e.reference},
                        {"hypothesis", e.hypothesis},
                        {"scores", e.scores},
                        {"segments", e.segments},
                        {"external_scores", e.external_scores}});
  }
  j["manifest"] = manifest;
  return j;
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(now - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void require_file(const std::string& path, const std::string& rec,
                  const std::string& stage) {
  if (path.empty())
    throw ValidationError("recording '" + rec + "': stage '" + stage +
                          "' needs an input that the manifest does not provide");
  if (!fs::exists(path))
    throw ValidationError("recording '" + rec + "': stage '" + stage +
                          "' input missing: " + path);
}

}  // namespace

std::uint64_t PipelineConfig::config_hash() const {
  return fnv1a64(canonical_config_json(*this).dump());
}

PipelineConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }

  PipelineConfig c;
  if (j.contains("stages")) {
    const json& s = j["stages"];
    c.stages.segment = s.value("segment", c.stages.segment);
    c.stages.score = s.value("score", c.stages.score);
    c.stages.cluster = s.value("cluster", c.stages.cluster);
    c.stages.resegment = s.value("resegment", c.stages.resegment);
    c.stages.overlap = s.value("overlap", c.stages.overlap);
    c.stages.der = s.value("der", c.stages.der);
  }
  if (j.contains("segmenter")) {
    const json& s = j["segmenter"];
    if (s.contains("window_s")) c.segmenter.window = ms_from_seconds(s["window_s"].get<double>());
    if (s.contains("step_s")) c.segmenter.step = ms_from_seconds(s["step_s"].get<double>());
    c.segmenter.central_fraction = s.value("central_fraction", c.segmenter.central_fraction);
  }
  if (j.contains("scoring")) {
    const json& s = j["scoring"];
    c.score_backend = s.value("backend", c.score_backend);
    c.plda_model_path = s.value("plda_model", c.plda_model_path);
    c.whitener_path = s.value("whitener", c.whitener_path);
    c.length_normalize = s.value("length_normalize", c.length_normalize);
  }
  if (j.contains("clustering")) {
    const json& s = j["clustering"];
    c.cluster_backend = s.value("backend", c.cluster_backend);
    c.ahc_threshold = s.value("ahc_threshold", c.ahc_threshold);
    c.spectral.eig_threshold = s.value("eig_threshold", c.spectral.eig_threshold);
    c.spectral.kmeans_restarts = s.value("kmeans_restarts", c.spectral.kmeans_restarts);
    c.spectral.kmeans_max_iters = s.value("kmeans_max_iters", c.spectral.kmeans_max_iters);
    c.spectral.row_normalize = s.value("row_normalize", c.spectral.row_normalize);
  }
  if (j.contains("reseg")) {
    const json& s = j["reseg"];
    c.reseg_method = s.value("method", c.reseg_method);
    c.gmm.n_components = s.value("gmm_components", c.gmm.n_components);
    c.gmm.max_turns = s.value("max_turns", c.gmm.max_turns);
    c.ubm_path = s.value("ubm", c.ubm_path);
    c.tmat_path = s.value("tmat", c.tmat_path);
    c.vb.max_iters = s.value("vb_max_iters", c.vb.max_iters);
    c.vb.downsample = s.value("vb_downsample", c.vb.downsample);
    c.vb.loop_prob = s.value("vb_loop_prob", c.vb.loop_prob);
    c.vb.stat_scale = s.value("vb_stat_scale", c.vb.stat_scale);
  }
  if (j.contains("overlap_frame_step_s"))
    c.overlap_frame_step = ms_from_seconds(j["overlap_frame_step_s"].get<double>());
  c.uem_path = j.value("uem", c.uem_path);
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.jobs = j.value("jobs", c.jobs);

  if (!j.contains("manifest"))
    throw ValidationError(path + ": config needs a manifest");
  fs::path base = fs::path(path).parent_path();
  auto resolve = [&](std::string p) -> std::string {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (base / p).string();
  };
  auto parse_entry = [&](const json& e) {
    RecordingEntry r;
    r.recording_id = e.at("recording_id").get<std::string>();
    r.domain = e.value("domain", r.domain);
    r.embeddings = resolve(e.value("embeddings", ""));
    r.features = resolve(e.value("features", ""));
    r.speech_regions = resolve(e.value("speech_regions", ""));
    r.overlaps = resolve(e.value("overlaps", ""));
    r.reference = resolve(e.value("reference", ""));
    r.hypothesis = resolve(e.value("hypothesis", ""));
    r.scores = resolve(e.value("scores", ""));
    r.segments = resolve(e.value("segments", ""));
    if (e.contains("external_scores"))
      for (const auto& p : e["external_scores"])
        r.external_scores.push_back(resolve(p.get<std::string>()));
    return r;
  };
  if (j["manifest"].is_string()) {
    // JSON-lines manifest: one object per recording per line.
    std::string mpath = resolve(j["manifest"].get<std::string>());
    std::ifstream min(mpath);
    if (!min) throw ValidationError("cannot open manifest '" + mpath + "'");
    fs::path mbase = fs::path(mpath).parent_path();
    base = mbase;
    std::string line;
    int lineno = 0;
    while (std::getline(min, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        c.manifest.push_back(parse_entry(json::parse(line)));
      } catch (const json::exception& e) {
        throw ValidationError(mpath + " line " + std::to_string(lineno) + ": " +
                              e.what());
      }
    }
  } else {
    for (const auto& e : j["manifest"]) c.manifest.push_back(parse_entry(e));
  }
  // Model paths resolve against the config location too.
  base = fs::path(path).parent_path();
  c.plda_model_path = resolve(c.plda_model_path);
  c.whitener_path = resolve(c.whitener_path);
  c.ubm_path = resolve(c.ubm_path);
  c.tmat_path = resolve(c.tmat_path);
  c.uem_path = resolve(c.uem_path);
  return c;
}

// --------------------------------------------------------------------------
// Execution
// --------------------------------------------------------------------------

namespace {

struct StageIo {
  const PipelineConfig& cfg;
  const RecordingEntry& entry;
  fs::path rec_dir;

  std::string artifact(const std::string& name) const {
    return (rec_dir / name).string();
  }
};

// Speech regions for segmentation: VAD-style triples when provided,
// otherwise the reference union (oracle condition).
IntervalList load_speech_regions(const StageIo& io) {
  if (!io.entry.speech_regions.empty()) {
    auto all = parse_region_triples_file(io.entry.speech_regions);
    auto it = all.find(io.entry.recording_id);
    if (it == all.end())
      throw ValidationError("recording '" + io.entry.recording_id +
                            "' absent from " + io.entry.speech_regions);
    return it->second;
  }
  auto refs = parse_rttm_file(io.entry.reference);
  auto it = refs.find(io.entry.recording_id);
  if (it == refs.end())
    throw ValidationError("recording '" + io.entry.recording_id +
                          "' absent from " + io.entry.reference);
  return it->second.speech_union();
}

Annotation load_reference(const RecordingEntry& entry) {
  auto refs = parse_rttm_file(entry.reference);
  auto it = refs.find(entry.recording_id);
  if (it == refs.end())
    throw ValidationError("recording '" + entry.recording_id + "' absent from " +
                          entry.reference);
  return it->second;
}

RecordingResult run_recording(const PipelineConfig& cfg, const RecordingEntry& entry,
                              const std::optional<IntervalList>& uem) {
  RecordingResult result;
  result.recording_id = entry.recording_id;
  StageIo io{cfg, entry, fs::path(cfg.output_dir) / entry.recording_id};
  fs::create_directories(io.rec_dir);

  std::vector<Segment> segments;
  bool have_segments = false;
  ScoreMatrix scores;
  bool have_scores = false;
  std::optional<Annotation> hyp;
  IntervalList speech_regions;
  bool have_regions = false;

  auto ensure_regions = [&]() {
    if (!have_regions) {
      speech_regions = load_speech_regions(io);
      have_regions = true;
    }
  };

  if (cfg.stages.segment) {
    Timer timer;
    ensure_regions();
    segments = uniform_segment(speech_regions, cfg.segmenter);
    have_segments = true;
    std::ostringstream out;
    emit_segments(entry.recording_id, segments, out);
    write_text_file(io.artifact("segments.txt"), out.str());
    result.timings.push_back({"segment", timer.elapsed_ms()});
  } else if (!entry.segments.empty()) {
    auto all = parse_segments_file(entry.segments);
    auto it = all.find(entry.recording_id);
    if (it != all.end()) {
      segments = it->second;
      have_segments = true;
    }
  }

  if (cfg.stages.score) {
    Timer timer;
    std::vector<ScoreMatrix> parts;
    if (!entry.embeddings.empty()) {
      EmbeddingSet set = parse_embeddings_file(entry.embeddings, entry.recording_id);
      if (!have_segments) {
        segments = set.segments;
        have_segments = true;
      }
      if (cfg.score_backend == "plda") {
        PldaModel model = read_plda_model(cfg.plda_model_path);
        if (!cfg.whitener_path.empty()) {
          Whitener w = read_whitener(cfg.whitener_path);
          set.vectors = apply_whitener(w, set.vectors, cfg.length_normalize);
        }
        parts.push_back(build_score_matrix(set, ScoreBackend::kPlda, &model));
      } else if (cfg.score_backend == "cosine") {
        parts.push_back(build_score_matrix(set, ScoreBackend::kCosine));
      } else {
        throw ValidationError("unknown score backend '" + cfg.score_backend + "'");
      }
    }
    for (const std::string& p : entry.external_scores)
      parts.push_back(symmetrize(parse_score_matrix_file(p)));
    if (parts.empty())
      throw ValidationError("recording '" + entry.recording_id +
                            "': score stage has no inputs");
    scores = parts.size() == 1 ? parts[0] : fuse_score_matrices(parts);
    have_scores = true;
    std::ostringstream out;
    emit_score_matrix(scores, out);
    write_text_file(io.artifact("scores.txt"), out.str());
    result.timings.push_back({"score", timer.elapsed_ms()});
  } else if (!entry.scores.empty()) {
    scores = parse_score_matrix_file(entry.scores);
    have_scores = true;
  }

  if (cfg.stages.cluster) {
    Timer timer;
    if (!have_scores || !have_segments)
      throw ValidationError("recording '" + entry.recording_id +
                            "': cluster stage needs segments and scores");
    if (scores.size() != static_cast<int>(segments.size()))
      throw ValidationError("recording '" + entry.recording_id +
                            "': score matrix size does not match segment count");
    ClusterAssignment assignment;
    if (cfg.cluster_backend == "ahc") {
      assignment = ahc(symmetrize(scores), cfg.ahc_threshold);
    } else if (cfg.cluster_backend == "spectral") {
      SpectralConfig sc = cfg.spectral;
      sc.rng_seed = cfg.seed ^ fnv1a64(entry.recording_id);
      assignment = spectral_cluster(symmetrize(scores), sc);
    } else {
      throw ValidationError("unknown cluster backend '" + cfg.cluster_backend + "'");
    }
    std::vector<Segment> labeled = segments;
    for (std::size_t i = 0; i < labeled.size(); ++i)
      labeled[i].label = "spk" + std::to_string(assignment.labels[i]);
    hyp = segments_to_annotation(entry.recording_id, labeled);
    write_text_file(io.artifact("cluster.rttm"), rttm_to_string(*hyp));
    result.timings.push_back({"cluster", timer.elapsed_ms()});
  } else if (!entry.hypothesis.empty() &&
             (cfg.stages.resegment || cfg.stages.overlap || cfg.stages.der)) {
    auto hyps = parse_rttm_file(entry.hypothesis);
    auto it = hyps.find(entry.recording_id);
    if (it == hyps.end())
      throw ValidationError("recording '" + entry.recording_id + "' absent from " +
                            entry.hypothesis);
    hyp = it->second;
  }

  if (cfg.stages.resegment && cfg.reseg_method != "none") {
    Timer timer;
    if (!hyp)
      throw ValidationError("recording '" + entry.recording_id +
                            "': resegment stage needs a clustering hypothesis");
    FrameFeatures feats = parse_features_file(entry.features, entry.recording_id);
    ensure_regions();
    const int t = feats.num_frames();
    std::vector<int> mask = speech_mask_from_regions(speech_regions,
                                                     feats.frame_step, t);
    FrameAssignment init =
        frames_from_annotation(*hyp, speech_regions, feats.frame_step, t);
    std::vector<std::string> names = hyp->speakers();
    FrameAssignment refined;
    if (cfg.reseg_method == "gmm") {
      GmmResegConfig gc = cfg.gmm;
      gc.rng_seed = cfg.seed ^ fnv1a64(entry.recording_id);
      refined = gmm_resegment(feats, init, mask, gc);
    } else if (cfg.reseg_method == "vb") {
      VbModel model = read_vb_model(cfg.ubm_path, cfg.tmat_path);
      refined = vb_resegment(feats, init, model, cfg.vb).assignment;
    } else {
      throw ValidationError("unknown reseg method '" + cfg.reseg_method + "'");
    }
    hyp = annotation_from_frames(entry.recording_id, refined, feats.frame_step,
                                 names, std::nullopt);
    write_text_file(io.artifact("reseg.rttm"), rttm_to_string(*hyp));
    result.timings.push_back({"resegment", timer.elapsed_ms()});
  }

  if (cfg.stages.overlap) {
    Timer timer;
    if (!hyp)
      throw ValidationError("recording '" + entry.recording_id +
                            "': overlap stage needs a hypothesis");
    auto all = parse_region_triples_file(entry.overlaps);
    auto it = all.find(entry.recording_id);
    IntervalList regions = it == all.end() ? IntervalList{} : it->second;
    hyp = assign_overlap_labels(*hyp, regions, cfg.overlap_frame_step);
    write_text_file(io.artifact("overlap.rttm"), rttm_to_string(*hyp));
    result.timings.push_back({"overlap", timer.elapsed_ms()});
  }

  if (hyp) {
    result.final_rttm_path = io.artifact("final.rttm");
    write_text_file(result.final_rttm_path, rttm_to_string(*hyp));
  }

  if (cfg.stages.der) {
    Timer timer;
    if (!hyp)
      throw ValidationError("recording '" + entry.recording_id +
                            "': der stage needs a hypothesis");
    Annotation ref = load_reference(entry);
    std::optional<IntervalList> rec_uem = uem;
    result.der = der(ref, *hyp, rec_uem);
    result.timings.push_back({"der", timer.elapsed_ms()});
  }
  return result;
}

void preflight(const PipelineConfig& cfg) {
  if (cfg.manifest.empty()) throw ValidationError("manifest has no recordings");
  if (cfg.score_backend == "plda" && cfg.stages.score)
    require_file(cfg.plda_model_path, "*", "score (plda model)");
  if (cfg.stages.resegment && cfg.reseg_method == "vb") {
    require_file(cfg.ubm_path, "*", "resegment (ubm)");
    require_file(cfg.tmat_path, "*", "resegment (tmat)");
  }
  for (const RecordingEntry& e : cfg.manifest) {
    if (e.recording_id.empty()) throw ValidationError("manifest entry without recording_id");
    if (cfg.stages.segment || cfg.stages.resegment) {
      if (!e.speech_regions.empty())
        require_file(e.speech_regions, e.recording_id, "segment");
      else
        require_file(e.reference, e.recording_id, "segment (oracle regions)");
    }
    if (cfg.stages.score && e.external_scores.empty())
      require_file(e.embeddings, e.recording_id, "score");
    for (const std::string& p : e.external_scores)
      require_file(p, e.recording_id, "score (external)");
    if (!cfg.stages.score && cfg.stages.cluster)
      require_file(e.scores, e.recording_id, "cluster (precomputed scores)");
    if (!cfg.stages.segment && cfg.stages.cluster && e.embeddings.empty())
      require_file(e.segments, e.recording_id, "cluster (precomputed segments)");
    if (!cfg.stages.cluster &&
        (cfg.stages.resegment || cfg.stages.overlap || cfg.stages.der))
      require_file(e.hypothesis, e.recording_id, "hypothesis input");
    if (cfg.stages.resegment)
      require_file(e.features, e.recording_id, "resegment (features)");
    if (cfg.stages.overlap)
      require_file(e.overlaps, e.recording_id, "overlap-assign");
    if (cfg.stages.der)
      require_file(e.reference, e.recording_id, "der (reference)");
  }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  preflight(cfg);
  fs::create_directories(cfg.output_dir);

  std::optional<std::map<std::string, IntervalList>> uem_map;
  if (!cfg.uem_path.empty()) uem_map = parse_uem_file(cfg.uem_path);

  PipelineResult result;
  result.config_hash = cfg.config_hash();
  result.recordings.resize(cfg.manifest.size());

  const int jobs = std::max(1, cfg.jobs);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(cfg.manifest.size());
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= cfg.manifest.size()) break;
      try {
        std::optional<IntervalList> uem;
        if (uem_map) {
          auto it = uem_map->find(cfg.manifest[i].recording_id);
          if (it != uem_map->end()) uem = it->second;
        }
        result.recordings[i] = run_recording(cfg, cfg.manifest[i], uem);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  if (cfg.stages.der) {
    DerBreakdown pooled;
    for (const RecordingResult& r : result.recordings)
      if (r.der) pooled.add(*r.der);
    pooled.finalize();
    result.pooled_der = pooled;
  }

  // Metadata table over the references, when every recording has one.
  bool have_refs = true;
  for (const RecordingEntry& e : cfg.manifest)
    if (e.reference.empty() || !fs::exists(e.reference)) have_refs = false;
  if (have_refs) {
    std::map<std::string, Annotation> refs;
    std::map<std::string, std::string> domains;
    for (const RecordingEntry& e : cfg.manifest) {
      refs.emplace(e.recording_id, load_reference(e));
      domains[e.recording_id] = e.domain;
    }
    result.metadata = domain_report(refs, domains);
  }

  write_report_json(result, cfg, (fs::path(cfg.output_dir) / "report.json").string());
  return result;
}

void write_report_json(const PipelineResult& result, const PipelineConfig& cfg,
                       const std::string& path) {
  json j;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(result.config_hash));
  j["config_hash"] = hash;
  json recs = json::array();
  for (const RecordingResult& r : result.recordings) {
    json e;
    e["recording_id"] = r.recording_id;
    json times = json::object();
    for (const StageTiming& t : r.timings) times[t.stage] = t.wall_ms;
    e["stage_wall_ms"] = times;
    if (!r.final_rttm_path.empty()) e["final_rttm"] = r.final_rttm_path;
    if (r.der) {
      e["der"] = {{"missed_s", seconds_from_ms(r.der->missed)},
                  {"false_alarm_s", seconds_from_ms(r.der->false_alarm)},
                  {"confusion_s", seconds_from_ms(r.der->confusion)},
                  {"scored_speech_s", seconds_from_ms(r.der->scored_speech)},
                  {"der_pct", r.der->der}};
    }
    recs.push_back(std::move(e));
  }
  j["recordings"] = recs;
  if (result.pooled_der) {
    j["pooled_der"] = {{"missed_s", seconds_from_ms(result.pooled_der->missed)},
                       {"false_alarm_s", seconds_from_ms(result.pooled_der->false_alarm)},
                       {"confusion_s", seconds_from_ms(result.pooled_der->confusion)},
                       {"scored_speech_s", seconds_from_ms(result.pooled_der->scored_speech)},
                       {"der_pct", result.pooled_der->der}};
  }
  if (result.metadata) j["metadata_tsv"] = render_domain_report_tsv(*result.metadata);
  (void)cfg;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace diar
