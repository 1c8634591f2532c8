// diarkit: batch speaker-diarization backend over annotation files and
// precomputed embeddings/features. Subcommands mirror the pipeline stages;
// `run` chains them from a JSON config.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "diar/clustering.hpp"
#include "diar/io.hpp"
#include "diar/metadata.hpp"
#include "diar/metrics.hpp"
#include "diar/pipeline.hpp"
#include "diar/reseg.hpp"
#include "diar/scoring.hpp"
#include "diar/segmenter.hpp"
#include "diar/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

std::map<std::string, diar::Annotation> load_rttms(const std::vector<std::string>& paths) {
  std::map<std::string, diar::Annotation> all;
  for (const std::string& p : paths) {
    for (auto& [rec, ann] : diar::parse_rttm_file(p)) {
      if (!all.emplace(rec, ann).second)
        throw diar::ValidationError("recording '" + rec + "' appears in multiple files");
    }
  }
  return all;
}

std::vector<std::string> expand_rttm_args(const std::vector<std::string>& args) {
  std::vector<std::string> paths;
  for (const std::string& a : args) {
    if (fs::is_directory(a)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(a))
        if (e.path().extension() == ".rttm") found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      paths.insert(paths.end(), found.begin(), found.end());
    } else {
      paths.push_back(a);
    }
  }
  return paths;
}

// ---------------------------------------------------------------------------
// metadata
// ---------------------------------------------------------------------------

struct MetadataOpts {
  std::vector<std::string> rttm;
  std::string uem;
  std::string domains;
  std::string agg = "pooled";
  std::string format = "text";
};

int cmd_metadata(const MetadataOpts& opt) {
  auto anns = load_rttms(expand_rttm_args(opt.rttm));
  if (anns.empty()) throw diar::ValidationError("no recordings found");

  // Durations: RTTM rows only bound speech, so scored-region extents (UEM)
  // define D when available.
  if (!opt.uem.empty()) {
    auto uem = diar::parse_uem_file(opt.uem);
    for (auto& [rec, ann] : anns) {
      auto it = uem.find(rec);
      if (it != uem.end() && !it->second.empty())
        ann.extend_total_duration(it->second.back().end);
    }
  }

  std::map<std::string, std::string> domain_map;
  if (!opt.domains.empty()) {
    std::ifstream in(opt.domains);
    if (!in) throw diar::ValidationError("cannot open domains file '" + opt.domains + "'");
    std::string rec, dom;
    while (in >> rec >> dom) domain_map[rec] = dom;
  } else {
    for (const auto& [rec, ann] : anns) domain_map[rec] = "all";
  }

  diar::Aggregation agg = opt.agg == "mean" ? diar::Aggregation::kMeanOfRatios
                                            : diar::Aggregation::kPooled;
  diar::DomainReport report = diar::domain_report(anns, domain_map, agg);
  std::cout << (opt.format == "tsv" ? diar::render_domain_report_tsv(report)
                                    : diar::render_domain_report_text(report));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

struct SegmentOpts {
  std::string regions;
  std::string uem;
  std::string rttm;
  double window_s = 1.5;
  double step_s = 0.75;
  std::string out;
};

int cmd_segment(const SegmentOpts& opt) {
  diar::SegmenterConfig cfg;
  cfg.window = diar::ms_from_seconds(opt.window_s);
  cfg.step = diar::ms_from_seconds(opt.step_s);

  std::map<std::string, diar::IntervalList> regions;
  if (!opt.regions.empty()) {
    regions = diar::parse_region_triples_file(opt.regions);
  } else if (!opt.uem.empty()) {
    regions = diar::parse_uem_file(opt.uem);
  } else if (!opt.rttm.empty()) {
    for (const auto& [rec, ann] : diar::parse_rttm_file(opt.rttm))
      regions[rec] = ann.speech_union();
  } else {
    throw diar::ValidationError("segment: provide --regions, --uem, or --rttm");
  }

  std::ostringstream out;
  for (const auto& [rec, xs] : regions)
    diar::emit_segments(rec, diar::uniform_segment(xs, cfg), out);
  diar::write_text_file(opt.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score / fuse
// ---------------------------------------------------------------------------

struct ScoreOpts {
  std::string embeddings;
  std::string backend = "cosine";
  std::string plda_model;
  std::string whitener;
  bool no_length_norm = false;
  std::string out;
};

int cmd_score(const ScoreOpts& opt) {
  diar::EmbeddingSet set = diar::parse_embeddings_file(opt.embeddings);
  diar::ScoreMatrix scores;
  if (opt.backend == "cosine") {
    scores = diar::build_score_matrix(set, diar::ScoreBackend::kCosine);
  } else if (opt.backend == "plda") {
    if (opt.plda_model.empty())
      throw diar::ValidationError("score: PLDA backend needs --plda-model");
    diar::PldaModel model = diar::read_plda_model(opt.plda_model);
    if (!opt.whitener.empty()) {
      diar::Whitener w = diar::read_whitener(opt.whitener);
      set.vectors = diar::apply_whitener(w, set.vectors, !opt.no_length_norm);
    }
    scores = diar::build_score_matrix(set, diar::ScoreBackend::kPlda, &model);
  } else {
    throw diar::ValidationError("score: unknown backend '" + opt.backend + "'");
  }
  std::ostringstream out;
  diar::emit_score_matrix(scores, out);
  diar::write_text_file(opt.out, out.str());
  return kExitOk;
}

struct FuseOpts {
  std::vector<std::string> inputs;
  std::vector<double> weights;
  std::string out;
};

int cmd_fuse(const FuseOpts& opt) {
  std::vector<diar::ScoreMatrix> mats;
  for (const std::string& p : opt.inputs)
    mats.push_back(diar::parse_score_matrix_file(p));
  diar::ScoreMatrix fused = diar::fuse_score_matrices(mats, opt.weights);
  std::ostringstream out;
  diar::emit_score_matrix(fused, out);
  diar::write_text_file(opt.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

struct ClusterOpts {
  std::string scores;
  std::string segments;
  std::string recording_id;
  std::string backend = "spectral";
  double threshold = 0.5;
  std::uint64_t seed = 0;
  int restarts = 10;
  bool row_normalize = false;
  std::string out;
};

int cmd_cluster(const ClusterOpts& opt) {
  diar::ScoreMatrix scores = diar::parse_score_matrix_file(opt.scores);
  auto seg_map = diar::parse_segments_file(opt.segments);
  std::string rec = opt.recording_id;
  if (rec.empty()) {
    if (seg_map.size() != 1)
      throw diar::ValidationError("cluster: --recording-id required for multi-recording segment files");
    rec = seg_map.begin()->first;
  }
  auto it = seg_map.find(rec);
  if (it == seg_map.end())
    throw diar::ValidationError("cluster: recording '" + rec + "' absent from segments");
  std::vector<diar::Segment> segments = it->second;
  if (scores.size() != static_cast<int>(segments.size()))
    throw diar::ValidationError("cluster: matrix size " + std::to_string(scores.size()) +
                                " does not match " + std::to_string(segments.size()) +
                                " segments");

  diar::ClusterAssignment assignment;
  if (opt.backend == "ahc") {
    assignment = diar::ahc(diar::symmetrize(scores), opt.threshold);
  } else if (opt.backend == "spectral") {
    diar::SpectralConfig cfg;
    cfg.eig_threshold = opt.threshold;
    cfg.rng_seed = opt.seed;
    cfg.kmeans_restarts = opt.restarts;
    cfg.row_normalize = opt.row_normalize;
    assignment = diar::spectral_cluster(diar::symmetrize(scores), cfg);
  } else {
    throw diar::ValidationError("cluster: unknown backend '" + opt.backend + "'");
  }

  for (std::size_t i = 0; i < segments.size(); ++i)
    segments[i].label = "spk" + std::to_string(assignment.labels[i]);
  diar::Annotation ann = diar::segments_to_annotation(rec, segments);
  diar::write_text_file(opt.out, diar::rttm_to_string(ann));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// resegment / overlap-assign
// ---------------------------------------------------------------------------

struct ResegmentOpts {
  std::string method = "gmm";
  std::string features;
  std::string init_rttm;
  std::string regions;
  std::string ubm;
  std::string tmat;
  int components = 8;
  int max_turns = 5;
  std::uint64_t seed = 0;
  int vb_max_iters = 1;
  int vb_downsample = 3;
  double vb_loop_prob = 0.99;
  double vb_stat_scale = 0.3;
  std::string out;
};

int cmd_resegment(const ResegmentOpts& opt) {
  auto inits = diar::parse_rttm_file(opt.init_rttm);
  // Feature files carry one recording each; batch runs go through `run`.
  if (inits.size() > 1)
    throw diar::ValidationError(
        "resegment: init RTTM covers " + std::to_string(inits.size()) +
        " recordings but --features holds a single recording's frames");
  std::ostringstream out;
  for (const auto& [rec, init_ann] : inits) {
    diar::FrameFeatures feats = diar::parse_features_file(opt.features, rec);
    diar::IntervalList regions;
    if (!opt.regions.empty()) {
      auto all = diar::parse_region_triples_file(opt.regions);
      auto it = all.find(rec);
      if (it == all.end())
        throw diar::ValidationError("resegment: recording '" + rec +
                                    "' absent from regions file");
      regions = it->second;
    } else {
      regions = init_ann.speech_union();
    }
    const int t = feats.num_frames();
    std::vector<int> mask = diar::speech_mask_from_regions(regions, feats.frame_step, t);
    diar::FrameAssignment init =
        diar::frames_from_annotation(init_ann, regions, feats.frame_step, t);
    std::vector<std::string> names = init_ann.speakers();

    diar::FrameAssignment refined;
    if (opt.method == "gmm") {
      diar::GmmResegConfig cfg;
      cfg.n_components = opt.components;
      cfg.max_turns = opt.max_turns;
      cfg.rng_seed = opt.seed ^ diar::fnv1a64(rec);
      refined = diar::gmm_resegment(feats, init, mask, cfg);
    } else if (opt.method == "vb") {
      if (opt.ubm.empty() || opt.tmat.empty())
        throw diar::ValidationError("resegment: VB method needs --ubm and --tmat");
      diar::VbModel model = diar::read_vb_model(opt.ubm, opt.tmat);
      diar::VbConfig cfg;
      cfg.max_iters = opt.vb_max_iters;
      cfg.downsample = opt.vb_downsample;
      cfg.loop_prob = opt.vb_loop_prob;
      cfg.stat_scale = opt.vb_stat_scale;
      refined = diar::vb_resegment(feats, init, model, cfg).assignment;
    } else {
      throw diar::ValidationError("resegment: unknown method '" + opt.method + "'");
    }
    diar::Annotation ann =
        diar::annotation_from_frames(rec, refined, feats.frame_step, names);
    diar::emit_rttm(ann, out);
  }
  diar::write_text_file(opt.out, out.str());
  return kExitOk;
}

struct OverlapOpts {
  std::string rttm;
  std::string overlaps;
  double frame_step_s = 0.0;  // required: the paper's frame size is unstated
  int extend_frames = 20;
  std::string out;
};

int cmd_overlap_assign(const OverlapOpts& opt) {
  auto anns = diar::parse_rttm_file(opt.rttm);
  auto overlaps = diar::parse_region_triples_file(opt.overlaps);
  std::ostringstream out;
  for (const auto& [rec, ann] : anns) {
    auto it = overlaps.find(rec);
    diar::IntervalList regions = it == overlaps.end() ? diar::IntervalList{} : it->second;
    diar::Annotation labeled = diar::assign_overlap_labels(
        ann, regions, diar::ms_from_seconds(opt.frame_step_s), opt.extend_frames);
    diar::emit_rttm(labeled, out);
  }
  diar::write_text_file(opt.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// der / vad-acc
// ---------------------------------------------------------------------------

struct DerOpts {
  std::string ref;
  std::string hyp;
  std::string uem;
};

int cmd_der(const DerOpts& opt) {
  auto refs = diar::parse_rttm_file(opt.ref);
  auto hyps = diar::parse_rttm_file(opt.hyp);
  std::optional<std::map<std::string, diar::IntervalList>> uem;
  if (!opt.uem.empty()) uem = diar::parse_uem_file(opt.uem);

  std::cout << "recording\tmissed_s\tfalse_alarm_s\tconfusion_s\tscored_s\tder_pct\n";
  diar::DerBreakdown pooled;
  char buf[160];
  for (const auto& [rec, ref] : refs) {
    auto it = hyps.find(rec);
    diar::Annotation hyp = it == hyps.end()
                               ? diar::Annotation::from_turns(rec, {})
                               : it->second;
    std::optional<diar::IntervalList> rec_uem;
    if (uem) {
      auto u = uem->find(rec);
      if (u != uem->end()) rec_uem = u->second;
    }
    diar::DerBreakdown b = diar::der(ref, hyp, rec_uem);
    std::snprintf(buf, sizeof(buf), "%s\t%.3f\t%.3f\t%.3f\t%.3f\t%.4f\n",
                  rec.c_str(), diar::seconds_from_ms(b.missed),
                  diar::seconds_from_ms(b.false_alarm),
                  diar::seconds_from_ms(b.confusion),
                  diar::seconds_from_ms(b.scored_speech), b.der);
    std::cout << buf;
    pooled.add(b);
  }
  pooled.finalize();
  std::snprintf(buf, sizeof(buf), "ALL\t%.3f\t%.3f\t%.3f\t%.3f\t%.4f\n",
                diar::seconds_from_ms(pooled.missed),
                diar::seconds_from_ms(pooled.false_alarm),
                diar::seconds_from_ms(pooled.confusion),
                diar::seconds_from_ms(pooled.scored_speech), pooled.der);
  std::cout << buf;
  return kExitOk;
}

struct VadAccOpts {
  std::string ref;
  std::string hyp;
  double frame_step_s = 0.010;
  double duration_s = 0.0;
};

int cmd_vad_acc(const VadAccOpts& opt) {
  auto refs = diar::parse_region_triples_file(opt.ref);
  auto hyps = diar::parse_region_triples_file(opt.hyp);
  diar::Millis step = diar::ms_from_seconds(opt.frame_step_s);

  std::cout << "recording\tframes\taccuracy_pct\n";
  char buf[96];
  std::size_t total = 0, equal = 0;
  for (const auto& [rec, ref_regions] : refs) {
    auto it = hyps.find(rec);
    diar::IntervalList hyp_regions = it == hyps.end() ? diar::IntervalList{} : it->second;
    diar::Millis end = 0;
    if (!ref_regions.empty()) end = std::max(end, ref_regions.back().end);
    if (!hyp_regions.empty()) end = std::max(end, hyp_regions.back().end);
    if (opt.duration_s > 0) end = diar::ms_from_seconds(opt.duration_s);
    int t = static_cast<int>((end + step - 1) / step);
    diar::VadLabels ref_labels{rec, step, {}};
    diar::VadLabels hyp_labels{rec, step, {}};
    ref_labels.labels = diar::speech_mask_from_regions(ref_regions, step, t);
    hyp_labels.labels = diar::speech_mask_from_regions(hyp_regions, step, t);
    double acc = diar::vad_accuracy(ref_labels, hyp_labels);
    std::snprintf(buf, sizeof(buf), "%s\t%d\t%.2f\n", rec.c_str(), t, acc);
    std::cout << buf;
    total += t;
    equal += static_cast<std::size_t>(std::lround(acc / 100.0 * t));
  }
  if (total > 0) {
    std::snprintf(buf, sizeof(buf), "ALL\t%zu\t%.2f\n", total,
                  100.0 * static_cast<double>(equal) / static_cast<double>(total));
    std::cout << buf;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run / synth
// ---------------------------------------------------------------------------

struct RunOpts {
  std::string config;
  int jobs = 0;
  std::int64_t seed = -1;
};

int cmd_run(const RunOpts& opt) {
  diar::PipelineConfig cfg = diar::config_from_json_file(opt.config);
  if (opt.jobs > 0) cfg.jobs = opt.jobs;
  if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
  diar::PipelineResult result = diar::run_pipeline(cfg);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(result.config_hash));
  std::cout << "config_hash " << buf << "\n";
  if (result.pooled_der) {
    std::snprintf(buf, sizeof(buf), "pooled_der %.4f%%", result.pooled_der->der);
    std::cout << buf << "\n";
  }
  std::cout << "report " << (fs::path(cfg.output_dir) / "report.json").string() << "\n";
  return kExitOk;
}

struct SynthOpts {
  std::string profile;
  std::string out;
};

int cmd_synth(const SynthOpts& opt) {
  diar::CorpusProfile profile = diar::profile_from_json_file(opt.profile);
  diar::SynthCorpus corpus = diar::generate_corpus(profile);
  fs::create_directories(opt.out);
  fs::path base(opt.out);

  std::ostringstream ref_all;
  std::ostringstream uem_all;
  std::ostringstream manifest;
  for (const diar::SynthRecording& r : corpus.recordings) {
    const std::string& rec = r.reference.recording_id();
    diar::emit_rttm(r.reference, ref_all);
    uem_all << rec << " 1 0.000 "
            << diar::format_seconds(r.reference.total_duration()) << "\n";

    std::ostringstream emb, feat, vad, ovl, ref_one;
    diar::emit_embeddings(r.embeddings, emb);
    diar::emit_features(r.features, feat);
    diar::emit_region_triples(rec, r.reference.speech_union(), vad);
    diar::emit_region_triples(rec, r.overlap_regions, ovl);
    diar::emit_rttm(r.reference, ref_one);
    diar::write_text_file((base / (rec + ".emb")).string(), emb.str());
    diar::write_text_file((base / (rec + ".feats")).string(), feat.str());
    diar::write_text_file((base / (rec + ".vad")).string(), vad.str());
    diar::write_text_file((base / (rec + ".overlap")).string(), ovl.str());
    diar::write_text_file((base / (rec + ".rttm")).string(), ref_one.str());

    json entry = {{"recording_id", rec},
                  {"embeddings", rec + ".emb"},
                  {"features", rec + ".feats"},
                  {"speech_regions", rec + ".vad"},
                  {"overlaps", rec + ".overlap"},
                  {"reference", rec + ".rttm"},
                  {"domain", "synthetic"}};
    manifest << entry.dump() << "\n";
  }
  diar::write_text_file((base / "ref.rttm").string(), ref_all.str());
  diar::write_text_file((base / "all.uem").string(), uem_all.str());
  diar::write_text_file((base / "manifest.jsonl").string(), manifest.str());
  std::cout << "wrote " << corpus.recordings.size() << " recordings to "
            << opt.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker diarization backend toolkit"};
  app.require_subcommand(1);

  // Global knobs; subcommand-level options take precedence.
  int global_jobs = 0;
  std::int64_t global_seed = -1;
  app.add_option("--jobs", global_jobs, "Worker pool size (run)");
  app.add_option("--seed", global_seed, "Seed for stochastic stages");

  MetadataOpts metadata_opts;
  auto* metadata = app.add_subcommand("metadata", "Corpus metadata table (speech %, overlap error)");
  metadata->add_option("--rttm", metadata_opts.rttm, "RTTM files or directories")->required();
  metadata->add_option("--uem", metadata_opts.uem, "UEM file providing recording durations");
  metadata->add_option("--domains", metadata_opts.domains, "TSV mapping recording to domain");
  metadata->add_option("--agg", metadata_opts.agg, "Aggregation: pooled|mean")
      ->check(CLI::IsMember({"pooled", "mean"}));
  metadata->add_option("--format", metadata_opts.format, "Output: text|tsv")
      ->check(CLI::IsMember({"text", "tsv"}));

  SegmentOpts segment_opts;
  auto* segment = app.add_subcommand("segment", "Uniform sliding-window segmentation");
  segment->add_option("--regions", segment_opts.regions, "Speech region triples file");
  segment->add_option("--uem", segment_opts.uem, "UEM file as region source");
  segment->add_option("--rttm", segment_opts.rttm, "RTTM whose speech union is segmented");
  segment->add_option("--window", segment_opts.window_s, "Window seconds");
  segment->add_option("--step", segment_opts.step_s, "Step seconds");
  segment->add_option("--out", segment_opts.out, "Output segment list")->required();

  ScoreOpts score_opts;
  auto* score = app.add_subcommand("score", "Similarity matrix from embeddings");
  score->add_option("--embeddings", score_opts.embeddings)->required();
  score->add_option("--backend", score_opts.backend, "cosine|plda")
      ->check(CLI::IsMember({"cosine", "plda"}));
  score->add_option("--plda-model", score_opts.plda_model);
  score->add_option("--whitener", score_opts.whitener);
  score->add_flag("--no-length-norm", score_opts.no_length_norm,
                  "Skip length normalization after whitening");
  score->add_option("--out", score_opts.out)->required();

  FuseOpts fuse_opts;
  auto* fuse = app.add_subcommand("fuse", "Average score matrices after min-max normalization");
  fuse->add_option("--in", fuse_opts.inputs, "Input matrices")->required()->expected(-2);
  fuse->add_option("--weights", fuse_opts.weights, "Optional fusion weights");
  fuse->add_option("--out", fuse_opts.out)->required();

  ClusterOpts cluster_opts;
  auto* cluster = app.add_subcommand("cluster", "AHC or spectral clustering to RTTM");
  cluster->add_option("--scores", cluster_opts.scores)->required();
  cluster->add_option("--segments", cluster_opts.segments)->required();
  cluster->add_option("--recording-id", cluster_opts.recording_id);
  cluster->add_option("--backend", cluster_opts.backend, "ahc|spectral")
      ->check(CLI::IsMember({"ahc", "spectral"}));
  cluster->add_option("--threshold", cluster_opts.threshold,
                      "AHC stop threshold / spectral eigenvalue threshold");
  cluster->add_option("--seed", cluster_opts.seed);
  cluster->add_option("--restarts", cluster_opts.restarts, "k-means restarts");
  cluster->add_flag("--row-normalize", cluster_opts.row_normalize);
  cluster->add_option("--out", cluster_opts.out)->required();

  ResegmentOpts reseg_opts;
  auto* reseg = app.add_subcommand("resegment", "Frame-level GMM or VB refinement");
  reseg->add_option("--method", reseg_opts.method, "gmm|vb")
      ->check(CLI::IsMember({"gmm", "vb"}));
  reseg->add_option("--features", reseg_opts.features)->required();
  reseg->add_option("--init", reseg_opts.init_rttm, "Initial RTTM")->required();
  reseg->add_option("--regions", reseg_opts.regions, "Speech regions (default: init union)");
  reseg->add_option("--ubm", reseg_opts.ubm, "UBM file (VB)");
  reseg->add_option("--tmat", reseg_opts.tmat, "Total-variability matrix file (VB)");
  reseg->add_option("--components", reseg_opts.components, "GMM components per speaker");
  reseg->add_option("--max-turns", reseg_opts.max_turns);
  reseg->add_option("--seed", reseg_opts.seed);
  reseg->add_option("--vb-max-iters", reseg_opts.vb_max_iters);
  reseg->add_option("--vb-downsample", reseg_opts.vb_downsample);
  reseg->add_option("--vb-loop-prob", reseg_opts.vb_loop_prob);
  reseg->add_option("--vb-stat-scale", reseg_opts.vb_stat_scale);
  reseg->add_option("--out", reseg_opts.out)->required();

  OverlapOpts overlap_opts;
  auto* overlap = app.add_subcommand("overlap-assign", "Add second speakers inside overlap regions");
  overlap->add_option("--rttm", overlap_opts.rttm)->required();
  overlap->add_option("--overlaps", overlap_opts.overlaps, "Overlap region triples")->required();
  overlap->add_option("--frame-step", overlap_opts.frame_step_s,
                      "Frame step in seconds for the +-20 frame extension")->required();
  overlap->add_option("--extend-frames", overlap_opts.extend_frames);
  overlap->add_option("--out", overlap_opts.out)->required();

  DerOpts der_opts;
  auto* der_cmd = app.add_subcommand("der", "Strict DER (no collar, overlap scored)");
  der_cmd->add_option("--ref", der_opts.ref)->required();
  der_cmd->add_option("--hyp", der_opts.hyp)->required();
  der_cmd->add_option("--uem", der_opts.uem);

  VadAccOpts vad_opts;
  auto* vad = app.add_subcommand("vad-acc", "Frame-level VAD accuracy");
  vad->add_option("--ref", vad_opts.ref, "Reference region triples")->required();
  vad->add_option("--hyp", vad_opts.hyp, "Hypothesis region triples")->required();
  vad->add_option("--frame-step", vad_opts.frame_step_s);
  vad->add_option("--duration", vad_opts.duration_s, "Force total duration (seconds)");

  RunOpts run_opts;
  auto* run = app.add_subcommand("run", "Run the configured pipeline end to end");
  run->add_option("--config", run_opts.config)->required();
  run->add_option("--jobs", run_opts.jobs, "Worker pool size");
  run->add_option("--seed", run_opts.seed, "Override config seed");

  SynthOpts synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--profile", synth_opts.profile, "Profile JSON")->required();
  synth->add_option("--out", synth_opts.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (global_seed >= 0) {
    if (cluster->count("--seed") == 0)
      cluster_opts.seed = static_cast<std::uint64_t>(global_seed);
    if (reseg->count("--seed") == 0)
      reseg_opts.seed = static_cast<std::uint64_t>(global_seed);
    if (run->count("--seed") == 0) run_opts.seed = global_seed;
  }
  if (global_jobs > 0 && run->count("--jobs") == 0) run_opts.jobs = global_jobs;

  try {
    if (metadata->parsed()) return cmd_metadata(metadata_opts);
    if (segment->parsed()) return cmd_segment(segment_opts);
    if (score->parsed()) return cmd_score(score_opts);
    if (fuse->parsed()) return cmd_fuse(fuse_opts);
    if (cluster->parsed()) return cmd_cluster(cluster_opts);
    if (reseg->parsed()) return cmd_resegment(reseg_opts);
    if (overlap->parsed()) return cmd_overlap_assign(overlap_opts);
    if (der_cmd->parsed()) return cmd_der(der_opts);
    if (vad->parsed()) return cmd_vad_acc(vad_opts);
    if (run->parsed()) return cmd_run(run_opts);
    if (synth->parsed()) return cmd_synth(synth_opts);
  } catch (const diar::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
