#include "diar/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

namespace diar {

namespace {

// Whitespace-splits a line; returns false for blank lines.
bool split_fields(const std::string& line, std::vector<std::string>& fields) {
  fields.clear();
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) fields.push_back(f);
  return !fields.empty();
}

double parse_double(const std::string& s, int line, const std::string& what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad " + what + " '" + s + "'", line);
  return v;
}

long parse_long(const std::string& s, int line, const std::string& what) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad " + what + " '" + s + "'", line);
  return v;
}

Millis parse_time(const std::string& s, int line, const std::string& what) {
  try {
    return ms_from_seconds_text(s);
  } catch (const std::invalid_argument&) {
    throw ParseError("bad " + what + " '" + s + "'", line);
  }
}

// Full-precision doubles that survive a text round trip.
void print_value(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::string basename_no_ext(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return name;
}

}  // namespace

void FrameFeatures::validate() const {
  if (frames.rows() < 1) throw ValidationError("feature matrix has no frames");
  if (frames.cols() < 1) throw ValidationError("feature dimension must be positive");
  if (!frames.allFinite()) throw ValidationError("features contain NaN/Inf values");
  if (frame_step <= 0) throw ValidationError("frame_step must be positive");
}

void VadLabels::validate() const {
  for (int v : labels)
    if (v != 0 && v != 1) throw ValidationError("VAD labels must be 0 or 1");
  if (frame_step <= 0) throw ValidationError("frame_step must be positive");
}

// --------------------------------------------------------------------------
// RTTM
// --------------------------------------------------------------------------

std::map<std::string, Annotation> parse_rttm(std::istream& in) {
  std::map<std::string, std::vector<SpeakerTurn>> turns;
  std::string line;
  std::vector<std::string> f;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!split_fields(line, f)) continue;
    if (f[0] != "SPEAKER") continue;  // SPKR-INFO etc.
    if (f.size() != 10)
      throw ParseError("SPEAKER row must have 10 fields, got " +
                           std::to_string(f.size()), lineno);
    SpeakerTurn t;
    t.recording_id = f[1];
    t.channel = static_cast<int>(parse_long(f[2], lineno, "channel"));
    t.onset = parse_time(f[3], lineno, "onset");
    t.duration = parse_time(f[4], lineno, "duration");
    t.speaker_id = f[7];
    if (t.onset < 0) throw ParseError("negative onset", lineno);
    if (t.duration <= 0) throw ParseError("non-positive duration", lineno);
    turns[t.recording_id].push_back(std::move(t));
  }
  std::map<std::string, Annotation> out;
  for (auto& [rec, ts] : turns)
    out.emplace(rec, Annotation::from_turns(rec, std::move(ts)));
  return out;
}

std::map<std::string, Annotation> parse_rttm_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_rttm(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void emit_rttm(const Annotation& ann, std::ostream& out) {
  for (const SpeakerTurn& t : ann.turns()) {
    out << "SPEAKER " << ann.recording_id() << ' ' << t.channel << ' '
        << format_seconds(t.onset) << ' ' << format_seconds(t.duration)
        << " <NA> <NA> " << t.speaker_id << " <NA> <NA>\n";
  }
}

void emit_rttm(const std::map<std::string, Annotation>& anns, std::ostream& out) {
  for (const auto& [rec, ann] : anns) emit_rttm(ann, out);
}

std::string rttm_to_string(const Annotation& ann) {
  std::ostringstream os;
  emit_rttm(ann, os);
  return os.str();
}

// --------------------------------------------------------------------------
// UEM and interval triples
// --------------------------------------------------------------------------

std::map<std::string, IntervalList> parse_uem(std::istream& in) {
  std::map<std::string, IntervalList> raw;
  std::string line;
  std::vector<std::string> f;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!split_fields(line, f)) continue;
    if (f[0].starts_with(";;")) continue;  // comment rows
    if (f.size() != 4) throw ParseError("UEM row must have 4 fields", lineno);
    Millis onset = parse_time(f[2], lineno, "onset");
    Millis offset = parse_time(f[3], lineno, "offset");
    if (onset < 0 || offset <= onset)
      throw ParseError("UEM region must satisfy 0 <= onset < offset", lineno);
    raw[f[0]].push_back({onset, offset});
  }
  std::map<std::string, IntervalList> out;
  for (auto& [rec, xs] : raw) out.emplace(rec, interval_union(std::move(xs)));
  return out;
}

std::map<std::string, IntervalList> parse_uem_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_uem(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void emit_uem(const std::map<std::string, IntervalList>& regions, std::ostream& out) {
  for (const auto& [rec, xs] : regions)
    for (const Interval& x : xs)
      out << rec << " 1 " << format_seconds(x.start) << ' '
          << format_seconds(x.end) << "\n";
}

std::map<std::string, IntervalList> parse_region_triples(std::istream& in) {
  std::map<std::string, IntervalList> raw;
  std::string line;
  std::vector<std::string> f;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!split_fields(line, f)) continue;
    if (f[0].starts_with(";;")) continue;
    if (f.size() != 3) throw ParseError("region row must have 3 fields", lineno);
    Millis onset = parse_time(f[1], lineno, "onset");
    Millis dur = parse_time(f[2], lineno, "duration");
    if (onset < 0) throw ParseError("negative onset", lineno);
    if (dur <= 0) throw ParseError("non-positive duration", lineno);
    raw[f[0]].push_back({onset, onset + dur});
  }
  std::map<std::string, IntervalList> out;
  for (auto& [rec, xs] : raw) out.emplace(rec, interval_union(std::move(xs)));
  return out;
}

std::map<std::string, IntervalList> parse_region_triples_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_region_triples(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void emit_region_triples(const std::string& recording_id, const IntervalList& xs,
                         std::ostream& out) {
  for (const Interval& x : xs)
    out << recording_id << ' ' << format_seconds(x.start) << ' '
        << format_seconds(x.length()) << "\n";
}

// --------------------------------------------------------------------------
// Segment lists
// --------------------------------------------------------------------------

std::map<std::string, std::vector<Segment>> parse_segments(std::istream& in) {
  std::map<std::string, std::vector<Segment>> out;
  std::string line;
  std::vector<std::string> f;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!split_fields(line, f)) continue;
    if (f.size() != 3) throw ParseError("segment row must have 3 fields", lineno);
    Segment s;
    s.start = parse_time(f[1], lineno, "start");
    s.end = parse_time(f[2], lineno, "end");
    if (s.end <= s.start) throw ParseError("segment end must exceed start", lineno);
    out[f[0]].push_back(std::move(s));
  }
  return out;
}

std::map<std::string, std::vector<Segment>> parse_segments_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_segments(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void emit_segments(const std::string& recording_id, const std::vector<Segment>& segs,
                   std::ostream& out) {
  for (const Segment& s : segs)
    out << recording_id << ' ' << format_seconds(s.start) << ' '
        << format_seconds(s.end) << "\n";
}

// --------------------------------------------------------------------------
// Embeddings
// --------------------------------------------------------------------------

namespace {

constexpr char kEmbeddingMagic[4] = {'D', 'K', 'E', 'B'};
constexpr char kFeatureMagic[4] = {'D', 'K', 'F', 'B'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated binary file while reading " + what);
  return v;
}

EmbeddingSet parse_embeddings_binary(std::istream& in, const std::string& recording_id) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kEmbeddingMagic, 4) != 0)
    throw std::runtime_error("bad embedding binary magic");
  auto n = read_raw<std::uint32_t>(in, "n");
  auto d = read_raw<std::uint32_t>(in, "d");
  if (n == 0) throw std::runtime_error("empty embedding set");
  if (d == 0) throw std::runtime_error("embedding dimension must be positive");
  EmbeddingSet set;
  set.recording_id = recording_id;
  set.segments.resize(n);
  set.vectors.resize(n, d);
  for (std::uint32_t i = 0; i < n; ++i) {
    double start = read_raw<double>(in, "segment start");
    double end = read_raw<double>(in, "segment end");
    set.segments[i].start = ms_from_seconds(start);
    set.segments[i].end = ms_from_seconds(end);
    for (std::uint32_t j = 0; j < d; ++j)
      set.vectors(i, j) = read_raw<double>(in, "embedding value");
  }
  set.validate();
  return set;
}

}  // namespace

EmbeddingSet parse_embeddings(std::istream& in, const std::string& recording_id) {
  std::string line;
  std::vector<std::string> f;
  int lineno = 0;
  do {
    if (!std::getline(in, line)) throw ParseError("missing embedding header", lineno);
    ++lineno;
  } while (!split_fields(line, f));
  if (f.size() != 2) throw ParseError("embedding header must be `n d`", lineno);
  long n = parse_long(f[0], lineno, "n");
  long d = parse_long(f[1], lineno, "d");
  if (n == 0) throw ParseError("empty embedding set", lineno);
  if (n < 0 || d < 1) throw ParseError("bad embedding header values", lineno);

  EmbeddingSet set;
  set.recording_id = recording_id;
  set.segments.resize(n);
  set.vectors.resize(n, d);
  for (long i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw ParseError("expected " + std::to_string(n) + " embedding rows", lineno);
    ++lineno;
    if (!split_fields(line, f)) {
      --i;
      continue;
    }
    if (static_cast<long>(f.size()) != d + 2)
      throw ParseError("embedding row must have " + std::to_string(d + 2) +
                           " fields, got " + std::to_string(f.size()), lineno);
    set.segments[i].start = parse_time(f[0], lineno, "segment start");
    set.segments[i].end = parse_time(f[1], lineno, "segment end");
    for (long j = 0; j < d; ++j)
      set.vectors(i, j) = parse_double(f[j + 2], lineno, "embedding value");
  }
  // Canonical order; files produced by this toolkit are already sorted.
  std::vector<int> order(n);
  for (long i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return set.segments[a].start < set.segments[b].start;
  });
  EmbeddingSet sorted;
  sorted.recording_id = set.recording_id;
  sorted.segments.resize(n);
  sorted.vectors.resize(n, d);
  for (long i = 0; i < n; ++i) {
    sorted.segments[i] = set.segments[order[i]];
    sorted.vectors.row(i) = set.vectors.row(order[i]);
  }
  sorted.validate();
  return sorted;
}

EmbeddingSet parse_embeddings_file(const std::string& path, const std::string& recording_id) {
  auto in = open_input(path);
  std::string rec = recording_id.empty() ? basename_no_ext(path) : recording_id;
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  try {
    if (std::memcmp(magic, kEmbeddingMagic, 4) == 0)
      return parse_embeddings_binary(in, rec);
    return parse_embeddings(in, rec);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void emit_embeddings(const EmbeddingSet& set, std::ostream& out) {
  out << set.size() << ' ' << set.dim() << "\n";
  for (int i = 0; i < set.size(); ++i) {
    out << format_seconds(set.segments[i].start) << ' '
        << format_seconds(set.segments[i].end);
    for (int j = 0; j < set.dim(); ++j) {
      out << ' ';
      print_value(out, set.vectors(i, j));
    }
    out << "\n";
  }
}

void emit_embeddings_binary(const EmbeddingSet& set, std::ostream& out) {
  out.write(kEmbeddingMagic, 4);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(set.size()));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim()));
  for (int i = 0; i < set.size(); ++i) {
    write_raw<double>(out, seconds_from_ms(set.segments[i].start));
    write_raw<double>(out, seconds_from_ms(set.segments[i].end));
    for (int j = 0; j < set.dim(); ++j) write_raw<double>(out, set.vectors(i, j));
  }
}

// --------------------------------------------------------------------------
// Score matrices
// --------------------------------------------------------------------------

ScoreMatrix parse_score_matrix(std::istream& in) {
  std::string line;
  std::vector<std::string> f;
  int lineno = 0;
  do {
    if (!std::getline(in, line)) throw ParseError("missing score matrix header", lineno);
    ++lineno;
  } while (!split_fields(line, f));
  if (f.size() != 1) throw ParseError("score matrix header must be `n`", lineno);
  long n = parse_long(f[0], lineno, "n");
  if (n < 1) throw ParseError("score matrix must have n >= 1", lineno);

  ScoreMatrix m;
  m.values.resize(n, n);
  for (long i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw ParseError("expected " + std::to_string(n) + " score rows", lineno);
    ++lineno;
    if (!split_fields(line, f)) {
      --i;
      continue;
    }
    if (static_cast<long>(f.size()) != n)
      throw ParseError("score row must have " + std::to_string(n) +
                           " values, got " + std::to_string(f.size()), lineno);
    for (long j = 0; j < n; ++j)
      m.values(i, j) = parse_double(f[j], lineno, "score");
  }
  m.validate();
  return m;
}

ScoreMatrix parse_score_matrix_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_score_matrix(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void emit_score_matrix(const ScoreMatrix& m, std::ostream& out) {
  out << m.size() << "\n";
  for (int i = 0; i < m.size(); ++i) {
    for (int j = 0; j < m.size(); ++j) {
      if (j) out << ' ';
      print_value(out, m.values(i, j));
    }
    out << "\n";
  }
}

// --------------------------------------------------------------------------
// Frame features
// --------------------------------------------------------------------------

namespace {

FrameFeatures parse_features_binary(std::istream& in, const std::string& recording_id) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw std::runtime_error("bad feature binary magic");
  auto t = read_raw<std::uint32_t>(in, "T");
  auto d = read_raw<std::uint32_t>(in, "d");
  auto step = read_raw<double>(in, "frame_step");
  auto length = read_raw<double>(in, "frame_length");
  if (t == 0 || d == 0) throw std::runtime_error("empty feature matrix");
  FrameFeatures feats;
  feats.recording_id = recording_id;
  feats.frame_step = ms_from_seconds(step);
  feats.frame_length = ms_from_seconds(length);
  feats.frames.resize(t, d);
  for (std::uint32_t i = 0; i < t; ++i)
    for (std::uint32_t j = 0; j < d; ++j)
      feats.frames(i, j) = read_raw<double>(in, "feature value");
  feats.validate();
  return feats;
}

}  // namespace

FrameFeatures parse_features(std::istream& in, const std::string& recording_id) {
  std::string line;
  std::vector<std::string> f;
  int lineno = 0;
  do {
    if (!std::getline(in, line)) throw ParseError("missing feature header", lineno);
    ++lineno;
  } while (!split_fields(line, f));
  if (f.size() != 4)
    throw ParseError("feature header must be `T d frame_step frame_length`", lineno);
  long t = parse_long(f[0], lineno, "T");
  long d = parse_long(f[1], lineno, "d");
  if (t < 1 || d < 1) throw ParseError("feature matrix must be at least 1x1", lineno);

  FrameFeatures feats;
  feats.recording_id = recording_id;
  feats.frame_step = parse_time(f[2], lineno, "frame_step");
  feats.frame_length = parse_time(f[3], lineno, "frame_length");
  feats.frames.resize(t, d);
  for (long i = 0; i < t; ++i) {
    if (!std::getline(in, line))
      throw ParseError("expected " + std::to_string(t) + " feature rows", lineno);
    ++lineno;
    if (!split_fields(line, f)) {
      --i;
      continue;
    }
    if (static_cast<long>(f.size()) != d)
      throw ParseError("feature row must have " + std::to_string(d) +
                           " values, got " + std::to_string(f.size()), lineno);
    for (long j = 0; j < d; ++j)
      feats.frames(i, j) = parse_double(f[j], lineno, "feature value");
  }
  feats.validate();
  return feats;
}

FrameFeatures parse_features_file(const std::string& path, const std::string& recording_id) {
  auto in = open_input(path);
  std::string rec = recording_id.empty() ? basename_no_ext(path) : recording_id;
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  try {
    if (std::memcmp(magic, kFeatureMagic, 4) == 0)
      return parse_features_binary(in, rec);
    return parse_features(in, rec);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void emit_features(const FrameFeatures& feats, std::ostream& out) {
  out << feats.num_frames() << ' ' << feats.dim() << ' '
      << format_seconds(feats.frame_step) << ' '
      << format_seconds(feats.frame_length) << "\n";
  for (int i = 0; i < feats.num_frames(); ++i) {
    for (int j = 0; j < feats.dim(); ++j) {
      if (j) out << ' ';
      print_value(out, feats.frames(i, j));
    }
    out << "\n";
  }
}

void emit_features_binary(const FrameFeatures& feats, std::ostream& out) {
  out.write(kFeatureMagic, 4);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(feats.num_frames()));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(feats.dim()));
  write_raw<double>(out, seconds_from_ms(feats.frame_step));
  write_raw<double>(out, seconds_from_ms(feats.frame_length));
  for (int i = 0; i < feats.num_frames(); ++i)
    for (int j = 0; j < feats.dim(); ++j) write_raw<double>(out, feats.frames(i, j));
}

// --------------------------------------------------------------------------
// Plain matrix blocks
// --------------------------------------------------------------------------

Eigen::MatrixXd parse_matrix(std::istream& in, const std::string& what) {
  std::string line;
  std::vector<std::string> f;
  int lineno = 0;
  do {
    if (!std::getline(in, line)) throw ParseError("missing " + what + " header", lineno);
    ++lineno;
  } while (!split_fields(line, f));
  if (f.size() != 2) throw ParseError(what + " header must be `rows cols`", lineno);
  long rows = parse_long(f[0], lineno, "rows");
  long cols = parse_long(f[1], lineno, "cols");
  if (rows < 1 || cols < 1) throw ParseError(what + " must be at least 1x1", lineno);
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw ParseError("expected " + std::to_string(rows) + " " + what + " rows",
                       lineno);
    ++lineno;
    if (!split_fields(line, f)) {
      --i;
      continue;
    }
    if (static_cast<long>(f.size()) != cols)
      throw ParseError(what + " row must have " + std::to_string(cols) + " values",
                       lineno);
    for (long j = 0; j < cols; ++j) m(i, j) = parse_double(f[j], lineno, what);
  }
  if (!m.allFinite()) throw ParseError(what + " contains NaN/Inf", lineno);
  return m;
}

void emit_matrix(const Eigen::MatrixXd& m, std::ostream& out) {
  out << m.rows() << ' ' << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      print_value(out, m(i, j));
    }
    out << "\n";
  }
}

std::string read_text_file(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace diar
