#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dtvr/env/content.hpp"
#include "dtvr/error.hpp"
#include "dtvr/random.hpp"

namespace dtvr {

// Normalized FoV coordinates of the gaze centre for one frame, in [0,1)^2.
struct GazeSample {
  double u = 0.0;
  double v = 0.0;
  bool operator==(const GazeSample&) const = default;
};

struct GazeTrace {
  std::vector<GazeSample> samples;
  std::string source_id;
};

/// Chebyshev rings around the gaze tile: level 3 within `inner_radius`,
/// level 2 within `mid_radius`, level 1 elsewhere.
struct AttentionRule {
  int inner_radius = 0;
  int mid_radius = 2;

  void validate() const {
    require(inner_radius >= 0 && inner_radius < mid_radius, Errc::InvalidArgument,
            "attention rule needs 0 <= inner_radius < mid_radius");
  }
};

struct TileIndex {
  int col = 0;  // i, along u
  int row = 0;  // j, along v
  bool operator==(const TileIndex&) const = default;
};

inline TileIndex gaze_to_tile(GazeSample s, int cols, int rows) {
  auto cell = [](double x, int n) {
    return std::clamp(static_cast<int>(std::floor(n * x)), 0, n - 1);
  };
  return {cell(s.u, cols), cell(s.v, rows)};
}

// Per-tile level map (row-major, index row * cols + col) for one frame.
inline std::vector<int> frame_attention(TileIndex gaze, const AttentionRule& rule, int cols, int rows) {
  rule.validate();
  require(gaze.col >= 0 && gaze.col < cols && gaze.row >= 0 && gaze.row < rows,
          Errc::InvalidArgument, "gaze tile outside the grid");
  std::vector<int> levels(static_cast<std::size_t>(cols * rows), 1);
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      const int d = std::max(std::abs(i - gaze.col), std::abs(j - gaze.row));
      int level = 1;
      if (d <= rule.inner_radius)
        level = 3;
      else if (d <= rule.mid_radius)
        level = 2;
      levels[static_cast<std::size_t>(j * cols + i)] = level;
    }
  }
  return levels;
}

inline AttentionProfile count_levels(std::span<const int> levels) {
  AttentionProfile p;
  for (int l : levels) {
    require(l >= 1 && l <= kLevels, Errc::InvalidArgument, "attention level must be 1..3");
    ++p.counts[l - 1];
  }
  return p;
}

/// Heatmap of one GoP: each tile keeps the highest level it reached in any frame.
inline std::vector<int> gop_level_map(std::span<const GazeSample> frames, const AttentionRule& rule,
                                      int cols, int rows) {
  require(!frames.empty(), Errc::InvalidArgument, "a GoP needs at least one frame");
  std::vector<int> heat(static_cast<std::size_t>(cols * rows), 1);
  for (const auto& s : frames) {
    const auto levels = frame_attention(gaze_to_tile(s, cols, rows), rule, cols, rows);
    for (std::size_t n = 0; n < heat.size(); ++n) heat[n] = std::max(heat[n], levels[n]);
  }
  return heat;
}

inline AttentionProfile gop_attention(std::span<const GazeSample> frames, const AttentionRule& rule,
                                      int cols, int rows) {
  return count_levels(gop_level_map(frames, rule, cols, rows));
}

/// Concatenate traces drawn uniformly with replacement until `target_frames`.
inline GazeTrace compose_long_trace(std::span<const GazeTrace> traces, std::size_t target_frames,
                                    std::uint64_t seed) {
  require(!traces.empty(), Errc::EmptyCorpus, "no gaze traces to compose");
  for (const auto& t : traces)
    require(!t.samples.empty(), Errc::EmptyCorpus, "gaze trace '" + t.source_id + "' is empty");
  Rng rng = make_rng(seed, Stream::Compose);
  std::uniform_int_distribution<std::size_t> pick(0, traces.size() - 1);
  GazeTrace out;
  out.source_id = "composed";
  out.samples.reserve(target_frames);
  while (out.samples.size() < target_frames) {
    const auto& src = traces[pick(rng)].samples;
    const std::size_t take = std::min(src.size(), target_frames - out.samples.size());
    out.samples.insert(out.samples.end(), src.begin(), src.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

// Reflected random walk on [0,1)^2; stands in for recorded eye-tracker data.
class SyntheticGaze {
 public:
  SyntheticGaze(double step_scale, std::uint64_t seed, std::uint32_t stream_id = 0)
      : rng_(make_rng(seed, Stream::Gaze, stream_id)), step_(-step_scale, step_scale) {
    require(step_scale > 0.0 && step_scale <= 0.5, Errc::InvalidArgument,
            "step_scale must be in (0, 0.5]");
    std::uniform_real_distribution<double> start(0.0, 1.0);
    pos_ = {start(rng_), start(rng_)};
  }

  GazeSample next() {
    const GazeSample out = pos_;
    pos_.u = reflect(pos_.u + step_(rng_));
    pos_.v = reflect(pos_.v + step_(rng_));
    return out;
  }

 private:
  static double reflect(double x) {
    if (x < 0.0) x = -x;
    if (x >= 1.0) x = 2.0 - x;
    if (x >= 1.0) x = std::nextafter(1.0, 0.0);
    return std::max(x, 0.0);
  }

  Rng rng_;
  std::uniform_real_distribution<double> step_;
  GazeSample pos_;
};

inline GazeTrace synth_gaze(std::size_t steps, double step_scale, std::uint64_t seed) {
  SyntheticGaze gen(step_scale, seed);
  GazeTrace t;
  t.source_id = "synthetic";
  t.samples.reserve(steps);
  for (std::size_t n = 0; n < steps; ++n) t.samples.push_back(gen.next());
  return t;
}

struct TraceReadStats {
  std::size_t lines = 0;
  std::size_t clamped = 0;
};

// One frame per line: "u,v". Lines starting with '#' and blank lines are skipped.
inline GazeTrace read_trace(std::istream& in, const std::string& source_id, TraceReadStats* stats = nullptr) {
  GazeTrace trace;
  trace.source_id = source_id;
  std::string line;
  std::size_t lineno = 0;
  TraceReadStats local;
  const double below_one = std::nextafter(1.0, 0.0);
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, Errc::Io,
            source_id + ":" + std::to_string(lineno) + ": expected 'u,v'");
    char* end = nullptr;
    const std::string us = line.substr(0, comma);
    const std::string vs = line.substr(comma + 1);
    double u = std::strtod(us.c_str(), &end);
    require(end != us.c_str(), Errc::Io, source_id + ":" + std::to_string(lineno) + ": bad u value");
    double v = std::strtod(vs.c_str(), &end);
    require(end != vs.c_str(), Errc::Io, source_id + ":" + std::to_string(lineno) + ": bad v value");
    require(std::isfinite(u) && std::isfinite(v), Errc::Io,
            source_id + ":" + std::to_string(lineno) + ": non-finite gaze value");
    const double cu = std::clamp(u, 0.0, below_one);
    const double cv = std::clamp(v, 0.0, below_one);
    if (cu != u || cv != v) ++local.clamped;
    trace.samples.push_back({cu, cv});
    ++local.lines;
  }
  if (stats) *stats = local;
  return trace;
}

inline GazeTrace read_trace_file(const std::string& path, TraceReadStats* stats = nullptr) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::Io, "cannot open gaze trace " + path);
  return read_trace(in, path, stats);
}

// max_digits10 keeps the text round trip exact.
inline void write_trace(std::ostream& out, const GazeTrace& trace) {
  out << "# gaze trace " << trace.source_id << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : trace.samples) out << s.u << ',' << s.v << '\n';
}

/// Streams per-GoP attention profiles from a gaze source, F frames at a time.
template <typename Source>
class ProfileStream {
 public:
  ProfileStream(Source source, int frames, int cols, int rows, AttentionRule rule)
      : source_(std::move(source)), frames_(frames), cols_(cols), rows_(rows), rule_(rule) {
    rule_.validate();
    buffer_.resize(static_cast<std::size_t>(frames));
  }

  AttentionProfile next() {
    for (auto& s : buffer_) s = source_.next();
    return gop_attention(buffer_, rule_, cols_, rows_);
  }

 private:
  Source source_;
  int frames_;
  int cols_;
  int rows_;
  AttentionRule rule_;
  std::vector<GazeSample> buffer_;
};

// Loops a fixed trace forever; used for file-backed users.
class TraceCursor {
 public:
  explicit TraceCursor(GazeTrace trace) : trace_(std::move(trace)) {
    require(!trace_.samples.empty(), Errc::EmptyCorpus, "empty gaze trace");
  }
  GazeSample next() {
    const GazeSample s = trace_.samples[pos_];
    pos_ = (pos_ + 1) % trace_.samples.size();
    return s;
  }

 private:
  GazeTrace trace_;
  std::size_t pos_ = 0;
};

struct ProfileRow {
  long long t = 0;
  int user = 0;
  AttentionProfile profile;
};

inline void write_profile_csv_header(std::ostream& out) { out << "t,user,N1,N2,N3\n"; }

inline void write_profile_csv_row(std::ostream& out, const ProfileRow& row) {
  out << row.t << ',' << row.user << ',' << row.profile.counts[0] << ',' << row.profile.counts[1]
      << ',' << row.profile.counts[2] << '\n';
}

inline std::vector<ProfileRow> read_profile_csv(std::istream& in) {
  std::vector<ProfileRow> rows;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::Io, "empty attention CSV");
  require(line.rfind("t,user,N1,N2,N3", 0) == 0, Errc::Io, "unexpected attention CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ProfileRow r;
    char c1, c2, c3, c4;
    ls >> r.t >> c1 >> r.user >> c2 >> r.profile.counts[0] >> c3 >> r.profile.counts[1] >> c4 >>
        r.profile.counts[2];
    require(static_cast<bool>(ls) && c1 == ',' && c2 == ',' && c3 == ',' && c4 == ',', Errc::Io,
            "malformed attention CSV row: " + line);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace dtvr
