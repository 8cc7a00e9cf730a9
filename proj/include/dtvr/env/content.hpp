#pragma once

#include <array>
#include <cmath>
#include <string>

#include "dtvr/error.hpp"

namespace dtvr {

inline constexpr int kLevels = 3;

// Closed-open interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x < hi; }
  double width() const { return hi - lo; }
};

/// Tile grid and per-level encoding costs of the FoV content.
struct ContentConfig {
  int cols = 4;    // I
  int rows = 4;    // J
  int frames = 16; // F, frames per GoP
  double b_max = 12441600.0;
  double b_th = 460800.0;
  std::array<double, kLevels> cycles_per_bit{800.0, 900.0, 1000.0};
  std::array<Interval, 2> res_range{Interval{1.0 / 8.0, 1.0 / 4.0}, Interval{1.0 / 4.0, 1.0 / 2.0}};
  double r_top = 1.0;

  int tiles() const { return cols * rows; }

  void validate() const {
    require(cols > 0 && rows > 0, Errc::InvalidArgument, "tile grid must be non-empty");
    require(frames > 0, Errc::InvalidArgument, "frames per GoP must be positive");
    require(b_th > 0.0 && b_th < b_max, Errc::InvalidArgument, "require 0 < b_th < b_max");
    for (int a = 0; a < kLevels; ++a) {
      require(cycles_per_bit[a] > 0.0, Errc::InvalidArgument, "cycles per bit must be positive");
      if (a > 0)
        require(cycles_per_bit[a] >= cycles_per_bit[a - 1], Errc::InvalidArgument,
                "cycles per bit must be non-decreasing in attention level");
    }
    for (const auto& r : res_range)
      require(r.lo > 0.0 && r.lo < r.hi && r.hi <= 1.0, Errc::InvalidArgument,
              "resolution range must satisfy 0 < lo < hi <= 1");
    require(r_top > 0.0 && r_top <= 1.0, Errc::InvalidArgument, "top resolution must be in (0,1]");
  }
};

/// Tiles per attention level (index 0 = level 1 / SD ... index 2 = level 3 / UHD).
struct AttentionProfile {
  std::array<int, kLevels> counts{0, 0, 0};

  int total() const { return counts[0] + counts[1] + counts[2]; }
  bool operator==(const AttentionProfile&) const = default;
};

inline void validate_profile(const AttentionProfile& p, int tiles) {
  for (int n : p.counts) require(n >= 0, Errc::InvalidArgument, "negative tile count");
  require(tiles > 0 && p.total() == tiles, Errc::InvalidArgument,
          "attention counts must sum to the tile count N=" + std::to_string(tiles));
}

inline double tile_bits(double r, double b_max) {
  require(r > 0.0 && r <= 1.0, Errc::InvalidArgument, "resolution fraction must be in (0,1]");
  return r * b_max;
}

struct ResolutionAssignment {
  std::array<double, kLevels> r{};
  std::array<double, kLevels> bits{};

  static ResolutionAssignment from_fractions(const std::array<double, kLevels>& r, double b_max) {
    ResolutionAssignment out;
    for (int a = 0; a < kLevels; ++a) {
      out.r[a] = r[a];
      out.bits[a] = tile_bits(r[a], b_max);
    }
    return out;
  }

  // Whether the fractions sit inside the configured attention boxes.
  bool within(const ContentConfig& c) const {
    return c.res_range[0].contains(r[0]) && c.res_range[1].contains(r[1]) && r[2] == c.r_top;
  }
};

struct GopSize {
  std::array<double, kLevels> per_level{};
  double total = 0.0;
};

/// Bits of one GoP: g_a = N_a * b_a * F, G = sum over levels.
inline GopSize gop_size(const AttentionProfile& profile, const ResolutionAssignment& res,
                        int frames, int tiles) {
  validate_profile(profile, tiles);
  require(frames > 0, Errc::InvalidArgument, "frames per GoP must be positive");
  GopSize g;
  for (int a = 0; a < kLevels; ++a) {
    g.per_level[a] = static_cast<double>(profile.counts[a]) * res.bits[a] * frames;
    g.total += g.per_level[a];
  }
  return g;
}

}  // namespace dtvr
