#pragma once

#include <array>
#include <span>

#include "dtvr/env/action.hpp"
#include "dtvr/env/content.hpp"
#include "dtvr/env/environment.hpp"
#include "dtvr/env/qoe.hpp"

namespace dtvr {

inline constexpr double kTwoKFraction = (2560.0 * 1440.0) / (3840.0 * 2160.0);

inline constexpr int kAvgGrid = 8;

// Equal shares, 2K on every tile regardless of attention.
inline ActionVector fixed_2k(const EnvParams& env) {
  ActionVector a;
  a.users.resize(static_cast<std::size_t>(env.users));
  for (auto& u : a.users) {
    u.bandwidth = env.bandwidth_max / env.users;
    u.frequency = env.frequency_max / env.users;
    u.resolution = ResolutionAssignment::from_fractions({kTwoKFraction, kTwoKFraction, kTwoKFraction}, env.content.b_max);
  }
  return a;
}

// Latency the twin expects for one user: unit gain, no calibration bias.
inline double predicted_latency(const EnvParams& env, int k, const AttentionProfile& profile,
                                const ResolutionAssignment& res, double bandwidth, double frequency) {
  const auto& c = env.content;
  const GopSize gop = gop_size(profile, res, c.frames, c.tiles());
  const ChannelState ch = env.channel(k, bandwidth, 1.0, 0.0);
  double t = download_latency(gop.total, ch) +
             render_latency(gop.per_level, c.cycles_per_bit, ComputeState{frequency, 0.0, env.frequency_max});
  return t;
}

/// Equal shares; per user, the resolution pair on an 8-point grid of each
/// box that maximizes the perception weight while the predicted latency stays
/// within T_th. Ties go to the larger r1 + r2; if nothing fits, both minima.
inline ActionVector average_allocation(const EnvParams& env, std::span<const AttentionProfile> profiles) {
  require(static_cast<int>(profiles.size()) == env.users, Errc::DimensionMismatch, "need one profile per user");
  const auto& c = env.content;
  const double bw = env.bandwidth_max / env.users;
  const double f = env.frequency_max / env.users;
  auto grid = [&](int box, int i) { return c.res_range[box].lo + i * c.res_range[box].width() / kAvgGrid; };

  ActionVector a;
  a.users.resize(profiles.size());
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    ResolutionAssignment best = ResolutionAssignment::from_fractions({grid(0, 0), grid(1, 0), c.r_top}, c.b_max);
    double best_weight = -1e300;
    double best_sum = -1.0;
    bool found = false;
    for (int i = 0; i < kAvgGrid; ++i)
      for (int j = 0; j < kAvgGrid; ++j) {
        const auto res = ResolutionAssignment::from_fractions({grid(0, i), grid(1, j), c.r_top}, c.b_max);
        if (predicted_latency(env, static_cast<int>(k), profiles[k], res, bw, f) > env.latency_threshold) continue;
        const double w = perception_weight(profiles[k], res, c.tiles(), c.b_th);
        const double sum = res.r[0] + res.r[1];
        if (!found || w > best_weight || (w == best_weight && sum > best_sum)) {
          best = res;
          best_weight = w;
          best_sum = sum;
          found = true;
        }
      }
    a.users[k] = UserAllocation{best, bw, f};
  }
  return a;
}

}  // namespace dtvr
