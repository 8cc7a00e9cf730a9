#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dtvr/env/action.hpp"
#include "dtvr/env/content.hpp"
#include "dtvr/env/environment.hpp"
#include "dtvr/error.hpp"

namespace dtvr {

inline constexpr int kStatePerUser = 13;
inline constexpr int kActionPerUser = 4;

inline int state_dim(int users) { return kStatePerUser * users + 1; }
inline int action_dim(int users) { return kActionPerUser * users; }

// What the agent sees about one user before acting in slot t.
struct UserObservation {
  AttentionProfile prev_profile;
  double prev_qoe = 0.0;
  AttentionProfile cur_profile;
  double cur_qoe = 0.0;  // running horizon-average QoE of this user
  double rate = 0.0;
  double frequency = 0.0;
  double t_download = 0.0;
  double t_render = 0.0;
  double t_total = 0.0;
};

struct Observation {
  std::vector<UserObservation> users;
  double hfqoe = 1.0;
};

struct StateScales {
  int tiles = 16;
  double qoe = 30.0;
  double rate = 1.0;
  double frequency = 1.0;
  double latency = 0.6;

  static StateScales for_env(const EnvParams& env, double qoe_scale = 30.0) {
    StateScales s;
    s.tiles = env.content.tiles();
    s.qoe = qoe_scale;
    ChannelState ch = env.channel(0, env.bandwidth_max, 1.0, 0.0);
    ch.distance = env.nearest_distance();
    s.rate = transmission_rate(ch);
    s.frequency = env.frequency_max;
    s.latency = 4.0 * env.latency_threshold;
    return s;
  }
};

/// Maps raw observations into [0,1]^(13K+1), counting every clipped entry.
class StateNormalizer {
 public:
  explicit StateNormalizer(StateScales scales) : scales_(scales) {
    require(scales_.tiles > 0 && scales_.qoe > 0 && scales_.rate > 0 && scales_.frequency > 0 &&
                scales_.latency > 0,
            Errc::InvalidArgument, "state scales must be positive");
  }

  const StateScales& scales() const { return scales_; }
  long long clipped() const { return clipped_; }

  std::vector<double> normalize(const Observation& obs) {
    std::vector<double> s;
    s.reserve(obs.users.size() * kStatePerUser + 1);
    const double n = scales_.tiles;
    for (const auto& u : obs.users) {
      for (int a = 0; a < kLevels; ++a) s.push_back(clip(u.prev_profile.counts[a] / n));
      s.push_back(clip(u.prev_qoe / scales_.qoe));
      for (int a = 0; a < kLevels; ++a) s.push_back(clip(u.cur_profile.counts[a] / n));
      s.push_back(clip(u.cur_qoe / scales_.qoe));
      s.push_back(clip(u.rate / scales_.rate));
      s.push_back(clip(u.frequency / scales_.frequency));
      s.push_back(clip(u.t_download / scales_.latency));
      s.push_back(clip(u.t_render / scales_.latency));
      s.push_back(clip(u.t_total / scales_.latency));
    }
    s.push_back(clip(obs.hfqoe));
    return s;
  }

  Observation denormalize(std::span<const double> s) const {
    require(s.size() % kStatePerUser == 1, Errc::DimensionMismatch, "state length must be 13K+1");
    const std::size_t users = s.size() / kStatePerUser;
    Observation obs;
    obs.users.resize(users);
    const double n = scales_.tiles;
    for (std::size_t k = 0; k < users; ++k) {
      const double* b = s.data() + k * kStatePerUser;
      auto& u = obs.users[k];
      for (int a = 0; a < kLevels; ++a) u.prev_profile.counts[a] = static_cast<int>(std::lround(b[a] * n));
      u.prev_qoe = b[3] * scales_.qoe;
      for (int a = 0; a < kLevels; ++a) u.cur_profile.counts[a] = static_cast<int>(std::lround(b[4 + a] * n));
      u.cur_qoe = b[7] * scales_.qoe;
      u.rate = b[8] * scales_.rate;
      u.frequency = b[9] * scales_.frequency;
      u.t_download = b[10] * scales_.latency;
      u.t_render = b[11] * scales_.latency;
      u.t_total = b[12] * scales_.latency;
    }
    obs.hfqoe = s.back();
    return obs;
  }

 private:
  double clip(double x) {
    if (std::isnan(x)) {
      ++clipped_;
      return 0.0;
    }
    if (x < 0.0 || x > 1.0) {
      ++clipped_;
      return std::clamp(x, 0.0, 1.0);
    }
    return x;
  }

  StateScales scales_;
  long long clipped_ = 0;
};

struct DecodeParams {
  double bandwidth_max = 10e6;
  double frequency_max = 15e9;
  double b_max = 12441600.0;
  std::array<Interval, 2> res_range{Interval{1.0 / 8.0, 1.0 / 4.0}, Interval{1.0 / 4.0, 1.0 / 2.0}};
  double r_top = 1.0;
  double eps_share = 1e-6;
  double eps_cap = 1e-6;

  static DecodeParams for_env(const EnvParams& env) {
    DecodeParams d;
    d.bandwidth_max = env.bandwidth_max;
    d.frequency_max = env.frequency_max;
    d.b_max = env.content.b_max;
    d.res_range = env.content.res_range;
    d.r_top = env.content.r_top;
    return d;
  }
};

/// Normalized action (x_r1, x_r2, x_B, x_f per user) -> constrained {b, B, f}.
/// The full bandwidth and CPU budgets are always handed out.
inline ActionVector decode_action(std::span<const double> raw, const DecodeParams& p) {
  require(!raw.empty() && raw.size() % kActionPerUser == 0, Errc::DimensionMismatch,
          "raw action length must be 4K");
  require(p.eps_share > 0.0, Errc::InvalidArgument, "eps_share must be positive");
  const std::size_t users = raw.size() / kActionPerUser;
  auto at = [&](std::size_t k, int c) { return std::clamp(raw[k * kActionPerUser + c], 0.0, 1.0); };

  double b_sum = 0.0;
  double f_sum = 0.0;
  for (std::size_t k = 0; k < users; ++k) {
    b_sum += at(k, 2) + p.eps_share;
    f_sum += at(k, 3) + p.eps_share;
  }

  ActionVector out;
  out.users.resize(users);
  for (std::size_t k = 0; k < users; ++k) {
    std::array<double, kLevels> r{};
    for (int a = 0; a < 2; ++a) r[a] = p.res_range[a].lo + at(k, a) * p.res_range[a].width() * (1.0 - p.eps_cap);
    r[2] = p.r_top;
    out.users[k].resolution = ResolutionAssignment::from_fractions(r, p.b_max);
    out.users[k].bandwidth = p.bandwidth_max * (at(k, 2) + p.eps_share) / b_sum;
    out.users[k].frequency = p.frequency_max * (at(k, 3) + p.eps_share) / f_sum;
  }
  return out;
}

struct RewardParams {
  double qoe_threshold = 9.8645;
  double hfqoe_threshold = 0.97;
  double w1 = 2.0;
  double w2 = 2.0;
};

struct RewardComponents {
  double sum_qoe = 0.0;
  int q_qoe = 0;
  int q_hf = 0;
  double w1 = 0.0;
  double w2 = 0.0;
  double reward = 0.0;
};

inline RewardComponents reward(std::span<const double> qoe_per_user, double hfqoe, const RewardParams& p) {
  RewardComponents rc;
  rc.w1 = p.w1;
  rc.w2 = p.w2;
  for (double q : qoe_per_user) {
    rc.sum_qoe += q;
    if (q < p.qoe_threshold) ++rc.q_qoe;
  }
  rc.q_hf = hfqoe < p.hfqoe_threshold ? 1 : 0;
  rc.reward = rc.sum_qoe - p.w1 * rc.q_qoe - p.w2 * rc.q_hf;
  return rc;
}

// Logged only; the continual objective is never optimized directly.
inline double discounted_return(std::span<const double> rewards, double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, Errc::InvalidArgument, "gamma must be in [0,1)");
  double total = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

}  // namespace dtvr
