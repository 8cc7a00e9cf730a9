#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "dtvr/env/action.hpp"
#include "dtvr/env/channel.hpp"
#include "dtvr/env/content.hpp"
#include "dtvr/env/qoe.hpp"
#include "dtvr/error.hpp"
#include "dtvr/random.hpp"

namespace dtvr {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

/// Physical constants of the single-cell edge system.
struct EnvParams {
  int users = 4;
  ContentConfig content;
  double latency_threshold = 0.150;  // T_th, s
  double power = 1.0;                // W
  double bandwidth_max = 10e6;       // Hz
  double frequency_max = 15e9;       // Hz
  double alpha = 4.0;
  double noise_w = dbm_to_watt(-174.0);
  double interference_w = 0.0;
  std::vector<Position> positions{{23, 1}, {20, 0}, {10, 5}, {15, 5}};
  double eps1 = 1.0;
  double compression = 300.0;
  bool prerender_compression = false;
  // DT calibration bias drift, redrawn once per DT round.
  double bias_rho = 0.9;
  double bias_frac = 0.05;
  double bias_noise = 0.02;
  bool fading = true;

  // Users beyond the listed positions reuse them cyclically.
  double distance(int k) const {
    require(!positions.empty(), Errc::InvalidArgument, "no user positions configured");
    const auto& p = positions[static_cast<std::size_t>(k) % positions.size()];
    return std::hypot(p.x, p.y);
  }

  ChannelState channel(int k, double bandwidth, double gain, double rate_bias) const {
    ChannelState ch;
    ch.bandwidth = bandwidth;
    ch.power = power;
    ch.gain = gain;
    ch.distance = distance(k);
    ch.alpha = alpha;
    ch.interference = interference_w;
    ch.noise = noise_w;
    ch.rate_bias = rate_bias;
    ch.compression = compression;
    return ch;
  }

  // Rate under an equal bandwidth share and unit gain.
  double nominal_rate(int k) const {
    return transmission_rate(channel(k, bandwidth_max / users, 1.0, 0.0));
  }
  double nominal_frequency() const { return frequency_max / users; }

  double nearest_distance() const {
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < users; ++k) d = std::min(d, distance(k));
    return d;
  }

  void validate() const {
    content.validate();
    require(users >= 1, Errc::InvalidArgument, "need at least one user");
    require(latency_threshold > 0.0, Errc::InvalidArgument, "T_th must be positive");
    require(power > 0.0 && bandwidth_max > 0.0 && frequency_max > 0.0, Errc::InvalidArgument,
            "power and resource budgets must be positive");
    require(noise_w > 0.0 && interference_w >= 0.0, Errc::InvalidArgument, "bad noise/interference");
    require(eps1 > 0.0 && compression > 0.0, Errc::InvalidArgument, "eps1 and omega must be positive");
    require(bias_rho >= 0.0 && bias_rho < 1.0, Errc::InvalidArgument, "bias_rho must be in [0,1)");
    require(bias_frac >= 0.0 && bias_noise >= 0.0, Errc::InvalidArgument, "bias knobs must be >= 0");
    require(!positions.empty(), Errc::InvalidArgument, "no user positions configured");
    for (int k = 0; k < users; ++k)
      require(distance(k) > 0.0, Errc::InvalidArgument, "user cannot sit on the base station");
  }
};

struct BiasState {
  std::vector<double> rate;       // Delta R_k, bit/s
  std::vector<double> frequency;  // Delta f_k, Hz
};

struct SlotOutcome {
  std::vector<LatencyRecord> latency;
  std::vector<QoERecord> quality;
  std::vector<double> rate;  // theoretical R_k
  std::vector<double> gop_bits;
  double hfqoe = 1.0;
  int calibration_failures = 0;

  std::vector<double> qoe_values() const {
    std::vector<double> q;
    q.reserve(quality.size());
    for (const auto& r : quality) q.push_back(r.qoe);
    return q;
  }
};

/// One slot of Eqs. for every user, without touching fairness state.
/// `gains` are the Rayleigh power gains drawn for this slot.
inline SlotOutcome evaluate_slot(const EnvParams& env, std::span<const AttentionProfile> profiles,
                                 const ActionVector& action, std::span<const double> gains,
                                 const BiasState& bias) {
  const auto k_users = static_cast<std::size_t>(env.users);
  require(profiles.size() == k_users && action.users.size() == k_users && gains.size() == k_users &&
              bias.rate.size() == k_users && bias.frequency.size() == k_users,
          Errc::DimensionMismatch, "per-user inputs must all have K entries");
  const auto& c = env.content;
  const double inf = std::numeric_limits<double>::infinity();

  SlotOutcome out;
  out.latency.reserve(k_users);
  out.quality.reserve(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    const auto& alloc = action.users[k];
    const GopSize gop = gop_size(profiles[k], alloc.resolution, c.frames, c.tiles());
    const ChannelState ch = env.channel(static_cast<int>(k), alloc.bandwidth, gains[k], bias.rate[k]);
    const double rate = transmission_rate(ch);

    double t_down = inf;
    double t_render = inf;
    bool failed = false;
    try {
      t_down = download_latency(gop.total, rate, ch);
    } catch (const Error&) {
      failed = true;
    }
    try {
      ComputeState comp{alloc.frequency, bias.frequency[k], env.frequency_max};
      t_render = render_latency(gop.per_level, c.cycles_per_bit, comp);
      if (env.prerender_compression) t_render /= env.compression;
    } catch (const Error&) {
      failed = true;
    }
    if (failed) ++out.calibration_failures;

    LatencyRecord lat = make_latency(t_down, t_render, env.latency_threshold);
    QoERecord q;
    q.eps1 = env.eps1;
    q.psnr = psnr(lat.delivered, env.eps1);
    q.qoe = qoe(q.psnr, profiles[k], alloc.resolution, c.tiles(), c.b_th);
    out.latency.push_back(lat);
    out.quality.push_back(q);
    out.rate.push_back(rate);
    out.gop_bits.push_back(gop.total);
  }
  return out;
}

// Stateful slot simulator: owns the channel/bias RNGs and the fairness horizon.
class Environment {
 public:
  Environment(EnvParams params, std::uint64_t seed)
      : params_(std::move(params)),
        channel_rng_(make_rng(seed, Stream::Channel)),
        bias_rng_(make_rng(seed, Stream::Bias)),
        fairness_(static_cast<std::size_t>(params_.users)) {
    params_.validate();
    bias_.rate.assign(params_.users, 0.0);
    bias_.frequency.assign(params_.users, 0.0);
  }

  const EnvParams& params() const { return params_; }
  const BiasState& bias() const { return bias_; }
  const FairnessTracker& fairness() const { return fairness_; }

  // AR(1) drift of the DT calibration biases, clipped to [0, frac * nominal].
  void refresh_biases() {
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < params_.users; ++k) {
      const double nominal_r = params_.nominal_rate(k);
      const double nominal_f = params_.nominal_frequency();
      auto drift = [&](double prev, double nominal) {
        const double next = params_.bias_rho * prev + params_.bias_noise * nominal * unit(bias_rng_);
        return std::clamp(next, 0.0, params_.bias_frac * nominal);
      };
      bias_.rate[k] = drift(bias_.rate[k], nominal_r);
      bias_.frequency[k] = drift(bias_.frequency[k], nominal_f);
    }
  }

  std::vector<double> draw_gains() {
    std::vector<double> gains(params_.users, 1.0);
    if (!params_.fading) return gains;
    std::exponential_distribution<double> rayleigh_power(1.0);
    for (auto& g : gains) g = rayleigh_power(channel_rng_);
    return gains;
  }

  SlotOutcome step(std::span<const AttentionProfile> profiles, const ActionVector& action) {
    const auto gains = draw_gains();
    return step_with_gains(profiles, action, gains);
  }

  SlotOutcome step_with_gains(std::span<const AttentionProfile> profiles, const ActionVector& action,
                              std::span<const double> gains) {
    SlotOutcome out = evaluate_slot(params_, profiles, action, gains, bias_);
    const auto q = out.qoe_values();
    out.hfqoe = fairness_.update(q);
    return out;
  }

 private:
  EnvParams params_;
  Rng channel_rng_;
  Rng bias_rng_;
  FairnessTracker fairness_;
  BiasState bias_;
};

}  // namespace dtvr
