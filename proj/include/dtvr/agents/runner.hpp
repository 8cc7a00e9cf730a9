#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dtvr/agents/baselines.hpp"
#include "dtvr/agents/ddpg.hpp"
#include "dtvr/agents/variant.hpp"
#include "dtvr/env/environment.hpp"
#include "dtvr/gaze/gaze.hpp"
#include "dtvr/mdp/mdp.hpp"

namespace dtvr {

// Synthetic walks unless `traces` is non-empty; step scales cycle over users.
struct GazeSourceSpec {
  std::vector<double> step_scales{0.08, 0.05, 0.02, 0.01};
  std::vector<GazeTrace> traces;
};

struct RunSpec {
  EnvParams env;
  AgentConfig agent;
  RewardParams reward;
  AttentionRule attention;
  GazeSourceSpec gaze;
  double qoe_scale = 30.0;
  double eps_share = 1e-6;
  double eps_cap = 1e-6;
  int delta_t = 100;
  long long rounds = 500;
  long long offline_rounds = 100;  // training rounds before the offline learner freezes
  std::uint64_t seed = 1;

  void validate() const {
    env.validate();
    agent.validate();
    attention.validate();
    require(delta_t > 0 && rounds > 0, Errc::InvalidArgument, "delta_T and rounds must be positive");
    require(offline_rounds >= 0, Errc::InvalidArgument, "offline_rounds must be >= 0");
    require(qoe_scale > 0.0, Errc::InvalidArgument, "qoe_scale must be positive");
    require(gaze.traces.empty() ? !gaze.step_scales.empty() : true, Errc::InvalidArgument,
            "no gaze step scales configured");
  }
};

using ProfileSource = std::function<AttentionProfile()>;

inline std::vector<ProfileSource> make_profile_sources(const RunSpec& spec) {
  const auto& c = spec.env.content;
  std::vector<ProfileSource> out;
  for (int k = 0; k < spec.env.users; ++k) {
    const auto uk = static_cast<std::uint32_t>(k);
    if (spec.gaze.traces.empty()) {
      const double scale = spec.gaze.step_scales[static_cast<std::size_t>(k) % spec.gaze.step_scales.size()];
      auto stream = std::make_shared<ProfileStream<SyntheticGaze>>(SyntheticGaze(scale, spec.seed, uk), c.frames,
                                                                   c.cols, c.rows, spec.attention);
      out.emplace_back([stream] { return stream->next(); });
    } else {
      const std::size_t target = static_cast<std::size_t>(c.frames) * static_cast<std::size_t>(spec.delta_t) * 10;
      GazeTrace composed = compose_long_trace(spec.gaze.traces, target, spec.seed * 1000003ULL + uk);
      auto stream = std::make_shared<ProfileStream<TraceCursor>>(TraceCursor(std::move(composed)), c.frames, c.cols,
                                                                 c.rows, spec.attention);
      out.emplace_back([stream] { return stream->next(); });
    }
  }
  return out;
}

// Failed calibrations carry an infinite latency; aggregates count them at 10 T_th.
inline double metric_latency(double seconds, double threshold) {
  return std::isfinite(seconds) ? seconds : 10.0 * threshold;
}

struct SlotRecord {
  long long t = 0;
  long long round = 0;
  int slot = 0;
  RewardComponents reward;
  double hfqoe = 1.0;
  int delivered = 0;
  double mean_latency = 0.0;  // over users, failures counted at the cap
  double mean_download = 0.0;
  double mean_render = 0.0;
  double critic_loss = std::numeric_limits<double>::quiet_NaN();
};

struct RoundRecord {
  long long round = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_qoe = 0.0;
  double hfqoe = 1.0;
  double success_rate = 0.0;
  double mean_latency = 0.0;
  double mean_download = 0.0;
  double mean_render = 0.0;
  double mean_critic_loss = std::numeric_limits<double>::quiet_NaN();
  double explore_std = 0.0;
  long long train_steps = 0;
  double mean_step_ms = 0.0;  // wall clock; kept out of the deterministic logs
};

struct UserSummary {
  double mean_latency = 0.0;
  double mean_download = 0.0;
  double mean_render = 0.0;
  double mean_qoe = 0.0;
  double success_rate = 0.0;
  long long infinite_latency = 0;
};

struct TimingSummary {
  long long steps = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double median_ms = 0.0;  // filled by bench_train_step only
};

struct RunResult {
  Variant variant = Variant::Fper;
  std::vector<RoundRecord> rounds;
  std::vector<UserSummary> users;
  TimingSummary train_step;
  long long clipped_state_entries = 0;
  long long calibration_failures = 0;
  long long skipped_steps = 0;
  long long stale_priority_updates = 0;
  double wall_seconds = 0.0;

  double mean_reward_last(std::size_t n) const {
    n = std::min(n, rounds.size());
    if (n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = rounds.size() - n; i < rounds.size(); ++i) s += rounds[i].mean_reward;
    return s / static_cast<double>(n);
  }
};

// Full per-slot detail for callers that need more than the aggregates.
struct SlotView {
  const SlotRecord& record;
  std::span<const AttentionProfile> profiles;
  const ActionVector& action;
  const SlotOutcome& outcome;
};

using SlotObserver = std::function<void(const SlotView&)>;

template <typename Scalar>
struct RunHooks {
  SlotObserver on_slot;
  // Called after every round; the learner pointer is null for baselines.
  std::function<void(const RoundRecord&, const DdpgLearner<Scalar>*)> on_round;
};

namespace detail {

struct Welford {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double stddev() const { return n > 0 ? std::sqrt(m2 / static_cast<double>(n)) : 0.0; }
};

struct UserAccum {
  Welford latency, download, render, qoe;
  long long delivered = 0;
  long long slots = 0;
  long long infinite = 0;
};

}  // namespace detail

/// Runs `spec.rounds` DT rounds of `spec.delta_t` slots for one variant.
/// Biases are refreshed at the start of every round; the learner trains once
/// per slot as soon as the buffer holds a batch.
template <typename Scalar = float>
RunResult run_continual(const RunSpec& spec, Variant variant, const RunHooks<Scalar>& hooks) {
  const SlotObserver& observer = hooks.on_slot;
  spec.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int users = spec.env.users;
  const auto uk = static_cast<std::size_t>(users);

  Environment env(spec.env, spec.seed);
  auto sources = make_profile_sources(spec);
  StateNormalizer normalizer(StateScales::for_env(spec.env, spec.qoe_scale));
  DecodeParams decode = DecodeParams::for_env(spec.env);
  decode.eps_share = spec.eps_share;
  decode.eps_cap = spec.eps_cap;

  std::unique_ptr<DdpgLearner<Scalar>> learner;
  if (is_learner(variant)) {
    AgentConfig ac = spec.agent;
    ac.variant = variant;
    learner = std::make_unique<DdpgLearner<Scalar>>(state_dim(users), action_dim(users), ac, spec.seed);
  }
  Rng explore_rng = make_rng(spec.seed, Stream::Exploration);

  auto draw_profiles = [&] {
    std::vector<AttentionProfile> p(uk);
    for (std::size_t k = 0; k < uk; ++k) p[k] = sources[k]();
    return p;
  };

  std::vector<AttentionProfile> current = draw_profiles();
  Observation obs;
  obs.users.resize(uk);
  for (std::size_t k = 0; k < uk; ++k) {
    auto& u = obs.users[k];
    u.prev_profile = current[k];
    u.cur_profile = current[k];
    u.rate = spec.env.nominal_rate(static_cast<int>(k));
    u.frequency = spec.env.nominal_frequency();
  }
  std::vector<double> state = normalizer.normalize(obs);

  RunResult result;
  result.variant = variant;
  result.rounds.reserve(static_cast<std::size_t>(spec.rounds));
  std::vector<detail::UserAccum> acc(uk);
  detail::Welford step_ms;
  const ActionVector fixed = fixed_2k(spec.env);
  long long t = 0;

  for (long long round = 0; round < spec.rounds; ++round) {
    env.refresh_biases();
    const bool frozen = variant == Variant::OfflineDdpg && round >= spec.offline_rounds;
    const double noise = frozen ? 0.0 : spec.agent.exploration.at_round(round);
    detail::Welford round_reward, round_loss, round_ms;
    double qoe_sum = 0.0, lat_sum = 0.0, down_sum = 0.0, rend_sum = 0.0;
    long long delivered = 0, train_steps = 0;

    for (int slot = 0; slot < spec.delta_t; ++slot, ++t) {
      std::vector<double> raw;
      ActionVector action;
      if (learner) {
        raw = learner->act(state, noise, explore_rng);
        action = decode_action(raw, decode);
      } else if (variant == Variant::AvgAlloc) {
        action = average_allocation(spec.env, current);
      } else {
        action = fixed;
      }

      const SlotOutcome out = env.step(current, action);
      const auto qoe_values = out.qoe_values();
      SlotRecord rec;
      rec.t = t;
      rec.round = round;
      rec.slot = slot;
      rec.reward = reward(qoe_values, out.hfqoe, spec.reward);
      rec.hfqoe = out.hfqoe;
      result.calibration_failures += out.calibration_failures;

      const double cap = spec.env.latency_threshold;
      for (std::size_t k = 0; k < uk; ++k) {
        const auto& lat = out.latency[k];
        auto& a = acc[k];
        ++a.slots;
        a.qoe.add(out.quality[k].qoe);
        if (lat.delivered) {
          ++a.delivered;
          ++rec.delivered;
        }
        if (!std::isfinite(lat.total)) ++a.infinite;
        const double total = metric_latency(lat.total, cap);
        const double down = metric_latency(lat.download, cap);
        const double rend = metric_latency(lat.render, cap);
        a.latency.add(total);
        a.download.add(down);
        a.render.add(rend);
        rec.mean_latency += total / static_cast<double>(uk);
        rec.mean_download += down / static_cast<double>(uk);
        rec.mean_render += rend / static_cast<double>(uk);
        qoe_sum += out.quality[k].qoe;
      }
      lat_sum += rec.mean_latency;
      down_sum += rec.mean_download;
      rend_sum += rec.mean_render;
      delivered += rec.delivered;

      const std::vector<AttentionProfile> next = draw_profiles();
      for (std::size_t k = 0; k < uk; ++k) {
        auto& u = obs.users[k];
        u.prev_profile = current[k];
        u.prev_qoe = qoe_values[k];
        u.cur_profile = next[k];
        u.cur_qoe = env.fairness().average(k);
        u.rate = out.rate[k];
        u.frequency = action.users[k].frequency;
        u.t_download = out.latency[k].download;
        u.t_render = out.latency[k].render;
        u.t_total = out.latency[k].total;
      }
      obs.hfqoe = out.hfqoe;
      std::vector<double> next_state = normalizer.normalize(obs);

      if (learner && !frozen) {
        learner->store(Transition{state, raw, rec.reward.reward, next_state});
        if (learner->ready()) {
          const auto s0 = std::chrono::steady_clock::now();
          const TrainDiagnostics d = learner->train_step();
          const auto s1 = std::chrono::steady_clock::now();
          const double ms = std::chrono::duration<double, std::milli>(s1 - s0).count();
          step_ms.add(ms);
          round_ms.add(ms);
          rec.critic_loss = d.critic_loss;
          round_loss.add(d.critic_loss);
          ++train_steps;
        }
      }

      round_reward.add(rec.reward.reward);
      if (observer) observer(SlotView{rec, current, action, out});
      current = next;
      state = std::move(next_state);
    }

    RoundRecord rr;
    rr.round = round;
    rr.mean_reward = round_reward.mean;
    rr.std_reward = round_reward.stddev();
    rr.mean_qoe = qoe_sum / static_cast<double>(spec.delta_t * users);
    rr.hfqoe = env.fairness().hfqoe();
    rr.success_rate = static_cast<double>(delivered) / static_cast<double>(spec.delta_t * users);
    rr.mean_latency = lat_sum / static_cast<double>(spec.delta_t);
    rr.mean_download = down_sum / static_cast<double>(spec.delta_t);
    rr.mean_render = rend_sum / static_cast<double>(spec.delta_t);
    if (round_loss.n > 0) rr.mean_critic_loss = round_loss.mean;
    rr.explore_std = learner ? noise : 0.0;
    rr.train_steps = train_steps;
    rr.mean_step_ms = round_ms.mean;
    result.rounds.push_back(rr);
    if (hooks.on_round) hooks.on_round(rr, learner.get());
  }

  result.users.resize(uk);
  for (std::size_t k = 0; k < uk; ++k) {
    const auto& a = acc[k];
    auto& u = result.users[k];
    u.mean_latency = a.latency.mean;
    u.mean_download = a.download.mean;
    u.mean_render = a.render.mean;
    u.mean_qoe = a.qoe.mean;
    u.success_rate = a.slots > 0 ? static_cast<double>(a.delivered) / static_cast<double>(a.slots) : 0.0;
    u.infinite_latency = a.infinite;
  }
  result.train_step = {step_ms.n, step_ms.mean, step_ms.stddev()};
  result.clipped_state_entries = normalizer.clipped();
  if (learner) {
    result.skipped_steps = learner->skipped_steps();
    result.stale_priority_updates = learner->buffer().stale_updates();
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

template <typename Scalar = float>
RunResult run_continual(const RunSpec& spec, Variant variant, const SlotObserver& observer = {}) {
  return run_continual<Scalar>(spec, variant, RunHooks<Scalar>{observer, {}});
}

/// Wall time of `train_step` on a buffer filled with environment transitions
/// under random actions. The first `warmup` steps are discarded.
template <typename Scalar = float>
TimingSummary bench_train_step(const RunSpec& spec, Variant variant, long long steps, long long warmup = 100) {
  spec.validate();
  require(is_learner(variant), Errc::InvalidArgument, "only learning variants have a train step");
  require(steps > 0 && warmup >= 0, Errc::InvalidArgument, "bad step counts");
  const int users = spec.env.users;
  const auto uk = static_cast<std::size_t>(users);
  Environment env(spec.env, spec.seed);
  auto sources = make_profile_sources(spec);
  StateNormalizer normalizer(StateScales::for_env(spec.env, spec.qoe_scale));
  DecodeParams decode = DecodeParams::for_env(spec.env);
  AgentConfig ac = spec.agent;
  ac.variant = variant;
  DdpgLearner<Scalar> learner(state_dim(users), action_dim(users), ac, spec.seed);
  Rng rng = make_rng(spec.seed, Stream::Exploration);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Observation obs;
  obs.users.resize(uk);
  std::vector<AttentionProfile> profiles(uk);
  for (std::size_t k = 0; k < uk; ++k) profiles[k] = sources[k]();
  std::vector<double> state = normalizer.normalize(obs);
  for (std::size_t i = 0; i < ac.buffer.capacity; ++i) {
    if (i % static_cast<std::size_t>(spec.delta_t) == 0) env.refresh_biases();
    std::vector<double> raw(static_cast<std::size_t>(action_dim(users)));
    for (double& x : raw) x = unit(rng);
    const SlotOutcome out = env.step(profiles, decode_action(raw, decode));
    const auto q = out.qoe_values();
    for (std::size_t k = 0; k < uk; ++k) {
      obs.users[k].prev_profile = profiles[k];
      obs.users[k].prev_qoe = q[k];
      profiles[k] = sources[k]();
      obs.users[k].cur_profile = profiles[k];
      obs.users[k].cur_qoe = env.fairness().average(k);
      obs.users[k].rate = out.rate[k];
      obs.users[k].t_download = out.latency[k].download;
      obs.users[k].t_render = out.latency[k].render;
      obs.users[k].t_total = out.latency[k].total;
    }
    obs.hfqoe = out.hfqoe;
    std::vector<double> next = normalizer.normalize(obs);
    learner.store(Transition{state, raw, reward(q, out.hfqoe, spec.reward).reward, next});
    state = std::move(next);
  }

  detail::Welford ms;
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(steps));
  for (long long i = 0; i < warmup + steps; ++i) {
    const auto s0 = std::chrono::steady_clock::now();
    learner.train_step();
    const auto s1 = std::chrono::steady_clock::now();
    if (i < warmup) continue;
    samples.push_back(std::chrono::duration<double, std::milli>(s1 - s0).count());
    ms.add(samples.back());
  }
  // The median shrugs off the occasional preempted step.
  const auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  double median = *mid;
  if (samples.size() % 2 == 0) median = 0.5 * (median + *std::max_element(samples.begin(), mid));
  return {ms.n, ms.mean, ms.stddev(), median};
}

}  // namespace dtvr
