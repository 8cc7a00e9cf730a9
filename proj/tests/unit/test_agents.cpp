#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "dtvr/agents/baselines.hpp"
#include "dtvr/agents/ddpg.hpp"
#include "dtvr/agents/runner.hpp"

using namespace dtvr;

namespace {

AgentConfig small_config(Variant v) {
  AgentConfig c;
  c.variant = v;
  c.hidden_layers = 2;
  c.hidden_width = 16;
  c.batch = 8;
  c.buffer.capacity = 64;
  c.lr_actor = 1e-3;
  c.lr_critic = 1e-3;
  return c;
}

Transition random_transition(int sd, int ad, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Transition t;
  t.state.resize(static_cast<std::size_t>(sd));
  t.next_state.resize(static_cast<std::size_t>(sd));
  t.action.resize(static_cast<std::size_t>(ad));
  for (double& x : t.state) x = u(rng);
  for (double& x : t.next_state) x = u(rng);
  for (double& x : t.action) x = u(rng);
  t.reward = 10 * u(rng);
  return t;
}

RunSpec tiny_spec(int rounds) {
  RunSpec s;
  s.env.content.cycles_per_bit = {0.16, 0.18, 0.2};
  s.agent = small_config(Variant::Fper);
  s.rounds = rounds;
  s.delta_t = 20;
  s.offline_rounds = 1;
  return s;
}

}  // namespace

TEST(Variant, NamesRoundTrip) {
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("ddqn"), Error);
  EXPECT_TRUE(is_learner(Variant::OfflineDdpg));
  EXPECT_FALSE(is_learner(Variant::AvgAlloc));
  EXPECT_EQ(replay_mode(Variant::Fper), ReplayMode::Fper);
  EXPECT_EQ(replay_mode(Variant::Per), ReplayMode::Per);
  EXPECT_EQ(replay_mode(Variant::Cddpg), ReplayMode::Uniform);
}

TEST(Exploration, DecaysToFloor) {
  ExplorationSchedule e;
  EXPECT_DOUBLE_EQ(e.at_round(0), 0.2);
  EXPECT_DOUBLE_EQ(e.at_round(10), 0.2 * std::pow(0.995, 10));
  EXPECT_DOUBLE_EQ(e.at_round(100000), 0.01);
}

TEST(Ddpg, TdTargetWithConstantTargetCritic) {
  DdpgLearner<double> l(5, 2, small_config(Variant::Fper), 3);
  auto& last = l.critic_target().params().back();
  last.weight.setZero();
  last.bias.setConstant(2.0);
  const std::vector<double> s(5, 0.3);
  EXPECT_NEAR(l.td_target(1.0, s), 2.98, 1e-12);
}

TEST(Ddpg, ActionsStayInUnitBox) {
  DdpgLearner<double> l(7, 4, small_config(Variant::Cddpg), 5);
  Rng rng(1);
  const std::vector<double> s(7, 0.5);
  for (int i = 0; i < 200; ++i)
    for (double a : l.act(s, 1.0, rng)) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  // Small final layer: the noiseless policy starts near the box centre.
  for (double a : l.act(s, 0.0, rng)) EXPECT_NEAR(a, 0.5, 0.01);
}

TEST(Ddpg, RejectsMismatchedTransitions) {
  DdpgLearner<double> l(7, 4, small_config(Variant::Per), 5);
  Rng rng(1);
  EXPECT_THROW(l.store(random_transition(6, 4, rng)), Error);
  EXPECT_THROW(l.train_step(), Error);
}

// After one step, every sampled entry's priority equals |y - Q(s,a)| + eps
// evaluated with the pre-step networks.
TEST(Ddpg, PriorityRefreshUsesPreStepTdError) {
  for (Variant v : {Variant::Per, Variant::Fper}) {
    DdpgLearner<double> l(6, 3, small_config(v), 9);
    Rng rng(2);
    for (int i = 0; i < 20; ++i) l.store(random_transition(6, 3, rng));
    const DdpgLearner<double> before = l;
    l.train_step();
    int sampled = 0;
    for (std::size_t i = 0; i < l.buffer().size(); ++i) {
      const auto& e = l.buffer().entry(i);
      if (e.replays == 0) continue;
      ++sampled;
      const auto& t = e.item;
      const double td = std::abs(before.td_error(before.td_target(t.reward, t.next_state), t.state, t.action));
      const double expect = v == Variant::Fper ? std::pow(0.95, e.replays) * td + 1e-3 : td + 1e-3;
      EXPECT_NEAR(e.priority, expect, 1e-9 * (1 + expect));
    }
    EXPECT_GT(sampled, 0);
  }
}

TEST(Ddpg, TargetsTrackOnlinePolyak) {
  DdpgLearner<double> l(6, 3, small_config(Variant::Cddpg), 9);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) l.store(random_transition(6, 3, rng));
  const auto target0 = l.actor_target().params();
  l.train_step();
  const auto& online = l.actor().params();
  const auto& target1 = l.actor_target().params();
  for (std::size_t k = 0; k < target0.size(); ++k)
    for (Eigen::Index i = 0; i < target0[k].weight.size(); ++i)
      EXPECT_NEAR(target1[k].weight.data()[i], 0.01 * online[k].weight.data()[i] + 0.99 * target0[k].weight.data()[i],
                  1e-15);
}

TEST(Ddpg, CriticFitsConstantReward) {
  auto cfg = small_config(Variant::Cddpg);
  cfg.gamma = 0.0;
  cfg.batch = 32;
  DdpgLearner<double> l(4, 2, cfg, 1);
  Rng rng(3);
  for (int i = 0; i < 64; ++i) {
    auto t = random_transition(4, 2, rng);
    t.reward = 5.0;
    l.store(t);
  }
  for (int i = 0; i < 1500; ++i) l.train_step();
  const auto t = random_transition(4, 2, rng);
  EXPECT_NEAR(l.q_value(t.state, t.action), 5.0, 0.25);
}

// With gamma = 0 the critic learns r(a) = -(a - 0.3)^2 and the actor should
// climb toward a = 0.3.
TEST(Ddpg, ActorClimbsCriticTowardBestAction) {
  auto cfg = small_config(Variant::Cddpg);
  cfg.gamma = 0.0;
  cfg.batch = 32;
  cfg.buffer.capacity = 2000;
  cfg.actor_final_scale = 1.0;
  cfg.lr_actor = 1e-3;
  DdpgLearner<double> l(2, 1, cfg, 4);
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> s{0.5, 0.5};
  for (int i = 0; i < 3000; ++i) {
    auto a = l.act(s, 0.3, rng);
    l.store(Transition{s, a, -(a[0] - 0.3) * (a[0] - 0.3), s});
    if (l.ready()) l.train_step();
  }
  EXPECT_NEAR(l.act(s, 0.0, rng)[0], 0.3, 0.1);
}

TEST(Ddpg, SameSeedSameTrajectory) {
  auto run = [] {
    DdpgLearner<float> l(6, 3, small_config(Variant::Fper), 11);
    Rng rng(2);
    std::vector<double> losses;
    for (int i = 0; i < 40; ++i) {
      l.store(random_transition(6, 3, rng));
      if (l.ready()) losses.push_back(l.train_step().critic_loss);
    }
    return losses;
  };
  EXPECT_EQ(run(), run());
}

TEST(Ddpg, CheckpointRoundTrip) {
  DdpgLearner<double> a(6, 3, small_config(Variant::Fper), 11);
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    a.store(random_transition(6, 3, rng));
    if (a.ready()) a.train_step();
  }
  std::stringstream s;
  a.save_checkpoint(s);
  DdpgLearner<double> b(6, 3, small_config(Variant::Fper), 99);
  b.load_checkpoint(s);
  const auto t = random_transition(6, 3, rng);
  EXPECT_EQ(a.q_value(t.state, t.action), b.q_value(t.state, t.action));
  EXPECT_EQ(a.td_target(t.reward, t.next_state), b.td_target(t.reward, t.next_state));
  Rng r1(0), r2(0);
  EXPECT_EQ(a.act(t.state, 0.0, r1), b.act(t.state, 0.0, r2));

  DdpgLearner<double> wrong(7, 3, small_config(Variant::Fper), 1);
  std::stringstream s2;
  a.save_checkpoint(s2);
  try {
    wrong.load_checkpoint(s2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CorruptCheckpoint);
  }
}

TEST(Baselines, FixedTwoKSplitsEqually) {
  EnvParams env;
  const auto a = fixed_2k(env);
  ASSERT_EQ(a.users.size(), 4u);
  EXPECT_NEAR(kTwoKFraction, 4.0 / 9.0, 1e-15);
  for (const auto& u : a.users) {
    EXPECT_DOUBLE_EQ(u.bandwidth, 2.5e6);
    EXPECT_DOUBLE_EQ(u.frequency, 3.75e9);
    for (double r : u.resolution.r) EXPECT_DOUBLE_EQ(r, 4.0 / 9.0);
  }
}

TEST(Baselines, AverageAllocationIsBestFeasibleGridPoint) {
  EnvParams env;
  env.content.cycles_per_bit = {0.16, 0.18, 0.2};
  const auto& c = env.content;
  Rng rng(3);
  ProfileStream<SyntheticGaze> src(SyntheticGaze(0.05, 3), c.frames, c.cols, c.rows, AttentionRule{});
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<AttentionProfile> p;
    for (int k = 0; k < env.users; ++k) p.push_back(src.next());
    const auto a = average_allocation(env, p);
    for (int k = 0; k < env.users; ++k) {
      const auto& u = a.users[static_cast<std::size_t>(k)];
      EXPECT_DOUBLE_EQ(u.bandwidth, env.bandwidth_max / env.users);
      EXPECT_TRUE(u.resolution.within(c));
      const double chosen_w = perception_weight(p[k], u.resolution, c.tiles(), c.b_th);
      const bool chosen_ok =
          predicted_latency(env, k, p[k], u.resolution, u.bandwidth, u.frequency) <= env.latency_threshold;
      for (int i = 0; i < kAvgGrid; ++i)
        for (int j = 0; j < kAvgGrid; ++j) {
          const double r1 = c.res_range[0].lo + i * c.res_range[0].width() / kAvgGrid;
          const double r2 = c.res_range[1].lo + j * c.res_range[1].width() / kAvgGrid;
          const auto res = ResolutionAssignment::from_fractions({r1, r2, c.r_top}, c.b_max);
          if (predicted_latency(env, k, p[k], res, u.bandwidth, u.frequency) > env.latency_threshold) continue;
          EXPECT_TRUE(chosen_ok);
          EXPECT_LE(perception_weight(p[k], res, c.tiles(), c.b_th), chosen_w + 1e-12);
        }
    }
  }
}

TEST(Baselines, AverageAllocationFallsBackToMinima) {
  EnvParams env;
  env.frequency_max = 1e6;
  std::vector<AttentionProfile> p(4, AttentionProfile{{7, 8, 1}});
  const auto a = average_allocation(env, p);
  for (const auto& u : a.users) {
    EXPECT_DOUBLE_EQ(u.resolution.r[0], env.content.res_range[0].lo);
    EXPECT_DOUBLE_EQ(u.resolution.r[1], env.content.res_range[1].lo);
  }
}

TEST(Runner, DeterministicAcrossRuns) {
  const auto spec = tiny_spec(3);
  for (Variant v : kAllVariants) {
    std::vector<double> r1, r2;
    run_continual<float>(spec, v, [&](const SlotView& s) { r1.push_back(s.record.reward.reward); });
    run_continual<float>(spec, v, [&](const SlotView& s) { r2.push_back(s.record.reward.reward); });
    EXPECT_EQ(r1, r2) << to_string(v);
    EXPECT_EQ(r1.size(), 60u);
  }
}

TEST(Runner, RoundRecordsAggregateSlots) {
  const auto spec = tiny_spec(2);
  std::vector<double> rewards, lat;
  const auto res = run_continual<float>(spec, Variant::Fper, [&](const SlotView& s) {
    rewards.push_back(s.record.reward.reward);
    lat.push_back(s.record.mean_latency);
  });
  ASSERT_EQ(res.rounds.size(), 2u);
  for (int r = 0; r < 2; ++r) {
    double sum = 0.0, lsum = 0.0;
    for (int i = 0; i < 20; ++i) {
      sum += rewards[static_cast<std::size_t>(r * 20 + i)];
      lsum += lat[static_cast<std::size_t>(r * 20 + i)];
    }
    EXPECT_NEAR(res.rounds[static_cast<std::size_t>(r)].mean_reward, sum / 20, 1e-9);
    EXPECT_NEAR(res.rounds[static_cast<std::size_t>(r)].mean_latency, lsum / 20, 1e-12);
  }
  // Buffer fills at slot 8, so round 0 trains on slots 7..19.
  EXPECT_EQ(res.rounds[0].train_steps, 13);
  EXPECT_EQ(res.rounds[1].train_steps, 20);
}

TEST(Runner, OfflineLearnerFreezesAfterTraining) {
  auto spec = tiny_spec(3);
  const auto res = run_continual<float>(spec, Variant::OfflineDdpg);
  EXPECT_GT(res.rounds[0].train_steps, 0);
  EXPECT_EQ(res.rounds[1].train_steps, 0);
  EXPECT_EQ(res.rounds[2].explore_std, 0.0);
}

TEST(Runner, FailedCalibrationIsCappedInMetrics) {
  EXPECT_EQ(metric_latency(std::numeric_limits<double>::infinity(), 0.15), 1.5);
  EXPECT_EQ(metric_latency(0.1, 0.15), 0.1);
}

TEST(Runner, BenchReportsRequestedSteps) {
  auto spec = tiny_spec(1);
  const auto t = bench_train_step<float>(spec, Variant::Per, 50, 5);
  EXPECT_EQ(t.steps, 50);
  EXPECT_GT(t.mean_ms, 0.0);
  EXPECT_THROW(bench_train_step<float>(spec, Variant::AvgAlloc, 50), Error);
}
