#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "dtvr/agents/variant.hpp"
#include "dtvr/binary_io.hpp"
#include "dtvr/error.hpp"
#include "dtvr/nn/mlp.hpp"
#include "dtvr/random.hpp"
#include "dtvr/replay/replay_buffer.hpp"
#include "dtvr/replay/transition.hpp"

namespace dtvr {

struct ExplorationSchedule {
  double initial = 0.2;
  double decay = 0.995;  // per DT round
  double floor = 0.01;

  double at_round(long long round) const {
    return std::max(floor, initial * std::pow(decay, static_cast<double>(round)));
  }
};

struct AgentConfig {
  Variant variant = Variant::Fper;
  double gamma = 0.99;
  double tau = 0.01;
  double lr_critic = 2e-4;
  double lr_actor = 1e-7;
  std::size_t batch = 64;
  BufferConfig buffer;
  ExplorationSchedule exploration;
  int hidden_layers = 3;
  int hidden_width = 256;
  double actor_final_scale = 1e-3;
  // Multiplies rewards before they enter the TD target.
  double reward_scale = 1.0;

  void validate() const {
    buffer.validate();
    require(gamma >= 0.0 && gamma < 1.0, Errc::InvalidArgument, "gamma must be in [0,1)");
    require(tau > 0.0 && tau <= 1.0, Errc::InvalidArgument, "tau must be in (0,1]");
    require(lr_critic > 0.0 && lr_actor > 0.0, Errc::InvalidArgument, "learning rates must be positive");
    require(batch > 0 && batch <= buffer.capacity, Errc::InvalidArgument, "batch must be in [1, capacity]");
    require(hidden_layers >= 0 && hidden_width > 0, Errc::InvalidArgument, "bad hidden layer layout");
    require(reward_scale > 0.0, Errc::InvalidArgument, "reward_scale must be positive");
  }
};

struct TrainDiagnostics {
  double critic_loss = 0.0;
  double mean_q = 0.0;
  double mean_abs_td = 0.0;
  double mean_weight = 1.0;
  std::size_t stale = 0;
  bool skipped = false;
};

/// Actor-critic learner with target networks and a (freshness) prioritized
/// replay buffer. One `train_step` = one mini-batch critic update, one
/// weighted deterministic policy-gradient actor update, priority refresh
/// for the sampled entries and a Polyak step on both target networks.
template <typename Scalar = double>
class DdpgLearner {
 public:
  using Net = nn::Mlp<Scalar>;
  using Matrix = typename Net::Matrix;
  using Vector = typename Net::Vector;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  DdpgLearner(int state_dim, int action_dim, AgentConfig cfg, std::uint64_t seed)
      : cfg_(cfg),
        state_dim_(state_dim),
        action_dim_(action_dim),
        buffer_([&] {
          BufferConfig b = cfg.buffer;
          b.mode = replay_mode(cfg.variant);
          return b;
        }()),
        replay_rng_(make_rng(seed, Stream::Replay)) {
    cfg_.validate();
    require(state_dim > 0 && action_dim > 0, Errc::InvalidArgument, "state/action dims must be positive");
    Rng init = make_rng(seed, Stream::NetInit);
    actor_ = Net::random(actor_spec(), init, cfg_.actor_final_scale);
    critic_ = Net::random(critic_spec(), init);
    actor_target_ = actor_;
    critic_target_ = critic_;
    actor_opt_ = nn::Adam<Scalar>(actor_.params(), cfg_.lr_actor);
    critic_opt_ = nn::Adam<Scalar>(critic_.params(), cfg_.lr_critic);
  }

  nn::MlpSpec actor_spec() const {
    return nn::make_spec(state_dim_, cfg_.hidden_layers, cfg_.hidden_width, action_dim_, nn::OutputActivation::Sigmoid);
  }
  // The critic sees [state; action] stacked at its first layer.
  nn::MlpSpec critic_spec() const {
    return nn::make_spec(state_dim_ + action_dim_, cfg_.hidden_layers, cfg_.hidden_width, 1,
                         nn::OutputActivation::Identity);
  }

  const AgentConfig& config() const { return cfg_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  Net& actor() { return actor_; }
  Net& critic() { return critic_; }
  Net& actor_target() { return actor_target_; }
  Net& critic_target() { return critic_target_; }
  const Net& actor() const { return actor_; }
  const Net& critic() const { return critic_; }
  ReplayBuffer<Transition>& buffer() { return buffer_; }
  const ReplayBuffer<Transition>& buffer() const { return buffer_; }
  long long skipped_steps() const { return skipped_; }

  bool ready() const { return buffer_.size() >= cfg_.batch; }

  std::vector<double> act(std::span<const double> state, double noise_std, Rng& rng) const {
    require(static_cast<int>(state.size()) == state_dim_, Errc::DimensionMismatch, "state length mismatch");
    Vector s(state_dim_);
    for (int i = 0; i < state_dim_; ++i) s(i) = static_cast<Scalar>(state[i]);
    const Vector a = actor_.forward_one(s);
    std::vector<double> out(static_cast<std::size_t>(action_dim_));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < action_dim_; ++i) {
      double x = static_cast<double>(a(i));
      if (noise_std > 0.0) x += noise_std * noise(rng);
      out[static_cast<std::size_t>(i)] = std::clamp(x, 0.0, 1.0);
    }
    return out;
  }

  double q_value(std::span<const double> state, std::span<const double> action) const {
    Matrix x(state_dim_ + action_dim_, 1);
    for (int i = 0; i < state_dim_; ++i) x(i, 0) = static_cast<Scalar>(state[i]);
    for (int i = 0; i < action_dim_; ++i) x(state_dim_ + i, 0) = static_cast<Scalar>(action[i]);
    return static_cast<double>(critic_.forward(x)(0, 0));
  }

  // y = r + gamma * Q'(s', chi'(s'))
  double td_target(double reward, std::span<const double> next_state) const {
    Matrix s(state_dim_, 1);
    for (int i = 0; i < state_dim_; ++i) s(i, 0) = static_cast<Scalar>(next_state[i]);
    return static_cast<double>(targets(RowVector::Constant(1, static_cast<Scalar>(reward)), s)(0));
  }

  double td_error(double target, std::span<const double> state, std::span<const double> action) const {
    return target - q_value(state, action);
  }

  std::size_t store(Transition t) {
    require(static_cast<int>(t.state.size()) == state_dim_ && static_cast<int>(t.next_state.size()) == state_dim_ &&
                static_cast<int>(t.action.size()) == action_dim_,
            Errc::DimensionMismatch, "transition dimensions do not match the learner");
    return buffer_.push(std::move(t));
  }

  TrainDiagnostics train_step() {
    require(ready(), Errc::EmptyBuffer, "replay buffer holds fewer transitions than one batch");
    const std::size_t b = cfg_.batch;
    const auto batch = buffer_.sample(b, replay_rng_);

    Matrix sa(state_dim_ + action_dim_, static_cast<Eigen::Index>(b));
    Matrix next(state_dim_, static_cast<Eigen::Index>(b));
    RowVector rewards(static_cast<Eigen::Index>(b));
    RowVector weights(static_cast<Eigen::Index>(b));
    for (std::size_t i = 0; i < b; ++i) {
      const auto& t = buffer_.item(batch.indices[i]);
      const auto col = static_cast<Eigen::Index>(i);
      for (int r = 0; r < state_dim_; ++r) {
        sa(r, col) = static_cast<Scalar>(t.state[r]);
        next(r, col) = static_cast<Scalar>(t.next_state[r]);
      }
      for (int r = 0; r < action_dim_; ++r) sa(state_dim_ + r, col) = static_cast<Scalar>(t.action[r]);
      rewards(col) = static_cast<Scalar>(cfg_.reward_scale * t.reward);
      weights(col) = static_cast<Scalar>(batch.weights[i]);
    }

    TrainDiagnostics diag;
    diag.mean_weight = static_cast<double>(weights.mean());
    const RowVector y = targets(rewards, next);

    // Critic: weighted squared TD error.
    typename Net::Tape critic_tape;
    const RowVector q = critic_.forward(sa, critic_tape).row(0);
    const RowVector td = y - q;
    const auto loss = nn::weighted_squared_error<Scalar>(q, y, weights);
    diag.critic_loss = loss.loss;
    diag.mean_q = static_cast<double>(q.mean());
    diag.mean_abs_td = static_cast<double>(td.cwiseAbs().mean());
    critic_.backward(critic_tape, loss.grad, &critic_grads_);
    try {
      critic_opt_.step(critic_.params(), critic_grads_);
    } catch (const Error& e) {
      if (e.code() != Errc::NonFiniteGradient) throw;
      ++skipped_;
      diag.skipped = true;
      return diag;
    }

    // Actor: ascend the weighted mean of Q(s, chi(s)).
    typename Net::Tape actor_tape;
    const Matrix states = sa.topRows(state_dim_);
    const Matrix& pi = actor_.forward(states, actor_tape);
    Matrix sa_pi(state_dim_ + action_dim_, static_cast<Eigen::Index>(b));
    sa_pi.topRows(state_dim_) = states;
    sa_pi.bottomRows(action_dim_) = pi;
    typename Net::Tape q_tape;
    critic_.forward(sa_pi, q_tape);
    const Matrix dq = (-weights / static_cast<Scalar>(b)).eval();
    const Matrix dx = critic_.backward(q_tape, dq, nullptr);
    actor_.backward(actor_tape, dx.bottomRows(action_dim_), &actor_grads_);
    try {
      actor_opt_.step(actor_.params(), actor_grads_);
    } catch (const Error& e) {
      if (e.code() != Errc::NonFiniteGradient) throw;
      ++skipped_;
      diag.skipped = true;
    }

    if (buffer_.config().mode != ReplayMode::Uniform) {
      std::vector<double> td_abs(b);
      for (std::size_t i = 0; i < b; ++i) td_abs[i] = std::abs(static_cast<double>(td(static_cast<Eigen::Index>(i))));
      diag.stale = buffer_.update_priorities(batch.indices, batch.generations, td_abs);
    }

    nn::soft_update(actor_target_.params(), actor_.params(), cfg_.tau);
    nn::soft_update(critic_target_.params(), critic_.params(), cfg_.tau);
    return diag;
  }

  // All four networks plus both optimizer states.
  void save_checkpoint(std::ostream& out) const {
    bin::write_magic(out, kMagic, kVersion);
    bin::write<std::int32_t>(out, state_dim_);
    bin::write<std::int32_t>(out, action_dim_);
    actor_.save(out);
    critic_.save(out);
    actor_target_.save(out);
    critic_target_.save(out);
    actor_opt_.save(out);
    critic_opt_.save(out);
  }

  void load_checkpoint(std::istream& in) {
    const auto version = bin::read_magic(in, kMagic);
    require(version == kVersion, Errc::CorruptCheckpoint, "unsupported agent checkpoint version");
    require(bin::read<std::int32_t>(in) == state_dim_ && bin::read<std::int32_t>(in) == action_dim_,
            Errc::CorruptCheckpoint, "checkpoint dimensions differ from this learner");
    Net a = Net::load(in);
    Net c = Net::load(in);
    Net at = Net::load(in);
    Net ct = Net::load(in);
    require(a.spec() == actor_spec() && c.spec() == critic_spec() && at.spec() == actor_spec() &&
                ct.spec() == critic_spec(),
            Errc::CorruptCheckpoint, "checkpoint network layout differs from this learner");
    auto ao = nn::Adam<Scalar>::load(in, a.params());
    auto co = nn::Adam<Scalar>::load(in, c.params());
    actor_ = std::move(a);
    critic_ = std::move(c);
    actor_target_ = std::move(at);
    critic_target_ = std::move(ct);
    actor_opt_ = std::move(ao);
    critic_opt_ = std::move(co);
  }

 private:
  static constexpr char kMagic[9] = "DTVRAGNT";
  static constexpr std::uint32_t kVersion = 1;

  RowVector targets(const RowVector& rewards, const Matrix& next_states) const {
    const Matrix next_actions = actor_target_.forward(next_states);
    Matrix x(state_dim_ + action_dim_, next_states.cols());
    x.topRows(state_dim_) = next_states;
    x.bottomRows(action_dim_) = next_actions;
    const RowVector q_next = critic_target_.forward(x).row(0);
    return rewards + static_cast<Scalar>(cfg_.gamma) * q_next;
  }

  AgentConfig cfg_;
  int state_dim_;
  int action_dim_;
  Net actor_;
  Net critic_;
  Net actor_target_;
  Net critic_target_;
  nn::Adam<Scalar> actor_opt_;
  nn::Adam<Scalar> critic_opt_;
  nn::Params<Scalar> actor_grads_;
  nn::Params<Scalar> critic_grads_;
  ReplayBuffer<Transition> buffer_;
  Rng replay_rng_;
  long long skipped_ = 0;
};

}  // namespace dtvr
