#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtvr/binary_io.hpp"
#include "dtvr/error.hpp"
#include "dtvr/random.hpp"
#include "dtvr/replay/segment_tree.hpp"

namespace dtvr {

enum class ReplayMode : std::uint32_t { Uniform = 0, Per = 1, Fper = 2 };

inline std::string_view to_string(ReplayMode m) {
  switch (m) {
    case ReplayMode::Uniform: return "uniform";
    case ReplayMode::Per: return "per";
    case ReplayMode::Fper: return "fper";
  }
  return "?";
}

struct BufferConfig {
  std::size_t capacity = 10000;
  double beta1 = 0.9;  // priority exponent
  double beta2 = 0.8;  // importance-sampling correction
  double mu = 0.95;    // freshness discount per replay
  double eps2 = 1e-3;
  double eps3 = 1e-3;
  ReplayMode mode = ReplayMode::Fper;

  void validate() const {
    require(capacity > 0, Errc::InvalidArgument, "replay capacity must be positive");
    require(beta1 >= 0.0, Errc::InvalidArgument, "beta1 must be >= 0");
    require(beta2 >= 0.0 && beta2 <= 1.0, Errc::InvalidArgument, "beta2 must be in [0,1]");
    require(mu > 0.0 && mu < 1.0, Errc::InvalidArgument, "mu must be in (0,1)");
    require(eps2 > 0.0 && eps3 > 0.0, Errc::InvalidArgument, "priority epsilons must be positive");
  }
};

struct ReplayStats {
  std::size_t size = 0;
  double max_priority = 1.0;
  double mean_replays = 0.0;
};

/// Ring buffer with proportional prioritized sampling and freshness decay.
///
/// Sampling probability is p^beta1 / sum p^beta1 (kept in a sum tree);
/// new entries enter at the current maximum priority. The per-entry replay
/// counter n advances each time the entry is drawn, and in freshness mode
/// a priority update writes mu^n |delta| + eps3.
///
/// `Item` must provide ADL-visible `write_item(std::ostream&, const Item&)`
/// and `read_item(std::istream&, Item&)` for snapshots.
template <typename Item>
class ReplayBuffer {
 public:
  struct Entry {
    Item item;
    double td_abs = 0.0;
    std::uint32_t replays = 0;
    double priority = 1.0;
    std::uint64_t generation = 0;
  };

  struct Batch {
    std::vector<std::size_t> indices;
    std::vector<std::uint64_t> generations;
    std::vector<double> probabilities;
    std::vector<double> weights;  // normalized so the batch maximum is 1
  };

  explicit ReplayBuffer(BufferConfig cfg) : cfg_(cfg), sum_(cfg.capacity), max_(cfg.capacity, 0.0) {
    cfg_.validate();
    entries_.reserve(cfg_.capacity);
  }

  const BufferConfig& config() const { return cfg_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return cfg_.capacity; }
  bool empty() const { return entries_.empty(); }
  long long stale_updates() const { return stale_; }

  const Entry& entry(std::size_t i) const { return entries_.at(i); }
  const Item& item(std::size_t i) const { return entries_.at(i).item; }

  double max_priority() const { return entries_.empty() ? 1.0 : max_.root(); }
  double total_mass() const { return sum_.total(); }

  double probability(std::size_t i) const {
    if (cfg_.mode == ReplayMode::Uniform) return 1.0 / static_cast<double>(entries_.size());
    return sum_.get(i) / sum_.total();
  }

  std::size_t push(Item item) {
    const double p = max_priority();
    const std::size_t idx = cursor_;
    Entry e{std::move(item), 0.0, 0, p, ++generation_};
    if (entries_.size() < cfg_.capacity)
      entries_.push_back(std::move(e));
    else
      entries_[idx] = std::move(e);
    set_priority(idx, p);
    cursor_ = (cursor_ + 1) % cfg_.capacity;
    return idx;
  }

  Batch sample(std::size_t batch, Rng& rng) {
    require(!entries_.empty(), Errc::EmptyBuffer, "cannot sample an empty replay buffer");
    require(batch > 0, Errc::InvalidArgument, "batch size must be positive");
    Batch b;
    b.indices.reserve(batch);
    b.generations.reserve(batch);
    b.probabilities.reserve(batch);
    b.weights.reserve(batch);

    const auto m = static_cast<double>(entries_.size());
    if (cfg_.mode == ReplayMode::Uniform) {
      std::uniform_int_distribution<std::size_t> pick(0, entries_.size() - 1);
      for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t idx = pick(rng);
        record_draw(b, idx, 1.0 / m);
        b.weights.push_back(1.0);
      }
      return b;
    }

    // Stratified: one draw per equal slice of the cumulative mass.
    const double total = sum_.total();
    const double segment = total / static_cast<double>(batch);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double w_max = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const double mass = std::min((static_cast<double>(i) + unit(rng)) * segment, total);
      const std::size_t idx = std::min(sum_.find(mass), entries_.size() - 1);
      const double prob = sum_.get(idx) / total;
      record_draw(b, idx, prob);
      const double w = std::pow(m * prob, -cfg_.beta2);
      b.weights.push_back(w);
      w_max = std::max(w_max, w);
    }
    for (double& w : b.weights) w /= w_max;
    return b;
  }

  /// Returns how many updates were skipped because the slot was overwritten.
  std::size_t update_priorities(std::span<const std::size_t> indices,
                                std::span<const std::uint64_t> generations,
                                std::span<const double> td_abs) {
    require(indices.size() == td_abs.size() && indices.size() == generations.size(),
            Errc::DimensionMismatch, "priority update vectors differ in length");
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const std::size_t idx = indices[i];
      if (idx >= entries_.size() || entries_[idx].generation != generations[i]) {
        ++skipped;
        continue;
      }
      auto& e = entries_[idx];
      e.td_abs = std::abs(td_abs[i]);
      set_priority(idx, priority_for(e));
    }
    stale_ += static_cast<long long>(skipped);
    return skipped;
  }

  double priority_for(const Entry& e) const {
    if (cfg_.mode == ReplayMode::Fper) return std::pow(cfg_.mu, static_cast<double>(e.replays)) * e.td_abs + cfg_.eps3;
    return e.td_abs + cfg_.eps2;
  }

  ReplayStats stats() const {
    ReplayStats s;
    s.size = entries_.size();
    s.max_priority = max_priority();
    if (!entries_.empty()) {
      double n = 0.0;
      for (const auto& e : entries_) n += e.replays;
      s.mean_replays = n / static_cast<double>(entries_.size());
    }
    return s;
  }

  // Versioned binary snapshot: header, then per-entry state and item.
  void save(std::ostream& out) const {
    bin::write_magic(out, kMagic, kVersion);
    bin::write<std::uint64_t>(out, cfg_.capacity);
    bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(cfg_.mode));
    bin::write(out, cfg_.beta1);
    bin::write(out, cfg_.beta2);
    bin::write(out, cfg_.mu);
    bin::write(out, cfg_.eps2);
    bin::write(out, cfg_.eps3);
    bin::write<std::uint64_t>(out, entries_.size());
    bin::write<std::uint64_t>(out, cursor_);
    bin::write<std::uint64_t>(out, generation_);
    bin::write<std::int64_t>(out, stale_);
    for (const auto& e : entries_) {
      bin::write(out, e.td_abs);
      bin::write(out, e.replays);
      bin::write(out, e.priority);
      bin::write(out, e.generation);
      write_item(out, e.item);
    }
  }

  static ReplayBuffer load(std::istream& in) {
    const auto version = bin::read_magic(in, kMagic);
    require(version == kVersion, Errc::CorruptCheckpoint, "unsupported replay snapshot version");
    BufferConfig cfg;
    cfg.capacity = bin::read<std::uint64_t>(in);
    const auto mode = bin::read<std::uint32_t>(in);
    require(mode <= 2, Errc::CorruptCheckpoint, "bad replay mode in snapshot");
    cfg.mode = static_cast<ReplayMode>(mode);
    cfg.beta1 = bin::read<double>(in);
    cfg.beta2 = bin::read<double>(in);
    cfg.mu = bin::read<double>(in);
    cfg.eps2 = bin::read<double>(in);
    cfg.eps3 = bin::read<double>(in);
    require(cfg.capacity > 0 && cfg.capacity < (1ull << 32), Errc::CorruptCheckpoint, "bad capacity in snapshot");
    ReplayBuffer buf(cfg);
    const auto size = bin::read<std::uint64_t>(in);
    require(size <= cfg.capacity, Errc::CorruptCheckpoint, "snapshot holds more entries than capacity");
    buf.cursor_ = bin::read<std::uint64_t>(in);
    require(buf.cursor_ < cfg.capacity, Errc::CorruptCheckpoint, "bad cursor in snapshot");
    buf.generation_ = bin::read<std::uint64_t>(in);
    buf.stale_ = bin::read<std::int64_t>(in);
    for (std::uint64_t i = 0; i < size; ++i) {
      Entry e;
      e.td_abs = bin::read<double>(in);
      e.replays = bin::read<std::uint32_t>(in);
      e.priority = bin::read<double>(in);
      e.generation = bin::read<std::uint64_t>(in);
      read_item(in, e.item);
      buf.entries_.push_back(std::move(e));
      buf.set_priority(i, buf.entries_.back().priority);
    }
    return buf;
  }

 private:
  static constexpr char kMagic[9] = "DTVRRPLY";
  static constexpr std::uint32_t kVersion = 1;

  void set_priority(std::size_t idx, double p) {
    entries_[idx].priority = p;
    sum_.set(idx, std::pow(p, cfg_.beta1));
    max_.set(idx, p);
  }

  void record_draw(Batch& b, std::size_t idx, double prob) {
    ++entries_[idx].replays;
    b.indices.push_back(idx);
    b.generations.push_back(entries_[idx].generation);
    b.probabilities.push_back(prob);
  }

  BufferConfig cfg_;
  std::vector<Entry> entries_;
  SumTree sum_;
  MaxTree max_;
  std::size_t cursor_ = 0;
  std::uint64_t generation_ = 0;
  long long stale_ = 0;
};

}  // namespace dtvr
