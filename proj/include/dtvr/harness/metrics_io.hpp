#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dtvr/agents/runner.hpp"
#include "dtvr/error.hpp"

namespace dtvr {

// 9 significant digits; non-finite values spelled nan / inf / -inf.
inline std::string fmt_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline double parse_real(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  require(!s.empty() && end == s.c_str() + s.size(), Errc::Io, "not a number: '" + s + "'");
  return x;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(Errc::Io, "no column '" + name + "'");
  }
  double real(std::size_t row, const std::string& name) const { return parse_real(rows.at(row).at(column(name))); }
};

// Plain comma-separated values; none of our fields contain commas or quotes.
inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  require(static_cast<bool>(std::getline(in, line)), Errc::Io, "empty CSV");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = split(line);
    require(row.size() == t.header.size(), Errc::Io,
            "CSV line " + std::to_string(lineno) + " has " + std::to_string(row.size()) + " cells, expected " +
                std::to_string(t.header.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Per-slot log: aggregates then T_d, T_r, T, delivered, QoE for each user
/// (latencies of failed calibrations written at the 10 T_th cap).
class SlotCsvWriter {
 public:
  SlotCsvWriter(std::ostream& out, int users) : out_(out), users_(users) {
    out_ << "t,round,slot,reward,sum_qoe,q_qoe,q_hf,hfqoe,delivered,critic_loss";
    for (int k = 0; k < users_; ++k)
      out_ << ",Td_" << k << ",Tr_" << k << ",T_" << k << ",delivered_" << k << ",qoe_" << k;
    out_ << '\n';
  }

  void write(const SlotView& v) {
    const auto& r = v.record;
    out_ << r.t << ',' << r.round << ',' << r.slot << ',' << fmt_real(r.reward.reward) << ','
         << fmt_real(r.reward.sum_qoe) << ',' << r.reward.q_qoe << ',' << r.reward.q_hf << ',' << fmt_real(r.hfqoe)
         << ',' << r.delivered << ',' << fmt_real(r.critic_loss);
    for (int k = 0; k < users_; ++k) {
      const auto& lat = v.outcome.latency[static_cast<std::size_t>(k)];
      out_ << ',' << fmt_real(metric_latency(lat.download, lat.threshold)) << ','
           << fmt_real(metric_latency(lat.render, lat.threshold)) << ','
           << fmt_real(metric_latency(lat.total, lat.threshold)) << ','
           << (lat.delivered ? 1 : 0) << ',' << fmt_real(v.outcome.quality[static_cast<std::size_t>(k)].qoe);
    }
    out_ << '\n';
    reward_sum_ += r.reward.reward;
    qoe_sum_ += r.reward.sum_qoe;
    delivered_ += r.delivered;
    ++slots_;
  }

  long long slots() const { return slots_; }
  long long delivered() const { return delivered_; }
  double reward_sum() const { return reward_sum_; }
  double qoe_sum() const { return qoe_sum_; }

 private:
  std::ostream& out_;
  int users_;
  long long slots_ = 0;
  long long delivered_ = 0;
  double reward_sum_ = 0.0;
  double qoe_sum_ = 0.0;
};

inline void write_round_csv_header(std::ostream& out) {
  out << "round,mean_reward,std_reward,mean_qoe,hfqoe,success_rate,mean_latency,mean_download,mean_render,"
         "mean_critic_loss,explore_std,train_steps\n";
}

inline void write_round_csv_row(std::ostream& out, const RoundRecord& r) {
  out << r.round << ',' << fmt_real(r.mean_reward) << ',' << fmt_real(r.std_reward) << ',' << fmt_real(r.mean_qoe)
      << ',' << fmt_real(r.hfqoe) << ',' << fmt_real(r.success_rate) << ',' << fmt_real(r.mean_latency) << ','
      << fmt_real(r.mean_download) << ',' << fmt_real(r.mean_render) << ',' << fmt_real(r.mean_critic_loss) << ','
      << fmt_real(r.explore_std) << ',' << r.train_steps << '\n';
}

// Wall-clock per round lives apart from the deterministic logs.
inline void write_timing_csv_header(std::ostream& out) { out << "round,train_steps,mean_step_ms\n"; }

inline void write_timing_csv_row(std::ostream& out, const RoundRecord& r) {
  out << r.round << ',' << r.train_steps << ',' << fmt_real(r.mean_step_ms) << '\n';
}

inline nlohmann::json summary_json(const RunResult& res, const RunSpec& spec, const SlotCsvWriter& slots,
                                   std::size_t window) {
  using nlohmann::json;
  json users = json::array();
  for (const auto& u : res.users)
    users.push_back({{"mean_latency", u.mean_latency},
                     {"mean_download", u.mean_download},
                     {"mean_render", u.mean_render},
                     {"mean_qoe", u.mean_qoe},
                     {"success_rate", u.success_rate},
                     {"infinite_latency", u.infinite_latency}});
  const std::size_t n = std::min(window, res.rounds.size());
  double succ = 0.0, qoe = 0.0, hf = 0.0, lat = 0.0;
  for (std::size_t i = res.rounds.size() - n; i < res.rounds.size(); ++i) {
    succ += res.rounds[i].success_rate;
    qoe += res.rounds[i].mean_qoe;
    hf += res.rounds[i].hfqoe;
    lat += res.rounds[i].mean_latency;
  }
  const double dn = n > 0 ? static_cast<double>(n) : 1.0;
  return json{
      {"variant", std::string(to_string(res.variant))},
      {"seed", spec.seed},
      {"users", spec.env.users},
      {"rounds", res.rounds.size()},
      {"delta_T", spec.delta_t},
      {"totals",
       {{"slots", slots.slots()},
        {"reward_sum", slots.reward_sum()},
        {"sum_qoe_sum", slots.qoe_sum()},
        {"delivered", slots.delivered()},
        {"user_slots", slots.slots() * spec.env.users}}},
      {"final_window",
       {{"rounds", n},
        {"mean_reward", res.mean_reward_last(window)},
        {"success_rate", succ / dn},
        {"mean_qoe", qoe / dn},
        {"hfqoe", hf / dn},
        {"mean_latency", lat / dn}}},
      {"per_user", users},
      {"train_step_ms", {{"steps", res.train_step.steps}, {"mean", res.train_step.mean_ms}, {"std", res.train_step.std_ms}}},
      {"clipped_state_entries", res.clipped_state_entries},
      {"calibration_failures", res.calibration_failures},
      {"skipped_steps", res.skipped_steps},
      {"stale_priority_updates", res.stale_priority_updates},
      {"wall_seconds", res.wall_seconds},
  };
}

}  // namespace dtvr
