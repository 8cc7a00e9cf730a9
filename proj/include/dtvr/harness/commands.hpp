#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dtvr/agents/runner.hpp"
#include "dtvr/harness/config.hpp"
#include "dtvr/harness/metrics_io.hpp"

namespace dtvr {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3, kExitUsage = 64 };

inline int exit_code_for(Errc e) {
  switch (e) {
    case Errc::Config:
    case Errc::UnknownParameter: return kExitConfig;
    default: return kExitRuntime;
  }
}

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<long long> rounds;
  std::string out_dir;
  bool synthetic = false;
  std::size_t window = 50;  // final-window length in rounds for comparisons
};

inline fs::path resolve_out_dir(const CommonOptions& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("DTVR_OUT_DIR"); env && *env) return env;
  return "dtvr_out";
}

inline std::vector<GazeTrace> load_gaze_dir(const fs::path& dir) {
  require(fs::is_directory(dir), Errc::EmptyCorpus, "gaze directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<GazeTrace> traces;
  for (const auto& f : files) {
    auto t = read_trace_file(f.string());
    if (!t.samples.empty()) traces.push_back(std::move(t));
  }
  require(!traces.empty(), Errc::EmptyCorpus, "no gaze samples under " + dir.string());
  return traces;
}

// Config file, else named preset, else desk-scale; then CLI overrides.
inline SimConfig load_options(const CommonOptions& o) {
  SimConfig cfg;
  try {
    if (!o.config_path.empty())
      cfg = load_config(o.config_path);
    else
      cfg = load_preset(o.preset.empty() ? "desk-scale" : o.preset);
  } catch (const Error& e) {
    if (e.code() == Errc::Config) throw;
    throw Error(Errc::Config, e.what());
  }
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.rounds) cfg.run.rounds = *o.rounds;
  if (!cfg.gaze_dir.empty() && !o.synthetic) {
    fs::path dir = cfg.gaze_dir;
    if (dir.is_relative() && !o.config_path.empty()) dir = fs::path(o.config_path).parent_path() / dir;
    cfg.run.gaze.traces = load_gaze_dir(dir);
  }
  ConfigParser::validate_config(cfg);
  return cfg;
}

struct RunArtifacts {
  RunResult result;
  nlohmann::json summary;
  fs::path dir;
};

namespace cmd_detail {

template <typename Scalar>
RunArtifacts run_to_dir(const SimConfig& cfg, Variant variant, const fs::path& dir, std::size_t window) {
  fs::create_directories(dir);
  std::ofstream slots_out(dir / "slots.csv");
  std::ofstream rounds_out(dir / "rounds.csv");
  std::ofstream timing_out(dir / "timing.csv");
  require(slots_out && rounds_out && timing_out, Errc::Io, "cannot write into " + dir.string());
  {
    std::ofstream echo(dir / "config.resolved");
    for (const auto& [k, v] : cfg.resolved) echo << k << " = " << v << '\n';
    echo << "# variant = " << to_string(variant) << "\n# seed = " << cfg.run.seed << "\n# rounds = " << cfg.run.rounds
         << '\n';
  }
  SlotCsvWriter slots(slots_out, cfg.run.env.users);
  write_round_csv_header(rounds_out);
  write_timing_csv_header(timing_out);

  auto save_learner = [&](const DdpgLearner<Scalar>& l) {
    std::ofstream ck(dir / "agent.ckpt", std::ios::binary);
    l.save_checkpoint(ck);
    std::ofstream rb(dir / "replay.bin", std::ios::binary);
    l.buffer().save(rb);
    require(static_cast<bool>(ck) && static_cast<bool>(rb), Errc::Io, "cannot write checkpoints");
  };

  RunHooks<Scalar> hooks;
  hooks.on_slot = [&](const SlotView& v) { slots.write(v); };
  hooks.on_round = [&](const RoundRecord& r, const DdpgLearner<Scalar>* l) {
    write_round_csv_row(rounds_out, r);
    write_timing_csv_row(timing_out, r);
    const bool last = r.round + 1 == cfg.run.rounds;
    const bool periodic = cfg.checkpoint_every > 0 && (r.round + 1) % cfg.checkpoint_every == 0;
    if (l && (last || periodic)) save_learner(*l);
  };
  RunArtifacts art;
  art.result = run_continual<Scalar>(cfg.run, variant, hooks);
  art.summary = summary_json(art.result, cfg.run, slots, window);
  art.dir = dir;
  std::ofstream js(dir / "summary.json");
  js << art.summary.dump(2) << '\n';
  require(static_cast<bool>(slots_out) && static_cast<bool>(rounds_out) && static_cast<bool>(js), Errc::Io,
          "failed writing metrics into " + dir.string());
  return art;
}

// Two-sided 95% Student t quantiles for 1..30 degrees of freedom.
inline double t95(std::size_t df) {
  static const double q[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                             2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                             2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return 0.0;
  return df <= 30 ? q[df - 1] : 1.96;
}

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

inline MeanCi mean_ci(const std::vector<double>& xs) {
  MeanCi m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double var = 0.0;
  for (double x : xs) var += (x - m.mean) * (x - m.mean);
  var /= static_cast<double>(xs.size() - 1);
  m.half_width = t95(xs.size() - 1) * std::sqrt(var / static_cast<double>(xs.size()));
  return m;
}

}  // namespace cmd_detail

inline RunArtifacts run_variant(const SimConfig& cfg, Variant variant, const fs::path& dir, std::size_t window) {
  if (cfg.precision == Precision::Double) return cmd_detail::run_to_dir<double>(cfg, variant, dir, window);
  return cmd_detail::run_to_dir<float>(cfg, variant, dir, window);
}

inline std::string run_dir_name(Variant v, std::uint64_t seed) {
  return std::string(to_string(v)) + "_seed" + std::to_string(seed);
}

inline int cmd_run(const CommonOptions& o, Variant variant, std::ostream& log) {
  const SimConfig cfg = load_options(o);
  const fs::path dir = resolve_out_dir(o) / run_dir_name(variant, cfg.run.seed);
  const auto art = run_variant(cfg, variant, dir, o.window);
  const auto& fw = art.summary["final_window"];
  log << to_string(variant) << " seed " << cfg.run.seed << ": " << art.result.rounds.size() << " rounds, final-window reward "
      << fmt_real(fw["mean_reward"].get<double>()) << ", success " << fmt_real(fw["success_rate"].get<double>())
      << " -> " << dir.string() << '\n';
  return kExitOk;
}

struct CompareRow {
  Variant variant;
  cmd_detail::MeanCi reward, success, qoe, hfqoe, latency;
  std::size_t seeds = 0;
};

inline std::vector<CompareRow> cmd_compare(const CommonOptions& o, const std::vector<Variant>& variants,
                                           const std::vector<std::uint64_t>& seeds, std::ostream& log) {
  require(!variants.empty() && !seeds.empty(), Errc::InvalidArgument, "compare needs variants and seeds");
  const SimConfig base = load_options(o);
  const fs::path root = resolve_out_dir(o);
  std::vector<CompareRow> rows;
  for (Variant v : variants) {
    std::vector<double> rew, succ, qoe, hf, lat;
    for (auto seed : seeds) {
      SimConfig cfg = base;
      cfg.run.seed = seed;
      const auto art = run_variant(cfg, v, root / run_dir_name(v, seed), o.window);
      const auto& fw = art.summary["final_window"];
      rew.push_back(fw["mean_reward"].get<double>());
      succ.push_back(fw["success_rate"].get<double>());
      qoe.push_back(fw["mean_qoe"].get<double>());
      hf.push_back(fw["hfqoe"].get<double>());
      lat.push_back(fw["mean_latency"].get<double>());
      log << "  " << to_string(v) << " seed " << seed << ": " << fmt_real(rew.back()) << '\n';
    }
    using cmd_detail::mean_ci;
    rows.push_back({v, mean_ci(rew), mean_ci(succ), mean_ci(qoe), mean_ci(hf), mean_ci(lat), seeds.size()});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CompareRow& a, const CompareRow& b) { return a.reward.mean > b.reward.mean; });

  std::ofstream csv(root / "compare.csv");
  csv << "variant,seeds,mean_reward,reward_ci95,success_rate,success_ci95,mean_qoe,qoe_ci95,hfqoe,hfqoe_ci95,"
         "mean_latency,latency_ci95\n";
  nlohmann::json js = nlohmann::json::array();
  for (const auto& r : rows) {
    csv << to_string(r.variant) << ',' << r.seeds << ',' << fmt_real(r.reward.mean) << ','
        << fmt_real(r.reward.half_width) << ',' << fmt_real(r.success.mean) << ',' << fmt_real(r.success.half_width)
        << ',' << fmt_real(r.qoe.mean) << ',' << fmt_real(r.qoe.half_width) << ',' << fmt_real(r.hfqoe.mean) << ','
        << fmt_real(r.hfqoe.half_width) << ',' << fmt_real(r.latency.mean) << ',' << fmt_real(r.latency.half_width)
        << '\n';
    js.push_back({{"variant", std::string(to_string(r.variant))},
                  {"seeds", r.seeds},
                  {"mean_reward", r.reward.mean},
                  {"reward_ci95", r.reward.half_width},
                  {"success_rate", r.success.mean},
                  {"mean_qoe", r.qoe.mean},
                  {"hfqoe", r.hfqoe.mean},
                  {"mean_latency", r.latency.mean}});
    log << to_string(r.variant) << ": reward " << fmt_real(r.reward.mean) << " +- " << fmt_real(r.reward.half_width)
        << ", success " << fmt_real(r.success.mean) << ", hfQoE " << fmt_real(r.hfqoe.mean) << '\n';
  }
  std::ofstream(root / "compare.json") << js.dump(2) << '\n';
  return rows;
}

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  double mean_reward = 0.0;  // final window
  double mean_latency = 0.0;  // over users, whole run
  double mean_download = 0.0;
  double mean_render = 0.0;
  double mean_qoe = 0.0;
  double success_rate = 0.0;
  double hfqoe = 0.0;
};

inline std::vector<SweepRow> sweep_rows(const SimConfig& base, const std::string& param,
                                        const std::vector<std::string>& values, Variant variant,
                                        const std::vector<std::uint64_t>& seeds, const fs::path& root,
                                        std::size_t window) {
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    for (auto seed : seeds) {
      SimConfig cfg = base;
      set_parameter(cfg, param, value);
      cfg.run.seed = seed;
      const auto art = run_variant(cfg, variant, root / (param + "=" + value) / run_dir_name(variant, seed), window);
      SweepRow r;
      r.value = value;
      r.seed = seed;
      r.mean_reward = art.result.mean_reward_last(window);
      const double k = static_cast<double>(art.result.users.size());
      for (const auto& u : art.result.users) {
        r.mean_latency += u.mean_latency / k;
        r.mean_download += u.mean_download / k;
        r.mean_render += u.mean_render / k;
        r.mean_qoe += u.mean_qoe / k;
        r.success_rate += u.success_rate / k;
      }
      r.hfqoe = art.result.rounds.back().hfqoe;
      rows.push_back(r);
    }
  }
  return rows;
}

inline std::vector<SweepRow> cmd_sweep(const CommonOptions& o, const std::string& param,
                                       const std::vector<std::string>& values, Variant variant,
                                       const std::vector<std::uint64_t>& seeds, std::ostream& log) {
  const auto& sw = sweepable_keys();
  require(std::find(sw.begin(), sw.end(), param) != sw.end(), Errc::UnknownParameter,
          "'" + param + "' is not sweepable");
  require(!values.empty() && !seeds.empty(), Errc::InvalidArgument, "sweep needs values and seeds");
  const SimConfig base = load_options(o);
  const fs::path root = resolve_out_dir(o);
  fs::create_directories(root);
  const auto rows = sweep_rows(base, param, values, variant, seeds, root, o.window);
  std::ofstream csv(root / ("sweep_" + param + ".csv"));
  csv << "param,value,seed,variant,mean_reward,mean_latency,mean_download,mean_render,mean_qoe,success_rate,hfqoe\n";
  for (const auto& r : rows) {
    csv << param << ',' << r.value << ',' << r.seed << ',' << to_string(variant) << ',' << fmt_real(r.mean_reward)
        << ',' << fmt_real(r.mean_latency) << ',' << fmt_real(r.mean_download) << ',' << fmt_real(r.mean_render)
        << ',' << fmt_real(r.mean_qoe) << ',' << fmt_real(r.success_rate) << ',' << fmt_real(r.hfqoe) << '\n';
    log << param << '=' << r.value << " seed " << r.seed << ": latency " << fmt_real(r.mean_latency) << " s, QoE "
        << fmt_real(r.mean_qoe) << ", reward " << fmt_real(r.mean_reward) << '\n';
  }
  return rows;
}

struct BenchRow {
  Variant variant;
  int users = 0;
  TimingSummary timing;
};

inline std::vector<BenchRow> cmd_bench_optime(const CommonOptions& o, const std::vector<Variant>& variants,
                                              const std::vector<int>& user_counts, long long steps,
                                              std::ostream& log) {
  require(steps >= 1000, Errc::InvalidArgument, "bench-optime needs at least 1000 timed steps");
  const SimConfig base = load_options(o);
  const fs::path root = resolve_out_dir(o);
  fs::create_directories(root);
  std::vector<BenchRow> rows;
  for (int k : user_counts) {
    SimConfig cfg = base;
    set_parameter(cfg, "K", std::to_string(k));
    for (Variant v : variants) {
      const TimingSummary t = cfg.precision == Precision::Double ? bench_train_step<double>(cfg.run, v, steps)
                                                                  : bench_train_step<float>(cfg.run, v, steps);
      rows.push_back({v, k, t});
      log << to_string(v) << " K=" << k << ": " << fmt_real(t.mean_ms) << " ms +- " << fmt_real(t.std_ms) << ", median "
          << fmt_real(t.median_ms) << " ms ("
          << t.steps << " steps)\n";
    }
  }
  std::ofstream csv(root / "bench_optime.csv");
  csv << "variant,K,steps,mean_ms,std_ms,median_ms\n";
  for (const auto& r : rows)
    csv << to_string(r.variant) << ',' << r.users << ',' << r.timing.steps << ',' << fmt_real(r.timing.mean_ms) << ','
        << fmt_real(r.timing.std_ms) << ',' << fmt_real(r.timing.median_ms) << '\n';
  return rows;
}

/// Writes attention_user<k>.csv (t,user,N1,N2,N3) for every configured user.
inline int cmd_ingest(const CommonOptions& o, const std::string& gaze_dir, long long gops, std::ostream& log) {
  require(gops > 0, Errc::InvalidArgument, "need a positive number of GoPs");
  SimConfig cfg = load_options(o);
  if (!o.synthetic) {
    // An explicit directory wins; otherwise load_options already read the configured one.
    if (!gaze_dir.empty()) cfg.run.gaze.traces = load_gaze_dir(gaze_dir);
    require(!cfg.run.gaze.traces.empty(), Errc::EmptyCorpus, "ingest needs a gaze directory or --synthetic");
  } else {
    cfg.run.gaze.traces.clear();
  }
  const fs::path root = resolve_out_dir(o);
  fs::create_directories(root);
  auto sources = make_profile_sources(cfg.run);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const fs::path file = root / ("attention_user" + std::to_string(k) + ".csv");
    std::ofstream out(file);
    require(static_cast<bool>(out), Errc::Io, "cannot write " + file.string());
    write_profile_csv_header(out);
    for (long long t = 0; t < gops; ++t) write_profile_csv_row(out, {t, static_cast<int>(k), sources[k]()});
  }
  log << "wrote " << sources.size() << " attention streams of " << gops << " GoPs to " << root.string() << '\n';
  return kExitOk;
}

}  // namespace dtvr
