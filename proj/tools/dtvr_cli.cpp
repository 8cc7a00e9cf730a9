// Command-line front end: run, compare, sweep, bench-optime, ingest.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "dtvr/fp.hpp"
#include "dtvr/harness/commands.hpp"

namespace {

std::vector<dtvr::Variant> parse_variants(const std::vector<std::string>& names) {
  std::vector<dtvr::Variant> out;
  for (const auto& n : names) out.push_back(dtvr::parse_variant(n));
  return out;
}

void add_common(CLI::App* cmd, dtvr::CommonOptions& o, bool with_seed = true) {
  cmd->add_option("--config", o.config_path, "Configuration file (key = value)");
  cmd->add_option("--preset", o.preset, "Built-in preset when no --config is given (paper-table1, desk-scale)");
  cmd->add_option("--rounds", o.rounds, "Override the number of DT rounds");
  cmd->add_option("--out-dir", o.out_dir, "Output directory (default $DTVR_OUT_DIR or ./dtvr_out)");
  cmd->add_option("--window", o.window, "Final-window length in rounds")->check(CLI::PositiveNumber);
  cmd->add_flag("--synthetic", o.synthetic, "Use synthetic gaze even if the config names a gaze directory");
  if (with_seed) cmd->add_option("--seed", o.seed, "Run seed");
}

}  // namespace

int main(int argc, char** argv) {
  dtvr::enable_flush_to_zero();
  CLI::App app{"Edge VR streaming simulator and continual actor-critic trainer"};
  app.require_subcommand(1);

  dtvr::CommonOptions opts;
  std::string variant = "fper";
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string param;
  std::vector<std::string> values;
  std::vector<int> user_counts{2, 4, 8, 16};
  long long steps = 1000;
  std::string gaze_dir;
  long long gops = 1000;

  auto* run = app.add_subcommand("run", "Run one variant and write per-slot/per-round logs, summary and checkpoints");
  add_common(run, opts);
  run->add_option("--variant", variant, "fper, per, cddpg, offline_ddpg, avg_alloc, fixed_2k");

  auto* compare = app.add_subcommand("compare", "Run variants x seeds and tabulate final-window means");
  add_common(compare, opts, false);
  compare->add_option("--variant,--variants", variants, "Variants to compare")->delimiter(',');
  compare->add_option("--seeds", seeds, "Seeds")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter");
  add_common(sweep, opts, false);
  sweep->add_option("--param", param, "beta1, beta2, mu, T_th, hfqoe_th, omega, K, f_max, B_max")->required();
  sweep->add_option("--values", values, "Values")->delimiter(',')->required();
  sweep->add_option("--variant", variant, "Variant");
  sweep->add_option("--seeds", seeds, "Seeds")->delimiter(',');

  auto* bench = app.add_subcommand("bench-optime", "Time train_step per variant and user count");
  add_common(bench, opts);
  bench->add_option("--variant,--variants", variants, "Learning variants")->delimiter(',');
  bench->add_option("--users", user_counts, "User counts K")->delimiter(',');
  bench->add_option("--steps", steps, "Timed steps after 100 warm-up steps")->check(CLI::Range(1000LL, 100000000LL));

  auto* ingest = app.add_subcommand("ingest", "Turn gaze traces into per-user attention CSVs");
  add_common(ingest, opts);
  ingest->add_option("--gaze-dir", gaze_dir, "Directory of gaze trace files (u,v per line)");
  ingest->add_option("--gops", gops, "GoPs per user")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dtvr::kExitUsage;
  }

  try {
    if (*run) return dtvr::cmd_run(opts, dtvr::parse_variant(variant), std::cout);
    if (*compare) {
      if (variants.empty()) variants = {"fper", "per", "cddpg", "offline_ddpg", "avg_alloc", "fixed_2k"};
      dtvr::cmd_compare(opts, parse_variants(variants), seeds, std::cout);
      return dtvr::kExitOk;
    }
    if (*sweep) {
      dtvr::cmd_sweep(opts, param, values, dtvr::parse_variant(variant), seeds, std::cout);
      return dtvr::kExitOk;
    }
    if (*bench) {
      if (variants.empty()) variants = {"fper", "per", "cddpg"};
      dtvr::cmd_bench_optime(opts, parse_variants(variants), user_counts, steps, std::cout);
      return dtvr::kExitOk;
    }
    if (*ingest) return dtvr::cmd_ingest(opts, gaze_dir, gops, std::cout);
  } catch (const dtvr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.code() == dtvr::Errc::InvalidArgument) return dtvr::kExitUsage;
    return dtvr::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dtvr::kExitRuntime;
  }
  return dtvr::kExitUsage;
}
