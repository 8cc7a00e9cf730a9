#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "dtvr/harness/commands.hpp"

using namespace dtvr;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(DTVR_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dtvr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string paper_text() { return std::string(builtin_preset("paper-table1")); }

// Paper preset with one line removed.
std::string without_key(const std::string& key) {
  std::istringstream in(paper_text());
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind(key + " =", 0) != 0) out += line + "\n";
  return out;
}

std::optional<Errc> parse_error(const std::string& text, std::string* msg = nullptr) {
  try {
    ConfigParser().parse_string(text, "test.cfg");
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(Config, PresetsMatchShippedFiles) {
  const auto a = load_preset("paper-table1");
  const auto b = load_config(kConfigs / "paper-table1.cfg");
  EXPECT_EQ(a.resolved, b.resolved);
  const auto c = load_preset("desk-scale");
  const auto d = load_config(kConfigs / "desk-scale.cfg");
  EXPECT_EQ(c.resolved, d.resolved);
}

TEST(Config, PaperPresetHoldsReferenceValues) {
  const auto cfg = load_preset("paper-table1");
  const auto& r = cfg.run;
  EXPECT_EQ(r.env.users, 4);
  EXPECT_EQ(r.env.content.frames, 16);
  EXPECT_EQ(r.env.content.tiles(), 16);
  EXPECT_EQ(r.env.latency_threshold, 0.150);
  EXPECT_EQ(r.delta_t, 100);
  EXPECT_EQ(r.env.bandwidth_max, 10e6);
  EXPECT_EQ(r.env.frequency_max, 15e9);
  EXPECT_EQ(r.env.content.cycles_per_bit[2], 1000.0);
  EXPECT_EQ(r.env.content.b_max, 12441600.0);
  EXPECT_EQ(r.env.content.b_th, 460800.0);
  EXPECT_EQ(r.env.compression, 300.0);
  EXPECT_EQ(r.reward.qoe_threshold, 9.8645);
  EXPECT_EQ(r.reward.hfqoe_threshold, 0.97);
  EXPECT_EQ(r.agent.lr_actor, 1e-7);
  EXPECT_EQ(r.agent.lr_critic, 2e-4);
  EXPECT_EQ(r.agent.buffer.capacity, 10000u);
  EXPECT_EQ(r.agent.buffer.beta1, 0.9);
  EXPECT_EQ(r.agent.buffer.beta2, 0.8);
  EXPECT_EQ(r.agent.buffer.mu, 0.95);
  EXPECT_EQ(r.env.positions.size(), 4u);
  EXPECT_EQ(r.env.positions[2].x, 10.0);
  EXPECT_EQ(r.env.positions[2].y, 5.0);
}

TEST(Config, DeskScaleOverridesOnlyItsKeys) {
  const auto paper = load_preset("paper-table1").run;
  const auto desk = load_preset("desk-scale").run;
  EXPECT_EQ(desk.env.content.cycles_per_bit[0], 0.16);
  EXPECT_EQ(desk.agent.lr_actor, 1e-4);
  EXPECT_EQ(desk.rounds, 500);
  EXPECT_EQ(desk.offline_rounds, 100);
  EXPECT_EQ(desk.env.bandwidth_max, paper.env.bandwidth_max);
  EXPECT_EQ(desk.agent.buffer.mu, paper.agent.buffer.mu);
}

TEST(Config, MissingRequiredKeyIsNamed) {
  std::string msg;
  EXPECT_EQ(parse_error(without_key("K"), &msg), Errc::Config);
  EXPECT_NE(msg.find("missing config key K"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyReportsLine) {
  std::string msg;
  EXPECT_EQ(parse_error(paper_text() + "\n\nwarp_factor = 9\n", &msg), Errc::Config);
  std::size_t lines = 0;
  for (char ch : paper_text()) lines += ch == '\n';
  EXPECT_NE(msg.find("test.cfg:" + std::to_string(lines + 3)), std::string::npos) << msg;
  EXPECT_NE(msg.find("warp_factor"), std::string::npos);
}

TEST(Config, BadValuesAndSyntax) {
  EXPECT_EQ(parse_error(paper_text() + "K = four\n"), Errc::Config);
  EXPECT_EQ(parse_error(paper_text() + "just words\n"), Errc::Config);
  EXPECT_EQ(parse_error(paper_text() + "mu = 1.5\n"), Errc::Config);
  EXPECT_EQ(parse_error(paper_text() + "r1_range = 0.3, 0.1\n"), Errc::Config);
  EXPECT_EQ(parse_error("include = nowhere.cfg\n"), Errc::Config);
}

TEST(Config, LaterLinesOverrideIncludes) {
  const auto cfg = ConfigParser().parse_string("include = desk-scale\nomega = 400\nK = 8 # trailing comment\n");
  EXPECT_EQ(cfg.run.env.compression, 400.0);
  EXPECT_EQ(cfg.run.env.users, 8);
  EXPECT_EQ(cfg.run.env.content.cycles_per_bit[1], 0.18);
}

TEST(Config, FileIncludeIsRelativeToIncludingFile) {
  const auto dir = scratch("include");
  fs::create_directories(dir / "sub");
  std::ofstream(dir / "sub" / "base.cfg") << paper_text();
  std::ofstream(dir / "top.cfg") << "include = sub/base.cfg\nseed = 7\n";
  EXPECT_EQ(load_config(dir / "top.cfg").run.seed, 7u);
}

TEST(Config, SetParameterAcceptsOnlySweepables) {
  auto cfg = load_preset("desk-scale");
  set_parameter(cfg, "f_max", "2e10");
  EXPECT_EQ(cfg.run.env.frequency_max, 2e10);
  set_parameter(cfg, "K", "16");
  EXPECT_EQ(cfg.run.env.users, 16);
  try {
    set_parameter(cfg, "lr_actor", "1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownParameter);
    EXPECT_EQ(exit_code_for(e.code()), kExitConfig);
  }
  EXPECT_THROW(set_parameter(cfg, "beta2", "3"), Error);
}

TEST(Metrics, RealFormattingRoundTrips) {
  for (double x : {0.0, 1.0, -2.5, 58.3784, 1e-300, 6.02e23}) EXPECT_NEAR(parse_real(fmt_real(x)), x, std::abs(x) * 1e-8);
  EXPECT_EQ(fmt_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(parse_real("nan")));
  EXPECT_THROW(parse_real("1.0x"), Error);
}

TEST(Commands, MeanCiUsesStudentT) {
  const auto m = cmd_detail::mean_ci({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.0);
  EXPECT_NEAR(m.half_width, 4.303 * 1.0 / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(cmd_detail::mean_ci({5.0}).half_width, 0.0);
}

class RunOutputs : public ::testing::Test {
 protected:
  static SimConfig config(long long rounds) {
    auto cfg = load_preset("desk-scale");
    cfg.run.rounds = rounds;
    return cfg;
  }
};

TEST_F(RunOutputs, FixedTwoKWritesOneRowPerSlot) {
  const auto dir = scratch("fixed");
  const auto art = run_variant(config(10), Variant::Fixed2K, dir, 5);
  const auto slots = [&] {
    std::ifstream in(dir / "slots.csv");
    return read_csv(in);
  }();
  ASSERT_EQ(slots.rows.size(), 1000u);
  EXPECT_EQ(slots.header.size(), 10u + 5u * 4u);
  EXPECT_TRUE(fs::exists(dir / "rounds.csv"));
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
  EXPECT_TRUE(fs::exists(dir / "config.resolved"));
  EXPECT_FALSE(fs::exists(dir / "agent.ckpt"));

  // Summary totals equal sums recomputed from the slot log.
  double reward = 0.0, qoe = 0.0;
  long long delivered = 0;
  for (std::size_t i = 0; i < slots.rows.size(); ++i) {
    reward += slots.real(i, "reward");
    qoe += slots.real(i, "sum_qoe");
    delivered += static_cast<long long>(slots.real(i, "delivered"));
    double per_user = 0.0;
    for (int k = 0; k < 4; ++k) per_user += slots.real(i, "delivered_" + std::to_string(k));
    EXPECT_EQ(per_user, slots.real(i, "delivered"));
  }
  const auto js = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_NEAR(js["totals"]["reward_sum"].get<double>(), reward, 1e-6 * std::abs(reward));
  EXPECT_NEAR(js["totals"]["sum_qoe_sum"].get<double>(), qoe, 1e-6 * std::abs(qoe));
  EXPECT_EQ(js["totals"]["delivered"].get<long long>(), delivered);
  EXPECT_EQ(js["totals"]["slots"].get<long long>(), 1000);
  EXPECT_EQ(js["final_window"]["rounds"].get<int>(), 5);
  EXPECT_DOUBLE_EQ(js["final_window"]["mean_reward"].get<double>(), art.result.mean_reward_last(5));
}

TEST_F(RunOutputs, SameSeedGivesByteIdenticalLogs) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto cfg = config(3);
  cfg.run.agent.hidden_width = 32;
  run_variant(cfg, Variant::Fper, a, 2);
  run_variant(cfg, Variant::Fper, b, 2);
  EXPECT_EQ(slurp(a / "slots.csv"), slurp(b / "slots.csv"));
  EXPECT_EQ(slurp(a / "rounds.csv"), slurp(b / "rounds.csv"));
  EXPECT_EQ(slurp(a / "agent.ckpt"), slurp(b / "agent.ckpt"));
  EXPECT_EQ(slurp(a / "replay.bin"), slurp(b / "replay.bin"));
  EXPECT_FALSE(slurp(a / "slots.csv").empty());
}

TEST_F(RunOutputs, CheckpointsReloadIntoLearner) {
  const auto dir = scratch("ckpt");
  auto cfg = config(2);
  cfg.run.agent.hidden_width = 32;
  run_variant(cfg, Variant::Per, dir, 2);
  DdpgLearner<float> l(state_dim(4), action_dim(4), cfg.run.agent, 5);
  std::ifstream ck(dir / "agent.ckpt", std::ios::binary);
  EXPECT_NO_THROW(l.load_checkpoint(ck));
  std::ifstream rb(dir / "replay.bin", std::ios::binary);
  const auto buf = ReplayBuffer<Transition>::load(rb);
  EXPECT_EQ(buf.size(), 200u);
  EXPECT_EQ(buf.config().mode, ReplayMode::Per);
}

TEST_F(RunOutputs, CompareSortsByReward) {
  const auto dir = scratch("compare");
  CommonOptions o;
  o.preset = "desk-scale";
  o.rounds = 2;
  o.out_dir = dir.string();
  o.window = 2;
  std::ostringstream log;
  const auto rows = cmd_compare(o, {Variant::Fixed2K, Variant::AvgAlloc}, {1, 2}, log);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GE(rows[0].reward.mean, rows[1].reward.mean);
  std::ifstream in(dir / "compare.csv");
  const auto t = read_csv(in);
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "compare.json"));
}

TEST_F(RunOutputs, SweepRejectsUnknownParameter) {
  CommonOptions o;
  o.out_dir = scratch("sweep").string();
  std::ostringstream log;
  try {
    cmd_sweep(o, "lr_actor", {"1"}, Variant::Fixed2K, {1}, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownParameter);
  }
  o.rounds = 1;
  const auto rows = cmd_sweep(o, "omega", {"200", "400"}, Variant::Fixed2K, {1}, log);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(fs::exists(fs::path(o.out_dir) / "sweep_omega.csv"));
}

TEST_F(RunOutputs, IngestWritesAttentionCsvPerUser) {
  CommonOptions o;
  o.out_dir = scratch("ingest").string();
  o.synthetic = true;
  std::ostringstream log;
  cmd_ingest(o, "", 25, log);
  for (int k = 0; k < 4; ++k) {
    std::ifstream in(fs::path(o.out_dir) / ("attention_user" + std::to_string(k) + ".csv"));
    const auto rows = read_profile_csv(in);
    ASSERT_EQ(rows.size(), 25u);
    for (const auto& r : rows) EXPECT_EQ(r.profile.total(), 16);
  }
}

TEST(Commands, MissingConfigFileIsAConfigError) {
  CommonOptions o;
  o.config_path = "/nonexistent/x.cfg";
  try {
    load_options(o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code_for(e.code()), kExitConfig);
  }
}

TEST(Commands, GazeDirectoryResolvesAgainstConfigFile) {
  CommonOptions o;
  o.config_path = (kConfigs / "desk-scale-traces.cfg").string();
  const auto cfg = load_options(o);
  EXPECT_EQ(cfg.run.gaze.traces.size(), 3u);
  o.synthetic = true;
  EXPECT_TRUE(load_options(o).run.gaze.traces.empty());
}
