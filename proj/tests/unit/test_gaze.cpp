#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dtvr/gaze/gaze.hpp"

using namespace dtvr;

namespace {

// Independent restatement: a tile's level is the max over frames of the ring
// it falls in around that frame's gaze tile.
AttentionProfile brute_force(const std::vector<TileIndex>& gazes, int inner, int mid, int cols, int rows) {
  AttentionProfile p;
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i) {
      int best = 1;
      for (const auto& g : gazes) {
        const int d = std::max(std::abs(i - g.col), std::abs(j - g.row));
        best = std::max(best, d <= inner ? 3 : d <= mid ? 2 : 1);
      }
      ++p.counts[best - 1];
    }
  return p;
}

GazeSample centre_of(int col, int row, int cols = 4, int rows = 4) {
  return {(col + 0.5) / cols, (row + 0.5) / rows};
}

}  // namespace

TEST(FrameAttention, CornerGazeMatchesTableTwoUserThree) {
  const AttentionRule rule;
  for (TileIndex t : {TileIndex{0, 0}, TileIndex{3, 0}, TileIndex{0, 3}, TileIndex{3, 3}}) {
    const auto p = count_levels(frame_attention(t, rule, 4, 4));
    EXPECT_EQ(p, (AttentionProfile{{7, 8, 1}}));
  }
}

TEST(FrameAttention, CentralGazeCoversEverything) {
  const auto p = count_levels(frame_attention({1, 1}, AttentionRule{}, 4, 4));
  EXPECT_EQ(p, (AttentionProfile{{0, 15, 1}}));
}

TEST(FrameAttention, RejectsGazeOutsideGridAndBadRule) {
  EXPECT_THROW(frame_attention({4, 0}, AttentionRule{}, 4, 4), Error);
  EXPECT_THROW(frame_attention({0, 0}, AttentionRule{2, 2}, 4, 4), Error);
}

TEST(GopAttention, OppositeCornersOverTwoFrames) {
  // Enumerated: tiles (3,0) and (0,3) are 3 away from both gaze tiles.
  const std::vector<GazeSample> frames{centre_of(0, 0), centre_of(3, 3)};
  const auto p = gop_attention(frames, AttentionRule{}, 4, 4);
  EXPECT_EQ(p, (AttentionProfile{{2, 12, 2}}));
  EXPECT_EQ(p, brute_force({{0, 0}, {3, 3}}, 0, 2, 4, 4));
}

TEST(GopAttention, EveryGazePositionMatchesBruteForce) {
  const AttentionRule rule;
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) {
      const std::vector<GazeSample> one{centre_of(c, r)};
      const auto p = gop_attention(one, rule, 4, 4);
      EXPECT_EQ(p, brute_force({{c, r}}, 0, 2, 4, 4)) << c << "," << r;
      EXPECT_EQ(p.total(), 16);
    }
}

TEST(GopAttention, RandomPathsMatchBruteForceAndSumToN) {
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 16), inner(0, 2);
  for (int trial = 0; trial < 500; ++trial) {
    const int cols = 3 + trial % 4, rows = 2 + trial % 5;
    const int in = inner(rng);
    const AttentionRule rule{in, in + 1 + trial % 2};
    std::vector<GazeSample> frames(static_cast<std::size_t>(len(rng)));
    std::vector<TileIndex> tiles;
    for (auto& s : frames) {
      s = {u(rng), u(rng)};
      tiles.push_back(gaze_to_tile(s, cols, rows));
    }
    const auto p = gop_attention(frames, rule, cols, rows);
    EXPECT_EQ(p, brute_force(tiles, rule.inner_radius, rule.mid_radius, cols, rows));
    EXPECT_EQ(p.total(), cols * rows);
  }
}

TEST(GazeToTile, EdgesClampIntoGrid) {
  EXPECT_EQ(gaze_to_tile({0.0, 0.0}, 4, 4), (TileIndex{0, 0}));
  EXPECT_EQ(gaze_to_tile({0.999999, 0.25}, 4, 4), (TileIndex{3, 1}));
  EXPECT_EQ(gaze_to_tile({1.0, 1.0}, 4, 4), (TileIndex{3, 3}));
}

TEST(SyntheticGaze, DeterministicPerSeedAndInsideUnitSquare) {
  const auto a = synth_gaze(2000, 0.05, 9);
  const auto b = synth_gaze(2000, 0.05, 9);
  const auto c = synth_gaze(2000, 0.05, 10);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
  for (const auto& s : a.samples) {
    EXPECT_GE(s.u, 0.0);
    EXPECT_LT(s.u, 1.0);
    EXPECT_GE(s.v, 0.0);
    EXPECT_LT(s.v, 1.0);
  }
  EXPECT_THROW(SyntheticGaze(0.0, 1), Error);
}

TEST(ProfileStream, EmitsValidProfilesFromSyntheticWalk) {
  ProfileStream<SyntheticGaze> s(SyntheticGaze(0.08, 3), 16, 4, 4, AttentionRule{});
  for (int t = 0; t < 1000; ++t) EXPECT_EQ(s.next().total(), 16);
}

TEST(TraceIo, RoundTripIsExact) {
  GazeTrace t = synth_gaze(300, 0.1, 4);
  t.source_id = "walk";
  std::stringstream buf;
  write_trace(buf, t);
  TraceReadStats st;
  const auto back = read_trace(buf, "walk", &st);
  EXPECT_EQ(back.samples, t.samples);
  EXPECT_EQ(st.clamped, 0u);
}

TEST(TraceIo, ClampsOutOfRangeAndReportsBadLines) {
  std::istringstream ok("# comment\n0.5,0.5\n-0.2, 1.4\n\n0.1 , 0.2\n");
  TraceReadStats st;
  const auto t = read_trace(ok, "x", &st);
  ASSERT_EQ(t.samples.size(), 3u);
  EXPECT_EQ(st.clamped, 1u);
  EXPECT_EQ(t.samples[1].u, 0.0);
  EXPECT_LT(t.samples[1].v, 1.0);

  std::istringstream bad("0.1,0.2\n0.3;0.4\n");
  try {
    read_trace(bad, "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Io);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(ComposeLongTrace, ReachesTargetFromCorpusAndIsSeeded) {
  std::vector<GazeTrace> corpus{synth_gaze(50, 0.05, 1), synth_gaze(70, 0.05, 2), synth_gaze(5, 0.05, 3)};
  const auto a = compose_long_trace(corpus, 1234, 8);
  const auto b = compose_long_trace(corpus, 1234, 8);
  EXPECT_EQ(a.samples.size(), 1234u);
  EXPECT_EQ(a.samples, b.samples);
  std::vector<GazeTrace> empty;
  try {
    compose_long_trace(empty, 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCorpus);
  }
}

TEST(ProfileCsv, RoundTripsTableTwoLayout) {
  std::stringstream buf;
  write_profile_csv_header(buf);
  std::vector<ProfileRow> rows{{0, 0, {{0, 13, 3}}}, {0, 1, {{4, 11, 1}}}, {1, 2, {{7, 8, 1}}}, {1, 3, {{11, 4, 1}}}};
  for (const auto& r : rows) write_profile_csv_row(buf, r);
  EXPECT_EQ(buf.str().substr(0, 16), "t,user,N1,N2,N3\n");
  const auto back = read_profile_csv(buf);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].t, rows[i].t);
    EXPECT_EQ(back[i].user, rows[i].user);
    EXPECT_EQ(back[i].profile, rows[i].profile);
  }
}

TEST(ExampleTraces, ShippedSamplesParse) {
  const std::filesystem::path dir = std::filesystem::path(DTVR_SOURCE_DIR) / "configs" / "gaze";
  if (!std::filesystem::exists(dir)) GTEST_SKIP() << "no sample traces";
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto t = read_trace_file(e.path().string());
    EXPECT_FALSE(t.samples.empty()) << e.path();
  }
}

TEST(GopAttention, AddingAFrameNeverLowersATile) {
  Rng rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GazeSample> frames{{u(rng), u(rng)}};
    auto before = gop_level_map(frames, AttentionRule{}, 4, 4);
    for (int f = 0; f < 15; ++f) {
      frames.push_back({u(rng), u(rng)});
      const auto after = gop_level_map(frames, AttentionRule{}, 4, 4);
      for (std::size_t n = 0; n < after.size(); ++n) EXPECT_GE(after[n], before[n]);
      before = after;
    }
  }
}

TEST(SyntheticGaze, LargerStepsRaiseAttentionSpread) {
  auto mean_high = [](double scale) {
    ProfileStream<SyntheticGaze> s(SyntheticGaze(scale, 77), 16, 4, 4, AttentionRule{});
    double n23 = 0.0;
    for (int g = 0; g < 10000; ++g) {
      const auto p = s.next();
      EXPECT_GE(p.counts[2], 1);
      n23 += p.counts[1] + p.counts[2];
    }
    return n23 / 10000.0;
  };
  const double slow = mean_high(0.001);
  const double fast = mean_high(0.5);
  EXPECT_GT(fast, slow + 1.0);
}
