#include "lemcpd/bench.hpp"
#include "lemcpd/detector.hpp"
#include "lemcpd/errors.hpp"
#include "lemcpd/synth.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

using namespace lemcpd;

namespace {

// Two cliques (with self-loops, so each phase is rank one) that take turns.
GraphSequence periodic_cliques(Eigen::Index n, std::size_t steps) {
  Matrix a = Matrix::Zero(n, n), b = Matrix::Zero(n, n);
  a.topLeftCorner(4, 4).setOnes();
  b.block(4, 4, 4, 4).setOnes();
  std::vector<Matrix> ws;
  for (std::size_t t = 0; t < steps; ++t) ws.push_back(t % 2 ? b : a);
  return GraphSequence::from_matrices(ws, 0, Directedness::kUndirected);
}

GraphSequence replace_last(const GraphSequence& seq, const Matrix& w) {
  std::vector<GraphSnapshot> snaps = seq.snapshots();
  snaps.back() = GraphSnapshot(snaps.back().timestamp(), w, snaps.back().directedness());
  return GraphSequence(snaps);
}

// G_t = growth^t u u^T: exactly rank one and linearly evolving.
GraphSequence rank_one_growth(Eigen::Index n, std::size_t steps, double growth,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector u = fixture::random_matrix(n, 1, rng, 0.2, 1.0);
  std::vector<Matrix> ws;
  double scale = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    ws.push_back(scale * u * u.transpose());
    scale *= growth;
  }
  return GraphSequence::from_matrices(ws, 0, Directedness::kUndirected);
}

DetectorConfig small_config(std::uint64_t seed) {
  DetectorConfig cfg;
  cfg.hp.k = 4;
  cfg.seed = seed;
  return cfg;
}

AnomalyReport report_with(const std::vector<double>& z) {
  AnomalyReport r;
  for (std::size_t i = 0; i < z.size(); ++i) {
    AnomalyRecord rec;
    rec.t = static_cast<Timestamp>(20 + i);
    rec.z = z[i];
    r.records.push_back(rec);
  }
  return r;
}

}  // namespace

TEST(DetectStep, PeriodicPatternIsQuiet) {
  GraphSequence seq = periodic_cliques(40, 14);
  StepResult step = detect_step(seq, 13, small_config(1));
  EXPECT_LT(step.record.z, 0.5);
  EXPECT_FALSE(step.record.flagged);
  EXPECT_EQ(step.record.t, 13);
}

TEST(DetectStep, InjectedDrawIsFlagged) {
  GraphSequence seq = periodic_cliques(40, 14);
  SBMConfig cfg;
  cfg.n = 40;
  cfg.blocks = {20, 20};
  cfg.p_in = 0.9;
  cfg.p_out = 0.1;
  std::mt19937_64 rng(5);
  GraphSequence injected = replace_last(seq, sample_snapshot(cfg, 13, rng).weights());
  StepResult step = detect_step(injected, 13, small_config(1));
  EXPECT_GE(step.record.z, 0.5);
  EXPECT_TRUE(step.record.flagged);
}

TEST(DetectStep, ZeroThresholdFlagsEverything) {
  GraphSequence seq = periodic_cliques(12, 20);
  DetectorConfig cfg = small_config(2);
  cfg.threshold = 0.0;
  AnomalyReport report = detect_sequence(seq, cfg);
  for (const auto& r : report.records) EXPECT_TRUE(r.flagged);
}

TEST(DetectStep, NeedsLongHistory) {
  GraphSequence seq = periodic_cliques(12, 20);
  EXPECT_THROW(detect_step(seq, 11, small_config(1)), DataError);
  EXPECT_THROW(detect_step(seq, 20, small_config(1)), DataError);
}

TEST(DetectSequence, ConstantSequence) {
  std::mt19937_64 rng(3);
  Matrix w = fixture::random_symmetric(12, rng);
  GraphSequence seq = GraphSequence::from_matrices(std::vector<Matrix>(24, w), 0,
                                                   Directedness::kUndirected);
  AnomalyReport report = detect_sequence(seq, small_config(3));
  ASSERT_EQ(report.records.size(), 24u - 13u);
  EXPECT_EQ(report.records.front().t, 13);
  for (const auto& r : report.records) {
    EXPECT_EQ(r.z2, 0.0);
    EXPECT_NEAR(r.z, report.records.front().z, 1e-3);
    EXPECT_LT(r.z, 0.5);
  }
}

TEST(DetectSequence, DeterministicAndBounded) {
  SBMConfig base;
  base.n = 30;
  base.blocks = equal_blocks(30, 3);
  base.steps = 30;
  base.seed = 4;
  DefaultScenarioOptions opts;
  opts.changes = 1;
  Scenario sc = generate(default_scenario(base, opts), base);
  DetectorConfig cfg = small_config(4);
  AnomalyReport a = detect_sequence(sc.sequence, cfg);
  AnomalyReport b = detect_sequence(sc.sequence, cfg);
  EXPECT_EQ(report_json(a), report_json(b));
  EXPECT_EQ(report_csv(a), report_csv(b));
  ASSERT_EQ(a.records.size(), 30u - 13u);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& r = a.records[i];
    if (i > 0) EXPECT_GT(r.t, a.records[i - 1].t);
    EXPECT_GE(r.z, 0.0);
    EXPECT_LE(r.z, 1.0);
    EXPECT_EQ(r.flagged, r.z >= cfg.threshold);
    EXPECT_NEAR(r.z, combine_score(r.z1, r.z2, cfg.alpha), 1e-15);
  }
  cfg.seed = 5;
  EXPECT_NE(report_json(detect_sequence(sc.sequence, cfg)), report_json(a));
}

TEST(DetectSequence, WarmAndColdAgreeOnPlantedChanges) {
  SBMConfig base;
  base.n = 40;
  base.blocks = equal_blocks(40, 4);
  base.steps = 60;
  base.seed = 6;
  ScenarioSpec spec;
  spec.change_points.push_back({25, equal_blocks(40, 2), 0.5, 0.02});
  spec.change_points.push_back({45, equal_blocks(40, 4), 0.8, 0.1});
  Scenario sc = generate(spec, base);
  DetectorConfig warm = small_config(6);
  warm.hp.k = 8;
  DetectorConfig cold = warm;
  cold.warm_start = false;
  auto top_warm = rank_topk(detect_sequence(sc.sequence, warm), 2);
  auto top_cold = rank_topk(detect_sequence(sc.sequence, cold), 2);
  std::set<Timestamp> expect{25, 45};
  EXPECT_EQ(std::set<Timestamp>(top_warm.begin(), top_warm.end()), expect);
  EXPECT_EQ(std::set<Timestamp>(top_cold.begin(), top_cold.end()), expect);
}

TEST(Predict, ExactRankOneGrowth) {
  GraphSequence seq = rank_one_growth(10, 17, 1.05, 1);
  GraphSequence observed = window(seq, 15, 16);
  DetectorConfig cfg;
  cfg.hp.k = 1;
  cfg.hp.epsilon = 1e-12;
  cfg.hp.max_iter = 3000;
  cfg.seed = 1;
  GraphSnapshot p = predict_after(observed, 15, cfg);
  EXPECT_EQ(p.timestamp(), 16);
  EXPECT_LT(mae(p, seq.at_time(16)), 1e-3);
}

TEST(Predict, SymmetrizedInUndirectedMode) {
  GraphSequence seq = periodic_cliques(10, 14);
  GraphSnapshot p = predict_after(seq, 13, small_config(7));
  EXPECT_LT((p.weights() - p.weights().transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(p.weights().minCoeff(), 0.0);
}

TEST(Ranking, TopK) {
  AnomalyReport r = report_with({0.1, 0.9, 0.5});
  EXPECT_EQ(rank_topk(r, 1), (std::vector<Timestamp>{21}));
  EXPECT_EQ(rank_topk(r, 3), (std::vector<Timestamp>{21, 22, 20}));
  AnomalyReport ties = report_with({0.4, 0.4, 0.4, 0.4});
  EXPECT_EQ(rank_topk(ties, 2), (std::vector<Timestamp>{20, 21}));
  EXPECT_THROW(rank_topk(r, 4), ConfigError);
}

TEST(Ranking, Threshold) {
  AnomalyReport r = report_with({0.4, 0.6});
  EXPECT_EQ(flag_threshold(r, 0.5), (std::vector<Timestamp>{21}));
  EXPECT_EQ(flag_threshold(r, 0.0).size(), 2u);
  EXPECT_THROW(flag_threshold(r, 1.5), ConfigError);
}

TEST(WarmStart, ShiftMovesFactorsLeft) {
  std::mt19937_64 rng(8);
  fixture::Instance in = fixture::random_instance(5, 2, 3, rng);
  LatentState shifted = shift_state(in.state);
  EXPECT_EQ(shifted.U[0], in.state.U[1]);
  EXPECT_EQ(shifted.U[1], in.state.U[2]);
  EXPECT_EQ(shifted.U[2], in.state.U[2]);
  EXPECT_EQ(shifted.V[1], in.state.V[2]);
  EXPECT_EQ(shifted.A, in.state.A);
  EXPECT_EQ(shifted.B, in.state.B);
  EXPECT_EQ(shifted.C, in.state.C);
}

TEST(WarmStart, DriftGuard) {
  std::mt19937_64 rng(9);
  fixture::Instance in = fixture::random_instance(5, 2, 3, rng);
  in.state.A = Matrix::Identity(2, 2);
  in.state.B = Matrix::Identity(5, 5);
  EXPECT_TRUE(warm_start_usable(in.state));
  in.state.A *= 10.0;
  EXPECT_FALSE(warm_start_usable(in.state));
  in.state.A = Matrix::Identity(2, 2) * 0.1;
  EXPECT_FALSE(warm_start_usable(in.state));
  EXPECT_FALSE(warm_start_usable(LatentState{}));
}

TEST(Config, Validation) {
  DetectorConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.alpha = 1.2;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = DetectorConfig{};
  cfg.threshold = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Laplacian, ModeResolution) {
  GraphSequence sym = periodic_cliques(8, 3);
  EXPECT_EQ(resolve_laplacian(LaplacianMode::kAuto, sym), LaplacianMode::kUndirected);
  Matrix w = Matrix::Zero(8, 8);
  w(0, 1) = 1.0;
  GraphSequence asym = replace_last(sym, w);
  EXPECT_EQ(resolve_laplacian(LaplacianMode::kAuto, asym), LaplacianMode::kDirected);
  EXPECT_EQ(resolve_laplacian(LaplacianMode::kUndirected, asym), LaplacianMode::kUndirected);
  EXPECT_EQ(parse_laplacian_mode("directed"), LaplacianMode::kDirected);
  EXPECT_STREQ(to_string(LaplacianMode::kAuto), "auto");
  EXPECT_THROW(parse_laplacian_mode("sideways"), ConfigError);
}

TEST(Report, Serialization) {
  AnomalyReport r = report_with({0.25, 0.75});
  r.records[1].flagged = true;
  r.records[1].z1 = 0.5;
  std::string csv = report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,z1,z2,z,flagged");
  EXPECT_NE(csv.find("21,0.500000,0.000000,0.750000,1"), std::string::npos) << csv;
  auto doc = nlohmann::json::parse(report_json(r));
  EXPECT_EQ(doc["records"].size(), 2u);
  EXPECT_EQ(doc["records"][1]["z"].get<double>(), 0.75);
  EXPECT_TRUE(doc.contains("config"));
}

TEST(Seeds, StepSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (Timestamp t = 0; t < 50; ++t)
    for (std::uint64_t s = 0; s < 2; ++s) seen.insert(step_seed(7, t, s));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(step_seed(7, 3, 1), step_seed(7, 3, 1));
}
