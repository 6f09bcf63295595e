#include "lemcpd/bench.hpp"
#include "lemcpd/errors.hpp"
#include "support.hpp"

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <algorithm>

using namespace lemcpd;

namespace {

AnomalyReport report_at(const std::vector<std::pair<Timestamp, double>>& tz) {
  AnomalyReport r;
  for (auto [t, z] : tz) {
    AnomalyRecord rec;
    rec.t = t;
    rec.z = z;
    r.records.push_back(rec);
  }
  return r;
}

// Normalized Laplacian singular values computed from scratch.
Vector hand_signature(const Matrix& w) {
  const Eigen::Index n = w.rows();
  Vector d = w.rowwise().sum();
  Matrix L = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (d[i] == 0 || d[j] == 0) continue;
      L(i, j) = (i == j ? 1.0 : 0.0) - w(i, j) / std::sqrt(d[i] * d[j]);
    }
  }
  return Eigen::JacobiSVD<Matrix>(L).singularValues();
}

double hand_cosine_distance(const Vector& a, const Vector& b) {
  double dot = 0, na = 0, nb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return 1.0 - dot / std::sqrt(na * nb);
}

Scenario small_scenario(std::uint64_t seed, std::size_t steps = 30) {
  SBMConfig base;
  base.n = 30;
  base.blocks = equal_blocks(30, 3);
  base.steps = steps;
  base.seed = seed;
  DefaultScenarioOptions opts;
  opts.changes = 1;
  return generate(default_scenario(base, opts), base);
}

DetectorConfig small_config(std::uint64_t seed) {
  DetectorConfig cfg;
  cfg.hp.k = 4;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(HitRatio, Counting) {
  LabelSet one;
  one.change_points = {5};
  EXPECT_EQ(hit_ratio(report_at({{4, 0.1}, {5, 0.9}, {6, 0.2}}), one, 1), 1.0);

  LabelSet two;
  two.change_points = {5, 9};
  AnomalyReport r = report_at({{5, 0.9}, {9, 0.1}, {40, 0.8}});
  EXPECT_EQ(hit_ratio(r, two, 2), 0.5);
  // denominator is the smaller of K and the number of changes
  EXPECT_EQ(hit_ratio(r, one, 3), 1.0);
  EXPECT_THROW(hit_ratio(r, LabelSet{}, 1), DataError);
}

TEST(MAE, Examples) {
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a(0, 0) = 1;
  a(1, 1) = 3;
  b(0, 0) = 2;
  b(1, 1) = 5;
  GraphSnapshot pa(0, a), pb(0, b);
  EXPECT_EQ(mae(pa, pa), 0.0);
  EXPECT_DOUBLE_EQ(mae(pa, pb, EntryMask{{0, 0}, {1, 1}}), 1.5);
  EXPECT_DOUBLE_EQ(mae(pa, pb), 0.75);
  EXPECT_THROW(mae(pa, GraphSnapshot(0, Matrix::Zero(3, 3))), DataError);
}

TEST(HistoricalAverage, MeanOfWindow) {
  std::vector<Matrix> ws;
  for (int t = 0; t < 5; ++t) ws.push_back(Matrix::Constant(2, 2, t));
  GraphSequence seq = GraphSequence::from_matrices(ws);
  GraphSnapshot avg = historical_average(seq, 4, 3);
  EXPECT_EQ(avg.timestamp(), 4);
  EXPECT_DOUBLE_EQ(avg.weights()(0, 0), 2.0);
  EXPECT_THROW(historical_average(seq, 2, 3), DataError);
}

TEST(LongTermAverage, ConstantIsZero) {
  std::mt19937_64 rng(1);
  Matrix w = fixture::random_symmetric(6, rng);
  GraphSequence seq = GraphSequence::from_matrices(std::vector<Matrix>(8, w));
  EXPECT_NEAR(baseline_lta(seq, 7, 4), 0.0, 1e-12);
}

TEST(LongTermAverage, EmptyHistoryIsMaximal) {
  std::vector<Matrix> ws(4, Matrix::Zero(3, 3));
  Matrix edge = Matrix::Zero(3, 3);
  edge(0, 1) = edge(1, 0) = 1.0;
  ws.push_back(edge);
  GraphSequence seq = GraphSequence::from_matrices(ws);
  EXPECT_EQ(baseline_lta(seq, 4, 4), 1.0);
}

TEST(LongTermAverage, MatchesHandOracle) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    std::vector<Matrix> ws;
    for (int t = 0; t < 5; ++t) ws.push_back(fixture::random_symmetric(5, rng));
    GraphSequence seq = GraphSequence::from_matrices(ws);
    Matrix mean = (ws[1] + ws[2] + ws[3]) / 3.0;
    const double expect = hand_cosine_distance(hand_signature(mean), hand_signature(ws[4]));
    EXPECT_NEAR(baseline_lta(seq, 4, 3), expect, 1e-10);
  }
}

TEST(Activity, ConstantIsZero) {
  std::mt19937_64 rng(3);
  Matrix w = fixture::random_symmetric(6, rng);
  GraphSequence seq = GraphSequence::from_matrices(std::vector<Matrix>(6, w));
  EXPECT_NEAR(baseline_activity(seq, 5, 3), 0.0, 1e-12);
}

TEST(Activity, EigenvectorOrientation) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    Matrix w = fixture::random_symmetric(7, rng);
    Vector u = principal_eigenvector(w);
    EXPECT_GE(u.sum(), 0.0);
    EXPECT_NEAR(u.norm(), 1.0, 1e-12);
    Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeFullU);
    Vector ref = svd.matrixU().col(0);
    if (ref.sum() < 0) ref = -ref;
    EXPECT_LT((u - ref).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Activity, BlockSwitchStandsOut) {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SBMConfig base;
    base.n = 40;
    base.blocks = {20, 20};
    base.p_in = 0.6;
    base.p_out = 0.05;
    base.steps = 20;
    base.seed = seed;
    ScenarioSpec spec;
    spec.change_points.push_back({12, std::vector<std::size_t>{10, 30}, std::nullopt, std::nullopt});
    Scenario sc = generate(spec, base);
    std::vector<double> scores;
    for (Timestamp t = 4; t < 12; ++t) scores.push_back(baseline_activity(sc.sequence, t, 3));
    std::nth_element(scores.begin(), scores.begin() + scores.size() / 2, scores.end());
    if (baseline_activity(sc.sequence, 12, 3) > scores[scores.size() / 2]) ++wins;
  }
  EXPECT_GE(wins, 4);
}

TEST(BaselineReport, SameStepsAsDetector) {
  Scenario sc = small_scenario(5);
  DetectorConfig cfg = small_config(5);
  AnomalyReport model = detect_sequence(sc.sequence, cfg);
  for (Baseline b : {Baseline::kLongTermAverage, Baseline::kActivityVector}) {
    AnomalyReport base = baseline_report(sc.sequence, b, cfg);
    ASSERT_EQ(base.records.size(), model.records.size());
    for (std::size_t i = 0; i < base.records.size(); ++i) {
      EXPECT_EQ(base.records[i].t, model.records[i].t);
      EXPECT_GE(base.records[i].z, 0.0);
      EXPECT_LE(base.records[i].z, 1.0);
    }
  }
}

TEST(Sweep, GridExpansion) {
  DetectorConfig base;
  SweepGrid grid;
  grid.alpha = {0.1, 0.2};
  grid.k = {4, 8, 16};
  auto cells = expand_grid(grid, base);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].alpha, 0.1);
  EXPECT_EQ(cells[0].k, 4);
  EXPECT_EQ(cells[1].k, 8);
  EXPECT_EQ(cells[3].alpha, 0.2);
  EXPECT_EQ(cells[5].lambda1, base.hp.lambda1);
  EXPECT_EQ(expand_grid(SweepGrid{}, base).size(), 1u);
}

TEST(Sweep, RowsAreDeterministic) {
  Scenario sc = small_scenario(6);
  DetectorConfig cfg = small_config(6);
  SweepGrid one;
  one.alpha = {0.2};
  auto rows = sweep(one, sc, "small", cfg, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].result.scenario, "small");
  EXPECT_EQ(rows[0].result.metric, "HR");

  SweepGrid dup;
  dup.alpha = {0.4, 0.4};
  auto twice = sweep(dup, sc, "small", cfg, 1);
  ASSERT_EQ(twice.size(), 2u);
  EXPECT_EQ(twice[0].result.value, twice[1].result.value);
  EXPECT_EQ(sweep_csv(twice).substr(0, 5), "alpha");
}

TEST(Metrics, Csv) {
  std::vector<MetricResult> rows{{"pure", "lem-cpd", "HR", 3, 1.0, 7},
                                 {"pure", "activity", "MAE", std::nullopt, 0.25, 7}};
  std::string csv = metrics_csv(rows);
  EXPECT_EQ(csv,
            "scenario,method,metric,K,value,seed\n"
            "pure,lem-cpd,HR,3,1.000000,7\n"
            "pure,activity,MAE,,0.250000,7\n");
}
