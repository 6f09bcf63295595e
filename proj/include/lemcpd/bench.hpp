#pragma once

// Evaluation metrics, the long-term-average and activity-vector baselines,
// and parameter sweeps.

#include "lemcpd/detector.hpp"
#include "lemcpd/graphseq.hpp"
#include "lemcpd/synth.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lemcpd {

struct MetricResult {
  std::string scenario;
  std::string method;
  std::string metric;
  std::optional<std::size_t> K;
  double value = 0.0;
  std::uint64_t seed = 0;
};

/// |topK(report) ∩ change points| / min(K, #change points).
double hit_ratio(const AnomalyReport& report, const LabelSet& labels, std::size_t K);

using EntryMask = std::vector<std::pair<Eigen::Index, Eigen::Index>>;

/// Mean absolute error over the masked entries (all entries by default).
double mae(const GraphSnapshot& pred, const GraphSnapshot& actual,
           const std::optional<EntryMask>& mask = std::nullopt);

/// Element-wise mean of the `window` snapshots before t_next.
GraphSnapshot historical_average(const GraphSequence& seq, Timestamp t_next, std::size_t window);

/// Cosine distance between the signature of G_{t_next} and that of the
/// average graph over the preceding `window` snapshots.
double baseline_lta(const GraphSequence& seq, Timestamp t_next, std::size_t window,
                    LaplacianMode mode = LaplacianMode::kAuto);

/// Principal eigenvector of the symmetrized adjacency matrix, oriented to a
/// non-negative sum.
Vector principal_eigenvector(const Matrix& adjacency);

/// 1 - cos(u_{t_next}, mean of u over the preceding `short_window` steps).
double baseline_activity(const GraphSequence& seq, Timestamp t_next, std::size_t short_window);

enum class Baseline { kLongTermAverage, kActivityVector };

/// Scores every timestamp detect_sequence would score under `cfg`, so
/// baselines and the model are evaluated on identical steps.
AnomalyReport baseline_report(const GraphSequence& seq, Baseline method,
                              const DetectorConfig& cfg);

struct SweepGrid {
  std::vector<double> alpha;
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<int> k;
};

struct SweepCell {
  double alpha = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int k = 0;
};

/// Cartesian product in grid order (alpha outermost, k innermost). Empty
/// axes take the value from `base`.
std::vector<SweepCell> expand_grid(const SweepGrid& grid, const DetectorConfig& base);

struct SweepRow {
  SweepCell cell;
  MetricResult result;
};

/// Runs detect_sequence per grid cell on one scenario and reports HR@K.
std::vector<SweepRow> sweep(const SweepGrid& grid, const Scenario& scenario,
                            const std::string& scenario_id, const DetectorConfig& base,
                            std::size_t K);

/// `scenario,method,metric,K,value,seed` CSV.
std::string metrics_csv(const std::vector<MetricResult>& rows);
/// Sweep table with the grid columns prepended.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace lemcpd
