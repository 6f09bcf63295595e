#include "lemcpd/bench.hpp"

#include "lemcpd/errors.hpp"
#include "lemcpd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace lemcpd {

double hit_ratio(const AnomalyReport& report, const LabelSet& labels, std::size_t K) {
  if (K == 0) throw ConfigError("hit_ratio: K must be >= 1");
  if (labels.change_points.empty()) throw DataError("hit_ratio: no change points to hit");
  const auto top = rank_topk(report, K);
  const auto hits = std::count_if(top.begin(), top.end(), [&](Timestamp t) {
    return labels.change_points.count(t) > 0;
  });
  const auto denom = std::min(K, labels.change_points.size());
  return static_cast<double>(hits) / static_cast<double>(denom);
}

double mae(const GraphSnapshot& pred, const GraphSnapshot& actual,
           const std::optional<EntryMask>& mask) {
  if (pred.size() != actual.size()) throw DataError("mae: shape mismatch");
  const Matrix diff = (pred.weights() - actual.weights()).cwiseAbs();
  if (!mask) {
    if (diff.size() == 0) throw DataError("mae: empty mask");
    return diff.mean();
  }
  if (mask->empty()) throw DataError("mae: empty mask");
  double total = 0.0;
  for (const auto& [i, j] : *mask) {
    if (i < 0 || j < 0 || i >= diff.rows() || j >= diff.cols()) {
      throw DataError("mae: mask entry out of range");
    }
    total += diff(i, j);
  }
  return total / static_cast<double>(mask->size());
}

GraphSnapshot historical_average(const GraphSequence& seq, Timestamp t_next, std::size_t window_size) {
  const GraphSequence past = window(seq, t_next - 1, window_size);
  Matrix mean = Matrix::Zero(static_cast<Eigen::Index>(seq.nodes()),
                             static_cast<Eigen::Index>(seq.nodes()));
  for (const auto& s : past) mean += s.weights();
  mean /= static_cast<double>(window_size);
  return GraphSnapshot(t_next, std::move(mean), past[0].directedness());
}

double baseline_lta(const GraphSequence& seq, Timestamp t_next, std::size_t window_size,
                    LaplacianMode mode) {
  if (!seq.contains(t_next)) throw DataError("insufficient history: t_next not in sequence");
  const GraphSnapshot avg = historical_average(seq, t_next, window_size);
  const GraphSnapshot& target = seq.at_time(t_next);
  if (mode == LaplacianMode::kAuto) {
    const bool sym = avg.weights() == avg.weights().transpose() &&
                     target.weights() == target.weights().transpose();
    mode = sym ? LaplacianMode::kUndirected : LaplacianMode::kDirected;
  }
  return cosine_score(signature(avg, mode).sigma, signature(target, mode).sigma);
}

Vector principal_eigenvector(const Matrix& adjacency) {
  const Matrix sym = 0.5 * (adjacency + adjacency.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("activity vector: eigensolver failed");
  // Eigenvalues ascend; the principal one has the largest magnitude.
  const Eigen::Index n = sym.rows();
  const auto& ev = solver.eigenvalues();
  const Eigen::Index idx = std::abs(ev[0]) > std::abs(ev[n - 1]) ? 0 : n - 1;
  Vector u = solver.eigenvectors().col(idx);
  if (u.sum() < 0.0) u = -u;
  return u;
}

double baseline_activity(const GraphSequence& seq, Timestamp t_next, std::size_t short_window) {
  if (!seq.contains(t_next)) throw DataError("insufficient history: t_next not in sequence");
  const GraphSequence past = window(seq, t_next - 1, short_window);
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(seq.nodes()));
  for (const auto& s : past) mean += principal_eigenvector(s.weights());
  mean /= static_cast<double>(short_window);
  return cosine_score(principal_eigenvector(seq.at_time(t_next).weights()), mean);
}

AnomalyReport baseline_report(const GraphSequence& seq, Baseline method,
                              const DetectorConfig& cfg) {
  cfg.validate();
  const auto long_window = static_cast<std::size_t>(cfg.hp.long_window());
  if (seq.length() <= long_window + 1) throw DataError("insufficient history for baseline");
  AnomalyReport report;
  report.config = cfg;
  report.resolved_laplacian = resolve_laplacian(cfg.laplacian, seq);
  const Timestamp first = seq.first_timestamp() + static_cast<Timestamp>(long_window) + 1;
  for (Timestamp t = first; t <= seq.last_timestamp(); ++t) {
    AnomalyRecord rec;
    rec.t = t;
    rec.z = method == Baseline::kLongTermAverage
                ? baseline_lta(seq, t, long_window, report.resolved_laplacian)
                : baseline_activity(seq, t, static_cast<std::size_t>(cfg.hp.window));
    rec.flagged = rec.z >= cfg.threshold;
    report.records.push_back(rec);
  }
  return report;
}

std::vector<SweepCell> expand_grid(const SweepGrid& grid, const DetectorConfig& base) {
  auto or_base = [](const auto& axis, auto value) {
    using T = std::decay_t<decltype(value)>;
    return axis.empty() ? std::vector<T>{value} : std::vector<T>(axis.begin(), axis.end());
  };
  std::vector<SweepCell> cells;
  for (double a : or_base(grid.alpha, base.alpha)) {
    for (double l1 : or_base(grid.lambda1, base.hp.lambda1)) {
      for (double l2 : or_base(grid.lambda2, base.hp.lambda2)) {
        for (int k : or_base(grid.k, base.hp.k)) cells.push_back({a, l1, l2, k});
      }
    }
  }
  return cells;
}

std::vector<SweepRow> sweep(const SweepGrid& grid, const Scenario& scenario,
                            const std::string& scenario_id, const DetectorConfig& base,
                            std::size_t K) {
  std::vector<SweepRow> rows;
  for (const SweepCell& cell : expand_grid(grid, base)) {
    DetectorConfig cfg = base;
    cfg.alpha = cell.alpha;
    cfg.hp.lambda1 = cell.lambda1;
    cfg.hp.lambda2 = cell.lambda2;
    cfg.hp.k = cell.k;
    const AnomalyReport report = detect_sequence(scenario.sequence, cfg);
    MetricResult m{scenario_id, "lem-cpd", "HR", K, hit_ratio(report, scenario.labels, K),
                   cfg.seed};
    rows.push_back({cell, m});
  }
  return rows;
}

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricResult>& rows) {
  std::ostringstream out;
  out << "scenario,method,metric,K,value,seed\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.method << ',' << r.metric << ',';
    if (r.K) out << *r.K;
    out << ',' << format_value(r.value) << ',' << r.seed << '\n';
  }
  return out.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "alpha,lambda1,lambda2,k,scenario,method,metric,K,value,seed\n";
  for (const auto& row : rows) {
    const auto& r = row.result;
    out << format_value(row.cell.alpha) << ',' << format_value(row.cell.lambda1) << ','
        << format_value(row.cell.lambda2) << ',' << row.cell.k << ',' << r.scenario << ','
        << r.method << ',' << r.metric << ',';
    if (r.K) out << *r.K;
    out << ',' << format_value(r.value) << ',' << r.seed << '\n';
  }
  return out.str();
}

}  // namespace lemcpd
