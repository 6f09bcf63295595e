#include "lemcpd/detector.hpp"

#include "lemcpd/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace lemcpd {

void DetectorConfig::validate() const {
  hp.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
}

const char* to_string(LaplacianMode mode) {
  switch (mode) {
    case LaplacianMode::kAuto: return "auto";
    case LaplacianMode::kUndirected: return "undirected";
    case LaplacianMode::kDirected: return "directed";
  }
  return "auto";
}

LaplacianMode parse_laplacian_mode(const std::string& text) {
  if (text == "auto") return LaplacianMode::kAuto;
  if (text == "undirected") return LaplacianMode::kUndirected;
  if (text == "directed") return LaplacianMode::kDirected;
  throw ConfigError("unknown Laplacian mode '" + text + "' (auto|undirected|directed)");
}

LaplacianMode resolve_laplacian(LaplacianMode mode, const GraphSequence& seq) {
  if (mode != LaplacianMode::kAuto) return mode;
  return seq.all_symmetric() ? LaplacianMode::kUndirected : LaplacianMode::kDirected;
}

LatentState shift_state(const LatentState& previous) {
  LatentState next = previous;
  const std::size_t T = previous.U.size();
  for (std::size_t t = 0; t + 1 < T; ++t) {
    next.U[t] = previous.U[t + 1];
    next.V[t] = previous.V[t + 1];
  }
  return next;
}

bool warm_start_usable(const LatentState& state) {
  if (state.U.empty()) return false;
  const double reconstructed = (state.U.back() * state.C * state.V.back()).mean();
  const double predicted = predict_next(state).weights().mean();
  if (!std::isfinite(reconstructed) || !std::isfinite(predicted)) return false;
  if (reconstructed <= 0.0) return predicted <= 0.0;
  const double ratio = predicted / reconstructed;
  return ratio <= kWarmDriftLimit && ratio >= 1.0 / kWarmDriftLimit;
}

std::uint64_t step_seed(std::uint64_t seed, Timestamp t, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace {

class SignatureCache {
 public:
  SignatureCache(const GraphSequence& seq, LaplacianMode mode)
      : seq_(seq), mode_(mode), cache_(seq.length()) {}

  const SpectrumSignature& get(Timestamp t) {
    auto& slot = cache_[static_cast<std::size_t>(t - seq_.first_timestamp())];
    if (!slot) slot = signature(seq_.at_time(t), mode_);
    return *slot;
  }

  LaplacianMode mode() const { return mode_; }

 private:
  const GraphSequence& seq_;
  LaplacianMode mode_;
  std::vector<std::optional<SpectrumSignature>> cache_;
};

StepResult run_step(const GraphSequence& seq, Timestamp t_next, const DetectorConfig& cfg,
                    const std::optional<LatentState>& warm,
                    const std::optional<LongTermGuide>& warm_guide, SignatureCache& sigs) {
  const HyperParams& hp = cfg.hp;
  const int T = hp.window;
  const int long_window = hp.long_window();
  if (!seq.contains(t_next) || !seq.contains(t_next - long_window)) {
    throw DataError("insufficient history for t=" + std::to_string(t_next) + ": need [" +
                    std::to_string(t_next - long_window) + ", " + std::to_string(t_next) + "]");
  }
  const GraphSequence long_seq = window(seq, t_next - 1, static_cast<std::size_t>(long_window));
  const GraphSequence short_seq = window(seq, t_next - 1, static_cast<std::size_t>(T));

  const Vector r = adaptive_weights(long_seq);
  LongTermGuide guide =
      fit_longterm(long_seq, r, hp, step_seed(cfg.seed, t_next, 1), warm_guide).guide;

  LatentState init;
  if (warm && warm->window() == T && warm->rank() == hp.k &&
      warm->nodes() == static_cast<Eigen::Index>(seq.nodes()) && warm_start_usable(*warm)) {
    init = shift_state(*warm);
  } else {
    init = init_state(short_seq, hp, step_seed(cfg.seed, t_next, 0));
  }
  FitResult fitted = fit(short_seq, guide, hp, std::move(init));

  GraphSnapshot predicted = predict_next(fitted.state, t_next - 1);
  if (sigs.mode() == LaplacianMode::kUndirected) {
    Matrix sym = 0.5 * (predicted.weights() + predicted.weights().transpose());
    predicted = GraphSnapshot(t_next, std::move(sym), Directedness::kUndirected);
  }

  std::vector<SpectrumSignature> history;
  bool perturbed = false;
  for (Timestamp t = t_next - T; t < t_next; ++t) {
    history.push_back(sigs.get(t));
    perturbed = perturbed || history.back().perturbed;
  }
  const SpectrumSignature& actual = sigs.get(t_next);
  const SpectrumSignature pred_sig = signature(predicted, sigs.mode());
  perturbed = perturbed || actual.perturbed || pred_sig.perturbed;

  AnomalyRecord rec;
  rec.t = t_next;
  rec.z1 = score_z1(pred_sig.sigma, actual.sigma);
  rec.z2 = score_z2(normal_pattern(history), actual.sigma);
  rec.z = combine_score(rec.z1, rec.z2, cfg.alpha);
  rec.flagged = rec.z >= cfg.threshold;
  rec.final_loss = fitted.trace.back();
  rec.iterations = fitted.iterations();
  rec.perturbed = perturbed;
  return StepResult{rec, std::move(fitted.state), std::move(guide), std::move(fitted.trace),
                    std::move(predicted)};
}

}  // namespace

StepResult detect_step(const GraphSequence& seq, Timestamp t_next, const DetectorConfig& cfg,
                       const std::optional<LatentState>& warm,
                       const std::optional<LongTermGuide>& warm_guide) {
  cfg.validate();
  if (!seq.contains(t_next)) {
    throw DataError("insufficient history: t=" + std::to_string(t_next) + " not in sequence");
  }
  LaplacianMode mode = cfg.laplacian;
  if (mode == LaplacianMode::kAuto) {
    const auto start = std::max(seq.first_timestamp(), t_next - cfg.hp.window);
    mode = resolve_laplacian(mode, window(seq, t_next, static_cast<std::size_t>(t_next - start + 1)));
  }
  SignatureCache sigs(seq, mode);
  return run_step(seq, t_next, cfg, warm, warm_guide, sigs);
}

GraphSnapshot predict_after(const GraphSequence& seq, Timestamp last, const DetectorConfig& cfg) {
  cfg.validate();
  const HyperParams& hp = cfg.hp;
  const GraphSequence long_seq = window(seq, last, static_cast<std::size_t>(hp.long_window()));
  const GraphSequence short_seq = window(seq, last, static_cast<std::size_t>(hp.window));
  const Timestamp t_next = last + 1;
  const LongTermGuide guide =
      fit_longterm(long_seq, adaptive_weights(long_seq), hp, step_seed(cfg.seed, t_next, 1)).guide;
  const FitResult fitted =
      fit(short_seq, guide, hp, init_state(short_seq, hp, step_seed(cfg.seed, t_next, 0)));
  GraphSnapshot predicted = predict_next(fitted.state, last);
  if (resolve_laplacian(cfg.laplacian, long_seq) == LaplacianMode::kUndirected) {
    Matrix sym = 0.5 * (predicted.weights() + predicted.weights().transpose());
    predicted = GraphSnapshot(t_next, std::move(sym), Directedness::kUndirected);
  }
  return predicted;
}

AnomalyReport detect_sequence(const GraphSequence& seq, const DetectorConfig& cfg) {
  cfg.validate();
  const auto long_window = static_cast<std::size_t>(cfg.hp.long_window());
  if (seq.length() <= long_window + 1) {
    throw DataError("insufficient history: sequence of " + std::to_string(seq.length()) +
                    " snapshots needs more than " + std::to_string(long_window + 1));
  }
  AnomalyReport report;
  report.config = cfg;
  report.resolved_laplacian = resolve_laplacian(cfg.laplacian, seq);
  SignatureCache sigs(seq, report.resolved_laplacian);

  std::optional<LatentState> warm;
  std::optional<LongTermGuide> warm_guide;
  const Timestamp first = seq.first_timestamp() + static_cast<Timestamp>(long_window) + 1;
  for (Timestamp t = first; t <= seq.last_timestamp(); ++t) {
    StepResult step = run_step(seq, t, cfg, warm, warm_guide, sigs);
    report.records.push_back(step.record);
    if (cfg.warm_start) {
      warm = std::move(step.state);
      warm_guide = std::move(step.guide);
    }
  }
  return report;
}

std::vector<Timestamp> rank_topk(const AnomalyReport& report, std::size_t K) {
  const auto& recs = report.records;
  if (K > recs.size()) {
    throw ConfigError("K=" + std::to_string(K) + " exceeds report length " +
                      std::to_string(recs.size()));
  }
  std::vector<std::size_t> order(recs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (recs[a].z != recs[b].z) return recs[a].z > recs[b].z;
    return recs[a].t < recs[b].t;
  });
  std::vector<Timestamp> top;
  top.reserve(K);
  for (std::size_t i = 0; i < K; ++i) top.push_back(recs[order[i]].t);
  return top;
}

std::vector<Timestamp> flag_threshold(const AnomalyReport& report, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  std::vector<Timestamp> flagged;
  for (const auto& r : report.records) {
    if (r.z >= threshold) flagged.push_back(r.t);
  }
  return flagged;
}

std::string report_csv(const AnomalyReport& report) {
  std::ostringstream out;
  out << "t,z1,z2,z,flagged\n";
  char buf[160];
  for (const auto& r : report.records) {
    std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f,%.6f,%d\n", static_cast<long long>(r.t), r.z1,
                  r.z2, r.z, r.flagged ? 1 : 0);
    out << buf;
  }
  return out.str();
}

std::string report_json(const AnomalyReport& report) {
  using nlohmann::json;
  const DetectorConfig& c = report.config;
  json config = {
      {"alpha", c.alpha},
      {"threshold", c.threshold},
      {"laplacian", to_string(c.laplacian)},
      {"resolved_laplacian", to_string(report.resolved_laplacian)},
      {"warm_start", c.warm_start},
      {"k", c.hp.k},
      {"window", c.hp.window},
      {"long_multiplier", c.hp.long_multiplier},
      {"lambda1", c.hp.lambda1},
      {"lambda2", c.hp.lambda2},
      {"epsilon", c.hp.epsilon},
      {"max_iter", c.hp.max_iter},
      {"delta_guard", c.hp.delta_guard},
  };
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"t", r.t},
                       {"z1", r.z1},
                       {"z2", r.z2},
                       {"z", r.z},
                       {"flagged", r.flagged},
                       {"final_loss", r.final_loss},
                       {"iterations", r.iterations},
                       {"perturbed", r.perturbed}});
  }
  json doc = {{"seed", c.seed}, {"config", config}, {"records", records}};
  return doc.dump(2);
}

void write_report(const AnomalyReport& report, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write " + csv_path.string());
  csv << report_csv(report);
  std::ofstream js(json_path);
  if (!js) throw DataError("cannot write " + json_path.string());
  js << report_json(report) << '\n';
}

}  // namespace lemcpd
