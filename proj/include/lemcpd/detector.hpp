#pragma once

// Sliding-window change point detection: fit the short window, predict the
// next snapshot and score it against the prediction and the window's
// normal spectral pattern.

#include "lemcpd/graphseq.hpp"
#include "lemcpd/lemcore.hpp"
#include "lemcpd/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lemcpd {

struct DetectorConfig {
  HyperParams hp;
  double alpha = 0.2;
  double threshold = 0.5;
  LaplacianMode laplacian = LaplacianMode::kAuto;
  bool warm_start = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AnomalyRecord {
  Timestamp t = 0;
  double z1 = 0.0;
  double z2 = 0.0;
  double z = 0.0;
  bool flagged = false;
  double final_loss = 0.0;
  int iterations = 0;
  bool perturbed = false;  // some signature in this step needed teleportation
};

struct AnomalyReport {
  std::vector<AnomalyRecord> records;
  DetectorConfig config;
  LaplacianMode resolved_laplacian = LaplacianMode::kUndirected;
};

struct StepResult {
  AnomalyRecord record;
  LatentState state;
  LongTermGuide guide;
  std::vector<double> loss_trace;
  GraphSnapshot prediction;
};

/// One detection step for the snapshot at `t_next`. Needs the long window
/// [t_next - long_window, t_next - 1] and G_{t_next} in `seq`. `warm_guide`
/// seeds the long-term fit with the previous step's guide.
StepResult detect_step(const GraphSequence& seq, Timestamp t_next, const DetectorConfig& cfg,
                       const std::optional<LatentState>& warm = std::nullopt,
                       const std::optional<LongTermGuide>& warm_guide = std::nullopt);

/// Fits the window ending at `last` (long window included) and returns the
/// one-step prediction stamped last + 1, symmetrized when the resolved
/// Laplacian mode is undirected.
GraphSnapshot predict_after(const GraphSequence& seq, Timestamp last, const DetectorConfig& cfg);

/// Runs detect_step for every t_next with a full long window behind it,
/// threading warm starts when cfg.warm_start is set.
AnomalyReport detect_sequence(const GraphSequence& seq, const DetectorConfig& cfg);

/// Timestamps of the K largest z; ties go to the earlier timestamp.
std::vector<Timestamp> rank_topk(const AnomalyReport& report, std::size_t K);

/// Timestamps with z >= threshold.
std::vector<Timestamp> flag_threshold(const AnomalyReport& report, double threshold);

/// Resolves kAuto against the sequence (undirected iff all symmetric).
LaplacianMode resolve_laplacian(LaplacianMode mode, const GraphSequence& seq);

/// Warm start for the next window: factors shift one position left and the
/// vacated last slot repeats the previous U_T / V_T.
LatentState shift_state(const LatentState& previous);

/// Largest tolerated ratio between the mean of the one-step prediction and
/// the mean of the last reconstruction U_T C V_T (either direction).
inline constexpr double kWarmDriftLimit = 4.0;

/// False when the state's prediction has drifted in scale away from its own
/// reconstruction; detection then cold-starts instead of warm-starting.
bool warm_start_usable(const LatentState& state);

/// Per-step seed derived from the run seed and the step timestamp.
std::uint64_t step_seed(std::uint64_t seed, Timestamp t, std::uint64_t stream);

const char* to_string(LaplacianMode mode);
LaplacianMode parse_laplacian_mode(const std::string& text);

/// CSV with header `t,z1,z2,z,flagged`, six decimals.
std::string report_csv(const AnomalyReport& report);
/// JSON with config echo, seed and full-precision records.
std::string report_json(const AnomalyReport& report);
void write_report(const AnomalyReport& report, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path);

}  // namespace lemcpd
