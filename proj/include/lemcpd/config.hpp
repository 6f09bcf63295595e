#pragma once

// Run configuration shared by the command-line tools: a JSON file plus
// flag overrides.

#include "lemcpd/bench.hpp"
#include "lemcpd/detector.hpp"
#include "lemcpd/graphseq.hpp"
#include "lemcpd/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lemcpd {

struct ScenarioConfig {
  std::string id = "pure";
  ScenarioKind kind = ScenarioKind::kPure;
  SBMConfig sbm;
  /// Used when no explicit change points or events are listed.
  DefaultScenarioOptions placement;
  std::vector<RegimeChange> change_points;
  std::vector<RegimeChange> events;

  bool explicit_labels() const { return !change_points.empty() || !events.empty(); }
};

/// Spec for `scenario` drawn with `seed` (explicit lists win over placement).
ScenarioSpec scenario_spec(const ScenarioConfig& scenario, std::uint64_t seed);
Scenario build_scenario(const ScenarioConfig& scenario, std::uint64_t seed);

struct BenchConfig {
  std::size_t K = 3;
  std::vector<std::uint64_t> seeds;  // empty: the run seed only
  std::vector<ScenarioConfig> scenarios;  // empty: the run scenario only
  SweepGrid sweep;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  std::optional<std::filesystem::path> input;  // file or t<i>.edges directory
  LoadOptions load;
  std::optional<std::filesystem::path> labels;
  ScenarioConfig scenario;
  DetectorConfig detector;
  std::optional<Timestamp> predict_last;
  std::optional<std::filesystem::path> truth;
  BenchConfig bench;

  /// Throws ConfigError when the seed is missing or a section is invalid.
  std::uint64_t require_seed() const;
  void validate() const;
};

/// Parses a config document. Unknown keys are rejected so typos surface.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Effective configuration, suitable for re-running via load_config.
nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const ScenarioConfig& scenario);

}  // namespace lemcpd
