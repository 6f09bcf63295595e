#pragma once

// Stochastic block model scenarios with planted change points and
// one-step events.

#include "lemcpd/graphseq.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace lemcpd {

struct SBMConfig {
  std::size_t n = 100;
  std::vector<std::size_t> blocks{25, 25, 25, 25};  // contiguous node ranges, sum n
  double p_in = 0.80;
  double p_out = 0.10;
  std::size_t steps = 151;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Partial override of the generating model. Unset fields keep the value
/// in force at that time.
struct RegimeChange {
  Timestamp t = 0;
  std::optional<std::vector<std::size_t>> blocks;
  std::optional<double> p_in;
  std::optional<double> p_out;
};

enum class ScenarioKind { kPure, kHybrid };

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kPure;
  std::vector<RegimeChange> change_points;  // permanent switches
  std::vector<RegimeChange> events;         // applied for exactly one step
};

/// Equal block sizes summing to n (the first n % count blocks get one extra).
std::vector<std::size_t> equal_blocks(std::size_t n, std::size_t count);

/// Undirected unweighted SBM draw: intra-block pairs connect with p_in,
/// inter-block pairs with p_out, no self-loops.
GraphSnapshot sample_snapshot(const SBMConfig& cfg, Timestamp t, std::mt19937_64& rng);

struct Scenario {
  GraphSequence sequence;
  LabelSet labels;
  std::vector<SBMConfig> configs;  // generating config per timestamp
};

Scenario generate_pure(const ScenarioSpec& spec, const SBMConfig& base);
Scenario generate_hybrid(const ScenarioSpec& spec, const SBMConfig& base);
/// Dispatches on spec.kind.
Scenario generate(const ScenarioSpec& spec, const SBMConfig& base);

struct DefaultScenarioOptions {
  std::size_t changes = 3;
  std::size_t events = 0;
  /// Earliest admissible change/event timestamp (first scored step).
  Timestamp earliest = 13;
  /// Minimum distance between any two labelled timestamps.
  Timestamp min_gap = 8;
  double event_p_out = 0.20;
  /// Probabilities of the alternate (switched-to) regime; the base
  /// probabilities are kept when unset.
  std::optional<double> alt_p_in = 0.50;
  std::optional<double> alt_p_out = 0.02;
};

/// Change points alternate the block count between 4 and 2 at seeded
/// random positions; events spike p_out for one step.
ScenarioSpec default_scenario(const SBMConfig& base, const DefaultScenarioOptions& options);

}  // namespace lemcpd
