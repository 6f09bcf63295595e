#include "lemcpd/synth.hpp"

#include "lemcpd/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

namespace lemcpd {

void SBMConfig::validate() const {
  if (n == 0) throw ConfigError("SBM: n must be positive");
  if (blocks.empty()) throw ConfigError("SBM: at least one block required");
  if (std::any_of(blocks.begin(), blocks.end(), [](std::size_t b) { return b == 0; })) {
    throw ConfigError("SBM: block sizes must be positive");
  }
  if (std::accumulate(blocks.begin(), blocks.end(), std::size_t{0}) != n) {
    throw ConfigError("SBM: block sizes must sum to n=" + std::to_string(n));
  }
  if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) {
    throw ConfigError("SBM: require 0 <= p_out <= p_in <= 1");
  }
  if (steps == 0) throw ConfigError("SBM: steps must be positive");
}

std::vector<std::size_t> equal_blocks(std::size_t n, std::size_t count) {
  if (count == 0 || count > n) throw ConfigError("equal_blocks: need 1 <= count <= n");
  std::vector<std::size_t> sizes(count, n / count);
  for (std::size_t i = 0; i < n % count; ++i) ++sizes[i];
  return sizes;
}

GraphSnapshot sample_snapshot(const SBMConfig& cfg, Timestamp t, std::mt19937_64& rng) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n);
  std::vector<std::size_t> block_of(cfg.n);
  std::size_t node = 0;
  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    for (std::size_t i = 0; i < cfg.blocks[b]; ++i) block_of[node++] = b;
  }
  std::bernoulli_distribution intra(cfg.p_in);
  std::bernoulli_distribution inter(cfg.p_out);
  Matrix w = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool same = block_of[static_cast<std::size_t>(i)] == block_of[static_cast<std::size_t>(j)];
      if (same ? intra(rng) : inter(rng)) {
        w(i, j) = 1.0;
        w(j, i) = 1.0;
      }
    }
  }
  return GraphSnapshot(t, std::move(w), Directedness::kUndirected);
}

namespace {

SBMConfig apply(SBMConfig cfg, const RegimeChange& change) {
  if (change.blocks) cfg.blocks = *change.blocks;
  if (change.p_in) cfg.p_in = *change.p_in;
  if (change.p_out) cfg.p_out = *change.p_out;
  cfg.validate();
  return cfg;
}

std::map<Timestamp, const RegimeChange*> index_changes(const std::vector<RegimeChange>& list,
                                                       std::size_t steps, const char* what) {
  std::map<Timestamp, const RegimeChange*> out;
  for (const auto& c : list) {
    if (c.t < 1 || c.t >= static_cast<Timestamp>(steps)) {
      throw ConfigError(std::string(what) + " at t=" + std::to_string(c.t) + " outside [1, " +
                        std::to_string(steps - 1) + "]");
    }
    if (!out.emplace(c.t, &c).second) {
      throw ConfigError(std::string("overlapping ") + what + "s at t=" + std::to_string(c.t));
    }
  }
  return out;
}

Scenario build(const ScenarioSpec& spec, const SBMConfig& base) {
  base.validate();
  const auto changes = index_changes(spec.change_points, base.steps, "change point");
  const auto events = index_changes(spec.events, base.steps, "event");
  for (const auto& [t, e] : events) {
    if (changes.count(t)) {
      throw ConfigError("event collides with change point at t=" + std::to_string(t));
    }
  }

  Scenario out;
  std::mt19937_64 rng(base.seed);
  SBMConfig current = base;
  std::vector<GraphSnapshot> snaps;
  snaps.reserve(base.steps);
  for (std::size_t i = 0; i < base.steps; ++i) {
    const auto t = static_cast<Timestamp>(i);
    if (auto it = changes.find(t); it != changes.end()) {
      current = apply(current, *it->second);
      out.labels.change_points.insert(t);
    }
    SBMConfig effective = current;
    if (auto it = events.find(t); it != events.end()) {
      effective = apply(current, *it->second);
      out.labels.events.insert(t);
    }
    snaps.push_back(sample_snapshot(effective, t, rng));
    out.configs.push_back(effective);
  }
  out.sequence = GraphSequence(std::move(snaps));
  return out;
}

}  // namespace

Scenario generate_pure(const ScenarioSpec& spec, const SBMConfig& base) {
  if (spec.kind != ScenarioKind::kPure) throw ConfigError("generate_pure: scenario is not pure");
  if (!spec.events.empty()) throw ConfigError("pure scenarios cannot contain events");
  return build(spec, base);
}

Scenario generate_hybrid(const ScenarioSpec& spec, const SBMConfig& base) {
  if (spec.kind != ScenarioKind::kHybrid) {
    throw ConfigError("generate_hybrid: scenario is not hybrid");
  }
  return build(spec, base);
}

Scenario generate(const ScenarioSpec& spec, const SBMConfig& base) {
  return spec.kind == ScenarioKind::kPure ? generate_pure(spec, base)
                                          : generate_hybrid(spec, base);
}

ScenarioSpec default_scenario(const SBMConfig& base, const DefaultScenarioOptions& options) {
  base.validate();
  const std::size_t total = options.changes + options.events;
  const Timestamp last = static_cast<Timestamp>(base.steps) - 1;
  if (options.earliest < 1 ||
      (total > 0 && options.earliest + static_cast<Timestamp>(total - 1) * options.min_gap > last)) {
    throw ConfigError("default scenario: labels do not fit into " + std::to_string(base.steps) +
                      " steps with the requested spacing");
  }

  // Placement uses its own stream so the sampled graphs stay independent of it.
  std::seed_seq sseq{static_cast<std::uint32_t>(base.seed),
                     static_cast<std::uint32_t>(base.seed >> 32), 0x5eedu};
  std::mt19937_64 rng(sseq);
  std::uniform_int_distribution<Timestamp> pick(options.earliest, last);
  std::vector<Timestamp> positions;
  for (int attempt = 0; positions.size() < total; ++attempt) {
    if (attempt > 100000) throw ConfigError("default scenario: could not place labels");
    const Timestamp t = pick(rng);
    const bool clear = std::all_of(positions.begin(), positions.end(), [&](Timestamp p) {
      return std::abs(p - t) >= options.min_gap;
    });
    if (clear) positions.push_back(t);
  }
  std::sort(positions.begin(), positions.end());

  std::vector<bool> is_event(total, false);
  std::fill(is_event.begin(), is_event.begin() + static_cast<std::ptrdiff_t>(options.events), true);
  std::shuffle(is_event.begin(), is_event.end(), rng);

  ScenarioSpec spec;
  spec.kind = options.events > 0 ? ScenarioKind::kHybrid : ScenarioKind::kPure;
  const std::size_t base_count = base.blocks.size();
  const std::size_t alt_count = base_count == 2 ? 4 : 2;
  std::size_t current = base_count;
  for (std::size_t i = 0; i < total; ++i) {
    RegimeChange c;
    c.t = positions[i];
    if (is_event[i]) {
      c.p_out = options.event_p_out;
      spec.events.push_back(c);
    } else {
      current = current == base_count ? alt_count : base_count;
      c.blocks = equal_blocks(base.n, current);
      const bool alternate = current == alt_count;
      c.p_in = alternate ? options.alt_p_in.value_or(base.p_in) : base.p_in;
      c.p_out = alternate ? options.alt_p_out.value_or(base.p_out) : base.p_out;
      spec.change_points.push_back(c);
    }
  }
  return spec;
}

}  // namespace lemcpd
