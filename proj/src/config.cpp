#include "lemcpd/config.hpp"

#include "lemcpd/errors.hpp"

#include <fstream>
#include <set>

namespace lemcpd {

using nlohmann::json;

namespace {

// Checked access into a JSON object: every key must be consumed.
class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    if (obj_.at(key).is_null()) {
      out.reset();
      return;
    }
    T value{};
    get(key, value);
    out = value;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key \"" + it.key() + "\"");
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

ScenarioKind parse_kind(const std::string& text) {
  if (text == "pure") return ScenarioKind::kPure;
  if (text == "hybrid") return ScenarioKind::kHybrid;
  throw ConfigError("scenario.kind must be \"pure\" or \"hybrid\", got \"" + text + "\"");
}

const char* kind_name(ScenarioKind kind) {
  return kind == ScenarioKind::kPure ? "pure" : "hybrid";
}

RegimeChange parse_change(const json& obj, const std::string& where, std::size_t n) {
  Reader r(obj, where);
  RegimeChange c;
  r.get("t", c.t);
  if (r.has("blocks")) {
    std::vector<std::size_t> blocks;
    r.get("blocks", blocks);
    c.blocks = blocks;
  }
  if (r.has("block_count")) {
    if (c.blocks) throw ConfigError(where + ": give blocks or block_count, not both");
    std::size_t count = 0;
    r.get("block_count", count);
    c.blocks = equal_blocks(n, count);
  }
  r.get("p_in", c.p_in);
  r.get("p_out", c.p_out);
  r.finish();
  return c;
}

json change_to_json(const RegimeChange& c) {
  json j = {{"t", c.t}};
  if (c.blocks) j["blocks"] = *c.blocks;
  if (c.p_in) j["p_in"] = *c.p_in;
  if (c.p_out) j["p_out"] = *c.p_out;
  return j;
}

ScenarioConfig parse_scenario(const json& obj, const std::string& where) {
  Reader r(obj, where);
  ScenarioConfig s;
  r.get("id", s.id);
  const bool kind_given = r.has("kind");
  if (kind_given) s.kind = parse_kind(r.raw("kind").get<std::string>());
  r.get("n", s.sbm.n);
  r.get("steps", s.sbm.steps);
  r.get("p_in", s.sbm.p_in);
  r.get("p_out", s.sbm.p_out);
  if (r.has("blocks") && r.has("block_count")) {
    throw ConfigError(where + ": give blocks or block_count, not both");
  }
  if (r.has("blocks")) {
    r.get("blocks", s.sbm.blocks);
  } else {
    std::size_t count = 4;
    r.get("block_count", count);
    s.sbm.blocks = equal_blocks(s.sbm.n, count);
  }
  r.get("changes", s.placement.changes);
  r.get("events", s.placement.events);
  r.get("earliest", s.placement.earliest);
  r.get("min_gap", s.placement.min_gap);
  r.get("event_p_out", s.placement.event_p_out);
  r.get("alt_p_in", s.placement.alt_p_in);
  r.get("alt_p_out", s.placement.alt_p_out);
  if (r.has("change_points")) {
    const json& list = r.raw("change_points");
    if (!list.is_array()) throw ConfigError(where + ".change_points: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      s.change_points.push_back(
          parse_change(list[i], where + ".change_points[" + std::to_string(i) + "]", s.sbm.n));
    }
  }
  if (r.has("event_list")) {
    const json& list = r.raw("event_list");
    if (!list.is_array()) throw ConfigError(where + ".event_list: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      s.events.push_back(
          parse_change(list[i], where + ".event_list[" + std::to_string(i) + "]", s.sbm.n));
    }
  }
  r.finish();
  const bool has_events = s.explicit_labels() ? !s.events.empty() : s.placement.events > 0;
  if (has_events) {
    if (kind_given && s.kind == ScenarioKind::kPure) {
      throw ConfigError(where + ": pure scenarios cannot contain events");
    }
    s.kind = ScenarioKind::kHybrid;
  }
  s.sbm.validate();
  return s;
}

void parse_detector(const json& obj, DetectorConfig& d) {
  Reader r(obj, "detector");
  r.get("alpha", d.alpha);
  r.get("threshold", d.threshold);
  if (r.has("laplacian")) d.laplacian = parse_laplacian_mode(r.raw("laplacian").get<std::string>());
  r.get("warm_start", d.warm_start);
  r.get("k", d.hp.k);
  r.get("window", d.hp.window);
  r.get("long_multiplier", d.hp.long_multiplier);
  r.get("lambda1", d.hp.lambda1);
  r.get("lambda2", d.hp.lambda2);
  r.get("epsilon", d.hp.epsilon);
  r.get("max_iter", d.hp.max_iter);
  r.get("delta_guard", d.hp.delta_guard);
  r.finish();
}

void parse_bench(const json& obj, BenchConfig& b) {
  Reader r(obj, "bench");
  r.get("K", b.K);
  r.get("seeds", b.seeds);
  if (r.has("scenarios")) {
    const json& list = r.raw("scenarios");
    if (!list.is_array()) throw ConfigError("bench.scenarios: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      b.scenarios.push_back(parse_scenario(list[i], "bench.scenarios[" + std::to_string(i) + "]"));
    }
  }
  if (r.has("sweep")) {
    Reader g(r.raw("sweep"), "bench.sweep");
    g.get("alpha", b.sweep.alpha);
    g.get("lambda1", b.sweep.lambda1);
    g.get("lambda2", b.sweep.lambda2);
    g.get("k", b.sweep.k);
    g.finish();
  }
  r.finish();
}

}  // namespace

ScenarioSpec scenario_spec(const ScenarioConfig& scenario, std::uint64_t seed) {
  if (scenario.explicit_labels()) {
    ScenarioSpec spec;
    spec.kind = scenario.kind;
    spec.change_points = scenario.change_points;
    spec.events = scenario.events;
    return spec;
  }
  SBMConfig sbm = scenario.sbm;
  sbm.seed = seed;
  return default_scenario(sbm, scenario.placement);
}

Scenario build_scenario(const ScenarioConfig& scenario, std::uint64_t seed) {
  SBMConfig sbm = scenario.sbm;
  sbm.seed = seed;
  return generate(scenario_spec(scenario, seed), sbm);
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required (config \"seed\" or --seed)");
  return *seed;
}

void RunConfig::validate() const {
  require_seed();
  detector.validate();
  scenario.sbm.validate();
  if (bench.K == 0) throw ConfigError("bench.K must be >= 1");
  for (const auto& s : bench.scenarios) s.sbm.validate();
}

RunConfig parse_config(const json& doc) {
  Reader r(doc, "config");
  RunConfig cfg;
  r.get("seed", cfg.seed);
  if (r.has("out")) cfg.out = r.raw("out").get<std::string>();
  if (r.has("input")) cfg.input = r.raw("input").get<std::string>();
  if (r.has("labels")) cfg.labels = r.raw("labels").get<std::string>();
  r.get("nodes", cfg.load.nodes);
  if (r.has("directed")) {
    bool directed = true;
    r.get("directed", directed);
    cfg.load.directedness = directed ? Directedness::kDirected : Directedness::kUndirected;
  }
  if (r.has("scenario")) cfg.scenario = parse_scenario(r.raw("scenario"), "scenario");
  if (r.has("detector")) parse_detector(r.raw("detector"), cfg.detector);
  if (r.has("predict")) {
    Reader p(r.raw("predict"), "predict");
    p.get("last", cfg.predict_last);
    if (p.has("truth")) cfg.truth = p.raw("truth").get<std::string>();
    p.finish();
  }
  if (r.has("bench")) parse_bench(r.raw("bench"), cfg.bench);
  r.finish();
  if (cfg.seed) cfg.detector.seed = *cfg.seed;
  cfg.detector.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const json::exception& e) {
    throw ConfigError("invalid config " + path.string() + ": " + e.what());
  }
}

json to_json(const ScenarioConfig& s) {
  json j = {{"id", s.id},
            {"kind", kind_name(s.kind)},
            {"n", s.sbm.n},
            {"steps", s.sbm.steps},
            {"blocks", s.sbm.blocks},
            {"p_in", s.sbm.p_in},
            {"p_out", s.sbm.p_out}};
  if (s.explicit_labels()) {
    json cps = json::array();
    for (const auto& c : s.change_points) cps.push_back(change_to_json(c));
    json evs = json::array();
    for (const auto& e : s.events) evs.push_back(change_to_json(e));
    j["change_points"] = cps;
    j["event_list"] = evs;
  } else {
    const auto& p = s.placement;
    j["changes"] = p.changes;
    j["events"] = p.events;
    j["earliest"] = p.earliest;
    j["min_gap"] = p.min_gap;
    j["event_p_out"] = p.event_p_out;
    j["alt_p_in"] = p.alt_p_in ? json(*p.alt_p_in) : json(nullptr);
    j["alt_p_out"] = p.alt_p_out ? json(*p.alt_p_out) : json(nullptr);
  }
  return j;
}

json to_json(const RunConfig& cfg) {
  const DetectorConfig& d = cfg.detector;
  json j;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  j["out"] = cfg.out.string();
  if (cfg.input) j["input"] = cfg.input->string();
  if (cfg.labels) j["labels"] = cfg.labels->string();
  if (cfg.load.nodes) j["nodes"] = *cfg.load.nodes;
  if (cfg.load.directedness) j["directed"] = *cfg.load.directedness == Directedness::kDirected;
  j["scenario"] = to_json(cfg.scenario);
  j["detector"] = {{"alpha", d.alpha},
                   {"threshold", d.threshold},
                   {"laplacian", to_string(d.laplacian)},
                   {"warm_start", d.warm_start},
                   {"k", d.hp.k},
                   {"window", d.hp.window},
                   {"long_multiplier", d.hp.long_multiplier},
                   {"lambda1", d.hp.lambda1},
                   {"lambda2", d.hp.lambda2},
                   {"epsilon", d.hp.epsilon},
                   {"max_iter", d.hp.max_iter},
                   {"delta_guard", d.hp.delta_guard}};
  json predict = json::object();
  if (cfg.predict_last) predict["last"] = *cfg.predict_last;
  if (cfg.truth) predict["truth"] = cfg.truth->string();
  j["predict"] = predict;
  json bench = {{"K", cfg.bench.K}, {"seeds", cfg.bench.seeds}};
  json scenarios = json::array();
  for (const auto& s : cfg.bench.scenarios) scenarios.push_back(to_json(s));
  bench["scenarios"] = scenarios;
  bench["sweep"] = {{"alpha", cfg.bench.sweep.alpha},
                    {"lambda1", cfg.bench.sweep.lambda1},
                    {"lambda2", cfg.bench.sweep.lambda2},
                    {"k", cfg.bench.sweep.k}};
  j["bench"] = bench;
  return j;
}

}  // namespace lemcpd
