#include "lemcpd/cli.hpp"

#include "lemcpd/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace lemcpd {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

void write_run_config(const RunConfig& cfg, const std::string& command) {
  nlohmann::json doc = to_json(cfg);
  doc["command"] = command;
  write_text(cfg.out / "run.json", doc.dump(2) + "\n");
}

GraphSequence load_input(const RunConfig& cfg) {
  if (!cfg.input) throw ConfigError("no input sequence (config \"input\" or --input)");
  if (!fs::exists(*cfg.input)) throw DataError("input not found: " + cfg.input->string());
  return load_sequence(*cfg.input, cfg.load);
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

int fail(std::ostream& err, const std::exception& e, int code) {
  std::string msg = e.what();
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  err << "error: " << msg << "\n";
  return code;
}

DetectorConfig seeded(const RunConfig& cfg, std::uint64_t seed) {
  DetectorConfig d = cfg.detector;
  d.seed = seed;
  return d;
}

}  // namespace

void cmd_generate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Scenario scenario = build_scenario(cfg.scenario, cfg.require_seed());
  ensure_dir(cfg.out);
  const fs::path seq_path = cfg.out / "sequence.edges";
  const fs::path label_path = cfg.out / "labels.txt";
  save_sequence(scenario.sequence, seq_path);
  save_labels(scenario.labels, label_path);
  write_run_config(cfg, "generate");
  out << seq_path.string() << "\n" << label_path.string() << "\n";
}

void cmd_detect(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const GraphSequence seq = load_input(cfg);
  std::optional<LabelSet> labels;
  if (cfg.labels) labels = load_labels(*cfg.labels);
  const AnomalyReport report = detect_sequence(seq, seeded(cfg, cfg.require_seed()));
  ensure_dir(cfg.out);
  write_report(report, cfg.out / "report.csv", cfg.out / "report.json");
  write_run_config(cfg, "detect");

  std::size_t K = cfg.bench.K;
  if (labels && !labels->change_points.empty()) K = labels->change_points.size();
  K = std::min(K, report.records.size());
  out << "top" << K << ":";
  for (Timestamp t : rank_topk(report, K)) out << ' ' << t;
  out << "\n";
  out << "flagged: " << flag_threshold(report, cfg.detector.threshold).size() << "\n";
  if (labels && !labels->change_points.empty()) {
    out << "HR@" << K << ": " << fixed(hit_ratio(report, *labels, K)) << "\n";
  }
}

void cmd_predict(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const GraphSequence seq = load_input(cfg);
  const Timestamp last = cfg.predict_last.value_or(seq.last_timestamp());
  const GraphSnapshot predicted = predict_after(seq, last, seeded(cfg, cfg.require_seed()));
  ensure_dir(cfg.out);
  const fs::path path = cfg.out / "prediction.edges";
  save_sequence(GraphSequence({predicted}), path);
  write_run_config(cfg, "predict");
  out << path.string() << "\n";
  if (cfg.truth) {
    if (!fs::exists(*cfg.truth)) throw DataError("truth not found: " + cfg.truth->string());
    const GraphSequence truth = load_sequence(*cfg.truth, cfg.load);
    const Timestamp t = predicted.timestamp();
    const GraphSnapshot& actual = truth.contains(t) ? truth.at_time(t) : truth[truth.length() - 1];
    if (!truth.contains(t) && truth.length() != 1) {
      throw DataError("truth has no snapshot at t=" + std::to_string(t));
    }
    out << "MAE: " << fixed(mae(predicted, actual)) << "\n";
  }
}

void cmd_bench(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  std::vector<std::uint64_t> seeds = cfg.bench.seeds;
  if (seeds.empty()) seeds.push_back(cfg.require_seed());
  std::vector<ScenarioConfig> scenarios = cfg.bench.scenarios;
  if (scenarios.empty()) scenarios.push_back(cfg.scenario);
  const std::size_t K = cfg.bench.K;
  const bool grid = !cfg.bench.sweep.alpha.empty() || !cfg.bench.sweep.lambda1.empty() ||
                    !cfg.bench.sweep.lambda2.empty() || !cfg.bench.sweep.k.empty();

  std::vector<MetricResult> rows;
  std::vector<SweepRow> sweep_rows;
  for (const ScenarioConfig& sc : scenarios) {
    for (std::uint64_t seed : seeds) {
      const Scenario scenario = build_scenario(sc, seed);
      const DetectorConfig base = seeded(cfg, seed);
      DetectorConfig ablation = base;
      ablation.hp.lambda2 = 0.0;
      auto add = [&](const std::string& method, const AnomalyReport& report) {
        rows.push_back({sc.id, method, "HR", K, hit_ratio(report, scenario.labels, K), seed});
      };
      add("lem-cpd", detect_sequence(scenario.sequence, base));
      add("lem-cpd-no-lt", detect_sequence(scenario.sequence, ablation));
      add("lt-a", baseline_report(scenario.sequence, Baseline::kLongTermAverage, base));
      add("activity", baseline_report(scenario.sequence, Baseline::kActivityVector, base));
      if (grid) {
        auto cells = sweep(cfg.bench.sweep, scenario, sc.id, base, K);
        sweep_rows.insert(sweep_rows.end(), cells.begin(), cells.end());
      }
    }
  }
  ensure_dir(cfg.out);
  const std::string table = metrics_csv(rows);
  write_text(cfg.out / "metrics.csv", table);
  if (grid) write_text(cfg.out / "sweep.csv", sweep_csv(sweep_rows));
  write_run_config(cfg, "bench");
  out << table;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Change point detection on dynamic graphs with latent evolution models", "lemcpd"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> input;
  std::optional<std::string> labels;
  std::optional<std::string> truth;
  std::optional<Timestamp> last;
  std::optional<double> alpha;
  std::optional<double> threshold;
  std::optional<int> k;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  std::optional<int> window;
  std::optional<int> long_multiplier;
  std::optional<std::string> laplacian;

  auto shared = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "run seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory");
  };
  auto detection = [&](CLI::App* sub) {
    sub->add_option("--alpha", alpha, "weight of the prediction score Z1");
    sub->add_option("--threshold", threshold, "flagging threshold on z");
    sub->add_option("--k", k, "latent dimension");
    sub->add_option("--lambda1", lambda1, "transition regularizer");
    sub->add_option("--lambda2", lambda2, "long-term regularizer");
    sub->add_option("--window", window, "short window T");
    sub->add_option("--long-multiplier", long_multiplier, "long window = multiplier * T");
    sub->add_option("--laplacian", laplacian, "auto, undirected or directed")
        ->check(CLI::IsMember({"auto", "undirected", "directed"}));
  };

  CLI::App* gen = app.add_subcommand("generate", "write a synthetic scenario");
  shared(gen);
  CLI::App* det = app.add_subcommand("detect", "score every timestamp of a sequence");
  shared(det);
  detection(det);
  det->add_option("--input", input, "sequence file or directory");
  det->add_option("--labels", labels, "label file for HR@K");
  CLI::App* pred = app.add_subcommand("predict", "predict the next snapshot");
  shared(pred);
  detection(pred);
  pred->add_option("--input", input, "sequence file or directory");
  pred->add_option("--truth", truth, "ground-truth sequence for the MAE");
  pred->add_option("--last", last, "last observed timestamp (default: end of input)");
  CLI::App* bench = app.add_subcommand("bench", "HR@K table for the model, ablation and baselines");
  shared(bench);
  detection(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(err, e, 2);
  }

  try {
    RunConfig cfg = config_path ? load_config(*config_path) : RunConfig{};
    if (seed) cfg.seed = seed;
    if (out_dir) cfg.out = *out_dir;
    if (input) cfg.input = *input;
    if (labels) cfg.labels = *labels;
    if (truth) cfg.truth = *truth;
    if (last) cfg.predict_last = last;
    if (alpha) cfg.detector.alpha = *alpha;
    if (threshold) cfg.detector.threshold = *threshold;
    if (k) cfg.detector.hp.k = *k;
    if (lambda1) cfg.detector.hp.lambda1 = *lambda1;
    if (lambda2) cfg.detector.hp.lambda2 = *lambda2;
    if (window) cfg.detector.hp.window = *window;
    if (long_multiplier) cfg.detector.hp.long_multiplier = *long_multiplier;
    if (laplacian) cfg.detector.laplacian = parse_laplacian_mode(*laplacian);
    if (cfg.seed) cfg.detector.seed = *cfg.seed;

    if (gen->parsed()) cmd_generate(cfg, out);
    if (det->parsed()) cmd_detect(cfg, out);
    if (pred->parsed()) cmd_predict(cfg, out);
    if (bench->parsed()) cmd_bench(cfg, out);
  } catch (const ConfigError& e) {
    return fail(err, e, 2);
  } catch (const DataError& e) {
    return fail(err, e, 3);
  } catch (const NumericalError& e) {
    return fail(err, e, 4);
  } catch (const std::exception& e) {
    return fail(err, e, 3);
  }
  return 0;
}

}  // namespace lemcpd
