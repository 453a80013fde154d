#include <exception>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "cli_commands.hpp"
#include "hasprof/errors.hpp"
#include "hasprof/scenarios.hpp"

namespace {

using namespace hasprof;
using namespace hasprof::cli;

/// Usage problems found after parsing, reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HAS flow detection and buffer-state estimation from packet metadata"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> set_args;
  app.add_option("-c,--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", set_args, "configuration override key=value (repeatable)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "simulate labeled traces for one scenario");
  auto* sim_scenario = simulate->add_option("--scenario", sim.scenario, "s1..s8, download or web");
  auto* sim_script = simulate->add_option("--script", sim.script, "session script file")->check(CLI::ExistingFile);
  sim_scenario->excludes(sim_script);
  simulate->add_option("--preset", sim.preset, "VBR preset: low, medium or high")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "repetitions")->capture_default_str()->check(CLI::Range(1, 100000));
  simulate->add_option("--out", sim.out, "output directory")->required();

  CorpusOptions corp;
  auto* corpus = app.add_subcommand("corpus", "simulate a scenario grid and write both datasets");
  corpus->add_option("--out", corp.out, "output directory")->required();
  corpus->add_option("--reps", corp.reps, "repetitions per HAS scenario and preset")->capture_default_str();
  corpus->add_option("--scenarios", corp.scenarios, "HAS scenarios (default all)")->delimiter(',');
  corpus->add_option("--presets", corp.presets, "VBR presets (default all)")->delimiter(',');
  corpus->add_option("--downloads", corp.downloads, "non-HAS download traces")->capture_default_str();
  corpus->add_option("--webs", corp.webs, "non-HAS web traces")->capture_default_str();
  corpus->add_flag("--write-traces", corp.write_traces, "also write traces, labels and a manifest");

  ExtractOptions ext;
  auto* extract = app.add_subcommand("extract", "extract a labeled dataset from traces");
  auto* ext_trace = extract->add_option("--trace", ext.trace, "packet CSV");
  auto* ext_labels = extract->add_option("--labels", ext.labels, "label CSV");
  auto* ext_manifest = extract->add_option("--manifest", ext.manifest, "manifest listing traces and labels");
  ext_trace->needs(ext_labels);
  ext_labels->needs(ext_trace);
  ext_manifest->excludes(ext_trace)->excludes(ext_labels);
  extract->add_option("--task", ext.task, "flow or buffer")
      ->capture_default_str()
      ->check(CLI::IsMember({"flow", "buffer"}));
  extract->add_option("--out", ext.out, "dataset CSV")->required();

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "fit a classifier and save it");
  train->add_option("--data", tr.data, "dataset CSV")->required();
  train->add_option("--model", tr.model, "forest, knn or tree")
      ->capture_default_str()
      ->check(CLI::IsMember({"forest", "knn", "tree"}));
  train->add_option("--out", tr.out, "model file")->required();

  PredictOptions pr;
  auto* predict = app.add_subcommand("predict", "classify every non-empty second of a trace");
  predict->add_option("--model", pr.model, "model file")->required();
  predict->add_option("--trace", pr.trace, "packet CSV or .pcap")->required();
  predict->add_option("--client-ip", pr.client_ip, "client address");
  predict->add_flag("--scores", pr.scores, "append per-class scores");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation with confusion and runtime");
  evaluate->add_option("--data", ev.data, "dataset CSV")->required();
  evaluate->add_option("--model", ev.model, "forest, knn or tree")
      ->capture_default_str()
      ->check(CLI::IsMember({"forest", "knn", "tree"}));
  evaluate->add_option("--json", ev.json, "write the report as JSON");
  evaluate->add_flag("--json-timing", ev.json_timing, "include timings in the JSON report");
  evaluate->add_option("--bench-reps", ev.bench_reps, "runtime benchmark repetitions (0 skips)")
      ->capture_default_str();

  ImportanceOptions im;
  auto* importance = app.add_subcommand("importance", "forest out-of-bag error and permutation importance");
  importance->add_option("--data", im.data, "dataset CSV")->required();
  importance->add_flag("--noise-column", im.noise_column, "append a uniform noise column as a baseline");

  std::size_t k_override = 0;
  std::size_t trees_override = 0;
  std::size_t knn_k_override = 0;
  evaluate->add_option("--k", k_override, "number of folds (overrides the config)");
  train->add_option("--trees", trees_override, "forest size (overrides the config)");
  evaluate->add_option("--trees", trees_override, "forest size (overrides the config)");
  importance->add_option("--trees", trees_override, "forest size (overrides the config)");
  train->add_option("--knn-k", knn_k_override, "neighbors (overrides the config)");
  evaluate->add_option("--knn-k", knn_k_override, "neighbors (overrides the config)");
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::uint64_t> forest_seed;
  simulate->add_option("--seed", sim_seed, "master simulation seed (overrides the config)");
  corpus->add_option("--seed", sim_seed, "master simulation seed (overrides the config)");
  train->add_option("--seed", forest_seed, "forest seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = parse_config(std::filesystem::path(config_path));
    for (const auto& kv : set_args) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (k_override) cfg.cv_k = k_override;
    if (trees_override) cfg.n_trees = trees_override;
    if (knn_k_override) cfg.knn_k = knn_k_override;
    if (sim_seed) cfg.seed = *sim_seed;
    if (forest_seed) cfg.forest_seed = *forest_seed;
    cfg.validate();

    if (simulate->parsed()) {
      if (sim.script) return cmd_simulate(cfg, sim, std::cout, std::cerr);
      if (sim.scenario.empty()) throw UsageError("simulate needs --scenario or --script");
      if (!is_known_scenario(sim.scenario)) throw UsageError("unknown scenario '" + sim.scenario + "'");
      if (!is_non_has_scenario(sim.scenario)) {
        bool ok = false;
        for (const auto& p : vbr_presets()) ok = ok || p.name == sim.preset;
        if (!ok) throw UsageError("unknown preset '" + sim.preset + "'");
      }
      return cmd_simulate(cfg, sim, std::cout, std::cerr);
    }
    if (corpus->parsed()) {
      for (const auto& s : corp.scenarios) {
        if (!is_has_scenario(s)) throw UsageError("unknown HAS scenario '" + s + "'");
      }
      return cmd_corpus(cfg, corp, std::cout, std::cerr);
    }
    if (extract->parsed()) {
      if (!ext.manifest && !ext.trace) throw UsageError("extract needs --trace and --labels, or --manifest");
      return cmd_extract(cfg, ext, std::cout, std::cerr);
    }
    if (train->parsed()) return cmd_train(cfg, tr, std::cout, std::cerr);
    if (predict->parsed()) return cmd_predict(cfg, pr, std::cout, std::cerr);
    if (evaluate->parsed()) return cmd_evaluate(cfg, ev, std::cout, std::cerr);
    if (importance->parsed()) return cmd_importance(cfg, im, std::cout, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const hasprof::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}
