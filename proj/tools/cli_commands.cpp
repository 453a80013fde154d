#include "cli_commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "hasprof/corpus.hpp"
#include "hasprof/errors.hpp"
#include "hasprof/eval.hpp"
#include "hasprof/features.hpp"
#include "hasprof/forest.hpp"
#include "hasprof/model.hpp"
#include "hasprof/model_io.hpp"
#include "hasprof/rng.hpp"
#include "hasprof/scenarios.hpp"
#include "hasprof/trace_io.hpp"

namespace hasprof::cli {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

ModelSpec model_spec(const PipelineConfig& cfg, const std::string& kind) {
  if (kind == "forest") {
    ForestParams p;
    p.n_trees = cfg.n_trees;
    p.seed = cfg.forest_seed;
    p.threads = cfg.threads;
    return p;
  }
  if (kind == "knn") {
    KnnParams p;
    p.k = cfg.knn_k;
    p.threads = cfg.threads;
    return p;
  }
  if (kind == "tree") {
    TreeParams p;
    p.seed = cfg.forest_seed;
    return p;
  }
  throw InvalidConfig("unknown model kind '" + kind + "'");
}

LabelFamily task_family(const std::string& task) {
  if (task == "flow") return LabelFamily::Service;
  if (task == "buffer") return LabelFamily::Buffer;
  throw InvalidConfig("unknown task '" + task + "'");
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::is_regular_file(p)) throw IoError(what + " not found: " + p.string());
}

}  // namespace

int cmd_simulate(const PipelineConfig& cfg, const SimulateOptions& opt, std::ostream& out, std::ostream&) {
  std::filesystem::create_directories(opt.out);
  std::vector<ManifestEntry> entries;
  if (opt.script) {
    const SessionScript script = parse_session_script(*opt.script);
    const LabeledTrace lt = simulate_has(script);
    write_labeled_trace(opt.out, lt);
    CorpusJob job{lt.trace.meta.trace_id, script.scenario_id, "", script.rng_seed};
    entries.push_back(manifest_entry(job, "."));
  } else {
    const VbrPreset& preset = vbr_preset(opt.preset);
    const bool has = is_has_scenario(opt.scenario);
    for (std::size_t r = 0; r < opt.reps; ++r) {
      const CorpusJob job = make_corpus_job(opt.scenario, has ? opt.preset : "", r, cfg.seed);
      LabeledTrace lt = simulate_scenario(job.scenario, preset, job.seed);
      lt.trace.meta.trace_id = job.trace_id;
      write_labeled_trace(opt.out, lt);
      entries.push_back(manifest_entry(job, "."));
    }
  }
  write_manifest(opt.out / "manifest.csv", entries);
  for (const auto& e : entries) out << e.trace_id << " seed=" << e.seed << " " << e.trace_file.generic_string() << "\n";
  return kExitOk;
}

int cmd_corpus(const PipelineConfig& cfg, const CorpusOptions& opt, std::ostream& out, std::ostream&) {
  CorpusConfig cc;
  if (!opt.scenarios.empty()) cc.scenarios = opt.scenarios;
  if (!opt.presets.empty()) cc.presets = opt.presets;
  cc.repetitions = opt.reps;
  cc.download_traces = opt.downloads;
  cc.web_traces = opt.webs;
  cc.seed = cfg.seed;
  cc.window = cfg.window;
  cc.threads = cfg.threads;
  cc.out_dir = opt.out;
  cc.write_traces = opt.write_traces;
  const Corpus corpus = build_corpus(cc);
  out << corpus.summary_text();
  return kExitOk;
}

int cmd_extract(const PipelineConfig& cfg, const ExtractOptions& opt, std::ostream& out, std::ostream& err) {
  const LabelFamily family = task_family(opt.task);
  struct Input {
    std::filesystem::path trace;
    std::filesystem::path labels;
    std::string scenario;
  };
  std::vector<Input> inputs;
  if (opt.manifest) {
    require_file(*opt.manifest, "manifest");
    const auto base = opt.manifest->parent_path();
    for (const auto& e : read_manifest(*opt.manifest)) {
      inputs.push_back({base / e.trace_file, base / e.label_file, e.scenario});
    }
  } else {
    inputs.push_back({*opt.trace, *opt.labels, {}});
  }
  for (const auto& in : inputs) {
    require_file(in.trace, "trace file");
    require_file(in.labels, "label file");
  }
  Dataset ds(cfg.window.feature_names(), class_names(family));
  for (const auto& in : inputs) {
    const auto& trace_path = in.trace;
    PacketTrace trace = read_packet_csv(trace_path);
    if (trace.packets.empty()) err << "warning: " << trace_path.string() << " has no packets\n";
    if (trace.meta.sampling_period != cfg.window.sampling_period) {
      err << "warning: " << trace_path.string() << " declares a different sampling period; using the configured one\n";
    }
    const auto labels = read_labels(in.labels);
    const std::string& scenario = in.scenario.empty() ? trace.meta.scenario : in.scenario;
    ds.append(label_samples(compute_samples(trace, cfg.window), labels, cfg.window, family, scenario));
  }
  if (ds.empty()) err << "warning: dataset is empty\n";
  write_dataset_csv(opt.out, ds);
  out << "wrote " << ds.rows() << " samples x " << ds.cols() << " features to " << opt.out.string() << "\n";
  return kExitOk;
}

int cmd_train(const PipelineConfig& cfg, const TrainOptions& opt, std::ostream& out, std::ostream&) {
  require_file(opt.data, "dataset");
  const Dataset ds = read_dataset_csv(opt.data);
  const Model model = train(model_spec(cfg, opt.model), ds);
  save_model(opt.out, model);
  out << "trained " << model.kind() << " on " << ds.rows() << " samples, saved to " << opt.out.string() << "\n";
  return kExitOk;
}

int cmd_predict(const PipelineConfig& cfg, const PredictOptions& opt, std::ostream& out, std::ostream&) {
  require_file(opt.model, "model file");
  require_file(opt.trace, "trace file");
  const Model model = load_model(opt.model);
  if (model.feature_names != cfg.window.feature_names()) {
    throw InvalidConfig("model features do not match the configured windows");
  }
  PacketTrace trace;
  if (opt.trace.extension() == ".pcap") {
    if (!opt.client_ip) throw InvalidConfig("--client-ip is required for pcap input");
    trace.meta.client_ip = Ipv4::parse(*opt.client_ip);
    trace.packets = read_pcap(opt.trace).packets;
  } else {
    trace = read_packet_csv(opt.trace);
    if (opt.client_ip) trace.meta.client_ip = Ipv4::parse(*opt.client_ip);
  }
  StreamingExtractor extractor(cfg.window, trace.meta.client_ip);
  std::vector<Sample> samples;
  std::string line;
  auto emit = [&] {
    for (const auto& s : samples) {
      line = format_seconds(s.t_w) + " " + s.flow.to_string() + " ";
      line += model.class_names[static_cast<std::size_t>(model.predict(s.features))];
      if (opt.scores) {
        for (double v : model.scores(s.features)) line += " " + fixed(v, 4);
      }
      out << line << "\n";
    }
    samples.clear();
  };
  for (const auto& p : trace.packets) {
    extractor.push(p, samples);
    emit();
  }
  extractor.flush(samples);
  emit();
  return kExitOk;
}

int cmd_evaluate(const PipelineConfig& cfg, const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
  require_file(opt.data, "dataset");
  const Dataset ds = read_dataset_csv(opt.data);
  const ModelSpec spec = model_spec(cfg, opt.model);
  const CvReport report = cross_validate(ds, spec, cfg.cv_k, cfg.cv_seed);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";

  out << "model " << report.model_kind << ", " << report.k << "-fold cross-validation, " << ds.rows()
      << " samples\n";
  out << "overall accuracy " << fixed(report.overall_accuracy, 4) << "\n";
  out << "fold accuracy";
  for (double a : report.fold_accuracies) out << " " << fixed(a, 4);
  out << "\n\nconfusion (% of true class)\n" << report.pooled.to_text();
  if (!report.per_scenario.empty()) {
    out << "\nper-scenario accuracy\n";
    for (const auto& [tag, acc] : report.per_scenario) out << "  " << tag << " " << fixed(acc, 4) << "\n";
  }
  if (opt.bench_reps > 0) out << "\n" << benchmark(spec, ds, opt.bench_reps).to_text();
  if (opt.json) {
    std::ofstream js(*opt.json, std::ios::binary);
    if (!js) throw IoError("cannot write " + opt.json->string());
    js << report.to_json(opt.json_timing);
  }
  return kExitOk;
}

int cmd_importance(const PipelineConfig& cfg, const ImportanceOptions& opt, std::ostream& out, std::ostream&) {
  require_file(opt.data, "dataset");
  Dataset ds = read_dataset_csv(opt.data);
  if (opt.noise_column) {
    Rng rng(derive_seed(cfg.importance_seed, 0x6e6f697365));
    std::vector<double> noise(ds.rows());
    for (auto& v : noise) v = rng.uniform();
    ds = ds.with_column("noise", noise);
  }
  ForestParams p;
  p.n_trees = cfg.n_trees;
  p.seed = cfg.forest_seed;
  p.threads = cfg.threads;
  const ForestModel forest = train_forest(ds, p);
  const OobResult oob = oob_error(forest, ds);
  const ImportanceResult imp = permutation_importance(forest, ds, cfg.importance_seed, cfg.threads);

  if (oob.defined) {
    out << "out-of-bag error " << fixed(oob.error, 4) << " over " << oob.evaluated << " samples\n";
  } else {
    out << "out-of-bag error undefined (no out-of-bag samples)\n";
  }
  if (imp.degenerate) out << "no feature increases the out-of-bag error; scores are not normalized\n";
  std::vector<std::size_t> order(ds.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return imp.normalized[a] > imp.normalized[b]; });
  std::size_t width = 7;
  for (const auto& n : ds.feature_names()) width = std::max(width, n.size());
  out << "rank  " << std::string("feature") + std::string(width - 7, ' ') << "  normalized  raw\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& name = ds.feature_names()[order[r]];
    std::string rank = std::to_string(r + 1);
    rank.resize(4, ' ');
    out << rank << "  " << name << std::string(width - name.size(), ' ') << "  "
        << fixed(imp.normalized[order[r]], 4) << "      " << fixed(imp.raw[order[r]], 6) << "\n";
  }
  return kExitOk;
}

}  // namespace hasprof::cli
