#include "hasprof/corpus.hpp"

#include <fstream>

#include "hasprof/errors.hpp"
#include "hasprof/parallel.hpp"
#include "hasprof/rng.hpp"
#include "hasprof/trace_io.hpp"

namespace hasprof {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string rep_suffix(std::size_t rep) {
  std::string r = std::to_string(rep);
  return "r" + std::string(r.size() < 3 ? 3 - r.size() : 0, '0') + r;
}

std::string count_table(const Dataset& ds, const std::string& title) {
  const auto counts = ds.class_counts();
  std::string s = title + " (" + std::to_string(ds.rows()) + " samples)\n";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::string name = ds.class_names()[c];
    name.resize(std::max<std::size_t>(name.size(), 12), ' ');
    s += "  " + name + " " + std::to_string(counts[c]) + "\n";
  }
  return s;
}

}  // namespace

CorpusJob make_corpus_job(const std::string& scenario, const std::string& preset, std::size_t rep,
                          std::uint64_t master_seed) {
  CorpusJob job;
  job.scenario = scenario;
  job.preset = preset;
  job.trace_id = scenario + (preset.empty() ? "" : "-" + preset) + "-" + rep_suffix(rep);
  job.seed = derive_seed(master_seed, fnv1a(job.trace_id));
  return job;
}

std::vector<CorpusJob> corpus_jobs(const CorpusConfig& cfg) {
  std::vector<CorpusJob> jobs;
  auto add = [&](const std::string& scenario, const std::string& preset, std::size_t rep) {
    jobs.push_back(make_corpus_job(scenario, preset, rep, cfg.seed));
  };
  for (const auto& s : cfg.scenarios) {
    if (!is_has_scenario(s)) throw InvalidConfig("unknown HAS scenario '" + s + "'");
    for (const auto& p : cfg.presets) {
      vbr_preset(p);
      for (std::size_t r = 0; r < cfg.repetitions; ++r) add(s, p, r);
    }
  }
  for (std::size_t r = 0; r < cfg.download_traces; ++r) add("download", "", r);
  for (std::size_t r = 0; r < cfg.web_traces; ++r) add("web", "", r);
  return jobs;
}

void write_labeled_trace(const std::filesystem::path& dir, const LabeledTrace& trace) {
  std::filesystem::create_directories(dir);
  write_packet_csv(dir / (trace.trace.meta.trace_id + ".trace.csv"), trace.trace);
  write_labels(dir / (trace.trace.meta.trace_id + ".labels.csv"), trace.labels);
}

Corpus build_corpus(const CorpusConfig& cfg) {
  cfg.window.validate();
  const auto jobs = corpus_jobs(cfg);
  if (jobs.empty()) throw InvalidConfig("corpus has no traces");
  const auto names = cfg.window.feature_names();

  struct Result {
    Dataset service;
    Dataset buffer;
    TraceSummary summary;
  };
  std::vector<Result> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const CorpusJob& job = jobs[i];
    const VbrPreset& preset = job.preset.empty() ? vbr_presets().front() : vbr_preset(job.preset);
    LabeledTrace lt = simulate_scenario(job.scenario, preset, job.seed);
    lt.trace.meta.trace_id = job.trace_id;
    if (cfg.out_dir && cfg.write_traces) write_labeled_trace(*cfg.out_dir / "traces", lt);
    const auto samples = compute_samples(lt.trace, cfg.window);
    Result& r = results[i];
    r.service = label_samples(samples, lt.labels, cfg.window, LabelFamily::Service, job.scenario);
    r.buffer = label_samples(samples, lt.labels, cfg.window, LabelFamily::Buffer, job.scenario);
    r.summary = TraceSummary{job, lt.trace.packets.size(), r.service.rows(), r.buffer.rows()};
  });

  Corpus corpus;
  corpus.service = Dataset(names, class_names(LabelFamily::Service));
  corpus.buffer = Dataset(names, class_names(LabelFamily::Buffer));
  for (auto& r : results) {
    corpus.service.append(r.service);
    corpus.buffer.append(r.buffer);
    corpus.traces.push_back(r.summary);
  }

  if (cfg.out_dir) {
    std::filesystem::create_directories(*cfg.out_dir);
    if (cfg.write_traces) {
      std::vector<ManifestEntry> entries;
      for (const auto& t : corpus.traces) entries.push_back(manifest_entry(t.job, "traces"));
      write_manifest(*cfg.out_dir / "manifest.csv", entries);
    }
    write_dataset_csv(*cfg.out_dir / "service.csv", corpus.service);
    write_dataset_csv(*cfg.out_dir / "buffer.csv", corpus.buffer);
  }
  return corpus;
}

ManifestEntry manifest_entry(const CorpusJob& job, const std::filesystem::path& subdir) {
  return ManifestEntry{job.trace_id, job.scenario, job.preset, job.seed, subdir / (job.trace_id + ".trace.csv"),
                       subdir / (job.trace_id + ".labels.csv")};
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "trace_id,scenario,preset,seed,trace_file,label_file\n";
  for (const auto& e : entries) {
    out << e.trace_id << "," << e.scenario << "," << e.preset << "," << e.seed << "," << e.trace_file.generic_string()
        << "," << e.label_file.generic_string() << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (n == 1) {
      if (line != "trace_id,scenario,preset,seed,trace_file,label_file") throw ParseError(n, "bad manifest header");
      continue;
    }
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 6) throw ParseError(n, "manifest lines have 6 fields");
    ManifestEntry e;
    e.trace_id = f[0];
    e.scenario = f[1];
    e.preset = f[2];
    try {
      e.seed = std::stoull(f[3]);
    } catch (const std::exception&) {
      throw ParseError(n, "malformed seed '" + f[3] + "'");
    }
    e.trace_file = f[4];
    e.label_file = f[5];
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string Corpus::summary_text() const {
  std::size_t has = 0;
  for (const auto& t : traces) has += is_has_scenario(t.job.scenario);
  std::string s = std::to_string(traces.size()) + " traces (" + std::to_string(has) + " HAS, " +
                  std::to_string(traces.size() - has) + " non-HAS)\n";
  s += count_table(service, "flow classification");
  s += count_table(buffer, "buffer state classification");
  return s;
}

}  // namespace hasprof
