#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hasprof/dataset.hpp"
#include "hasprof/features.hpp"
#include "hasprof/scenarios.hpp"

namespace hasprof {

struct CorpusConfig {
  std::vector<std::string> scenarios = has_scenario_ids();
  std::vector<std::string> presets{"low", "medium", "high"};
  std::size_t repetitions = 10;  // per (HAS scenario, preset)
  std::size_t download_traces = 0;
  std::size_t web_traces = 0;
  std::uint64_t seed = 2018;
  WindowConfig window;
  unsigned threads = 0;
  /// When set, both datasets are written here as service.csv and buffer.csv.
  std::optional<std::filesystem::path> out_dir;
  /// Also write every trace, its labels and manifest.csv under out_dir.
  bool write_traces = false;
};

struct CorpusJob {
  std::string trace_id;
  std::string scenario;
  std::string preset;  // empty for non-HAS traces
  std::uint64_t seed = 0;
};

/// Trace id `<scenario>[-<preset>]-rNNN`; the seed derives from the master
/// seed and the id, so a trace does not depend on the rest of the grid.
CorpusJob make_corpus_job(const std::string& scenario, const std::string& preset, std::size_t rep,
                          std::uint64_t master_seed);

/// Grid in deterministic order: HAS scenarios x presets x repetitions, then
/// downloads, then web sessions.
std::vector<CorpusJob> corpus_jobs(const CorpusConfig& cfg);

struct TraceSummary {
  CorpusJob job;
  std::size_t packets = 0;
  std::size_t service_rows = 0;
  std::size_t buffer_rows = 0;
};

struct Corpus {
  Dataset service;  // HAS vs non-HAS, every trace
  Dataset buffer;   // buffer states, HAS traces only
  std::vector<TraceSummary> traces;

  /// Per-class sample counts of both tasks.
  std::string summary_text() const;
};

/// Simulates every job and extracts its samples; packets are discarded after
/// extraction unless written to `out_dir`.
Corpus build_corpus(const CorpusConfig& cfg);

/// Writes `<dir>/<id>.trace.csv` and `<dir>/<id>.labels.csv`.
void write_labeled_trace(const std::filesystem::path& dir, const LabeledTrace& trace);

/// One line of a manifest: a trace file, its label file and how it was made.
struct ManifestEntry {
  std::string trace_id;
  std::string scenario;
  std::string preset;
  std::uint64_t seed = 0;
  std::filesystem::path trace_file;  // relative to the manifest's directory
  std::filesystem::path label_file;

  bool operator==(const ManifestEntry&) const = default;
};

ManifestEntry manifest_entry(const CorpusJob& job, const std::filesystem::path& subdir);

/// CSV with header `trace_id,scenario,preset,seed,trace_file,label_file`.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace hasprof
