#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hasprof/config.hpp"

namespace hasprof::cli {

/// Data errors map to exit code 1; usage errors are reported by the parser as 2.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

struct SimulateOptions {
  std::string scenario;
  std::optional<std::filesystem::path> script;
  std::string preset = "medium";
  std::size_t reps = 1;
  std::filesystem::path out;
};

struct CorpusOptions {
  std::vector<std::string> scenarios;
  std::vector<std::string> presets;
  std::size_t reps = 10;
  std::size_t downloads = 0;
  std::size_t webs = 0;
  bool write_traces = false;
  std::filesystem::path out;
};

struct ExtractOptions {
  std::optional<std::filesystem::path> trace;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> manifest;
  std::string task = "buffer";
  std::filesystem::path out;
};

struct TrainOptions {
  std::filesystem::path data;
  std::string model = "forest";
  std::filesystem::path out;
};

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path trace;
  /// Required for pcap input; overrides the CSV metadata otherwise.
  std::optional<std::string> client_ip;
  bool scores = false;
};

struct EvaluateOptions {
  std::filesystem::path data;
  std::string model = "forest";
  std::optional<std::filesystem::path> json;
  bool json_timing = false;
  std::size_t bench_reps = 10;
};

struct ImportanceOptions {
  std::filesystem::path data;
  bool noise_column = false;
};

int cmd_simulate(const PipelineConfig& cfg, const SimulateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_corpus(const PipelineConfig& cfg, const CorpusOptions& opt, std::ostream& out, std::ostream& err);
int cmd_extract(const PipelineConfig& cfg, const ExtractOptions& opt, std::ostream& out, std::ostream& err);
int cmd_train(const PipelineConfig& cfg, const TrainOptions& opt, std::ostream& out, std::ostream& err);
int cmd_predict(const PipelineConfig& cfg, const PredictOptions& opt, std::ostream& out, std::ostream& err);
int cmd_evaluate(const PipelineConfig& cfg, const EvaluateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_importance(const PipelineConfig& cfg, const ImportanceOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace hasprof::cli
