#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "hasprof/features.hpp"

namespace hasprof {

/// Pipeline parameters shared by the command-line tools. Defaults are the
/// documented constants, so runs without a config file are reproducible.
struct PipelineConfig {
  WindowConfig window;
  std::size_t cv_k = 10;
  std::size_t n_trees = 30;
  std::size_t knn_k = 1;
  std::uint64_t seed = 2018;  // simulation and corpus
  std::uint64_t forest_seed = 20180101;
  std::uint64_t cv_seed = 7;
  std::uint64_t importance_seed = 11;
  unsigned threads = 0;  // 0: all hardware threads

  /// Applies one `key=value` setting; throws InvalidConfig.
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

/// `key=value` lines with `#` comments. Keys: Ts, Tw (comma list), h_t, h_s,
/// k, n_trees, knn_k, seed, forest_seed, cv_seed, importance_seed, threads.
/// Times are in seconds.
PipelineConfig parse_config(std::istream& in);
PipelineConfig parse_config(const std::filesystem::path& path);
std::string format_config(const PipelineConfig& cfg);

}  // namespace hasprof
