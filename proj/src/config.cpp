#include "hasprof/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "hasprof/errors.hpp"
#include "hasprof/trace_io.hpp"

namespace hasprof {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw InvalidConfig("'" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  return v;
}

Nanos to_time(const std::string& key, const std::string& value) {
  try {
    return parse_seconds(value);
  } catch (const Error&) {
    throw InvalidConfig("'" + key + "' expects seconds, got '" + value + "'");
  }
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "Ts") {
    window.sampling_period = to_time(key, value);
  } else if (key == "Tw") {
    window.window_durations.clear();
    std::size_t pos = 0;
    while (true) {
      const auto comma = value.find(',', pos);
      window.window_durations.push_back(to_time(key, trim(value.substr(pos, comma - pos))));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  } else if (key == "h_t") {
    window.iat_threshold = to_time(key, value);
  } else if (key == "h_s") {
    const auto v = to_u64(key, value);
    if (v > 0xffffffffULL) throw InvalidConfig("h_s out of range");
    window.ul_size_threshold = static_cast<std::uint32_t>(v);
  } else if (key == "k") {
    cv_k = to_u64(key, value);
  } else if (key == "n_trees") {
    n_trees = to_u64(key, value);
  } else if (key == "knn_k") {
    knn_k = to_u64(key, value);
  } else if (key == "seed") {
    seed = to_u64(key, value);
  } else if (key == "forest_seed") {
    forest_seed = to_u64(key, value);
  } else if (key == "cv_seed") {
    cv_seed = to_u64(key, value);
  } else if (key == "importance_seed") {
    importance_seed = to_u64(key, value);
  } else if (key == "threads") {
    const auto v = to_u64(key, value);
    if (v > 4096) throw InvalidConfig("threads out of range");
    threads = static_cast<unsigned>(v);
  } else {
    throw InvalidConfig("unknown config key '" + key + "'");
  }
}

void PipelineConfig::validate() const {
  window.validate();
  if (cv_k < 2) throw InvalidConfig("k must be at least 2");
  if (n_trees < 1) throw InvalidConfig("n_trees must be at least 1");
  if (knn_k < 1) throw InvalidConfig("knn_k must be at least 1");
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig cfg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InvalidConfig("line " + std::to_string(line) + ": expected key=value");
    try {
      cfg.set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const InvalidConfig& e) {
      throw InvalidConfig("line " + std::to_string(line) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in);
}

std::string format_config(const PipelineConfig& cfg) {
  std::string tw;
  for (std::size_t i = 0; i < cfg.window.window_durations.size(); ++i) {
    tw += (i ? "," : "") + format_seconds(cfg.window.window_durations[i]);
  }
  std::string s;
  s += "Ts=" + format_seconds(cfg.window.sampling_period) + "\n";
  s += "Tw=" + tw + "\n";
  s += "h_t=" + format_seconds(cfg.window.iat_threshold) + "\n";
  s += "h_s=" + std::to_string(cfg.window.ul_size_threshold) + "\n";
  s += "k=" + std::to_string(cfg.cv_k) + "\n";
  s += "n_trees=" + std::to_string(cfg.n_trees) + "\n";
  s += "knn_k=" + std::to_string(cfg.knn_k) + "\n";
  s += "seed=" + std::to_string(cfg.seed) + "\n";
  s += "forest_seed=" + std::to_string(cfg.forest_seed) + "\n";
  s += "cv_seed=" + std::to_string(cfg.cv_seed) + "\n";
  s += "importance_seed=" + std::to_string(cfg.importance_seed) + "\n";
  s += "threads=" + std::to_string(cfg.threads) + "\n";
  return s;
}

}  // namespace hasprof
