#include "hasprof/features.hpp"

#include <algorithm>
#include <cmath>

#include "hasprof/errors.hpp"

namespace hasprof {

namespace {

std::string format_window(Nanos w) {
  const std::int64_t ns = w.count();
  if (ns % 1'000'000'000LL == 0) return std::to_string(ns / 1'000'000'000LL);
  std::string s = format_seconds(w);
  while (s.back() == '0') s.pop_back();
  return s;
}

}  // namespace

void WindowConfig::validate() const {
  if (sampling_period <= Nanos{0}) throw InvalidConfig("sampling period must be positive");
  if (window_durations.empty()) throw InvalidConfig("at least one window duration is required");
  for (std::size_t i = 0; i < window_durations.size(); ++i) {
    const Nanos w = window_durations[i];
    if (w <= Nanos{0} || w.count() % sampling_period.count() != 0) {
      throw InvalidConfig("window " + format_window(w) + " s is not a positive multiple of the sampling period");
    }
    if (i > 0 && w <= window_durations[i - 1]) throw InvalidConfig("window durations must strictly increase");
  }
  if (iat_threshold < Nanos{0} || iat_threshold >= sampling_period) {
    throw InvalidConfig("IAT threshold must be non-negative and below the sampling period");
  }
}

std::vector<std::string> WindowConfig::feature_names() const {
  std::vector<std::string> names;
  names.reserve(n_features());
  for (Nanos w : window_durations) {
    for (const char* base : kFeatureBaseNames) names.push_back(std::string(base) + '_' + format_window(w) + 's');
  }
  return names;
}

WindowTotals& WindowTotals::operator+=(const WindowTotals& o) {
  dl_bytes += o.dl_bytes;
  dl_busy_ns += o.dl_busy_ns;
  ul_count += o.ul_count;
  ul_sum += o.ul_sum;
  ul_sum_sq += o.ul_sum_sq;
  return *this;
}

WindowTotals& WindowTotals::operator-=(const WindowTotals& o) {
  dl_bytes -= o.dl_bytes;
  dl_busy_ns -= o.dl_busy_ns;
  ul_count -= o.ul_count;
  ul_sum -= o.ul_sum;
  ul_sum_sq -= o.ul_sum_sq;
  return *this;
}

void window_features(const WindowTotals& t, Nanos window, std::span<double> out) {
  const double window_ns = static_cast<double>(window.count());
  out[0] = 8.0 * static_cast<double>(t.dl_bytes) * 1e9 / window_ns;
  out[1] = std::min(1.0, static_cast<double>(t.dl_busy_ns) / window_ns);
  out[2] = static_cast<double>(t.ul_count);
  if (t.ul_count == 0) {
    out[3] = 0.0;
    out[4] = 0.0;
    return;
  }
  const double n = static_cast<double>(t.ul_count);
  out[3] = static_cast<double>(t.ul_sum) / n;
  // n * sum(x^2) - (sum x)^2 is exact in 128-bit and never negative.
  __extension__ using Int128 = __int128;
  const Int128 spread = static_cast<Int128>(t.ul_count) * t.ul_sum_sq - static_cast<Int128>(t.ul_sum) * t.ul_sum;
  out[4] = std::sqrt(static_cast<double>(spread)) / n;
}

namespace {

// Index range of stored packets with time in [from, to).
template <typename Packets>
std::pair<typename Packets::const_iterator, typename Packets::const_iterator> time_range(const Packets& packets,
                                                                                       Nanos from, Nanos to) {
  auto by_time = [](const StoredPacket& s, Nanos t) { return s.time < t; };
  auto lo = std::lower_bound(packets.begin(), packets.end(), from, by_time);
  auto hi = std::lower_bound(lo, packets.end(), to, by_time);
  return {lo, hi};
}

}  // namespace

WindowTotals window_totals(const FlowState& flow, Nanos t_w, Nanos window, const WindowConfig& cfg) {
  WindowTotals t;
  auto [lo, hi] = time_range(flow.packets(), t_w - window, t_w);
  for (auto it = lo; it != hi; ++it) {
    if (it->direction == Direction::Downlink) {
      t.dl_bytes += it->payload_size;
      if (it->dl_iat && *it->dl_iat <= cfg.iat_threshold) t.dl_busy_ns += it->dl_iat->count();
    } else if (it->payload_size > cfg.ul_size_threshold) {
      ++t.ul_count;
      t.ul_sum += it->payload_size;
      t.ul_sum_sq += static_cast<std::int64_t>(it->payload_size) * it->payload_size;
    }
  }
  return t;
}

double dl_rate(const FlowState& flow, Nanos t_w, Nanos window) {
  WindowConfig cfg;
  std::array<double, kFeaturesPerWindow> f{};
  window_features(window_totals(flow, t_w, window, cfg), window, f);
  return f[0];
}

double dl_load(const FlowState& flow, Nanos t_w, Nanos window, Nanos iat_threshold) {
  WindowConfig cfg;
  cfg.iat_threshold = iat_threshold;
  std::array<double, kFeaturesPerWindow> f{};
  window_features(window_totals(flow, t_w, window, cfg), window, f);
  return f[1];
}

std::int64_t ul_n_pckts(const FlowState& flow, Nanos t_w, Nanos window, std::uint32_t size_threshold) {
  WindowConfig cfg;
  cfg.ul_size_threshold = size_threshold;
  return window_totals(flow, t_w, window, cfg).ul_count;
}

UlSizeStats ul_size_stats(const FlowState& flow, Nanos t_w, Nanos window, std::uint32_t size_threshold) {
  WindowConfig cfg;
  cfg.ul_size_threshold = size_threshold;
  std::array<double, kFeaturesPerWindow> f{};
  window_features(window_totals(flow, t_w, window, cfg), window, f);
  return {f[3], f[4]};
}

FeatureVector feature_vector(const FlowState& flow, Nanos t_w, const WindowConfig& cfg) {
  FeatureVector fv;
  fv.t_w = t_w;
  fv.values.resize(cfg.n_features());
  for (std::size_t w = 0; w < cfg.n_windows(); ++w) {
    const Nanos window = cfg.window_durations[w];
    window_features(window_totals(flow, t_w, window, cfg), window,
                    std::span<double>(fv.values).subspan(w * kFeaturesPerWindow, kFeaturesPerWindow));
  }
  return fv;
}

std::vector<Sample> compute_samples(const PacketTrace& trace, const WindowConfig& cfg) {
  cfg.validate();
  StreamingExtractor extractor(cfg, trace.meta.client_ip);
  std::vector<Sample> samples;
  for (const auto& p : trace.packets) extractor.push(p, samples);
  extractor.flush(samples);
  return samples;
}

Dataset label_samples(const std::vector<Sample>& samples, const std::vector<LabelInterval>& labels,
                      const WindowConfig& cfg, LabelFamily family, const std::string& scenario) {
  Dataset ds(cfg.feature_names(), class_names(family));
  const LabelIndex index(labels);
  const Nanos half_period = cfg.sampling_period / 2;
  for (const auto& s : samples) {
    const LabelInterval* iv = index.find(s.flow, family, s.t_w - half_period);
    if (iv == nullptr) continue;
    ds.add_row(s.features, iv->label.code, scenario);
  }
  return ds;
}

Dataset extract_samples(const PacketTrace& trace, const std::vector<LabelInterval>& labels, const WindowConfig& cfg,
                        LabelFamily family) {
  return label_samples(compute_samples(trace, cfg), labels, cfg, family, trace.meta.scenario);
}

}  // namespace hasprof
