#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hasprof/dataset.hpp"
#include "hasprof/labels.hpp"
#include "hasprof/packet_model.hpp"
#include "hasprof/trace_io.hpp"

namespace hasprof {

using namespace std::chrono_literals;

inline constexpr std::size_t kFeaturesPerWindow = 5;
inline constexpr std::array<const char*, kFeaturesPerWindow> kFeatureBaseNames{"DLrate", "DLload", "ULnPckts",
                                                                               "ULavgSize", "ULstdSize"};

/// Sampling period, window set and thresholds of the feature extractor.
struct WindowConfig {
  Nanos sampling_period = 1s;
  std::vector<Nanos> window_durations{1s, 5s, 10s, 20s};
  Nanos iat_threshold = 100ms;
  std::uint32_t ul_size_threshold = 100;

  /// Throws InvalidConfig unless every window is a positive multiple of the
  /// sampling period, durations strictly increase and h_t < T_s.
  void validate() const;

  std::size_t n_windows() const { return window_durations.size(); }
  std::size_t n_features() const { return kFeaturesPerWindow * window_durations.size(); }
  Nanos max_window() const { return window_durations.back(); }
  /// `<feature>_<Tw>s`, grouped by window in ascending duration.
  std::vector<std::string> feature_names() const;
};

/// Integer window totals; every feature is a closed-form function of these.
struct WindowTotals {
  std::int64_t dl_bytes = 0;
  std::int64_t dl_busy_ns = 0;  // sum of downlink IATs <= h_t
  std::int64_t ul_count = 0;    // uplink packets with payload > h_s
  std::int64_t ul_sum = 0;
  std::int64_t ul_sum_sq = 0;

  WindowTotals& operator+=(const WindowTotals& o);
  WindowTotals& operator-=(const WindowTotals& o);
  bool operator==(const WindowTotals&) const = default;
};

/// Writes DLrate, DLload, ULnPckts, ULavgSize, ULstdSize for one window.
void window_features(const WindowTotals& totals, Nanos window, std::span<double> out);

struct UlSizeStats {
  double avg = 0.0;
  double std = 0.0;
};

// Single-feature evaluation over [t_w - T_w, t_w) of a flow's history.
double dl_rate(const FlowState& flow, Nanos t_w, Nanos window);
double dl_load(const FlowState& flow, Nanos t_w, Nanos window, Nanos iat_threshold);
std::int64_t ul_n_pckts(const FlowState& flow, Nanos t_w, Nanos window, std::uint32_t size_threshold);
UlSizeStats ul_size_stats(const FlowState& flow, Nanos t_w, Nanos window, std::uint32_t size_threshold);

WindowTotals window_totals(const FlowState& flow, Nanos t_w, Nanos window, const WindowConfig& cfg);

struct FeatureVector {
  Nanos t_w{0};
  std::vector<double> values;
};

/// All L windows at instant t_w. Windows reaching before time zero are zero
/// padded and still divided by their full duration.
FeatureVector feature_vector(const FlowState& flow, Nanos t_w, const WindowConfig& cfg);

struct Sample {
  FlowKey flow;
  Nanos t_w{0};
  std::vector<double> features;
};

/// Incremental multi-flow extractor. Keeps per-sampling-period totals and
/// running window sums, and emits one Sample per flow for every sampling
/// period in which that flow saw at least one packet. Samples for instant t_w
/// are emitted once a packet at or after t_w arrives, or on flush().
class StreamingExtractor {
 public:
  StreamingExtractor(WindowConfig cfg, Ipv4 client_ip);

  /// Packets must arrive in non-decreasing time order across all flows.
  void push(const PacketRecord& p, std::vector<Sample>& out);
  void flush(std::vector<Sample>& out);

  const WindowConfig& config() const { return cfg_; }

 private:
  struct Track {
    std::int64_t open_bin = -1;   // -1: no open bin
    std::int64_t last_closed = -1;
    WindowTotals open;
    std::deque<WindowTotals> history;  // closed bins, newest at back, contiguous
    std::vector<WindowTotals> sums;    // one per window over `history`
    std::optional<Nanos> last_dl;
  };

  void close(const FlowKey& key, Track& track, std::vector<Sample>& out);
  void push_closed_bin(Track& track, const WindowTotals& bin);

  WindowConfig cfg_;
  Ipv4 client_ip_;
  std::vector<std::int64_t> window_bins_;
  std::int64_t max_bins_ = 0;
  std::map<FlowKey, Track> flows_;
  std::set<FlowKey> open_;
  std::int64_t current_bin_ = -1;
  std::optional<Nanos> last_time_;
};

/// Every sample the streaming extractor emits for a time-ordered trace.
std::vector<Sample> compute_samples(const PacketTrace& trace, const WindowConfig& cfg);

/// Keeps the samples whose instant midpoint t_w - T_s/2 falls in a label
/// interval of `family`, tagged with `scenario`.
Dataset label_samples(const std::vector<Sample>& samples, const std::vector<LabelInterval>& labels,
                      const WindowConfig& cfg, LabelFamily family, const std::string& scenario);

/// Runs the streaming extractor over a trace and keeps the samples whose
/// instant midpoint t_w - T_s/2 falls in a label interval of `family`.
Dataset extract_samples(const PacketTrace& trace, const std::vector<LabelInterval>& labels, const WindowConfig& cfg,
                        LabelFamily family);

}  // namespace hasprof
