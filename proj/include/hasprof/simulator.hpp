#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hasprof/labels.hpp"
#include "hasprof/packet_model.hpp"
#include "hasprof/trace_io.hpp"

namespace hasprof {

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

struct Representation {
  std::string name;
  double bitrate = 0.0;  // average, bit/s

  bool operator==(const Representation&) const = default;
};

struct QualityLadder {
  std::vector<Representation> representations;  // ascending bitrate

  /// Throws InvalidScript unless there are >= 2 strictly increasing bitrates.
  void validate() const;
  std::size_t index_of(std::string_view name) const;
  std::size_t size() const { return representations.size(); }
  const Representation& operator[](std::size_t i) const { return representations[i]; }

  /// 144p to 1080p; the lowest rung is above 100 kbit/s.
  static QualityLadder standard();

  bool operator==(const QualityLadder&) const = default;
};

struct RateStep {
  double start_s = 0.0;
  double rate_bps = kUnlimited;

  bool operator==(const RateStep&) const = default;
};

/// Piecewise-constant rate limit. Unlimited steps run at the link capacity.
struct NetworkProfile {
  std::vector<RateStep> steps;

  void validate() const;
  /// Limit in force at time t (kUnlimited possible).
  double limit_at(double t) const;
  /// First step start strictly after t, or infinity.
  double next_change(double t) const;

  static NetworkProfile unlimited() { return NetworkProfile{{RateStep{0.0, kUnlimited}}}; }

  bool operator==(const NetworkProfile&) const = default;
};

struct QualitySwitch {
  double at_s = 0.0;
  std::size_t representation = 0;

  bool operator==(const QualitySwitch&) const = default;
};

/// Everything a HAS session run depends on.
struct SessionScript {
  std::string scenario_id = "custom";
  std::string trace_id = "trace";
  QualityLadder ladder = QualityLadder::standard();
  NetworkProfile profile = NetworkProfile::unlimited();
  double link_capacity_bps = 10e6;

  double video_duration_s = 560.0;
  double segment_duration_s = 5.0;
  double buffer_target_s = 120.0;
  double start_threshold_s = 10.0;

  /// Fixed quality when set (with optional scripted switches), ABR otherwise.
  std::optional<std::size_t> fixed_representation;
  std::vector<QualitySwitch> switches;

  double abr_safety = 0.8;
  double initial_throughput_bps = 1e6;
  /// The ABR only lowers quality once the buffer has fallen below this level.
  double downswitch_buffer_s = 60.0;

  /// Per-segment lognormal size factor: log-sigma, AR(1) correlation between
  /// consecutive segments, and the clamp half-width around 1.
  double vbr_sigma = 0.2;
  double vbr_correlation = 0.8;
  double vbr_clamp = 0.2;
  std::uint64_t content_seed = 1;

  /// Offset of the session start within the trace.
  double start_offset_s = 0.0;
  std::uint64_t rng_seed = 1;

  Endpoint client{Ipv4{0x0a000002}, 50000};
  Endpoint server{Ipv4{0xac100001}, 443};
  Protocol protocol = Protocol::TCP;

  /// Throws InvalidScript.
  void validate() const;

  bool operator==(const SessionScript&) const = default;
};

/// Parses the key-value scenario script format described in docs/scenario_script.md.
SessionScript parse_session_script(std::istream& in);
SessionScript parse_session_script(const std::filesystem::path& path);
void write_session_script(std::ostream& out, const SessionScript& script);

/// Buffer state of one simulation piece; nullopt while no predicate holds.
using Phase = std::optional<int>;

/// Client state over [t, next point's t); buffer moves linearly in between.
struct TrajectoryPoint {
  double t = 0.0;  // session time, seconds
  double buffer_s = 0.0;
  double buffer_slope = 0.0;  // content seconds per second
  bool playing = false;
  bool downloading = false;
  bool waiting = false;
  bool regulated = false;
  std::size_t representation = 0;
  double rate_bps = 0.0;  // available rate while downloading
  Phase phase;
};

struct SegmentRecord {
  std::size_t index = 0;
  std::size_t representation = 0;
  std::uint64_t bytes = 0;
  double content_s = 0.0;
  double request_time = 0.0;
  double complete_time = 0.0;
  std::uint32_t request_bytes = 0;
};

struct LabeledTrace {
  PacketTrace trace;
  FlowKey flow;
  std::vector<LabelInterval> labels;  // service and, for HAS, buffer intervals
  std::vector<TrajectoryPoint> trajectory;
  std::vector<SegmentRecord> segments;
  std::uint64_t dl_bytes = 0;
  std::uint64_t ul_bytes = 0;
  std::uint64_t ack_count = 0;
};

inline constexpr std::uint32_t kDataPayload = 1400;
inline constexpr std::uint32_t kAckPayload = 52;

/// Event-driven HAS client: download, request policy, ABR, playback and
/// packetization, with labels derived from the client's own state.
LabeledTrace simulate_has(const SessionScript& script);

struct NonHasParams {
  std::string trace_id = "trace";
  double duration_s = 300.0;
  NetworkProfile profile = NetworkProfile::unlimited();
  double link_capacity_bps = 10e6;
  double start_offset_s = 0.0;
  std::uint64_t seed = 1;
  Endpoint client{Ipv4{0x0a000002}, 50000};
  Endpoint server{Ipv4{0xac100002}, 443};
};

/// Continuous bulk transfer at the profile rate after 1 to 3 uplink requests.
LabeledTrace simulate_download(const NonHasParams& params);

/// Page bursts of 0.5 to 5 MB, each preceded by 3 to 10 uplink GETs, with
/// think times of 5 to 15 s in between.
LabeledTrace simulate_web(const NonHasParams& params);

}  // namespace hasprof
