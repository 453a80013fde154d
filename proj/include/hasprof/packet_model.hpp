#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

namespace hasprof {

/// Trace-relative time with nanosecond resolution. All window arithmetic is
/// done on this integer clock so window membership is exact.
using Nanos = std::chrono::nanoseconds;

inline double to_seconds(Nanos t) { return static_cast<double>(t.count()) * 1e-9; }
Nanos from_seconds(double seconds);

struct Ipv4 {
  std::uint32_t value = 0;

  /// Dotted-quad parser. IPv6 text is rejected with a dedicated message.
  static Ipv4 parse(std::string_view text);
  std::string to_string() const;

  auto operator<=>(const Ipv4&) const = default;
};

enum class Protocol : std::uint8_t { TCP = 6, UDP = 17 };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

struct Endpoint {
  Ipv4 ip;
  std::uint16_t port = 0;

  auto operator<=>(const Endpoint&) const = default;
};

struct PacketRecord {
  Nanos time{0};
  Ipv4 src_ip;
  std::uint16_t src_port = 0;
  Ipv4 dst_ip;
  std::uint16_t dst_port = 0;
  Protocol protocol = Protocol::UDP;
  std::uint32_t payload_size = 0;

  Endpoint src() const { return {src_ip, src_port}; }
  Endpoint dst() const { return {dst_ip, dst_port}; }

  /// Throws InvalidPacket for a negative time or identical endpoints.
  void validate() const;

  bool operator==(const PacketRecord&) const = default;
};

/// Swaps source and destination.
PacketRecord mirror(const PacketRecord& p);

/// Direction-agnostic five-tuple: endpoint_a <= endpoint_b.
struct FlowKey {
  Endpoint endpoint_a;
  Endpoint endpoint_b;
  Protocol protocol = Protocol::UDP;

  /// Text form `a_ip:a_port-b_ip:b_port/PROTO`, used as flow_id in label files.
  std::string to_string() const;
  static FlowKey parse(std::string_view text);

  auto operator<=>(const FlowKey&) const = default;
};

FlowKey flow_key(const PacketRecord& p);

enum class Direction : std::uint8_t { Downlink, Uplink };

Direction direction_of(const PacketRecord& p, Ipv4 client_ip);

struct StoredPacket {
  Nanos time{0};
  Direction direction = Direction::Downlink;
  std::uint32_t payload_size = 0;
  /// Gap to the previous downlink packet of the flow; empty for uplink packets
  /// and for the first downlink packet. Kept per packet so eviction of older
  /// history never changes DLload.
  std::optional<Nanos> dl_iat;
};

/// Per-flow packet history backing the windowed features.
class FlowState {
 public:
  /// `retention` bounds how far behind the newest packet history is kept;
  /// zero keeps everything.
  FlowState(FlowKey key, Ipv4 client_ip, Nanos retention = Nanos{0}, Nanos reorder_tolerance = Nanos{0});

  const FlowKey& key() const { return key_; }
  Ipv4 client_ip() const { return client_ip_; }
  const std::deque<StoredPacket>& packets() const { return packets_; }
  std::optional<Nanos> last_dl_time() const { return last_dl_time_; }
  std::optional<Nanos> last_time() const { return last_time_; }

  /// Appends `p`. Packets arriving late by no more than the reorder tolerance
  /// are inserted at their sorted position.
  void ingest(const PacketRecord& p);

 private:
  void evict(Nanos newest);

  FlowKey key_;
  Ipv4 client_ip_;
  Nanos retention_;
  Nanos reorder_tolerance_;
  std::deque<StoredPacket> packets_;
  std::optional<Nanos> last_dl_time_;
  std::optional<Nanos> last_time_;
};

}  // namespace hasprof
