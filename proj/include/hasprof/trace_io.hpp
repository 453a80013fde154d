#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hasprof/dataset.hpp"
#include "hasprof/labels.hpp"
#include "hasprof/packet_model.hpp"

namespace hasprof {

struct TraceMeta {
  Ipv4 client_ip;
  std::string trace_id;
  Nanos sampling_period{std::chrono::seconds{1}};
  /// Optional scenario tag carried into datasets (empty when unknown).
  std::string scenario;

  bool operator==(const TraceMeta&) const = default;
};

struct PacketTrace {
  TraceMeta meta;
  std::vector<PacketRecord> packets;
};

// Packet CSV: `# key=value` metadata lines (client_ip required), then the
// header `time_s,src_ip,src_port,dst_ip,dst_port,protocol,payload_bytes`.
PacketTrace read_packet_csv(std::istream& in);
PacketTrace read_packet_csv(const std::filesystem::path& path);
void write_packet_csv(std::ostream& out, const PacketTrace& trace);
void write_packet_csv(const std::filesystem::path& path, const PacketTrace& trace);

/// Exact decimal parse of a non-negative seconds value with at most nine
/// fractional digits.
Nanos parse_seconds(std::string_view text);
/// Fixed nine-decimal rendering, the inverse of parse_seconds.
std::string format_seconds(Nanos t);

// Label file: optional header `flow_id,start_s,end_s,label`, one interval per
// line, `#` comments allowed.
std::vector<LabelInterval> read_labels(std::istream& in);
std::vector<LabelInterval> read_labels(const std::filesystem::path& path);
void write_labels(std::ostream& out, const std::vector<LabelInterval>& labels);
void write_labels(const std::filesystem::path& path, const std::vector<LabelInterval>& labels);

// Dataset CSV: `# classes=a,b,...` then a header of feature names, `label`,
// and optionally `scenario`. Values round-trip exactly (shortest form).
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const Dataset& ds);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds);

struct PcapReadResult {
  std::vector<PacketRecord> packets;
  std::size_t skipped = 0;    // non-IPv4 or non-TCP/UDP frames, fragments
  std::size_t truncated = 0;  // caplen shorter than the headers needed
};

/// Classic pcap (both byte orders, micro- and nanosecond magics), Ethernet
/// link type. Timestamps are rebased to the whole second of the first record.
PcapReadResult read_pcap(std::istream& in);
PcapReadResult read_pcap(const std::filesystem::path& path);

}  // namespace hasprof
