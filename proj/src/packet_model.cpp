#include "hasprof/packet_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "hasprof/errors.hpp"

namespace hasprof {

Nanos from_seconds(double seconds) {
  if (!std::isfinite(seconds)) throw InvalidConfig("non-finite time value");
  return Nanos{std::llround(seconds * 1e9)};
}

Ipv4 Ipv4::parse(std::string_view text) {
  if (text.find(':') != std::string_view::npos) {
    throw UnsupportedFormat("IPv6 address not supported: " + std::string(text));
  }
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') throw InvalidPacket("malformed IPv4 address: " + std::string(text));
      ++p;
    }
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || next == p || next - p > 3 || part > 255) {
      throw InvalidPacket("malformed IPv4 address: " + std::string(text));
    }
    value = (value << 8) | part;
    p = next;
  }
  if (p != end) throw InvalidPacket("malformed IPv4 address: " + std::string(text));
  return Ipv4{value};
}

std::string Ipv4::to_string() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
         std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

std::string_view to_string(Protocol p) { return p == Protocol::TCP ? "TCP" : "UDP"; }

Protocol parse_protocol(std::string_view text) {
  if (text == "TCP" || text == "tcp") return Protocol::TCP;
  if (text == "UDP" || text == "udp") return Protocol::UDP;
  throw InvalidPacket("unknown protocol: " + std::string(text));
}

void PacketRecord::validate() const {
  if (time < Nanos{0}) throw InvalidPacket("negative packet time");
  if (src() == dst()) throw InvalidPacket("source and destination endpoints are identical");
}

PacketRecord mirror(const PacketRecord& p) {
  PacketRecord m = p;
  std::swap(m.src_ip, m.dst_ip);
  std::swap(m.src_port, m.dst_port);
  return m;
}

std::string FlowKey::to_string() const {
  return endpoint_a.ip.to_string() + ':' + std::to_string(endpoint_a.port) + '-' + endpoint_b.ip.to_string() + ':' +
         std::to_string(endpoint_b.port) + '/' + std::string(hasprof::to_string(protocol));
}

namespace {

Endpoint parse_endpoint(std::string_view text, std::string_view whole) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw InvalidPacket("malformed flow id: " + std::string(whole));
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  auto [next, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || next != port_text.data() + port_text.size() || port > 65535) {
    throw InvalidPacket("malformed flow id: " + std::string(whole));
  }
  return Endpoint{Ipv4::parse(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

}  // namespace

FlowKey FlowKey::parse(std::string_view text) {
  const auto slash = text.rfind('/');
  const auto dash = text.find('-');
  if (slash == std::string_view::npos || dash == std::string_view::npos || dash > slash) {
    throw InvalidPacket("malformed flow id: " + std::string(text));
  }
  FlowKey key;
  key.endpoint_a = parse_endpoint(text.substr(0, dash), text);
  key.endpoint_b = parse_endpoint(text.substr(dash + 1, slash - dash - 1), text);
  key.protocol = parse_protocol(text.substr(slash + 1));
  if (key.endpoint_b < key.endpoint_a) std::swap(key.endpoint_a, key.endpoint_b);
  return key;
}

FlowKey flow_key(const PacketRecord& p) {
  FlowKey key{p.src(), p.dst(), p.protocol};
  if (key.endpoint_b < key.endpoint_a) std::swap(key.endpoint_a, key.endpoint_b);
  return key;
}

Direction direction_of(const PacketRecord& p, Ipv4 client_ip) {
  const bool is_dst = p.dst_ip == client_ip;
  const bool is_src = p.src_ip == client_ip;
  if (is_dst == is_src) {
    throw AmbiguousDirection("client " + client_ip.to_string() + " must match exactly one endpoint of " +
                             p.src_ip.to_string() + " -> " + p.dst_ip.to_string());
  }
  return is_dst ? Direction::Downlink : Direction::Uplink;
}

FlowState::FlowState(FlowKey key, Ipv4 client_ip, Nanos retention, Nanos reorder_tolerance)
    : key_(key), client_ip_(client_ip), retention_(retention), reorder_tolerance_(reorder_tolerance) {}

void FlowState::ingest(const PacketRecord& p) {
  if (flow_key(p) != key_) {
    throw KeyMismatch("packet " + flow_key(p).to_string() + " does not belong to flow " + key_.to_string());
  }
  const Direction dir = direction_of(p, client_ip_);
  if (last_time_ && p.time < *last_time_ && *last_time_ - p.time > reorder_tolerance_) {
    throw OutOfOrderPacket("packet at " + std::to_string(to_seconds(p.time)) + " s precedes last stored " +
                           std::to_string(to_seconds(*last_time_)) + " s");
  }

  StoredPacket stored{p.time, dir, p.payload_size, std::nullopt};
  // Insert after every packet with time <= p.time; the common case is append.
  auto pos = std::upper_bound(packets_.begin(), packets_.end(), p.time,
                              [](Nanos t, const StoredPacket& s) { return t < s.time; });
  const bool append = pos == packets_.end();
  if (dir == Direction::Downlink) {
    if (append) {
      if (last_dl_time_) stored.dl_iat = p.time - *last_dl_time_;
    } else {
      for (auto it = pos; it != packets_.begin();) {
        --it;
        if (it->direction == Direction::Downlink) {
          stored.dl_iat = p.time - it->time;
          break;
        }
      }
    }
  }
  pos = packets_.insert(pos, stored);
  if (!append && dir == Direction::Downlink) {
    for (auto it = std::next(pos); it != packets_.end(); ++it) {
      if (it->direction == Direction::Downlink) {
        it->dl_iat = it->time - p.time;
        break;
      }
    }
  }

  if (dir == Direction::Downlink && (!last_dl_time_ || p.time > *last_dl_time_)) last_dl_time_ = p.time;
  if (!last_time_ || p.time > *last_time_) last_time_ = p.time;
  evict(*last_time_);
}

void FlowState::evict(Nanos newest) {
  if (retention_ <= Nanos{0}) return;
  // A late arrival lands at or after newest - tolerance; a predecessor older
  // than the horizon would give it an IAT above any admissible h_t anyway.
  const Nanos horizon = newest - retention_ - reorder_tolerance_;
  while (!packets_.empty() && packets_.front().time < horizon) packets_.pop_front();
}

}  // namespace hasprof
