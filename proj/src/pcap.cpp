#include <array>
#include <fstream>
#include <istream>

#include "hasprof/errors.hpp"
#include "hasprof/trace_io.hpp"

namespace hasprof {

namespace {

constexpr std::uint32_t kMagicMicros = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNanos = 0xa1b23c4d;
constexpr std::uint32_t kPcapngMagic = 0x0a0d0d0a;
constexpr std::uint32_t kLinkEthernet = 1;

constexpr std::size_t kEthernetHeader = 14;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;

std::uint32_t load_le32(const unsigned char* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00) | ((v << 8) & 0xff0000) | (v << 24);
}

std::uint16_t load_be16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] << 8 | p[1]); }

std::uint32_t load_be32(const unsigned char* p) {
  return std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 | std::uint32_t{p[2]} << 8 | std::uint32_t{p[3]};
}

bool read_exact(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

}  // namespace

PcapReadResult read_pcap(std::istream& in) {
  std::array<unsigned char, 24> global{};
  if (!read_exact(in, global.data(), global.size())) throw UnsupportedFormat("file too short for a pcap header");

  const std::uint32_t raw_magic = load_le32(global.data());
  if (raw_magic == kPcapngMagic) throw UnsupportedFormat("pcapng captures are not supported");
  bool swapped = false;
  bool nanos = false;
  if (raw_magic == kMagicMicros || raw_magic == kMagicNanos) {
    nanos = raw_magic == kMagicNanos;
  } else if (byteswap32(raw_magic) == kMagicMicros || byteswap32(raw_magic) == kMagicNanos) {
    swapped = true;
    nanos = byteswap32(raw_magic) == kMagicNanos;
  } else {
    throw UnsupportedFormat("unknown capture magic");
  }
  auto field32 = [swapped](const unsigned char* p) {
    const std::uint32_t v = load_le32(p);
    return swapped ? byteswap32(v) : v;
  };
  const std::uint32_t linktype = field32(global.data() + 20) & 0x0fffffff;
  if (linktype != kLinkEthernet) throw UnsupportedFormat("unsupported link type " + std::to_string(linktype));

  PcapReadResult result;
  std::array<unsigned char, 16> rec{};
  std::vector<unsigned char> data;
  std::optional<std::int64_t> epoch_ns;
  while (read_exact(in, rec.data(), rec.size())) {
    const std::uint32_t ts_sec = field32(rec.data());
    const std::uint32_t ts_frac = field32(rec.data() + 4);
    const std::uint32_t caplen = field32(rec.data() + 8);
    if (caplen > (1u << 26)) throw UnsupportedFormat("implausible record length " + std::to_string(caplen));
    data.resize(caplen);
    if (!read_exact(in, data.data(), caplen)) {
      ++result.truncated;
      break;
    }
    const std::int64_t abs_ns =
        static_cast<std::int64_t>(ts_sec) * 1'000'000'000LL + (nanos ? ts_frac : std::int64_t{ts_frac} * 1000);
    if (!epoch_ns) epoch_ns = (abs_ns / 1'000'000'000LL) * 1'000'000'000LL;

    if (caplen < kEthernetHeader) {
      ++result.truncated;
      continue;
    }
    if (load_be16(data.data() + 12) != kEtherTypeIpv4) {
      ++result.skipped;
      continue;
    }
    const unsigned char* ip = data.data() + kEthernetHeader;
    const std::size_t ip_avail = caplen - kEthernetHeader;
    if (ip_avail < 20) {
      ++result.truncated;
      continue;
    }
    if ((ip[0] >> 4) != 4) {
      ++result.skipped;
      continue;
    }
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
    const std::size_t total_len = load_be16(ip + 2);
    const std::uint16_t frag = load_be16(ip + 6);
    const std::uint8_t proto = ip[9];
    if (ihl < 20 || total_len < ihl) {
      ++result.skipped;
      continue;
    }
    if ((frag & 0x1fff) != 0 || (proto != 6 && proto != 17)) {
      ++result.skipped;
      continue;
    }
    std::size_t transport_len = 8;
    if (proto == 6) {
      if (ip_avail < ihl + 13) {
        ++result.truncated;
        continue;
      }
      transport_len = static_cast<std::size_t>(ip[ihl + 12] >> 4) * 4;
      if (transport_len < 20) {
        ++result.skipped;
        continue;
      }
    }
    if (ip_avail < ihl + (proto == 6 ? 13 : 8)) {
      ++result.truncated;
      continue;
    }
    if (total_len < ihl + transport_len) {
      ++result.skipped;
      continue;
    }
    PacketRecord p;
    p.time = Nanos{abs_ns - *epoch_ns};
    p.src_ip = Ipv4{load_be32(ip + 12)};
    p.dst_ip = Ipv4{load_be32(ip + 16)};
    p.src_port = load_be16(ip + ihl);
    p.dst_port = load_be16(ip + ihl + 2);
    p.protocol = proto == 6 ? Protocol::TCP : Protocol::UDP;
    p.payload_size = static_cast<std::uint32_t>(total_len - ihl - transport_len);
    if (p.time < Nanos{0} || p.src() == p.dst()) {
      ++result.skipped;
      continue;
    }
    result.packets.push_back(p);
  }
  return result;
}

PcapReadResult read_pcap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_pcap(in);
}

}  // namespace hasprof
