#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "hasprof/errors.hpp"
#include "hasprof/trace_io.hpp"
#include "test_support.hpp"

using namespace hasprof;

namespace {

const char* kHeader = "time_s,src_ip,src_port,dst_ip,dst_port,protocol,payload_bytes\n";

std::string trace_text(const std::string& rows) {
  return std::string("# client_ip=10.0.0.2\n# trace_id=t1\n") + kHeader + rows;
}

void put_le16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>(v >> 8));
}
void put_le32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_be16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v >> 8));
  b.push_back(static_cast<char>(v & 0xff));
}
void put_be32(std::string& b, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

/// Independent pcap writer: global header and records in the requested byte order.
struct PcapBuilder {
  bool big_endian = false;
  bool nanos = false;
  std::string bytes;

  void u16(std::uint16_t v) { big_endian ? put_be16(bytes, v) : put_le16(bytes, v); }
  void u32(std::uint32_t v) { big_endian ? put_be32(bytes, v) : put_le32(bytes, v); }

  PcapBuilder(bool be, bool ns) : big_endian(be), nanos(ns) {
    u32(ns ? 0xa1b23c4d : 0xa1b2c3d4);
    u16(2);
    u16(4);
    u32(0);
    u32(0);
    u32(65535);
    u32(1);  // Ethernet
  }

  void record(std::uint32_t sec, std::uint32_t frac, const std::string& frame) {
    u32(sec);
    u32(frac);
    u32(static_cast<std::uint32_t>(frame.size()));
    u32(static_cast<std::uint32_t>(frame.size()));
    bytes += frame;
  }
};

std::string ethernet(std::uint16_t ethertype) {
  std::string f(12, '\x11');
  put_be16(f, ethertype);
  return f;
}

std::string udp_frame(std::uint32_t src, std::uint32_t dst, std::uint16_t sport, std::uint16_t dport,
                      std::uint16_t payload) {
  std::string f = ethernet(0x0800);
  const std::uint16_t total = static_cast<std::uint16_t>(20 + 8 + payload);
  f.push_back(0x45);
  f.push_back(0);
  put_be16(f, total);
  put_be32(f, 0);  // id, flags, fragment offset
  f.push_back(64);
  f.push_back(17);
  put_be16(f, 0);
  put_be32(f, src);
  put_be32(f, dst);
  put_be16(f, sport);
  put_be16(f, dport);
  put_be16(f, static_cast<std::uint16_t>(8 + payload));
  put_be16(f, 0);
  f += std::string(payload, 'x');
  return f;
}

std::string tcp_frame(std::uint32_t src, std::uint32_t dst, std::uint16_t payload, std::uint8_t tcp_words) {
  std::string f = ethernet(0x0800);
  const std::uint16_t total = static_cast<std::uint16_t>(20 + 4 * tcp_words + payload);
  f.push_back(0x45);
  f.push_back(0);
  put_be16(f, total);
  put_be32(f, 0);
  f.push_back(64);
  f.push_back(6);
  put_be16(f, 0);
  put_be32(f, src);
  put_be32(f, dst);
  put_be16(f, 443);
  put_be16(f, 50000);
  f += std::string(8, '\0');
  f.push_back(static_cast<char>(tcp_words << 4));
  f += std::string(4u * tcp_words - 13, '\0');
  f += std::string(payload, 'y');
  return f;
}

}  // namespace

TEST_SUITE("trace_io") {
  TEST_CASE("packet CSV rows are read in order") {
    std::istringstream in(trace_text(
        "0.100000000,172.16.0.1,443,10.0.0.2,50000,TCP,1400\n"
        "0.2,10.0.0.2,50000,172.16.0.1,443,TCP,52\n"
        "1.5,172.16.0.1,443,10.0.0.2,50000,UDP,7\n"));
    const PacketTrace t = read_packet_csv(in);
    REQUIRE(t.packets.size() == 3);
    CHECK(t.meta.client_ip == Ipv4::parse("10.0.0.2"));
    CHECK(t.meta.trace_id == "t1");
    CHECK(t.packets[0].time == Nanos{100'000'000});
    CHECK(t.packets[1].payload_size == 52);
    CHECK(t.packets[2].protocol == Protocol::UDP);
  }

  TEST_CASE("malformed rows name their line") {
    std::istringstream in(trace_text("0.1,172.16.0.1,443,10.0.0.2,70000,TCP,1400\n"));
    try {
      read_packet_csv(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
    std::istringstream bad_time(trace_text("abc,172.16.0.1,443,10.0.0.2,5,TCP,1\n"));
    CHECK_THROWS_AS(read_packet_csv(bad_time), ParseError);
    std::istringstream missing(std::string(kHeader) + "0.1,172.16.0.1,443,10.0.0.2,5,TCP,1\n");
    CHECK_THROWS_AS(read_packet_csv(missing), MissingClientIp);
  }

  TEST_CASE("empty data section gives an empty trace with metadata") {
    std::istringstream in(trace_text(""));
    const PacketTrace t = read_packet_csv(in);
    CHECK(t.packets.empty());
    CHECK(t.meta.trace_id == "t1");
  }

  TEST_CASE("packet CSV round trip is exact") {
    Rng rng(5);
    PacketTrace t;
    t.meta.client_ip = test::kClient;
    t.meta.trace_id = "rt";
    t.meta.scenario = "s3";
    t.packets = test::random_trace(rng, 60.0, 3);
    std::stringstream ss;
    write_packet_csv(ss, t);
    const PacketTrace back = read_packet_csv(ss);
    CHECK(back.meta == t.meta);
    CHECK(back.packets == t.packets);
  }

  TEST_CASE("seconds parse and format exactly") {
    CHECK(parse_seconds("1.5") == Nanos{1'500'000'000});
    CHECK(parse_seconds("0.000000001") == Nanos{1});
    CHECK(format_seconds(Nanos{1'234'567'890}) == "1.234567890");
    CHECK_THROWS(parse_seconds("-1"));
    CHECK_THROWS(parse_seconds("1.0000000001"));
  }

  TEST_CASE("label files") {
    std::istringstream empty("");
    CHECK(read_labels(empty).empty());
    std::istringstream in(
        "flow_id,start_s,end_s,label\n"
        "10.0.0.2:50000-172.16.0.1:443/TCP,0,120,Filling\n"
        "# comment\n"
        "10.0.0.2:50000-172.16.0.1:443/TCP,120,300,Steady\n");
    const auto labels = read_labels(in);
    REQUIRE(labels.size() == 2);
    CHECK(labels[1].start == Nanos{120'000'000'000});
    std::stringstream ss;
    write_labels(ss, labels);
    CHECK(read_labels(ss) == labels);
    std::istringstream overlap(
        "10.0.0.2:50000-172.16.0.1:443/TCP,0,10,Filling\n"
        "10.0.0.2:50000-172.16.0.1:443/TCP,5,15,Steady\n");
    CHECK_THROWS_AS(read_labels(overlap), OverlapError);
  }

  TEST_CASE("dataset CSV") {
    Rng rng(17);
    std::vector<std::string> names;
    for (int i = 0; i < 20; ++i) names.push_back("f" + std::to_string(i));
    Dataset ds(names, {"a", "b"});
    std::vector<double> x(20);
    for (int r = 0; r < 2; ++r) {
      for (auto& v : x) v = rng.uniform(-1e6, 1e6);
      ds.add_row(x, r);
    }
    std::stringstream ss;
    write_dataset_csv(ss, ds);
    const std::string text = ss.str();
    std::size_t data_lines = 0;
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);  // classes
    std::getline(lines, line);  // header
    CHECK(std::count(line.begin(), line.end(), ',') == 20);
    while (std::getline(lines, line)) {
      ++data_lines;
      CHECK(std::count(line.begin(), line.end(), ',') == 20);
    }
    CHECK(data_lines == 2);
    CHECK(read_dataset_csv(ss) == ds);

    // Random datasets with scenario tags round-trip bit-exactly.
    for (int trial = 0; trial < 20; ++trial) {
      Dataset r({"x", "y", "z"}, {"p", "q", "r"});
      const auto n = rng.below(30);
      for (std::uint64_t i = 0; i < n; ++i) {
        const double v[3] = {rng.normal() * 1e9, rng.uniform(), std::ldexp(rng.uniform(), -40)};
        r.add_row(v, static_cast<int>(rng.below(3)), "s" + std::to_string(rng.below(8)));
      }
      std::stringstream rs;
      write_dataset_csv(rs, r);
      CHECK(read_dataset_csv(rs) == r);
    }

    std::string short_row = text;
    const auto last = short_row.rfind('\n', short_row.size() - 2);
    short_row = short_row.substr(0, last + 1) + "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,0\n";
    std::istringstream bad(short_row);
    CHECK_THROWS_AS(read_dataset_csv(bad), ParseError);
  }

  TEST_CASE("pcap decoding") {
    const std::uint32_t server = 0xac100001;
    const std::uint32_t client = 0x0a000002;
    for (bool be : {false, true}) {
      for (bool ns : {false, true}) {
        CAPTURE(be);
        CAPTURE(ns);
        PcapBuilder b(be, ns);
        b.record(1000, ns ? 250'000'000 : 250'000, udp_frame(server, client, 443, 50000, 1400));
        b.record(1001, ns ? 5 : 0, ethernet(0x0806) + std::string(28, '\0'));  // ARP
        b.record(1002, 0, tcp_frame(client, server, 100, 8));
        std::istringstream in(b.bytes);
        const PcapReadResult r = read_pcap(in);
        REQUIRE(r.packets.size() == 2);
        CHECK(r.skipped == 1);
        CHECK(r.packets[0].payload_size == 1400);
        CHECK(r.packets[0].protocol == Protocol::UDP);
        CHECK(r.packets[0].time == Nanos{250'000'000});
        CHECK(r.packets[1].payload_size == 100);
        CHECK(r.packets[1].time == Nanos{2'000'000'000});
        CHECK(r.packets[1].src_ip == Ipv4{client});
      }
    }
    std::string ng;
    put_le32(ng, 0x0a0d0d0a);
    ng += std::string(40, '\0');
    std::istringstream in(ng);
    CHECK_THROWS_AS(read_pcap(in), UnsupportedFormat);
  }
}
