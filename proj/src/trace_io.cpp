#include "hasprof/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hasprof/errors.hpp"

namespace hasprof {

namespace {

constexpr std::string_view kPacketHeader = "time_s,src_ip,src_port,dst_ip,dst_port,protocol,payload_bytes";
constexpr std::string_view kLabelHeader = "flow_id,start_s,end_s,label";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename T>
T parse_uint(std::string_view text, T max, std::size_t line, const char* what) {
  std::uint64_t v = 0;
  auto [next, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || next != text.data() + text.size() || text.empty()) {
    throw ParseError(line, std::string("malformed ") + what + " '" + std::string(text) + "'");
  }
  if (v > static_cast<std::uint64_t>(max)) throw ParseError(line, std::string(what) + " out of range: " + std::string(text));
  return static_cast<T>(v);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

}  // namespace

Nanos parse_seconds(std::string_view text) {
  if (text.empty()) throw InvalidConfig("empty time value");
  const auto dot = text.find('.');
  const auto whole = text.substr(0, dot);
  const auto frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw InvalidConfig("malformed time value '" + std::string(text) + "'");
  if (frac.size() > 9) throw InvalidConfig("more than nine fractional digits in '" + std::string(text) + "'");
  std::int64_t seconds = 0;
  if (!whole.empty()) {
    auto [next, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), seconds);
    if (ec != std::errc{} || next != whole.data() + whole.size() || seconds < 0 || whole.front() == '-' ||
        seconds > 9'000'000'000LL) {
      throw InvalidConfig("malformed time value '" + std::string(text) + "'");
    }
  }
  std::int64_t nanos = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    nanos *= 10;
    if (i < frac.size()) {
      const char c = frac[i];
      if (c < '0' || c > '9') throw InvalidConfig("malformed time value '" + std::string(text) + "'");
      nanos += c - '0';
    }
  }
  return Nanos{seconds * 1'000'000'000LL + nanos};
}

std::string format_seconds(Nanos t) {
  const std::int64_t ns = t.count();
  const bool negative = ns < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-ns) : static_cast<std::uint64_t>(ns);
  std::string frac = std::to_string(mag % 1'000'000'000ULL);
  frac.insert(0, 9 - frac.size(), '0');
  return (negative ? "-" : "") + std::to_string(mag / 1'000'000'000ULL) + '.' + frac;
}

PacketTrace read_packet_csv(std::istream& in) {
  PacketTrace trace;
  bool have_client = false;
  bool have_header = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim_cr(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (have_header) continue;
      auto body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = body.substr(0, eq);
      const auto value = body.substr(eq + 1);
      try {
        if (key == "client_ip") {
          trace.meta.client_ip = Ipv4::parse(value);
          have_client = true;
        } else if (key == "trace_id") {
          trace.meta.trace_id = std::string(value);
        } else if (key == "sampling_period_s") {
          trace.meta.sampling_period = parse_seconds(value);
          if (trace.meta.sampling_period <= Nanos{0}) throw InvalidConfig("sampling period must be positive");
        } else if (key == "scenario") {
          trace.meta.scenario = std::string(value);
        }
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(line_no, e.what());
      }
      continue;
    }
    if (!have_header) {
      if (line != kPacketHeader) throw ParseError(line_no, "expected header '" + std::string(kPacketHeader) + "'");
      have_header = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 7) throw ParseError(line_no, "expected 7 fields, found " + std::to_string(fields.size()));
    PacketRecord p;
    try {
      p.time = parse_seconds(fields[0]);
      p.src_ip = Ipv4::parse(fields[1]);
      p.src_port = parse_uint<std::uint16_t>(fields[2], 65535, line_no, "port");
      p.dst_ip = Ipv4::parse(fields[3]);
      p.dst_port = parse_uint<std::uint16_t>(fields[4], 65535, line_no, "port");
      p.protocol = parse_protocol(fields[5]);
      p.payload_size = parse_uint<std::uint32_t>(fields[6], 0xffffffffu, line_no, "payload size");
      p.validate();
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    trace.packets.push_back(p);
  }
  if (!have_client) throw MissingClientIp("packet trace lacks '# client_ip=' metadata");
  if (!have_header) throw ParseError(line_no, "missing header row");
  return trace;
}

PacketTrace read_packet_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_packet_csv(in);
}

void write_packet_csv(std::ostream& out, const PacketTrace& trace) {
  std::string buf;
  buf += "# client_ip=" + trace.meta.client_ip.to_string() + '\n';
  if (!trace.meta.trace_id.empty()) buf += "# trace_id=" + trace.meta.trace_id + '\n';
  buf += "# sampling_period_s=" + format_seconds(trace.meta.sampling_period) + '\n';
  if (!trace.meta.scenario.empty()) buf += "# scenario=" + trace.meta.scenario + '\n';
  buf += kPacketHeader;
  buf += '\n';
  for (const auto& p : trace.packets) {
    buf += format_seconds(p.time);
    buf += ',';
    buf += p.src_ip.to_string();
    buf += ',';
    buf += std::to_string(p.src_port);
    buf += ',';
    buf += p.dst_ip.to_string();
    buf += ',';
    buf += std::to_string(p.dst_port);
    buf += ',';
    buf += to_string(p.protocol);
    buf += ',';
    buf += std::to_string(p.payload_size);
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

void write_packet_csv(const std::filesystem::path& path, const PacketTrace& trace) {
  auto out = open_out(path);
  write_packet_csv(out, trace);
}

std::vector<LabelInterval> read_labels(std::istream& in) {
  std::vector<LabelInterval> labels;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim_cr(raw);
    if (line.empty() || line.front() == '#' || line == kLabelHeader) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    LabelInterval iv;
    try {
      iv.flow = FlowKey::parse(fields[0]);
      iv.start = parse_seconds(fields[1]);
      iv.end = parse_seconds(fields[2]);
      iv.label = Label::parse(fields[3]);
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!(iv.start < iv.end)) throw ParseError(line_no, "label interval must have start < end");
    labels.push_back(iv);
  }
  validate_labels(labels);
  return labels;
}

std::vector<LabelInterval> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_labels(in);
}

void write_labels(std::ostream& out, const std::vector<LabelInterval>& labels) {
  validate_labels(labels);
  out << kLabelHeader << '\n';
  for (const auto& iv : labels) {
    out << iv.flow.to_string() << ',' << format_seconds(iv.start) << ',' << format_seconds(iv.end) << ','
        << iv.label.name() << '\n';
  }
}

void write_labels(const std::filesystem::path& path, const std::vector<LabelInterval>& labels) {
  auto out = open_out(path);
  write_labels(out, labels);
}

Dataset read_dataset_csv(std::istream& in) {
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  bool have_classes = false;
  bool have_header = false;
  bool tagged = false;
  Dataset ds;
  std::vector<double> row;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim_cr(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body.starts_with("classes=")) {
        for (auto name : split(body.substr(8), ',')) class_names.emplace_back(name);
        have_classes = true;
      }
      continue;
    }
    if (!have_header) {
      if (!have_classes) throw ParseError(line_no, "missing '# classes=' line before header");
      auto names = split(line, ',');
      if (!names.empty() && names.back() == "scenario") {
        tagged = true;
        names.pop_back();
      }
      if (names.empty() || names.back() != "label") throw ParseError(line_no, "header must end with 'label'");
      names.pop_back();
      for (auto n : names) feature_names.emplace_back(n);
      ds = Dataset(feature_names, class_names);
      have_header = true;
      continue;
    }
    const auto fields = split(line, ',');
    const std::size_t expected = feature_names.size() + 1 + (tagged ? 1 : 0);
    if (fields.size() != expected) {
      throw ParseError(line_no, "expected " + std::to_string(expected) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    row.clear();
    for (std::size_t m = 0; m < feature_names.size(); ++m) {
      double v = 0;
      auto f = fields[m];
      auto [next, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || next != f.data() + f.size() || f.empty() || !std::isfinite(v)) {
        throw ParseError(line_no, "malformed feature value '" + std::string(f) + "'");
      }
      row.push_back(v);
    }
    const int label = parse_uint<int>(fields[feature_names.size()], 1 << 30, line_no, "class code");
    if (static_cast<std::size_t>(label) >= class_names.size()) {
      throw ParseError(line_no, "class code " + std::to_string(label) + " out of range");
    }
    std::string scenario;
    if (tagged) {
      scenario = std::string(fields.back());
      if (scenario.empty()) throw ParseError(line_no, "empty scenario tag");
    }
    ds.add_row(row, label, std::move(scenario));
  }
  if (!have_header) throw ParseError(line_no, "missing dataset header");
  return ds;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  ds.validate();
  std::string buf = "# classes=";
  for (std::size_t c = 0; c < ds.class_names().size(); ++c) {
    if (c) buf += ',';
    buf += ds.class_names()[c];
  }
  buf += '\n';
  for (const auto& name : ds.feature_names()) {
    buf += name;
    buf += ',';
  }
  buf += "label";
  if (ds.has_scenarios()) buf += ",scenario";
  buf += '\n';
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (double v : ds.row(i)) {
      append_double(buf, v);
      buf += ',';
    }
    buf += std::to_string(ds.label(i));
    if (ds.has_scenarios()) {
      buf += ',';
      buf += ds.scenarios()[i];
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds) {
  auto out = open_out(path);
  write_dataset_csv(out, ds);
}

}  // namespace hasprof
