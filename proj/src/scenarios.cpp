#include "hasprof/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "hasprof/errors.hpp"
#include "hasprof/rng.hpp"

namespace hasprof {

namespace {

constexpr double kThrottleRate = 100e3;

std::string number(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_double(const std::string& text, std::size_t line) {
  if (text == "inf") return kUnlimited;
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(line, "malformed number '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, std::size_t line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(line, "malformed integer '" + text + "'");
  }
  return v;
}

Endpoint parse_endpoint(const std::string& text, std::size_t line) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ParseError(line, "endpoint must be ip:port");
  const auto port = parse_u64(text.substr(colon + 1), line);
  if (port > 65535) throw ParseError(line, "port out of range");
  return Endpoint{Ipv4::parse(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

/// Multiplies every finite rate by its own factor in [1 - spread, 1 + spread].
void jitter_rates(NetworkProfile& profile, Rng& rng, double spread) {
  for (auto& step : profile.steps) {
    const double f = rng.uniform(1.0 - spread, 1.0 + spread);
    if (std::isfinite(step.rate_bps)) step.rate_bps *= f;
  }
}

NetworkProfile scenario_profile(std::string_view id, Rng& rng) {
  NetworkProfile p = NetworkProfile::unlimited();
  if (id == "s4") {
    const double t0 = rng.uniform(120.0, 240.0);
    p.steps.push_back({t0, 500e3});
    p.steps.push_back({t0 + 150.0, kUnlimited});
  } else if (id == "s5") {
    p.steps = {{0.0, 1024e3}};
  } else if (id == "s6") {
    // High-low-high staircase; first step at 120 s, then every 40 s.
    const double rates_kbps[] = {5000, 4000, 3000, 2000, 1000, 2000, 3000, 4000, 5000};
    double t = 120.0;
    for (double r : rates_kbps) {
      p.steps.push_back({t, r * 1e3});
      t += 40.0;
    }
  } else if (id == "s7") {
    p.steps.push_back({120.0, 3000e3});
    for (double t0 = 160.0; t0 < 4000.0; t0 += 85.0) {
      p.steps.push_back({t0, kThrottleRate});
      p.steps.push_back({t0 + 45.0, 3000e3});
    }
  } else if (id == "s8") {
    p.steps.push_back({120.0, kThrottleRate});
    p.steps.push_back({180.0, kUnlimited});
    p.steps.push_back({300.0, kThrottleRate});
    p.steps.push_back({380.0, kUnlimited});
  }
  return p;
}

}  // namespace

const std::vector<VbrPreset>& vbr_presets() {
  static const std::vector<VbrPreset> presets{
      {"low", 0.10, 0.8, 559.0, 0x1001},
      {"medium", 0.20, 0.8, 561.0, 0x2002},
      {"high", 0.30, 0.8, 734.0, 0x3003},
  };
  return presets;
}

const VbrPreset& vbr_preset(std::string_view name) {
  for (const auto& p : vbr_presets()) {
    if (p.name == name) return p;
  }
  throw InvalidScript("unknown VBR preset '" + std::string(name) + "'");
}

const std::vector<std::string>& has_scenario_ids() {
  static const std::vector<std::string> ids{"s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8"};
  return ids;
}

bool is_has_scenario(std::string_view id) {
  const auto& ids = has_scenario_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

bool is_non_has_scenario(std::string_view id) { return id == "download" || id == "web"; }

bool is_known_scenario(std::string_view id) { return is_has_scenario(id) || is_non_has_scenario(id); }

SessionScript make_has_script(std::string_view scenario, const VbrPreset& preset, std::uint64_t seed) {
  if (!is_has_scenario(scenario)) throw InvalidScript("unknown HAS scenario '" + std::string(scenario) + "'");
  Rng rng(derive_seed(seed, 0x5ce7a1));
  SessionScript s;
  s.scenario_id = std::string(scenario);
  s.video_duration_s = preset.duration_s;
  s.vbr_sigma = preset.sigma;
  s.vbr_correlation = preset.correlation;
  s.content_seed = preset.content_seed;
  s.rng_seed = derive_seed(seed, 1);
  s.start_offset_s = rng.uniform();
  s.link_capacity_bps = rng.uniform(8e6, 12e6);
  s.client.port = static_cast<std::uint16_t>(49152 + rng.below(16384));
  s.server.ip = Ipv4{0xac100000u + static_cast<std::uint32_t>(1 + rng.below(250))};

  const QualityLadder& ladder = s.ladder;
  if (scenario == "s1") {
    s.fixed_representation = ladder.index_of("480p");
  } else if (scenario == "s2") {
    s.fixed_representation = ladder.index_of("720p");
  } else if (scenario == "s3") {
    s.fixed_representation = ladder.index_of("720p");
    s.switches.push_back({rng.uniform(120.0, 240.0), ladder.index_of("480p")});
  }
  s.profile = scenario_profile(scenario, rng);
  jitter_rates(s.profile, rng, 0.03);
  return s;
}

NonHasParams make_non_has_params(std::string_view kind, std::uint64_t seed) {
  if (!is_non_has_scenario(kind)) throw InvalidScript("unknown non-HAS scenario '" + std::string(kind) + "'");
  Rng rng(derive_seed(seed, 0x70a5));
  NonHasParams p;
  p.duration_s = rng.uniform(300.0, 700.0);
  p.start_offset_s = rng.uniform();
  p.link_capacity_bps = rng.uniform(8e6, 12e6);
  p.seed = derive_seed(seed, 1);
  p.client.port = static_cast<std::uint16_t>(49152 + rng.below(16384));
  p.server.ip = Ipv4{0xc0a80000u + static_cast<std::uint32_t>(1 + rng.below(250))};
  if (kind == "download" && rng.below(2) == 0) {
    p.profile.steps = {{0.0, rng.uniform(2e6, 8e6)}};
  }
  return p;
}

LabeledTrace simulate_scenario(std::string_view scenario, const VbrPreset& preset, std::uint64_t seed) {
  if (scenario == "download") return simulate_download(make_non_has_params(scenario, seed));
  if (scenario == "web") return simulate_web(make_non_has_params(scenario, seed));
  return simulate_has(make_has_script(scenario, preset, seed));
}

SessionScript parse_session_script(std::istream& in) {
  SessionScript s;
  bool profile_set = false;
  std::string quality = "auto";
  std::vector<std::pair<double, std::string>> switches;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key=value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key == "scenario") {
      s.scenario_id = value;
    } else if (key == "trace_id") {
      s.trace_id = value;
    } else if (key == "ladder") {
      s.ladder.representations.clear();
      for (const auto& item : split(value, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ParseError(line, "ladder entries are name:bitrate");
        s.ladder.representations.push_back({item.substr(0, colon), parse_double(item.substr(colon + 1), line)});
      }
    } else if (key == "rate") {
      const auto parts = split(value, ',');
      if (parts.size() != 2) throw ParseError(line, "rate lines are start_s,bit_per_s");
      if (!profile_set) s.profile.steps.clear();
      profile_set = true;
      s.profile.steps.push_back({parse_double(parts[0], line), parse_double(parts[1], line)});
    } else if (key == "capacity") {
      s.link_capacity_bps = parse_double(value, line);
    } else if (key == "video_duration_s") {
      s.video_duration_s = parse_double(value, line);
    } else if (key == "segment_duration_s") {
      s.segment_duration_s = parse_double(value, line);
    } else if (key == "buffer_target_s") {
      s.buffer_target_s = parse_double(value, line);
    } else if (key == "start_threshold_s") {
      s.start_threshold_s = parse_double(value, line);
    } else if (key == "quality") {
      quality = value;
    } else if (key == "switch") {
      const auto parts = split(value, ',');
      if (parts.size() != 2) throw ParseError(line, "switch lines are at_s,quality");
      switches.emplace_back(parse_double(parts[0], line), parts[1]);
    } else if (key == "abr_safety") {
      s.abr_safety = parse_double(value, line);
    } else if (key == "initial_throughput") {
      s.initial_throughput_bps = parse_double(value, line);
    } else if (key == "downswitch_buffer_s") {
      s.downswitch_buffer_s = parse_double(value, line);
    } else if (key == "vbr_sigma") {
      s.vbr_sigma = parse_double(value, line);
    } else if (key == "vbr_correlation") {
      s.vbr_correlation = parse_double(value, line);
    } else if (key == "vbr_clamp") {
      s.vbr_clamp = parse_double(value, line);
    } else if (key == "content_seed") {
      s.content_seed = parse_u64(value, line);
    } else if (key == "start_offset_s") {
      s.start_offset_s = parse_double(value, line);
    } else if (key == "seed") {
      s.rng_seed = parse_u64(value, line);
    } else if (key == "client") {
      s.client = parse_endpoint(value, line);
    } else if (key == "server") {
      s.server = parse_endpoint(value, line);
    } else if (key == "protocol") {
      if (value != "TCP" && value != "tcp" && value != "UDP" && value != "udp") {
        throw ParseError(line, "protocol must be TCP or UDP");
      }
      s.protocol = parse_protocol(value);
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }
  if (quality != "auto") s.fixed_representation = s.ladder.index_of(quality);
  for (const auto& [at, name] : switches) s.switches.push_back({at, s.ladder.index_of(name)});
  s.validate();
  return s;
}

SessionScript parse_session_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_session_script(in);
}

void write_session_script(std::ostream& out, const SessionScript& s) {
  out << "scenario=" << s.scenario_id << "\n";
  out << "trace_id=" << s.trace_id << "\n";
  out << "ladder=";
  for (std::size_t i = 0; i < s.ladder.size(); ++i) {
    out << (i ? "," : "") << s.ladder[i].name << ":" << number(s.ladder[i].bitrate);
  }
  out << "\n";
  for (const auto& step : s.profile.steps) out << "rate=" << number(step.start_s) << "," << number(step.rate_bps) << "\n";
  out << "capacity=" << number(s.link_capacity_bps) << "\n";
  out << "video_duration_s=" << number(s.video_duration_s) << "\n";
  out << "segment_duration_s=" << number(s.segment_duration_s) << "\n";
  out << "buffer_target_s=" << number(s.buffer_target_s) << "\n";
  out << "start_threshold_s=" << number(s.start_threshold_s) << "\n";
  out << "quality=" << (s.fixed_representation ? s.ladder[*s.fixed_representation].name : std::string("auto")) << "\n";
  for (const auto& sw : s.switches) out << "switch=" << number(sw.at_s) << "," << s.ladder[sw.representation].name << "\n";
  out << "abr_safety=" << number(s.abr_safety) << "\n";
  out << "initial_throughput=" << number(s.initial_throughput_bps) << "\n";
  out << "downswitch_buffer_s=" << number(s.downswitch_buffer_s) << "\n";
  out << "vbr_sigma=" << number(s.vbr_sigma) << "\n";
  out << "vbr_correlation=" << number(s.vbr_correlation) << "\n";
  out << "vbr_clamp=" << number(s.vbr_clamp) << "\n";
  out << "content_seed=" << s.content_seed << "\n";
  out << "start_offset_s=" << number(s.start_offset_s) << "\n";
  out << "seed=" << s.rng_seed << "\n";
  out << "client=" << s.client.ip.to_string() << ":" << s.client.port << "\n";
  out << "server=" << s.server.ip.to_string() << ":" << s.server.port << "\n";
  out << "protocol=" << to_string(s.protocol) << "\n";
}

}  // namespace hasprof
