#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hasprof/features.hpp"
#include "hasprof/packet_model.hpp"

namespace hasprof::test {

/// Brute-force window features recomputed from the raw packet list of one flow.
struct OracleFeatures {
  double dl_rate = 0.0;
  double dl_load = 0.0;
  std::int64_t ul_n = 0;
  double ul_avg = 0.0;
  double ul_std = 0.0;
};

inline OracleFeatures oracle_features(const std::vector<PacketRecord>& flow_packets, Ipv4 client, Nanos t_w,
                                      Nanos window, const WindowConfig& cfg) {
  OracleFeatures f;
  const Nanos from = t_w - window;
  const double w = to_seconds(window);
  double bytes = 0.0;
  double busy = 0.0;
  std::vector<double> ul_sizes;
  std::optional<Nanos> prev_dl;
  for (const auto& p : flow_packets) {
    const bool inside = p.time >= from && p.time < t_w;
    if (p.dst_ip == client) {
      if (inside) {
        bytes += p.payload_size;
        if (prev_dl && p.time - *prev_dl <= cfg.iat_threshold) busy += to_seconds(p.time - *prev_dl);
      }
      prev_dl = p.time;
    } else if (inside && p.payload_size > cfg.ul_size_threshold) {
      ul_sizes.push_back(p.payload_size);
    }
  }
  f.dl_rate = 8.0 * bytes / w;
  f.dl_load = std::min(1.0, busy / w);
  f.ul_n = static_cast<std::int64_t>(ul_sizes.size());
  if (!ul_sizes.empty()) {
    double sum = 0.0;
    for (double s : ul_sizes) sum += s;
    f.ul_avg = sum / static_cast<double>(ul_sizes.size());
    double sq = 0.0;
    for (double s : ul_sizes) sq += (s - f.ul_avg) * (s - f.ul_avg);
    f.ul_std = std::sqrt(sq / static_cast<double>(ul_sizes.size()));
  }
  return f;
}

inline bool close_rel(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Compares one emitted feature vector against the oracle for every window.
inline bool matches_oracle(const std::vector<double>& values, const std::vector<PacketRecord>& flow_packets,
                           Ipv4 client, Nanos t_w, const WindowConfig& cfg) {
  for (std::size_t l = 0; l < cfg.n_windows(); ++l) {
    const OracleFeatures o = oracle_features(flow_packets, client, t_w, cfg.window_durations[l], cfg);
    const double* v = values.data() + l * kFeaturesPerWindow;
    if (!close_rel(v[0], o.dl_rate) || !close_rel(v[1], o.dl_load) || v[2] != static_cast<double>(o.ul_n) ||
        !close_rel(v[3], o.ul_avg) || !close_rel(v[4], o.ul_std)) {
      return false;
    }
  }
  return true;
}

/// Instants at which a sample is expected: the end of every sampling period
/// holding at least one packet of the flow.
inline std::set<Nanos> expected_instants(const std::vector<PacketRecord>& flow_packets, Nanos period) {
  std::set<Nanos> out;
  for (const auto& p : flow_packets) out.insert(Nanos{(p.time.count() / period.count() + 1) * period.count()});
  return out;
}

inline std::map<FlowKey, std::vector<PacketRecord>> split_flows(const std::vector<PacketRecord>& packets) {
  std::map<FlowKey, std::vector<PacketRecord>> out;
  for (const auto& p : packets) out[flow_key(p)].push_back(p);
  return out;
}

}  // namespace hasprof::test
