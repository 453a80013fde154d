#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hasprof/dataset.hpp"
#include "hasprof/packet_model.hpp"
#include "hasprof/rng.hpp"

namespace hasprof::test {

inline const Ipv4 kClient{0x0a000002};  // 10.0.0.2
inline const Ipv4 kServer{0xac100001};  // 172.16.0.1

inline PacketRecord dl(double t, std::uint32_t size, std::uint16_t client_port = 50000) {
  PacketRecord p;
  p.time = from_seconds(t);
  p.src_ip = kServer;
  p.src_port = 443;
  p.dst_ip = kClient;
  p.dst_port = client_port;
  p.protocol = Protocol::TCP;
  p.payload_size = size;
  return p;
}

inline PacketRecord ul(double t, std::uint32_t size, std::uint16_t client_port = 50000) {
  return mirror(dl(t, size, client_port));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hasprof_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random packet train over a few flows: bursty downlink with small gaps, and
/// uplink packets straddling the size threshold.
inline std::vector<PacketRecord> random_trace(Rng& rng, double duration_s, std::size_t n_flows) {
  std::vector<PacketRecord> out;
  double t = rng.uniform(0.0, 0.5);
  while (t < duration_s) {
    const auto port = static_cast<std::uint16_t>(50000 + rng.below(n_flows));
    const double r = rng.uniform();
    if (r < 0.7) {
      out.push_back(dl(t, static_cast<std::uint32_t>(rng.between(0, 1500)), port));
    } else {
      const std::uint32_t size = rng.uniform() < 0.5 ? static_cast<std::uint32_t>(rng.between(40, 100))
                                                     : static_cast<std::uint32_t>(rng.between(100, 1200));
      out.push_back(ul(t, size, port));
    }
    // Mix of back-to-back gaps, gaps near the IAT threshold and idle periods.
    const double g = rng.uniform();
    if (g < 0.6) {
      t += rng.uniform(0.0, 0.02);
    } else if (g < 0.9) {
      t += rng.uniform(0.05, 0.15);
    } else {
      t += rng.uniform(0.5, 4.0);
    }
    // Occasionally land exactly on a second boundary.
    if (rng.below(50) == 0) t = std::ceil(t);
  }
  return out;
}

/// One Gaussian blob per class, offset along axis c % dims, in `dims` dimensions.
inline Dataset blobs(Rng& rng, std::size_t n_per_class, std::size_t n_classes, std::size_t dims, double spread) {
  std::vector<std::string> features;
  for (std::size_t m = 0; m < dims; ++m) features.push_back("f" + std::to_string(m));
  std::vector<std::string> classes;
  for (std::size_t c = 0; c < n_classes; ++c) classes.push_back("c" + std::to_string(c));
  Dataset ds(features, classes);
  std::vector<double> x(dims);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t m = 0; m < dims; ++m) {
        x[m] = (m == c % dims ? 5.0 * static_cast<double>(c + 1) : 0.0) + spread * rng.normal();
      }
      ds.add_row(x, static_cast<int>(c));
    }
  }
  return ds;
}

}  // namespace hasprof::test
