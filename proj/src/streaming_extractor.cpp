#include "hasprof/errors.hpp"
#include "hasprof/features.hpp"

namespace hasprof {

StreamingExtractor::StreamingExtractor(WindowConfig cfg, Ipv4 client_ip)
    : cfg_(std::move(cfg)), client_ip_(client_ip) {
  cfg_.validate();
  for (Nanos w : cfg_.window_durations) window_bins_.push_back(w.count() / cfg_.sampling_period.count());
  max_bins_ = window_bins_.back();
}

void StreamingExtractor::push_closed_bin(Track& track, const WindowTotals& bin) {
  track.history.push_back(bin);
  const auto size = static_cast<std::int64_t>(track.history.size());
  for (std::size_t w = 0; w < window_bins_.size(); ++w) {
    track.sums[w] += bin;
    if (size > window_bins_[w]) track.sums[w] -= track.history[static_cast<std::size_t>(size - 1 - window_bins_[w])];
  }
  if (size > max_bins_) track.history.pop_front();
}

void StreamingExtractor::close(const FlowKey& key, Track& track, std::vector<Sample>& out) {
  push_closed_bin(track, track.open);
  track.last_closed = track.open_bin;
  track.open_bin = -1;
  track.open = {};

  Sample s;
  s.flow = key;
  s.t_w = cfg_.sampling_period * (track.last_closed + 1);
  s.features.resize(cfg_.n_features());
  for (std::size_t w = 0; w < window_bins_.size(); ++w) {
    window_features(track.sums[w], cfg_.window_durations[w],
                    std::span<double>(s.features).subspan(w * kFeaturesPerWindow, kFeaturesPerWindow));
  }
  out.push_back(std::move(s));
}

void StreamingExtractor::push(const PacketRecord& p, std::vector<Sample>& out) {
  p.validate();
  if (last_time_ && p.time < *last_time_) {
    throw OutOfOrderPacket("packet at " + format_seconds(p.time) + " s precedes " + format_seconds(*last_time_) + " s");
  }
  last_time_ = p.time;
  const Direction dir = direction_of(p, client_ip_);
  const std::int64_t bin = p.time.count() / cfg_.sampling_period.count();

  if (bin > current_bin_) {
    // Every open bin is older than `bin`: its instant is complete.
    for (const auto& key : open_) close(key, flows_.at(key), out);
    open_.clear();
    current_bin_ = bin;
  }

  const FlowKey key = flow_key(p);
  auto [it, inserted] = flows_.try_emplace(key);
  Track& track = it->second;
  if (inserted) track.sums.assign(window_bins_.size(), WindowTotals{});
  if (track.open_bin != bin) {
    if (track.last_closed >= 0) {
      const std::int64_t gap = bin - track.last_closed - 1;
      if (gap >= max_bins_) {
        track.history.clear();
        std::fill(track.sums.begin(), track.sums.end(), WindowTotals{});
      } else {
        for (std::int64_t i = 0; i < gap; ++i) push_closed_bin(track, WindowTotals{});
      }
    }
    track.open_bin = bin;
    open_.insert(key);
  }

  WindowTotals& cell = track.open;
  if (dir == Direction::Downlink) {
    cell.dl_bytes += p.payload_size;
    if (track.last_dl) {
      const Nanos iat = p.time - *track.last_dl;
      if (iat <= cfg_.iat_threshold) cell.dl_busy_ns += iat.count();
    }
    track.last_dl = p.time;
  } else if (p.payload_size > cfg_.ul_size_threshold) {
    ++cell.ul_count;
    cell.ul_sum += p.payload_size;
    cell.ul_sum_sq += static_cast<std::int64_t>(p.payload_size) * p.payload_size;
  }
}

void StreamingExtractor::flush(std::vector<Sample>& out) {
  for (const auto& key : open_) close(key, flows_.at(key), out);
  open_.clear();
}

}  // namespace hasprof
