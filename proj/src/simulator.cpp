#include "hasprof/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "hasprof/errors.hpp"
#include "hasprof/rng.hpp"

namespace hasprof {

namespace {

constexpr double kEps = 1e-9;
constexpr double kByteEps = 1e-6;
constexpr double kMinUnclearRun = 3.0;
constexpr double kLabelMargin = 0.2;  // nominal rate ratio band treated as a match

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

/// Emits packets of one flow with session-relative times.
class PacketSink {
 public:
  PacketSink(LabeledTrace& out, Endpoint client, Endpoint server, Protocol protocol, double offset)
      : out_(out), client_(client), server_(server), protocol_(protocol), offset_(offset) {}

  /// Downlink data packet; every second one is followed by an uplink ACK.
  void downlink(double t, std::uint32_t size) {
    out_.trace.packets.push_back(make(t, server_, client_, size));
    out_.dl_bytes += size;
    if (++dl_count_ % 2 == 0) {
      out_.trace.packets.push_back(make(t, client_, server_, kAckPayload));
      out_.ul_bytes += kAckPayload;
      ++out_.ack_count;
    }
  }

  void uplink(double t, std::uint32_t size) {
    out_.trace.packets.push_back(make(t, client_, server_, size));
    out_.ul_bytes += size;
  }

 private:
  PacketRecord make(double t, Endpoint src, Endpoint dst, std::uint32_t size) const {
    PacketRecord p;
    p.time = from_seconds(offset_ + t);
    p.src_ip = src.ip;
    p.src_port = src.port;
    p.dst_ip = dst.ip;
    p.dst_port = dst.port;
    p.protocol = protocol_;
    p.payload_size = size;
    return p;
  }

  LabeledTrace& out_;
  Endpoint client_;
  Endpoint server_;
  Protocol protocol_;
  double offset_;
  std::uint64_t dl_count_ = 0;
};

/// Byte-accurate downlink transfer: tracks delivered bytes and emits a data
/// packet whenever a payload boundary is crossed.
class Transfer {
 public:
  explicit Transfer(std::uint64_t total) : total_(total) {}

  std::uint64_t total() const { return total_; }
  double delivered() const { return done_; }
  double remaining() const { return static_cast<double>(total_) - done_; }
  bool complete() const { return done_ >= static_cast<double>(total_) - kByteEps; }

  /// Delivers bytes over [t0, t1] at `rate` bit/s.
  void advance(double t0, double t1, double rate, bool finishes, PacketSink& sink) {
    const double start = done_;
    done_ = finishes ? static_cast<double>(total_) : std::min(static_cast<double>(total_), done_ + rate * (t1 - t0) / 8.0);
    while (sent_ < total_) {
      const std::uint64_t boundary = std::min<std::uint64_t>(sent_ + kDataPayload, total_);
      if (static_cast<double>(boundary) > done_ + kByteEps) break;
      if (boundary == total_ && !finishes && !complete()) break;
      const double t = finishes && boundary == total_
                           ? t1
                           : std::clamp(t0 + (static_cast<double>(boundary) - start) * 8.0 / rate, t0, t1);
      sink.downlink(t, static_cast<std::uint32_t>(boundary - sent_));
      sent_ = boundary;
    }
  }

 private:
  std::uint64_t total_;
  double done_ = 0.0;
  std::uint64_t sent_ = 0;
};

std::vector<double> content_factors(const SessionScript& s, std::size_t n) {
  Rng rng(s.content_seed);
  std::vector<double> f(n);
  const double rho = s.vbr_correlation;
  const double innovation = std::sqrt(1.0 - rho * rho);
  double z = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) z = rho * z + innovation * rng.normal();
    const double v = std::exp(s.vbr_sigma * z - 0.5 * s.vbr_sigma * s.vbr_sigma);
    f[i] = std::clamp(v, 1.0 - s.vbr_clamp, 1.0 + s.vbr_clamp);
  }
  return f;
}

double effective_rate(const NetworkProfile& profile, double capacity, double t) {
  return std::min(profile.limit_at(t), capacity);
}

LabelInterval make_interval(const FlowKey& flow, double offset, double start, double end, Label label) {
  LabelInterval li;
  li.flow = flow;
  li.start = from_seconds(offset + start);
  li.end = from_seconds(offset + end);
  li.label = label;
  return li;
}

/// Service label covering the whole flow.
LabelInterval service_interval(const LabeledTrace& lt, int code) {
  LabelInterval li;
  li.flow = lt.flow;
  li.start = lt.trace.packets.front().time;
  li.end = lt.trace.packets.back().time + Nanos{1};
  li.label = Label{LabelFamily::Service, code};
  return li;
}

class HasSession {
 public:
  explicit HasSession(const SessionScript& s)
      : s_(s), rng_(s.rng_seed), sink_(out_, s.client, s.server, s.protocol, s.start_offset_s) {
    n_segments_ = static_cast<std::size_t>(std::ceil(s.video_duration_s / s.segment_duration_s - 1e-9));
    factors_ = content_factors(s, n_segments_);
    ewma_ = s.initial_throughput_bps;
  }

  LabeledTrace run() {
    out_.flow = FlowKey{std::min(s_.client, s_.server), std::max(s_.client, s_.server), s_.protocol};
    out_.trace.meta.client_ip = s_.client.ip;
    out_.trace.meta.trace_id = s_.trace_id;
    out_.trace.meta.scenario = s_.scenario_id;

    double t = 0.0;
    request(t);
    std::size_t guard = 0;
    while (!finished_) {
      if (++guard > 50'000'000) throw InvalidScript("simulation did not terminate");
      const double rate = downloading_ ? effective_rate(s_.profile, s_.link_capacity_bps, t) : 0.0;
      const double slope = buffer_slope(rate);
      record(t, rate, slope);

      double next = s_.profile.next_change(t);
      if (downloading_) next = std::min(next, t + transfer_->remaining() * 8.0 / rate);
      if (waiting_ && playing_) next = std::min(next, t + std::max(0.0, buffer_ - resume_level()));
      if (playing_ && slope < 0.0) next = std::min(next, t + buffer_ / -slope);
      if (!playing_ && slope > 0.0) next = std::min(next, t + std::max(0.0, s_.start_threshold_s - buffer_) / slope);
      if (regulated_ && slope < 0.0 && buffer_ > release_level()) {
        next = std::min(next, t + (buffer_ - release_level()) / -slope);
      }
      if (!std::isfinite(next)) throw InvalidScript("simulation stalled with no pending event");

      const bool finishes = downloading_ && next >= t + transfer_->remaining() * 8.0 / rate;
      if (downloading_) transfer_->advance(t, next, rate, finishes, sink_);
      buffer_ = std::max(0.0, buffer_ + slope * (next - t));
      t = next;
      handle_events(t);
    }
    record(t, 0.0, 0.0);
    out_.labels.push_back(service_interval(out_, service::kHas));
    build_buffer_labels();
    return std::move(out_);
  }

 private:
  double resume_level() const { return s_.buffer_target_s - s_.segment_duration_s; }
  double release_level() const { return s_.buffer_target_s - 2.0 * s_.segment_duration_s; }

  double buffer_slope(double rate) const {
    double slope = playing_ ? -1.0 : 0.0;
    if (downloading_) {
      const SegmentRecord& seg = out_.segments.back();
      slope += rate * seg.content_s / (8.0 * static_cast<double>(seg.bytes));
    }
    return slope;
  }

  Phase phase(double rate) const {
    if (waiting_) return buffer_state::kSteady;
    if (!downloading_) return std::nullopt;
    const double q = rate / s_.ladder[current_].bitrate;
    const bool above = q >= 1.0 + kLabelMargin;
    const bool below = q <= 1.0 - kLabelMargin;
    // Playback frozen (startup or stall): requests run back to back and the
    // buffer can only rise.
    if (!playing_) return buffer_state::kFilling;
    if (below) return buffer_state::kDepleting;
    if (above) return regulated_ ? buffer_state::kSteady : buffer_state::kFilling;
    return std::nullopt;
  }

  void record(double t, double rate, double slope) {
    TrajectoryPoint p;
    p.t = t;
    p.buffer_s = buffer_;
    p.buffer_slope = slope;
    p.playing = playing_;
    p.downloading = downloading_;
    p.waiting = waiting_;
    p.regulated = regulated_;
    p.representation = current_;
    p.rate_bps = rate;
    p.phase = finished_ ? std::nullopt : phase(rate);
    out_.trajectory.push_back(p);
  }

  void handle_events(double t) {
    if (downloading_ && transfer_->complete()) complete(t);
    if (playing_ && buffer_ <= kEps) {
      playing_ = false;
      buffer_ = 0.0;
      regulated_ = false;
    }
    if (!playing_ && buffer_ >= s_.start_threshold_s - kEps) playing_ = true;
    if (regulated_ && buffer_ <= release_level() + kEps) regulated_ = false;
    if (finished_) return;
    if (waiting_ && buffer_ <= resume_level() + kEps) {
      waiting_ = false;
      request(t);
    }
  }

  void complete(double t) {
    SegmentRecord& seg = out_.segments.back();
    seg.complete_time = t;
    downloading_ = false;
    transfer_.reset();
    const double duration = t - seg.request_time;
    if (duration > 0.0) {
      const double sample = 8.0 * static_cast<double>(seg.bytes) / duration;
      const double w = 1.0 - std::pow(0.5, std::max(1.0, duration / s_.segment_duration_s));
      ewma_ = w * sample + (1.0 - w) * ewma_;
    }
    if (buffer_ >= s_.buffer_target_s - kEps) regulated_ = true;
    if (++next_segment_ == n_segments_) {
      finished_ = true;
      return;
    }
    if (buffer_ < s_.buffer_target_s - kEps) {
      request(t);
    } else {
      waiting_ = true;
    }
  }

  std::size_t choose_representation(double t) {
    if (s_.fixed_representation) {
      std::size_t rep = *s_.fixed_representation;
      for (const auto& sw : s_.switches) {
        if (sw.at_s <= t) rep = sw.representation;
      }
      return rep;
    }
    std::size_t candidate = 0;
    for (std::size_t i = 0; i < s_.ladder.size(); ++i) {
      if (s_.ladder[i].bitrate <= s_.abr_safety * ewma_) candidate = i;
    }
    if (started_ && candidate < current_ && buffer_ >= s_.downswitch_buffer_s) return current_;
    return candidate;
  }

  void request(double t) {
    current_ = choose_representation(t);
    started_ = true;
    SegmentRecord seg;
    seg.index = next_segment_;
    seg.representation = current_;
    seg.content_s = std::min(s_.segment_duration_s,
                             s_.video_duration_s - static_cast<double>(next_segment_) * s_.segment_duration_s);
    const double bits = s_.ladder[current_].bitrate * seg.content_s * factors_[next_segment_];
    seg.bytes = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(bits / 8.0)));
    seg.request_time = t;
    seg.request_bytes = static_cast<std::uint32_t>(rng_.between(600, 800));
    sink_.uplink(t, seg.request_bytes);
    out_.segments.push_back(seg);
    transfer_.emplace(seg.bytes);
    downloading_ = true;
  }

  struct Run {
    double start;
    double end;
    Phase phase;
    std::size_t first;  // trajectory index range [first, last)
    std::size_t last;
  };

  bool consistent(int label, const Run& run) const {
    if (label == buffer_state::kSteady || label == buffer_state::kUnclear) return true;
    for (std::size_t i = run.first; i < run.last; ++i) {
      if (out_.trajectory[i + 1].t <= out_.trajectory[i].t) continue;
      const double slope = out_.trajectory[i].buffer_slope;
      if (label == buffer_state::kFilling && slope < -kEps) return false;
      if (label == buffer_state::kDepleting && slope > kEps) return false;
    }
    return true;
  }

  /// Short spells without a predicate join a neighbor whose buffer trend they
  /// match; longer ones, and spells no neighbor accepts, become Unclear.
  void build_buffer_labels() {
    const auto& tr = out_.trajectory;
    std::vector<Run> runs;
    for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
      if (tr[i + 1].t <= tr[i].t) continue;
      if (!runs.empty() && runs.back().phase == tr[i].phase) {
        runs.back().end = tr[i + 1].t;
        runs.back().last = i + 1;
      } else {
        runs.push_back(Run{tr[i].t, tr[i + 1].t, tr[i].phase, i, i + 1});
      }
    }
    std::vector<int> labels(runs.size(), -1);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (runs[r].phase) labels[r] = *runs[r].phase;
    }
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (labels[r] >= 0) continue;
      if (runs[r].end - runs[r].start >= kMinUnclearRun) {
        labels[r] = buffer_state::kUnclear;
      } else if (r > 0 && consistent(labels[r - 1], runs[r])) {
        labels[r] = labels[r - 1];
      } else if (r + 1 < runs.size() && runs[r + 1].phase && consistent(*runs[r + 1].phase, runs[r])) {
        labels[r] = *runs[r + 1].phase;
      } else {
        labels[r] = buffer_state::kUnclear;
      }
    }
    std::size_t r = 0;
    while (r < runs.size()) {
      std::size_t e = r + 1;
      while (e < runs.size() && labels[e] == labels[r]) ++e;
      LabelInterval li = make_interval(out_.flow, s_.start_offset_s, runs[r].start, runs[e - 1].end,
                                       Label{LabelFamily::Buffer, labels[r]});
      if (li.start < li.end) {
        if (!out_.labels.empty() && out_.labels.back().label == li.label &&
            out_.labels.back().end == li.start) {
          out_.labels.back().end = li.end;
        } else {
          out_.labels.push_back(li);
        }
      }
      r = e;
    }
  }

  const SessionScript& s_;
  Rng rng_;
  LabeledTrace out_;
  PacketSink sink_;
  std::size_t n_segments_ = 0;
  std::vector<double> factors_;

  double buffer_ = 0.0;
  bool playing_ = false;
  bool downloading_ = false;
  bool waiting_ = false;
  bool regulated_ = false;
  bool started_ = false;
  bool finished_ = false;
  std::size_t current_ = 0;
  std::size_t next_segment_ = 0;
  double ewma_ = 0.0;
  std::optional<Transfer> transfer_;
};

/// Streams `bytes` from time t at the profile rate; returns the completion time.
double stream_bytes(std::uint64_t bytes, double t, const NetworkProfile& profile, double capacity, PacketSink& sink) {
  Transfer transfer(bytes);
  while (!transfer.complete()) {
    const double rate = effective_rate(profile, capacity, t);
    const double finish = t + transfer.remaining() * 8.0 / rate;
    const double next = std::min(profile.next_change(t), finish);
    transfer.advance(t, next, rate, next >= finish, sink);
    t = next;
  }
  return t;
}

LabeledTrace start_non_has(const NonHasParams& p, std::string_view scenario) {
  if (!positive_finite(p.duration_s)) throw InvalidScript("duration must be positive");
  if (!positive_finite(p.link_capacity_bps)) throw InvalidScript("link capacity must be positive");
  if (!(p.start_offset_s >= 0.0)) throw InvalidScript("start offset must be non-negative");
  p.profile.validate();
  LabeledTrace lt;
  lt.flow = FlowKey{std::min(p.client, p.server), std::max(p.client, p.server), Protocol::TCP};
  lt.trace.meta.client_ip = p.client.ip;
  lt.trace.meta.trace_id = p.trace_id;
  lt.trace.meta.scenario = std::string(scenario);
  return lt;
}

}  // namespace

QualityLadder QualityLadder::standard() {
  return QualityLadder{{{"144p", 150e3},
                        {"240p", 300e3},
                        {"360p", 600e3},
                        {"480p", 1.0e6},
                        {"720p", 2.0e6},
                        {"1080p", 4.0e6}}};
}

void QualityLadder::validate() const {
  if (representations.size() < 2) throw InvalidScript("quality ladder needs at least two representations");
  for (std::size_t i = 0; i < representations.size(); ++i) {
    if (!positive_finite(representations[i].bitrate)) throw InvalidScript("bitrates must be positive");
    if (i > 0 && !(representations[i].bitrate > representations[i - 1].bitrate)) {
      throw InvalidScript("ladder bitrates must strictly increase");
    }
  }
}

std::size_t QualityLadder::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < representations.size(); ++i) {
    if (representations[i].name == name) return i;
  }
  throw InvalidScript("unknown representation '" + std::string(name) + "'");
}

void NetworkProfile::validate() const {
  if (steps.empty() || steps.front().start_s != 0.0) throw InvalidScript("rate profile must start at time 0");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i].rate_bps > 0.0)) throw InvalidScript("rates must be positive");
    if (i > 0 && !(steps[i].start_s > steps[i - 1].start_s)) {
      throw InvalidScript("rate step starts must strictly increase");
    }
    if (!std::isfinite(steps[i].start_s)) throw InvalidScript("rate step start must be finite");
  }
}

double NetworkProfile::limit_at(double t) const {
  double rate = kUnlimited;
  for (const auto& s : steps) {
    if (s.start_s > t) break;
    rate = s.rate_bps;
  }
  return rate;
}

double NetworkProfile::next_change(double t) const {
  for (const auto& s : steps) {
    if (s.start_s > t) return s.start_s;
  }
  return kUnlimited;
}

void SessionScript::validate() const {
  ladder.validate();
  profile.validate();
  if (!positive_finite(link_capacity_bps)) throw InvalidScript("link capacity must be positive");
  if (!positive_finite(video_duration_s) || !positive_finite(segment_duration_s) || !positive_finite(buffer_target_s) ||
      !positive_finite(start_threshold_s)) {
    throw InvalidScript("durations must be positive");
  }
  if (buffer_target_s < 2.0 * segment_duration_s) {
    throw InvalidScript("buffer target must be at least two segment durations");
  }
  if (start_threshold_s > buffer_target_s) throw InvalidScript("start threshold exceeds the buffer target");
  if (fixed_representation && *fixed_representation >= ladder.size()) {
    throw InvalidScript("fixed representation out of range");
  }
  for (const auto& sw : switches) {
    if (!fixed_representation) throw InvalidScript("quality switches need a fixed starting quality");
    if (sw.representation >= ladder.size() || !(sw.at_s >= 0.0)) throw InvalidScript("invalid quality switch");
  }
  if (!(abr_safety > 0.0) || !positive_finite(initial_throughput_bps)) throw InvalidScript("invalid ABR parameters");
  if (!(vbr_sigma >= 0.0) || !(vbr_correlation >= 0.0 && vbr_correlation < 1.0) ||
      !(vbr_clamp >= 0.0 && vbr_clamp < 1.0)) {
    throw InvalidScript("invalid VBR parameters");
  }
  if (!(start_offset_s >= 0.0) || !std::isfinite(start_offset_s)) throw InvalidScript("start offset must be >= 0");
  if (client.ip == server.ip) throw InvalidScript("client and server must differ");
}

LabeledTrace simulate_has(const SessionScript& script) {
  script.validate();
  return HasSession(script).run();
}

LabeledTrace simulate_download(const NonHasParams& params) {
  LabeledTrace lt = start_non_has(params, "download");
  Rng rng(params.seed);
  PacketSink sink(lt, params.client, params.server, Protocol::TCP, params.start_offset_s);
  const auto n_requests = rng.between(1, 3);
  for (std::int64_t i = 0; i < n_requests; ++i) sink.uplink(0.0, static_cast<std::uint32_t>(rng.between(300, 800)));

  // Full packets whose last bit arrives by the end of the transfer.
  double t = 0.0;
  double carried = 0.0;  // bits of the packet in flight
  const double packet_bits = 8.0 * kDataPayload;
  while (t < params.duration_s) {
    const double rate = effective_rate(params.profile, params.link_capacity_bps, t);
    const double finish = t + (packet_bits - carried) / rate;
    const double change = params.profile.next_change(t);
    if (finish <= change) {
      if (finish > params.duration_s) break;
      sink.downlink(finish, kDataPayload);
      carried = 0.0;
      t = finish;
    } else {
      if (change > params.duration_s) break;
      carried += rate * (change - t);
      t = change;
    }
  }
  lt.labels.push_back(service_interval(lt, service::kNonHas));
  return lt;
}

LabeledTrace simulate_web(const NonHasParams& params) {
  LabeledTrace lt = start_non_has(params, "web");
  Rng rng(params.seed);
  PacketSink sink(lt, params.client, params.server, Protocol::TCP, params.start_offset_s);
  double t = 0.0;
  while (t < params.duration_s) {
    const auto gets = rng.between(3, 10);
    for (std::int64_t i = 0; i < gets; ++i) {
      sink.uplink(t, static_cast<std::uint32_t>(rng.between(300, 1200)));
      t += 0.01;
    }
    const auto bytes = static_cast<std::uint64_t>(rng.between(500'000, 5'000'000));
    t = stream_bytes(bytes, t, params.profile, params.link_capacity_bps, sink);
    t += rng.uniform(5.0, 15.0);
  }
  lt.labels.push_back(service_interval(lt, service::kNonHas));
  return lt;
}

}  // namespace hasprof
