// End-to-end acceptance run: prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "feature_oracle.hpp"
#include "hasprof/corpus.hpp"
#include "hasprof/eval.hpp"
#include "hasprof/forest.hpp"
#include "hasprof/model.hpp"
#include "hasprof/model_io.hpp"
#include "hasprof/scenarios.hpp"
#include "hasprof/trace_io.hpp"
#include "test_support.hpp"

using namespace hasprof;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string pct(double v) { return fmt("%.2f%%", 100.0 * v); }

// ---------------------------------------------------------------------------
// 1. Streaming features versus brute-force recomputation.

Outcome feature_oracle() {
  const auto t0 = Clock::now();
  Rng rng(0xfea7);
  std::size_t probes = 0;
  std::size_t mismatches = 0;
  std::size_t trace_no = 0;
  while (probes < 1000) {
    // Random window configuration on the sampling grid.
    WindowConfig cfg;
    const Nanos ts = rng.below(2) == 0 ? 1s : 500ms;
    cfg.sampling_period = ts;
    std::set<std::int64_t> mult;
    const auto n_windows = 1 + rng.below(4);
    while (mult.size() < n_windows) mult.insert(1 + static_cast<std::int64_t>(rng.below(30)));
    cfg.window_durations.clear();
    for (auto m : mult) cfg.window_durations.push_back(ts * m);
    cfg.iat_threshold = Nanos{static_cast<std::int64_t>(rng.between(10, 200)) * 1'000'000};
    if (cfg.iat_threshold >= ts) cfg.iat_threshold = ts / 2;
    cfg.ul_size_threshold = static_cast<std::uint32_t>(rng.between(50, 300));

    // Alternate synthetic packet soups and simulated sessions.
    PacketTrace trace;
    if (trace_no++ % 2 == 0) {
      trace.meta.client_ip = test::kClient;
      trace.packets = test::random_trace(rng, 120.0, 1 + rng.below(5));
    } else {
      static const char* kinds[] = {"s1", "s4", "s7", "download", "web"};
      const char* kind = kinds[rng.below(5)];
      trace = simulate_scenario(kind, vbr_presets()[rng.below(3)], rng()).trace;
    }
    const auto samples = compute_samples(trace, cfg);
    if (samples.empty()) continue;
    const auto flows = test::split_flows(trace.packets);
    for (int k = 0; k < 50 && probes < 1000; ++k, ++probes) {
      const Sample& s = samples[rng.below(samples.size())];
      const std::size_t l = rng.below(cfg.n_windows());
      const auto o = test::oracle_features(flows.at(s.flow), trace.meta.client_ip, s.t_w, cfg.window_durations[l], cfg);
      const double* v = s.features.data() + l * kFeaturesPerWindow;
      const bool ok = test::close_rel(v[0], o.dl_rate) && test::close_rel(v[1], o.dl_load) &&
                      v[2] == static_cast<double>(o.ul_n) && test::close_rel(v[3], o.ul_avg) &&
                      test::close_rel(v[4], o.ul_std);
      mismatches += !ok;
    }
  }
  const double dt = seconds_since(t0);
  Outcome out;
  out.pass = mismatches == 0 && dt < 30.0;
  out.detail = std::to_string(probes) + " probes, " + std::to_string(mismatches) + " mismatches, " +
               fmt("%.1f s", dt) + " (limit 30 s)";
  return out;
}

// ---------------------------------------------------------------------------
// Shared corpus: 8 scenarios x 10 repetitions x 3 presets plus 120 non-HAS traces.

CorpusConfig corpus_config() {
  CorpusConfig cfg;
  cfg.repetitions = 10;
  cfg.download_traces = 60;
  cfg.web_traces = 60;
  return cfg;
}

ForestParams forest_params(std::size_t trees) {
  ForestParams p;
  p.n_trees = trees;
  return p;
}

double recall(const ConfusionMatrix& m, std::size_t c) { return m.recall(c).value_or(0.0); }

Outcome flow_classification(const Corpus& corpus, double build_s) {
  const auto t0 = Clock::now();
  const CvReport r = cross_validate(corpus.service, forest_params(30), 10, 7);
  const double dt = seconds_since(t0) + build_s;
  std::size_t has = 0;
  for (const auto& t : corpus.traces) has += is_has_scenario(t.job.scenario);
  const double has_recall = recall(r.pooled, service::kHas);
  Outcome out;
  out.pass = has >= 100 && corpus.traces.size() - has >= 100 && r.overall_accuracy >= 0.98 && has_recall >= 0.99 &&
             dt < 600.0;
  out.detail = std::to_string(has) + " HAS + " + std::to_string(corpus.traces.size() - has) +
               " non-HAS traces, accuracy " + pct(r.overall_accuracy) + " (>= 98%), HAS recall " + pct(has_recall) +
               " (>= 99%), " + fmt("%.0f s", dt);
  return out;
}

Outcome buffer_classification(const Dataset& ds, const CvReport& rf, double rf_s) {
  const auto t0 = Clock::now();
  const CvReport knn = cross_validate(ds, KnnParams{}, 10, 7);
  const double dt = seconds_since(t0) + rf_s;
  double min_recall = 1.0;
  std::string recalls;
  for (std::size_t c = 0; c < rf.pooled.n_classes(); ++c) {
    const double r = recall(rf.pooled, c);
    min_recall = std::min(min_recall, r);
    recalls += (c ? " " : "") + rf.pooled.class_names()[c] + "=" + pct(r);
  }
  const double gap = rf.overall_accuracy - knn.overall_accuracy;
  Outcome out;
  out.pass = rf.overall_accuracy >= 0.90 && min_recall >= 0.80 && std::abs(gap) <= 0.03 && dt < 1200.0;
  out.detail = "RF " + pct(rf.overall_accuracy) + " (>= 90%), recalls " + recalls + " (>= 80%), KNN " +
               pct(knn.overall_accuracy) + " (gap " + fmt("%.2f", 100.0 * gap) + " points, <= 3), " +
               fmt("%.0f s", dt);
  return out;
}

Outcome k_insensitivity(const Dataset& ds, const CvReport& k10) {
  std::vector<double> acc{k10.overall_accuracy};
  for (std::size_t k : {2, 5}) acc.push_back(cross_validate(ds, forest_params(30), k, 7).overall_accuracy);
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  Outcome out;
  out.pass = *hi - *lo <= 0.02;
  out.detail = "k=2 " + pct(acc[1]) + ", k=5 " + pct(acc[2]) + ", k=10 " + pct(acc[0]) + ", spread " +
               fmt("%.2f", 100.0 * (*hi - *lo)) + " points (<= 2)";
  return out;
}

Outcome oob_convergence(const Dataset& ds) {
  const double oob5 = oob_error(train_forest(ds, forest_params(5)), ds).error;
  const double oob50 = oob_error(train_forest(ds, forest_params(50)), ds).error;
  const double cv50 = 1.0 - cross_validate(ds, forest_params(50), 10, 7).overall_accuracy;
  Outcome out;
  out.pass = oob50 <= oob5 && std::abs(oob50 - cv50) <= 0.03;
  out.detail = "OOB error 5 trees " + pct(oob5) + ", 50 trees " + pct(oob50) + ", 10-fold CV error at 50 trees " +
               pct(cv50) + " (|diff| <= 3 points)";
  return out;
}

Outcome importance_sanity(const Dataset& ds) {
  Rng rng(derive_seed(11, 0x6e6f697365));
  std::vector<double> noise(ds.rows());
  for (auto& v : noise) v = rng.uniform();
  const Dataset with_noise = ds.with_column("noise", noise);
  const ForestModel forest = train_forest(with_noise, forest_params(30));
  const ImportanceResult imp = permutation_importance(forest, with_noise, 11);
  const auto& names = with_noise.feature_names();
  const auto top = static_cast<std::size_t>(std::max_element(imp.normalized.begin(), imp.normalized.end()) -
                                            imp.normalized.begin());
  const std::string base = names[top].substr(0, names[top].find('_'));
  const bool top_ok = base == "DLload" || base == "DLrate" || base == "ULnPckts";
  const std::size_t noise_idx = names.size() - 1;
  bool noise_last = true;
  for (std::size_t m = 0; m < noise_idx; ++m) noise_last = noise_last && imp.normalized[m] > imp.normalized[noise_idx];
  Outcome out;
  out.pass = !imp.degenerate && top_ok && noise_last;
  out.detail = "top feature " + names[top] + ", noise score " + fmt("%.4f", imp.normalized[noise_idx]) +
               (noise_last ? " (ranks last)" : " (does not rank last)");
  return out;
}

Outcome scenario_ordering(const CvReport& rf) {
  const auto& ps = rf.per_scenario;
  auto get = [&](const char* s) { return ps.count(s) ? ps.at(s) : -1.0; };
  const double easy = std::min(get("s1"), get("s2"));
  const double hard = std::max({get("s4"), get("s7"), get("s8")});
  std::string detail;
  for (const char* s : {"s1", "s2", "s4", "s7", "s8"}) detail += std::string(s) + "=" + pct(get(s)) + " ";
  Outcome out;
  out.pass = easy >= 0.0 && hard >= 0.0 && easy >= hard;
  out.detail = detail + "(min of s1,s2 >= max of s4,s7,s8)";
  return out;
}

std::string model_bytes(const Model& m) {
  std::ostringstream out(std::ios::binary);
  save_model(out, m);
  return out.str();
}

std::string dataset_bytes(const Dataset& ds) {
  std::ostringstream out;
  write_dataset_csv(out, ds);
  return out.str();
}

Outcome determinism(const Corpus& corpus, const CvReport& rf) {
  std::vector<std::string> diffs;
  // Traces.
  for (const char* s : {"s3", "s6", "web", "download"}) {
    const auto job = make_corpus_job(s, is_has_scenario(s) ? "high" : "", 4, 2018);
    std::ostringstream a;
    std::ostringstream b;
    write_packet_csv(a, simulate_scenario(s, vbr_preset("high"), job.seed).trace);
    write_packet_csv(b, simulate_scenario(s, vbr_preset("high"), job.seed).trace);
    if (a.str() != b.str()) diffs.push_back(std::string("trace ") + s);
  }
  // Datasets: a slice of the grid built serially and with all threads.
  CorpusConfig slice = corpus_config();
  slice.repetitions = 2;
  slice.download_traces = 3;
  slice.web_traces = 3;
  slice.threads = 1;
  const Corpus c1 = build_corpus(slice);
  slice.threads = 0;
  const Corpus c2 = build_corpus(slice);
  if (dataset_bytes(c1.buffer) != dataset_bytes(c2.buffer) || dataset_bytes(c1.service) != dataset_bytes(c2.service)) {
    diffs.push_back("datasets");
  }
  // Models and reports on the full buffer dataset.
  ForestParams serial_forest = forest_params(30);
  ForestParams threaded_forest = forest_params(30);
  serial_forest.threads = 1;
  if (model_bytes(train(serial_forest, corpus.buffer)) != model_bytes(train(threaded_forest, corpus.buffer))) {
    diffs.push_back("forest model");
  }
  if (model_bytes(train(KnnParams{}, corpus.buffer)) != model_bytes(train(KnnParams{}, corpus.buffer))) {
    diffs.push_back("knn model");
  }
  if (cross_validate(corpus.buffer, forest_params(30), 10, 7).to_json() != rf.to_json()) diffs.push_back("CV report");
  Outcome out;
  out.pass = diffs.empty();
  out.detail = diffs.empty() ? "traces, datasets, models and reports identical across reruns"
                             : "differences in: " + [&] {
                                 std::string s;
                                 for (const auto& d : diffs) s += d + " ";
                                 return s;
                               }();
  return out;
}

Outcome performance(const Dataset& ds) {
  const RuntimeStats st = benchmark(forest_params(30), ds, 3);
  const double predict_s = st.predict_ms_per_1000.mean / 1000.0;
  Outcome out;
  out.pass = predict_s < 1.0 && st.train_seconds.mean < 300.0;
  out.detail = "prediction " + fmt("%.3f ms", st.predict_ms_per_1000.mean) + " per 1000 samples (< 1 s), training " +
               fmt("%.2f s", st.train_seconds.mean) + " on " + std::to_string(ds.rows()) + " rows (< 300 s)";
  return out;
}

Outcome kfold_partition() {
  Rng rng(0xf01d);
  std::size_t bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + rng.below(1000);
    const std::size_t k = 2 + rng.below(std::min<std::size_t>(n - 1, 50));
    const auto folds = kfold_split(n, k, rng());
    std::vector<std::uint8_t> seen(n, 0);
    std::size_t lo = n;
    std::size_t hi = 0;
    bool ok = folds.size() == k;
    for (const auto& f : folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (auto i : f) {
        if (i >= n || seen[i]++) ok = false;
      }
    }
    ok = ok && std::all_of(seen.begin(), seen.end(), [](std::uint8_t s) { return s == 1; }) && hi - lo <= 1;
    bad += !ok;
  }
  Outcome out;
  out.pass = bad == 0;
  out.detail = "10000 random (N, k, seed) triples, " + std::to_string(bad) + " violations";
  return out;
}

}  // namespace

int main() {
  report(1, "feature oracle equivalence", feature_oracle());

  const auto t0 = Clock::now();
  const Corpus corpus = build_corpus(corpus_config());
  const double build_s = seconds_since(t0);
  std::printf("       corpus: %zu traces, %zu flow rows, %zu buffer rows, built in %.1f s\n", corpus.traces.size(),
              corpus.service.rows(), corpus.buffer.rows(), build_s);

  report(2, "flow classification", flow_classification(corpus, build_s));

  const auto t1 = Clock::now();
  const CvReport rf = cross_validate(corpus.buffer, forest_params(30), 10, 7);
  const double rf_s = seconds_since(t1) + build_s;
  report(3, "buffer-state classification", buffer_classification(corpus.buffer, rf, rf_s));
  report(4, "k-insensitivity", k_insensitivity(corpus.buffer, rf));
  report(5, "OOB convergence", oob_convergence(corpus.buffer));
  report(6, "importance sanity", importance_sanity(corpus.buffer));
  report(7, "scenario difficulty ordering", scenario_ordering(rf));
  report(8, "determinism", determinism(corpus, rf));
  report(9, "performance envelope", performance(corpus.buffer));
  report(10, "k-fold partition property", kfold_partition());

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
