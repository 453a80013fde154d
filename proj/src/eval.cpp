#include "hasprof/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

#include "hasprof/errors.hpp"
#include "hasprof/rng.hpp"

namespace hasprof {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw BadK("k must satisfy 2 <= k <= N (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::vector<std::size_t>> folds(k);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                    perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : class_names_(std::move(class_names)), counts_(class_names_.size() * class_names_.size(), 0) {}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t count) {
  const auto c = static_cast<int>(n_classes());
  if (truth < 0 || truth >= c || predicted < 0 || predicted >= c) throw InvalidConfig("class code out of range");
  counts_[static_cast<std::size_t>(truth) * n_classes() + static_cast<std::size_t>(predicted)] += count;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < n_classes(); ++j) s += at(truth, j);
  return s;
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::correct() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n_classes(); ++i) s += at(i, i);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const auto t = total();
  return t == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(t);
}

std::optional<double> ConfusionMatrix::recall(std::size_t truth) const {
  const auto t = row_total(truth);
  if (t == 0) return std::nullopt;
  return static_cast<double>(at(truth, truth)) / static_cast<double>(t);
}

std::vector<std::vector<double>> ConfusionMatrix::row_percentages() const {
  std::vector<std::vector<double>> out(n_classes(), std::vector<double>(n_classes(), 0.0));
  for (std::size_t i = 0; i < n_classes(); ++i) {
    const auto t = row_total(i);
    if (t == 0) continue;
    for (std::size_t j = 0; j < n_classes(); ++j) {
      out[i][j] = 100.0 * static_cast<double>(at(i, j)) / static_cast<double>(t);
    }
  }
  return out;
}

std::string ConfusionMatrix::to_text() const {
  std::size_t name_w = std::string("true \\ predicted").size();
  std::size_t col_w = 8;
  for (const auto& n : class_names_) {
    name_w = std::max(name_w, n.size());
    col_w = std::max(col_w, n.size());
  }
  const auto pct = row_percentages();
  std::string s = pad_right("true \\ predicted", name_w);
  for (const auto& n : class_names_) s += "  " + pad_left(n, col_w);
  s += "  " + pad_left("samples", 8) + "\n";
  for (std::size_t i = 0; i < n_classes(); ++i) {
    s += pad_right(class_names_[i], name_w);
    for (std::size_t j = 0; j < n_classes(); ++j) s += "  " + pad_left(fixed(pct[i][j], 1), col_w);
    s += "  " + pad_left(std::to_string(row_total(i)), 8) + "\n";
  }
  return s;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::vector<std::string> class_names) {
  if (truth.size() != predicted.size()) throw ArityMismatch("truth and prediction lengths differ");
  ConfusionMatrix cm(std::move(class_names));
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  const double n = static_cast<double>(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / n);
  return r;
}

ModelSpec serial(ModelSpec spec) {
  std::visit([](auto& p) {
    if constexpr (requires { p.threads; }) p.threads = 1;
  }, spec);
  return spec;
}

CvReport cross_validate(const Dataset& ds, const ModelSpec& spec, std::size_t k, std::uint64_t seed) {
  if (ds.empty()) throw EmptyDataset("cannot cross-validate an empty dataset");
  CvReport report;
  report.model_kind = std::string(model_kind(spec));
  report.k = k;
  report.seed = seed;
  const auto folds = kfold_split(ds.rows(), k, seed);

  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < k) {
      report.warnings.push_back("class " + ds.class_names()[c] + " has " + std::to_string(counts[c]) +
                                " samples, fewer than k=" + std::to_string(k));
    }
  }

  report.predictions.assign(ds.rows(), -1);
  std::vector<double> train_times;
  std::vector<double> predict_times;
  std::vector<std::uint8_t> held_out(ds.rows());
  for (std::size_t f = 0; f < k; ++f) {
    std::fill(held_out.begin(), held_out.end(), 0);
    for (auto i : folds[f]) held_out[i] = 1;
    std::vector<std::size_t> train_idx;
    train_idx.reserve(ds.rows() - folds[f].size());
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      if (!held_out[i]) train_idx.push_back(i);
    }
    const Dataset train_set = ds.subset(train_idx);
    const Dataset valid_set = ds.subset(folds[f]);

    auto start = Clock::now();
    const Model model = train(spec, train_set);
    train_times.push_back(seconds_since(start));

    start = Clock::now();
    const auto pred = predict_all(model, valid_set);
    predict_times.push_back(1000.0 * seconds_since(start) * 1000.0 / static_cast<double>(valid_set.rows()));

    std::size_t correct = 0;
    for (std::size_t j = 0; j < folds[f].size(); ++j) {
      const std::size_t i = folds[f][j];
      if (report.predictions[i] != -1) throw Error("sample validated twice");
      report.predictions[i] = pred[j];
      correct += pred[j] == ds.label(i);
    }
    report.fold_sizes.push_back(folds[f].size());
    report.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(folds[f].size()));
  }

  report.pooled = confusion(ds.labels(), report.predictions, ds.class_names());
  report.overall_accuracy = report.pooled.accuracy();
  if (ds.has_scenarios()) report.per_scenario = per_scenario_accuracy(ds, report.predictions);
  report.train_seconds = mean_std(train_times);
  report.predict_ms_per_1000 = mean_std(predict_times);
  return report;
}

std::map<std::string, double> per_scenario_accuracy(const Dataset& ds, std::span<const int> predictions) {
  if (predictions.size() != ds.rows()) throw ArityMismatch("one prediction per sample required");
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  if (!ds.has_scenarios()) return {};
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto& [correct, total] = tally[ds.scenarios()[i]];
    ++total;
    correct += predictions[i] == ds.label(i);
  }
  std::map<std::string, double> out;
  for (const auto& [tag, ct] : tally) {
    out[tag] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return out;
}

std::string CvReport::to_json(bool include_timing) const {
  nlohmann::ordered_json j;
  j["model"] = model_kind;
  j["k"] = k;
  j["seed"] = seed;
  j["samples"] = pooled.total();
  j["overall_accuracy"] = overall_accuracy;
  j["fold_sizes"] = fold_sizes;
  j["fold_accuracies"] = fold_accuracies;
  j["class_names"] = pooled.class_names();
  nlohmann::ordered_json counts = nlohmann::ordered_json::array();
  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < pooled.n_classes(); ++i) {
    std::vector<std::uint64_t> row;
    for (std::size_t c = 0; c < pooled.n_classes(); ++c) row.push_back(pooled.at(i, c));
    counts.push_back(row);
    const auto r = pooled.recall(i);
    recall[pooled.class_names()[i]] = r ? nlohmann::ordered_json(*r) : nlohmann::ordered_json(nullptr);
  }
  j["confusion"] = counts;
  j["confusion_percent"] = pooled.row_percentages();
  j["recall"] = recall;
  if (!per_scenario.empty()) {
    nlohmann::ordered_json ps = nlohmann::ordered_json::object();
    for (const auto& [tag, acc] : per_scenario) ps[tag] = acc;
    j["per_scenario_accuracy"] = ps;
  }
  j["warnings"] = warnings;
  if (include_timing) {
    j["timing"] = {{"train_seconds", {{"mean", train_seconds.mean}, {"std", train_seconds.std}}},
                   {"predict_ms_per_1000", {{"mean", predict_ms_per_1000.mean}, {"std", predict_ms_per_1000.std}}}};
  }
  return j.dump(2) + "\n";
}

RuntimeStats benchmark(const ModelSpec& spec, const Dataset& ds, std::size_t repetitions) {
  if (ds.empty()) throw EmptyDataset("cannot benchmark on an empty dataset");
  if (repetitions == 0) throw InvalidConfig("repetitions must be at least 1");
  const ModelSpec serial_spec = serial(spec);
  std::vector<std::size_t> batch_idx(1000);
  for (std::size_t i = 0; i < batch_idx.size(); ++i) batch_idx[i] = i % ds.rows();
  const Dataset batch = ds.subset(batch_idx);

  RuntimeStats stats;
  stats.repetitions = repetitions;
  std::vector<double> train_times;
  std::vector<double> predict_times;
  for (std::size_t r = 0; r < repetitions; ++r) {
    auto start = Clock::now();
    const Model model = train(serial_spec, ds);
    train_times.push_back(seconds_since(start));
    start = Clock::now();
    const auto pred = predict_all(model, batch, 1);
    predict_times.push_back(1000.0 * seconds_since(start));
    if (pred.size() != batch.rows()) throw Error("prediction batch size mismatch");
  }
  stats.train_seconds = mean_std(train_times);
  stats.predict_ms_per_1000 = mean_std(predict_times);
  return stats;
}

std::string RuntimeStats::to_text() const {
  std::string s = "runtime over " + std::to_string(repetitions) + " repetitions\n";
  s += "  training (s):              mean " + fixed(train_seconds.mean, 4) + "  std " + fixed(train_seconds.std, 4) +
       "\n";
  s += "  prediction per 1000 (ms):  mean " + fixed(predict_ms_per_1000.mean, 3) + "  std " +
       fixed(predict_ms_per_1000.std, 3) + "\n";
  return s;
}

}  // namespace hasprof
