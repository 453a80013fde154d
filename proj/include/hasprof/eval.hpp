#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hasprof/dataset.hpp"
#include "hasprof/model.hpp"

namespace hasprof {

/// Random partition of 0..n-1 into k parts whose sizes differ by at most one
/// (the first n % k parts get the extra index). Throws BadK unless 2 <= k <= n.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_names);

  void add(int truth, int predicted, std::uint64_t count = 1);
  std::size_t n_classes() const { return class_names_.size(); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_classes() + predicted]; }
  std::uint64_t row_total(std::size_t truth) const;
  std::uint64_t total() const;
  std::uint64_t correct() const;
  double accuracy() const;
  /// Per-class recall; nullopt when the class has no samples.
  std::optional<double> recall(std::size_t truth) const;
  /// Row-normalized percentages; rows without samples are all zero.
  std::vector<std::vector<double>> row_percentages() const;
  /// Aligned text table: one row per true class, percentages to one decimal
  /// and the row's sample count.
  std::string to_text() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<std::string> class_names_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::vector<std::string> class_names);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Population mean and std of the values (both 0 for an empty input).
MeanStd mean_std(std::span<const double> values);

struct CvReport {
  std::string model_kind;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold_sizes;
  std::vector<double> fold_accuracies;
  ConfusionMatrix pooled;
  double overall_accuracy = 0.0;
  /// Out-of-fold prediction of every sample, in dataset order.
  std::vector<int> predictions;
  /// Present only when the dataset carries scenario tags.
  std::map<std::string, double> per_scenario;
  std::vector<std::string> warnings;
  // Wall-clock measurements; not deterministic, so kept out of to_json by default.
  MeanStd train_seconds;
  MeanStd predict_ms_per_1000;

  std::string to_json(bool include_timing = false) const;
};

/// Trains on k-1 folds and validates on the held-out fold, k times. Every
/// sample is validated exactly once.
CvReport cross_validate(const Dataset& ds, const ModelSpec& spec, std::size_t k, std::uint64_t seed);

/// Accuracy of `predictions` restricted to each scenario tag. Tags without
/// samples do not appear.
std::map<std::string, double> per_scenario_accuracy(const Dataset& ds, std::span<const int> predictions);

struct RuntimeStats {
  std::size_t repetitions = 0;
  MeanStd train_seconds;        // training on the whole dataset
  MeanStd predict_ms_per_1000;  // predicting 1000 samples

  std::string to_text() const;
};

/// Serial timing of training and of 1000-sample prediction batches.
RuntimeStats benchmark(const ModelSpec& spec, const Dataset& ds, std::size_t repetitions = 100);

/// Copy of the model specification with internal parallelism disabled.
ModelSpec serial(ModelSpec spec);

}  // namespace hasprof
