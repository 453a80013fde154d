#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hasprof {

/// Labeled feature matrix: N rows of M features plus a class code per row and
/// an optional scenario tag that never enters the feature space.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> feature_names, std::vector<std::string> class_names);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return feature_names_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t n_classes() const { return class_names_.size(); }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& values() const { return values_; }
  bool has_scenarios() const { return !scenarios_.empty(); }
  const std::vector<std::string>& scenarios() const { return scenarios_; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }
  double at(std::size_t i, std::size_t m) const { return values_[i * cols() + m]; }
  int label(std::size_t i) const { return labels_[i]; }

  /// Appends a row; checks arity, finiteness and the class code range.
  void add_row(std::span<const double> features, int label, std::string scenario = {});

  /// Rows in the given order (indices may repeat).
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Copy with an extra feature column appended.
  Dataset with_column(const std::string& name, std::span<const double> column) const;

  /// Appends all rows of `other`; schemas must match.
  void append(const Dataset& other);

  std::vector<std::size_t> class_counts() const;

  /// Re-checks every invariant; throws FormatError.
  void validate() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<std::string> feature_names_;
  std::vector<std::string> class_names_;
  std::vector<double> values_;
  std::vector<int> labels_;
  std::vector<std::string> scenarios_;
};

}  // namespace hasprof
