#include "hasprof/dataset.hpp"

#include <cmath>

#include "hasprof/errors.hpp"

namespace hasprof {

Dataset::Dataset(std::vector<std::string> feature_names, std::vector<std::string> class_names)
    : feature_names_(std::move(feature_names)), class_names_(std::move(class_names)) {}

void Dataset::add_row(std::span<const double> features, int label, std::string scenario) {
  if (features.size() != cols()) {
    throw ArityMismatch("row has " + std::to_string(features.size()) + " features, dataset has " +
                        std::to_string(cols()));
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw FormatError("non-finite feature value");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= class_names_.size()) {
    throw FormatError("class code " + std::to_string(label) + " out of range");
  }
  const bool tagged = !scenario.empty();
  if (!empty() && tagged != has_scenarios()) throw FormatError("scenario tags must be given for all rows or none");
  values_.insert(values_.end(), features.begin(), features.end());
  labels_.push_back(label);
  if (tagged) scenarios_.push_back(std::move(scenario));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(feature_names_, class_names_);
  out.values_.reserve(indices.size() * cols());
  out.labels_.reserve(indices.size());
  for (std::size_t i : indices) {
    auto r = row(i);
    out.values_.insert(out.values_.end(), r.begin(), r.end());
    out.labels_.push_back(labels_[i]);
    if (has_scenarios()) out.scenarios_.push_back(scenarios_[i]);
  }
  return out;
}

Dataset Dataset::with_column(const std::string& name, std::span<const double> column) const {
  if (column.size() != rows()) throw ArityMismatch("column length does not match row count");
  auto names = feature_names_;
  names.push_back(name);
  Dataset out(std::move(names), class_names_);
  out.values_.reserve(rows() * (cols() + 1));
  for (std::size_t i = 0; i < rows(); ++i) {
    auto r = row(i);
    out.values_.insert(out.values_.end(), r.begin(), r.end());
    out.values_.push_back(column[i]);
  }
  out.labels_ = labels_;
  out.scenarios_ = scenarios_;
  return out;
}

void Dataset::append(const Dataset& other) {
  if (other.empty()) return;
  if (feature_names_.empty() && class_names_.empty() && empty()) {
    *this = other;
    return;
  }
  if (other.feature_names_ != feature_names_ || other.class_names_ != class_names_) {
    throw FormatError("cannot append datasets with different schemas");
  }
  if (!empty() && other.has_scenarios() != has_scenarios()) {
    throw FormatError("cannot append tagged and untagged datasets");
  }
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  scenarios_.insert(scenarios_.end(), other.scenarios_.begin(), other.scenarios_.end());
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(n_classes(), 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

void Dataset::validate() const {
  if (values_.size() != rows() * cols()) throw FormatError("value matrix does not match row count");
  if (has_scenarios() && scenarios_.size() != rows()) throw FormatError("scenario column incomplete");
  for (double v : values_) {
    if (!std::isfinite(v)) throw FormatError("non-finite feature value");
  }
  for (int y : labels_) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_names_.size()) throw FormatError("class code out of range");
  }
}

}  // namespace hasprof
