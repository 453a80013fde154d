#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hasprof/dataset.hpp"
#include "hasprof/forest.hpp"
#include "hasprof/knn.hpp"
#include "hasprof/tree.hpp"

namespace hasprof {

/// Which classifier to train, with its parameters.
using ModelSpec = std::variant<TreeParams, ForestParams, KnnParams>;

std::string_view model_kind(const ModelSpec& spec);

/// A trained classifier together with the schema it was trained on.
struct Model {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::variant<TreeModel, ForestModel, KnnModel> impl;

  std::string_view kind() const;
  std::size_t n_features() const { return feature_names.size(); }
  std::size_t n_classes() const { return class_names.size(); }

  int predict(std::span<const double> x) const;
  /// Per-class scores: leaf proportions, vote fractions or neighbor fractions.
  std::vector<double> scores(std::span<const double> x) const;

  bool operator==(const Model&) const = default;
};

Model train(const ModelSpec& spec, const Dataset& ds);

/// Predicted class of every row; rows are independent so this may use threads.
std::vector<int> predict_all(const Model& model, const Dataset& ds, unsigned threads = 0);

}  // namespace hasprof
