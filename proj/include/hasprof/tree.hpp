#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hasprof/dataset.hpp"
#include "hasprof/rng.hpp"

namespace hasprof {

/// Gini impurity 1 - sum (c_i / n)^2. Throws EmptyNode when all counts are 0.
double gini(std::span<const std::uint32_t> class_counts);

struct TreeParams {
  std::size_t max_depth = 0;          // 0: unlimited
  std::size_t min_leaf = 1;           // minimum (weighted) samples per child
  std::size_t feature_subsample = 0;  // 0: all features
  std::uint64_t seed = 1;
};

struct TreePrediction {
  int cls = 0;
  std::vector<double> scores;  // leaf class proportions
};

/// Binary CART classifier stored as a flat pre-order node table.
class TreeModel {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  TreeModel() = default;
  TreeModel(std::size_t n_features, std::size_t n_classes, std::vector<Node> nodes,
            std::vector<std::uint32_t> counts, std::size_t max_depth_used);

  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t max_depth_used() const { return max_depth_used_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Class counts of node i (all nodes keep theirs; leaves are what predict uses).
  std::span<const std::uint32_t> counts(std::size_t node) const {
    return {counts_.data() + node * n_classes_, n_classes_};
  }
  const std::vector<std::uint32_t>& all_counts() const { return counts_; }

  TreePrediction predict(std::span<const double> x) const;
  /// Unchecked fast path; `x` must have n_features() entries.
  int predict_class(const double* x) const { return leaf_class_[leaf_of(x)]; }
  /// Routes with feature `m` replaced by `value`.
  int predict_class_with(const double* x, std::size_t m, double value) const;
  std::size_t leaf_of(const double* x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
      const Node& n = nodes_[i];
      i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
    }
    return i;
  }

  /// Structural checks used after deserialization; throws FormatError.
  void validate() const;

  bool operator==(const TreeModel& o) const {
    return n_features_ == o.n_features_ && n_classes_ == o.n_classes_ && counts_ == o.counts_ &&
           max_depth_used_ == o.max_depth_used_ && same_nodes(o);
  }

 private:
  bool same_nodes(const TreeModel& o) const;
  void cache_leaf_classes();

  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> counts_;
  std::vector<int> leaf_class_;
  std::size_t max_depth_used_ = 0;
};

/// Column-major copy of a dataset plus per-feature sort orders; shared by all
/// trees trained on the same data.
class TrainingMatrix {
 public:
  explicit TrainingMatrix(const Dataset& ds);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return columns_.size(); }
  std::size_t n_classes() const { return n_classes_; }
  double value(std::size_t m, std::size_t i) const { return columns_[m][i]; }
  const std::vector<double>& column(std::size_t m) const { return columns_[m]; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint32_t>& order(std::size_t m) const { return orders_[m]; }

 private:
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::uint32_t>> orders_;
  std::vector<int> labels_;
  std::size_t n_classes_ = 0;
};

/// Grows a tree on the multiset given by per-row weights (bootstrap counts).
TreeModel grow_tree(const TrainingMatrix& data, std::span<const std::uint32_t> weights, const TreeParams& params,
                    Rng& rng);

/// Greedy Gini CART over every row of `ds` with unit weight.
TreeModel train_tree(const Dataset& ds, const TreeParams& params);

}  // namespace hasprof
