#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hasprof/dataset.hpp"
#include "hasprof/tree.hpp"

namespace hasprof {

struct ForestParams {
  std::size_t n_trees = 30;
  std::size_t feature_subsample = 0;  // 0: ceil(sqrt(M))
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 20180101;
  unsigned threads = 0;  // 0: hardware concurrency
  /// Test hook: every tree sees the training set as is instead of a bootstrap.
  bool identity_bootstrap = false;
};

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<TreeModel> trees, std::vector<std::vector<std::uint32_t>> bootstrap, std::uint64_t seed,
              std::size_t feature_subsample);

  std::size_t n_trees() const { return trees_.size(); }
  std::size_t n_features() const { return trees_.front().n_features(); }
  std::size_t n_classes() const { return trees_.front().n_classes(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t feature_subsample() const { return feature_subsample_; }
  const std::vector<TreeModel>& trees() const { return trees_; }
  /// Row indices drawn for each tree; empty when not retained (e.g. loaded
  /// from a file saved without them).
  const std::vector<std::vector<std::uint32_t>>& bootstrap() const { return bootstrap_; }
  bool has_bootstrap() const { return !bootstrap_.empty(); }

  /// Majority vote; ties go to the lowest class code.
  int predict(std::span<const double> x) const;
  std::vector<std::uint32_t> votes(std::span<const double> x) const;

  bool operator==(const ForestModel&) const = default;

 private:
  std::vector<TreeModel> trees_;
  std::vector<std::vector<std::uint32_t>> bootstrap_;
  std::uint64_t seed_ = 0;
  std::size_t feature_subsample_ = 0;
};

std::size_t default_feature_subsample(std::size_t n_features);

/// Each tree grows on its own bootstrap with a seed derived from the master
/// seed and the tree index, so serial and threaded runs agree.
ForestModel train_forest(const Dataset& ds, const ForestParams& params);

struct OobResult {
  double error = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // rows that were in-bag for every tree
  bool defined = false;     // false when no row was out of bag
};

OobResult oob_error(const ForestModel& model, const Dataset& ds);

struct ImportanceResult {
  std::vector<double> raw;         // mean per-tree OOB error increase
  std::vector<double> normalized;  // raw / max(raw); equals raw when degenerate
  bool degenerate = false;         // every raw score <= 0
};

/// Per-tree permutation of one column over that tree's out-of-bag rows.
ImportanceResult permutation_importance(const ForestModel& model, const Dataset& ds, std::uint64_t seed,
                                        unsigned threads = 0);

}  // namespace hasprof
