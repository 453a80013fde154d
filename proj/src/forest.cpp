#include "hasprof/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hasprof/errors.hpp"
#include "hasprof/parallel.hpp"
#include "hasprof/rng.hpp"

namespace hasprof {

namespace {

int vote_winner(std::span<const std::uint32_t> votes) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return static_cast<int>(best);
}

std::vector<std::vector<std::uint8_t>> in_bag_masks(const ForestModel& model, std::size_t rows) {
  if (!model.has_bootstrap()) throw InvalidConfig("forest does not retain its bootstrap samples");
  std::vector<std::vector<std::uint8_t>> masks(model.n_trees(), std::vector<std::uint8_t>(rows, 0));
  for (std::size_t t = 0; t < model.n_trees(); ++t) {
    const auto& boot = model.bootstrap()[t];
    if (boot.size() != rows) throw ArityMismatch("dataset size does not match the forest's bootstrap size");
    for (auto i : boot) masks[t][i] = 1;
  }
  return masks;
}

void check_arity(const ForestModel& model, const Dataset& ds) {
  if (ds.cols() != model.n_features()) {
    throw ArityMismatch("dataset has " + std::to_string(ds.cols()) + " features, model expects " +
                        std::to_string(model.n_features()));
  }
}

}  // namespace

ForestModel::ForestModel(std::vector<TreeModel> trees, std::vector<std::vector<std::uint32_t>> bootstrap,
                         std::uint64_t seed, std::size_t feature_subsample)
    : trees_(std::move(trees)), bootstrap_(std::move(bootstrap)), seed_(seed), feature_subsample_(feature_subsample) {
  if (trees_.empty()) throw FormatError("forest needs at least one tree");
  if (!bootstrap_.empty() && bootstrap_.size() != trees_.size()) {
    throw FormatError("bootstrap record count does not match the tree count");
  }
  for (const auto& t : trees_) {
    if (t.n_features() != trees_.front().n_features() || t.n_classes() != trees_.front().n_classes()) {
      throw FormatError("trees of one forest disagree on shape");
    }
  }
}

std::vector<std::uint32_t> ForestModel::votes(std::span<const double> x) const {
  if (x.size() != n_features()) {
    throw ArityMismatch("expected " + std::to_string(n_features()) + " features, got " + std::to_string(x.size()));
  }
  std::vector<std::uint32_t> v(n_classes(), 0);
  for (const auto& t : trees_) ++v[static_cast<std::size_t>(t.predict_class(x.data()))];
  return v;
}

int ForestModel::predict(std::span<const double> x) const { return vote_winner(votes(x)); }

std::size_t default_feature_subsample(std::size_t n_features) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
}

ForestModel train_forest(const Dataset& ds, const ForestParams& params) {
  if (ds.empty()) throw EmptyDataset("cannot train a forest on an empty dataset");
  if (params.n_trees == 0) throw InvalidConfig("a forest needs at least one tree");
  const std::size_t n = ds.rows();
  const std::size_t mtry =
      params.feature_subsample == 0 ? default_feature_subsample(ds.cols()) : params.feature_subsample;
  const TrainingMatrix data(ds);

  std::vector<TreeModel> trees(params.n_trees);
  std::vector<std::vector<std::uint32_t>> bootstrap(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, t));
    auto& boot = bootstrap[t];
    boot.resize(n);
    std::vector<std::uint32_t> weights(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      boot[i] = params.identity_bootstrap ? static_cast<std::uint32_t>(i) : static_cast<std::uint32_t>(rng.below(n));
      ++weights[boot[i]];
    }
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_leaf = params.min_leaf;
    tp.feature_subsample = mtry;
    trees[t] = grow_tree(data, weights, tp, rng);
  });
  return ForestModel(std::move(trees), std::move(bootstrap), params.seed, mtry);
}

OobResult oob_error(const ForestModel& model, const Dataset& ds) {
  check_arity(model, ds);
  const auto masks = in_bag_masks(model, ds.rows());
  OobResult result;
  std::size_t wrong = 0;
  std::vector<std::uint32_t> votes(model.n_classes());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    bool any = false;
    const double* x = ds.row(i).data();
    for (std::size_t t = 0; t < model.n_trees(); ++t) {
      if (masks[t][i]) continue;
      any = true;
      ++votes[static_cast<std::size_t>(model.trees()[t].predict_class(x))];
    }
    if (!any) {
      ++result.skipped;
      continue;
    }
    ++result.evaluated;
    if (vote_winner(votes) != ds.label(i)) ++wrong;
  }
  result.defined = result.evaluated > 0;
  result.error = result.defined ? static_cast<double>(wrong) / static_cast<double>(result.evaluated) : 0.0;
  return result;
}

ImportanceResult permutation_importance(const ForestModel& model, const Dataset& ds, std::uint64_t seed,
                                        unsigned threads) {
  check_arity(model, ds);
  const auto masks = in_bag_masks(model, ds.rows());
  const std::size_t n_feat = ds.cols();
  const std::size_t n_trees = model.n_trees();

  // delta[t][m]: permuted minus baseline OOB error rate of tree t.
  std::vector<std::vector<double>> delta(n_trees, std::vector<double>(n_feat, 0.0));
  std::vector<std::uint8_t> used(n_trees, 0);
  parallel_for(n_trees, threads, [&](std::size_t t) {
    std::vector<std::size_t> oob;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      if (!masks[t][i]) oob.push_back(i);
    }
    if (oob.empty()) return;
    used[t] = 1;
    const TreeModel& tree = model.trees()[t];
    std::size_t base_wrong = 0;
    for (auto i : oob) base_wrong += tree.predict_class(ds.row(i).data()) != ds.label(i);
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> perm(oob.size());
    for (std::size_t m = 0; m < n_feat; ++m) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(perm));
      std::size_t wrong = 0;
      for (std::size_t j = 0; j < oob.size(); ++j) {
        const std::size_t i = oob[j];
        const double v = ds.at(oob[perm[j]], m);
        wrong += tree.predict_class_with(ds.row(i).data(), m, v) != ds.label(i);
      }
      delta[t][m] = (static_cast<double>(wrong) - static_cast<double>(base_wrong)) / static_cast<double>(oob.size());
    }
  });

  ImportanceResult result;
  result.raw.assign(n_feat, 0.0);
  const auto n_used = static_cast<double>(std::count(used.begin(), used.end(), 1));
  if (n_used == 0) throw InvalidConfig("no tree has out-of-bag rows");
  for (std::size_t t = 0; t < n_trees; ++t) {
    if (!used[t]) continue;
    for (std::size_t m = 0; m < n_feat; ++m) result.raw[m] += delta[t][m];
  }
  for (auto& r : result.raw) r /= n_used;
  const double max_raw = *std::max_element(result.raw.begin(), result.raw.end());
  result.degenerate = !(max_raw > 0.0);
  result.normalized = result.raw;
  if (!result.degenerate) {
    for (auto& v : result.normalized) v /= max_raw;
  }
  return result;
}

}  // namespace hasprof
