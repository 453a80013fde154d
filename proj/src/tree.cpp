#include "hasprof/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hasprof/errors.hpp"

namespace hasprof {

double gini(std::span<const std::uint32_t> class_counts) {
  double n = 0;
  for (auto c : class_counts) n += c;
  if (n == 0) throw EmptyNode("gini of an empty node");
  double sum_sq = 0;
  for (auto c : class_counts) sum_sq += (c / n) * (c / n);
  return 1.0 - sum_sq;
}

namespace {

int majority(std::span<const std::uint32_t> counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return static_cast<int>(best);
}

}  // namespace

TreeModel::TreeModel(std::size_t n_features, std::size_t n_classes, std::vector<Node> nodes,
                     std::vector<std::uint32_t> counts, std::size_t max_depth_used)
    : n_features_(n_features),
      n_classes_(n_classes),
      nodes_(std::move(nodes)),
      counts_(std::move(counts)),
      max_depth_used_(max_depth_used) {
  validate();
  cache_leaf_classes();
}

void TreeModel::cache_leaf_classes() {
  leaf_class_.assign(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) leaf_class_[i] = majority(counts(i));
}

void TreeModel::validate() const {
  if (nodes_.empty()) throw FormatError("tree has no nodes");
  if (n_classes_ == 0) throw FormatError("tree has no classes");
  if (counts_.size() != nodes_.size() * n_classes_) throw FormatError("tree count table has wrong size");
  // Children always follow their parent, so routing terminates; each node
  // except the root has exactly one parent, so every leaf is reachable.
  std::vector<int> parents(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.feature < 0) continue;
    if (static_cast<std::size_t>(n.feature) >= n_features_) throw FormatError("split feature index out of range");
    if (!std::isfinite(n.threshold)) throw FormatError("non-finite split threshold");
    for (std::int32_t child : {n.left, n.right}) {
      if (child <= static_cast<std::int32_t>(i) || static_cast<std::size_t>(child) >= nodes_.size()) {
        throw FormatError("invalid child index");
      }
      ++parents[static_cast<std::size_t>(child)];
    }
  }
  if (parents[0] != 0) throw FormatError("root has a parent");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (parents[i] != 1) throw FormatError("node " + std::to_string(i) + " is unreachable or shared");
  }
}

bool TreeModel::same_nodes(const TreeModel& o) const {
  if (nodes_.size() != o.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& a = nodes_[i];
    const Node& b = o.nodes_[i];
    if (a.feature != b.feature || a.left != b.left || a.right != b.right) return false;
    if (a.feature >= 0 && a.threshold != b.threshold) return false;
  }
  return true;
}

TreePrediction TreeModel::predict(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw ArityMismatch("expected " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  }
  const std::size_t leaf = leaf_of(x.data());
  TreePrediction out;
  out.cls = leaf_class_[leaf];
  const auto c = counts(leaf);
  double total = 0;
  for (auto v : c) total += v;
  out.scores.resize(n_classes_);
  for (std::size_t k = 0; k < n_classes_; ++k) out.scores[k] = total > 0 ? c[k] / total : 0.0;
  return out;
}

int TreeModel::predict_class_with(const double* x, std::size_t m, double value) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const Node& n = nodes_[i];
    const auto f = static_cast<std::size_t>(n.feature);
    const double v = f == m ? value : x[f];
    i = static_cast<std::size_t>(v <= n.threshold ? n.left : n.right);
  }
  return leaf_class_[i];
}

TrainingMatrix::TrainingMatrix(const Dataset& ds) : labels_(ds.labels()), n_classes_(ds.n_classes()) {
  if (ds.empty()) throw EmptyDataset("cannot train on an empty dataset");
  const std::size_t n = ds.rows();
  const std::size_t m_count = ds.cols();
  columns_.assign(m_count, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = ds.row(i);
    for (std::size_t m = 0; m < m_count; ++m) columns_[m][i] = r[m];
  }
  orders_.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    auto& order = orders_[m];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    const auto& col = columns_[m];
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });
  }
}

TreeModel grow_tree(const TrainingMatrix& data, std::span<const std::uint32_t> weights, const TreeParams& params,
                    Rng& rng) {
  const std::size_t n_rows = data.rows();
  const std::size_t n_feat = data.cols();
  const std::size_t n_cls = data.n_classes();
  if (weights.size() != n_rows) throw ArityMismatch("weight vector does not match the training rows");
  const std::size_t min_leaf = std::max<std::size_t>(1, params.min_leaf);
  const std::size_t mtry =
      params.feature_subsample == 0 ? n_feat : std::min(n_feat, params.feature_subsample);

  // One sorted array per feature holding the rows in the sample. A node owns
  // the same [lo, hi) range in every array.
  std::vector<std::vector<std::uint32_t>> arrays(n_feat);
  for (std::size_t m = 0; m < n_feat; ++m) {
    auto& arr = arrays[m];
    for (std::uint32_t i : data.order(m)) {
      if (weights[i] > 0) arr.push_back(i);
    }
  }
  if (n_feat == 0 || arrays[0].empty()) throw EmptyDataset("no rows with positive weight");

  std::vector<TreeModel::Node> nodes(1);
  std::vector<std::uint32_t> counts;
  std::vector<std::uint8_t> goes_left(n_rows, 0);
  std::vector<std::uint32_t> scratch(arrays[0].size());
  std::vector<std::size_t> features(n_feat);
  std::iota(features.begin(), features.end(), std::size_t{0});
  std::vector<double> total(n_cls), left(n_cls);
  std::size_t max_depth_used = 0;

  struct Task {
    std::size_t lo, hi, depth, node;
  };
  std::vector<Task> stack{{0, arrays[0].size(), 0, 0}};
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    max_depth_used = std::max(max_depth_used, task.depth);

    std::fill(total.begin(), total.end(), 0.0);
    double weight = 0;
    for (std::size_t pos = task.lo; pos < task.hi; ++pos) {
      const std::uint32_t i = arrays[0][pos];
      total[static_cast<std::size_t>(data.label(i))] += weights[i];
      weight += weights[i];
    }
    if (counts.size() < (task.node + 1) * n_cls) counts.resize((task.node + 1) * n_cls, 0);
    std::size_t nonzero = 0;
    for (std::size_t c = 0; c < n_cls; ++c) {
      counts[task.node * n_cls + c] = static_cast<std::uint32_t>(total[c]);
      if (total[c] > 0) ++nonzero;
    }
    if (nonzero <= 1 || weight < 2.0 * static_cast<double>(min_leaf) ||
        (params.max_depth > 0 && task.depth >= params.max_depth)) {
      continue;
    }

    rng.shuffle(std::span<std::size_t>(features));
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_feature = n_feat;
    double best_threshold = 0;
    for (std::size_t j = 0; j < n_feat; ++j) {
      // Past the subsample, keep drawing only while no feature could split.
      if (j >= mtry && best_feature < n_feat) break;
      const std::size_t f = features[j];
      const auto& arr = arrays[f];
      const auto& col = data.column(f);
      std::fill(left.begin(), left.end(), 0.0);
      double w_left = 0;
      for (std::size_t pos = task.lo; pos + 1 < task.hi; ++pos) {
        const std::uint32_t i = arr[pos];
        left[static_cast<std::size_t>(data.label(i))] += weights[i];
        w_left += weights[i];
        const double v = col[i];
        const double v_next = col[arr[pos + 1]];
        if (!(v < v_next)) continue;
        const double w_right = weight - w_left;
        if (w_left < static_cast<double>(min_leaf) || w_right < static_cast<double>(min_leaf)) continue;
        double score = 0;
        for (std::size_t c = 0; c < n_cls; ++c) {
          const double r = total[c] - left[c];
          score += left[c] * left[c] / w_left + r * r / w_right;
        }
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          double mid = v + (v_next - v) / 2;
          if (!(mid < v_next)) mid = v;
          best_threshold = mid;
        }
      }
    }
    if (best_feature == n_feat) continue;

    const auto& split_col = data.column(best_feature);
    std::size_t n_left = 0;
    for (std::size_t pos = task.lo; pos < task.hi; ++pos) {
      const std::uint32_t i = arrays[best_feature][pos];
      goes_left[i] = split_col[i] <= best_threshold ? 1 : 0;
      n_left += goes_left[i];
    }
    const std::size_t mid = task.lo + n_left;
    for (auto& arr : arrays) {
      std::size_t l = task.lo;
      std::size_t r = 0;
      for (std::size_t pos = task.lo; pos < task.hi; ++pos) {
        const std::uint32_t i = arr[pos];
        if (goes_left[i]) {
          arr[l++] = i;
        } else {
          scratch[r++] = i;
        }
      }
      std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(r),
                arr.begin() + static_cast<std::ptrdiff_t>(l));
    }

    const auto left_id = static_cast<std::int32_t>(nodes.size());
    nodes.push_back({});
    nodes.push_back({});
    TreeModel::Node& node = nodes[task.node];
    node.feature = static_cast<std::int32_t>(best_feature);
    node.threshold = best_threshold;
    node.left = left_id;
    node.right = left_id + 1;
    stack.push_back({mid, task.hi, task.depth + 1, static_cast<std::size_t>(left_id + 1)});
    stack.push_back({task.lo, mid, task.depth + 1, static_cast<std::size_t>(left_id)});
  }
  counts.resize(nodes.size() * n_cls, 0);
  return TreeModel(n_feat, n_cls, std::move(nodes), std::move(counts), max_depth_used);
}

TreeModel train_tree(const Dataset& ds, const TreeParams& params) {
  const TrainingMatrix data(ds);
  const std::vector<std::uint32_t> weights(ds.rows(), 1);
  Rng rng(params.seed);
  return grow_tree(data, weights, params, rng);
}

}  // namespace hasprof
