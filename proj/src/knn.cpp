#include "hasprof/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hasprof/errors.hpp"

namespace hasprof {

namespace {

constexpr std::uint32_t kLeafSize = 16;

struct Candidate {
  double dist;
  std::uint32_t index;
  bool operator<(const Candidate& o) const { return dist < o.dist || (dist == o.dist && index < o.index); }
};

/// Sorted list of the best k candidates so far.
class BestK {
 public:
  explicit BestK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  bool full() const { return items_.size() == k_; }
  double worst() const { return items_.back().dist; }

  void offer(Candidate c) {
    if (full() && !(c < items_.back())) return;
    items_.insert(std::upper_bound(items_.begin(), items_.end(), c), c);
    if (items_.size() > k_) items_.pop_back();
  }

  const std::vector<Candidate>& items() const { return items_; }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

}  // namespace

void Scaler::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != means.size() || out.size() != means.size()) {
    throw ArityMismatch("expected " + std::to_string(means.size()) + " features, got " + std::to_string(x.size()));
  }
  for (std::size_t m = 0; m < x.size(); ++m) out[m] = (x[m] - means[m]) / stds[m];
}

std::vector<double> Scaler::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  apply(x, out);
  return out;
}

Scaler fit_scaler(const Dataset& ds) {
  if (ds.empty()) throw EmptyDataset("cannot fit a scaler on an empty dataset");
  const std::size_t n = ds.rows();
  const std::size_t cols = ds.cols();
  Scaler s;
  s.means.assign(cols, 0.0);
  s.stds.assign(cols, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < cols; ++m) s.means[m] += ds.at(i, m);
  }
  for (auto& v : s.means) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < cols; ++m) {
      const double d = ds.at(i, m) - s.means[m];
      s.stds[m] += d * d;
    }
  }
  for (auto& v : s.stds) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0.0)) v = 1.0;
  }
  return s;
}

KnnModel::KnnModel(Scaler scaler, std::vector<double> points, std::vector<int> labels, std::size_t n_classes,
                   std::size_t k)
    : scaler_(std::move(scaler)), points_(std::move(points)), labels_(std::move(labels)), n_classes_(n_classes), k_(k) {
  if (k_ == 0) throw InvalidConfig("k must be at least 1");
  if (labels_.empty()) throw EmptyDataset("k-NN model needs at least one training point");
  if (scaler_.stds.size() != scaler_.means.size()) throw FormatError("scaler means and stds differ in length");
  for (double s : scaler_.stds) {
    if (!(s > 0.0) || !std::isfinite(s)) throw FormatError("scaler std must be positive");
  }
  if (points_.size() != labels_.size() * n_features()) throw FormatError("k-NN matrix has wrong size");
  for (int label : labels_) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes_) throw FormatError("k-NN label out of range");
  }
  build_index();
}

void KnnModel::build_index() {
  order_.resize(labels_.size());
  std::iota(order_.begin(), order_.end(), std::uint32_t{0});
  nodes_.clear();
  build_node(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t KnnModel::build_node(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(KdNode{begin, end});
  if (end - begin <= kLeafSize) return id;
  const std::size_t dims = n_features();
  std::size_t best_dim = 0;
  double best_spread = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    double lo = points_[order_[begin] * dims + d];
    double hi = lo;
    for (std::uint32_t j = begin + 1; j < end; ++j) {
      const double v = points_[order_[j] * dims + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = d;
    }
  }
  if (!(best_spread > 0.0)) return id;  // all points identical
  const std::uint32_t mid = begin + (end - begin) / 2;
  auto key = [&](std::uint32_t i) { return points_[i * dims + best_dim]; };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b) || (key(a) == key(b) && a < b); });
  const double split = key(order_[mid]);
  // Left holds values <= split, right values >= split; mid sits on the right.
  nodes_[id].dim = static_cast<std::int32_t>(best_dim);
  nodes_[id].split = split;
  const std::int32_t left = build_node(begin, mid);
  const std::int32_t right = build_node(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KnnModel::distance(std::span<const double> z, std::uint32_t i) const {
  const double* p = points_.data() + static_cast<std::size_t>(i) * z.size();
  double sum = 0.0;
  for (std::size_t d = 0; d < z.size(); ++d) {
    const double diff = z[d] - p[d];
    sum += diff * diff;
  }
  return sum;
}

std::vector<std::uint32_t> KnnModel::neighbors(std::span<const double> z) const {
  if (z.size() != n_features()) {
    throw ArityMismatch("expected " + std::to_string(n_features()) + " features, got " + std::to_string(z.size()));
  }
  BestK best(std::min(k_, labels_.size()));
  // Depth-first search; a subtree is skipped only when its lower distance
  // bound exceeds the current k-th distance, so equal-distance points with a
  // lower index are never missed.
  struct Frame {
    std::int32_t node;
    double bound;
  };
  std::vector<Frame> stack{{0, 0.0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (best.full() && f.bound > best.worst()) continue;
    const KdNode& n = nodes_[static_cast<std::size_t>(f.node)];
    if (n.dim < 0) {
      for (std::uint32_t j = n.begin; j < n.end; ++j) best.offer({distance(z, order_[j]), order_[j]});
      continue;
    }
    const double diff = z[static_cast<std::size_t>(n.dim)] - n.split;
    const double far_bound = std::max(f.bound, diff * diff);
    const std::int32_t near = diff <= 0.0 ? n.left : n.right;
    const std::int32_t far = diff <= 0.0 ? n.right : n.left;
    stack.push_back({far, far_bound});
    stack.push_back({near, f.bound});
  }
  std::vector<std::uint32_t> out;
  out.reserve(best.items().size());
  for (const auto& c : best.items()) out.push_back(c.index);
  return out;
}

KnnPrediction KnnModel::predict(std::span<const double> x) const {
  const auto z = scaler_.apply(x);
  const auto nn = neighbors(z);
  std::vector<std::uint32_t> votes(n_classes_, 0);
  for (auto i : nn) ++votes[static_cast<std::size_t>(labels_[i])];
  KnnPrediction p;
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  p.cls = static_cast<int>(best);
  p.scores.resize(n_classes_);
  for (std::size_t c = 0; c < n_classes_; ++c) p.scores[c] = static_cast<double>(votes[c]) / nn.size();
  return p;
}

KnnModel knn_train(const Dataset& ds, const KnnParams& params) {
  if (ds.empty()) throw EmptyDataset("cannot train k-NN on an empty dataset");
  Scaler scaler = fit_scaler(ds);
  std::vector<double> points(ds.rows() * ds.cols());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    scaler.apply(ds.row(i), std::span<double>(points.data() + i * ds.cols(), ds.cols()));
  }
  return KnnModel(std::move(scaler), std::move(points), ds.labels(), ds.n_classes(), params.k);
}

int knn_predict(const KnnModel& model, std::span<const double> x) { return model.predict_class(x); }

}  // namespace hasprof
