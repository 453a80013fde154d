#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hasprof/dataset.hpp"

namespace hasprof {

/// Per-feature standardization with population std; constant columns get
/// std 1 so they map to zero.
struct Scaler {
  std::vector<double> means;
  std::vector<double> stds;

  void apply(std::span<const double> x, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> x) const;

  bool operator==(const Scaler&) const = default;
};

Scaler fit_scaler(const Dataset& ds);

struct KnnParams {
  std::size_t k = 1;
  unsigned threads = 0;  // used by batch prediction
};

struct KnnPrediction {
  int cls = 0;
  std::vector<double> scores;  // neighbor vote fractions
};

/// k-nearest-neighbor classifier in standardized space. Neighbors are the k
/// smallest (squared distance, training index) pairs, so distance ties go to
/// the lower index; votes tie toward the lower class code.
class KnnModel {
 public:
  KnnModel() = default;
  KnnModel(Scaler scaler, std::vector<double> points, std::vector<int> labels, std::size_t n_classes, std::size_t k);

  std::size_t k() const { return k_; }
  std::size_t n_features() const { return scaler_.means.size(); }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_points() const { return labels_.size(); }
  const Scaler& scaler() const { return scaler_; }
  /// Standardized training matrix, row-major.
  const std::vector<double>& points() const { return points_; }
  const std::vector<int>& labels() const { return labels_; }

  KnnPrediction predict(std::span<const double> x) const;
  int predict_class(std::span<const double> x) const { return predict(x).cls; }
  /// Indices of the k nearest training points for an already standardized
  /// query, nearest first.
  std::vector<std::uint32_t> neighbors(std::span<const double> z) const;

  bool operator==(const KnnModel& o) const {
    return k_ == o.k_ && n_classes_ == o.n_classes_ && scaler_ == o.scaler_ && points_ == o.points_ &&
           labels_ == o.labels_;
  }

 private:
  struct KdNode {
    std::uint32_t begin = 0;  // range into order_
    std::uint32_t end = 0;
    std::int32_t dim = -1;  // -1: leaf
    double split = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  void build_index();
  std::int32_t build_node(std::uint32_t begin, std::uint32_t end);
  double distance(std::span<const double> z, std::uint32_t i) const;

  Scaler scaler_;
  std::vector<double> points_;
  std::vector<int> labels_;
  std::size_t n_classes_ = 0;
  std::size_t k_ = 1;
  std::vector<std::uint32_t> order_;
  std::vector<KdNode> nodes_;
};

KnnModel knn_train(const Dataset& ds, const KnnParams& params);
int knn_predict(const KnnModel& model, std::span<const double> x);

}  // namespace hasprof
