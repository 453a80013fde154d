#include "hasprof/model.hpp"

#include "hasprof/errors.hpp"
#include "hasprof/parallel.hpp"

namespace hasprof {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view model_kind(const ModelSpec& spec) {
  static constexpr std::string_view names[] = {"tree", "forest", "knn"};
  return names[spec.index()];
}

std::string_view Model::kind() const {
  static constexpr std::string_view names[] = {"tree", "forest", "knn"};
  return names[impl.index()];
}

int Model::predict(std::span<const double> x) const {
  return std::visit(overloaded{[&](const TreeModel& m) { return m.predict(x).cls; },
                               [&](const ForestModel& m) { return m.predict(x); },
                               [&](const KnnModel& m) { return m.predict_class(x); }},
                    impl);
}

std::vector<double> Model::scores(std::span<const double> x) const {
  return std::visit(overloaded{[&](const TreeModel& m) { return m.predict(x).scores; },
                               [&](const ForestModel& m) {
                                 const auto v = m.votes(x);
                                 std::vector<double> s(v.size());
                                 for (std::size_t c = 0; c < v.size(); ++c) {
                                   s[c] = static_cast<double>(v[c]) / static_cast<double>(m.n_trees());
                                 }
                                 return s;
                               },
                               [&](const KnnModel& m) { return m.predict(x).scores; }},
                    impl);
}

Model train(const ModelSpec& spec, const Dataset& ds) {
  if (ds.empty()) throw EmptyDataset("cannot train on an empty dataset");
  Model model;
  model.feature_names = ds.feature_names();
  model.class_names = ds.class_names();
  std::visit(overloaded{[&](const TreeParams& p) { model.impl = train_tree(ds, p); },
                        [&](const ForestParams& p) { model.impl = train_forest(ds, p); },
                        [&](const KnnParams& p) { model.impl = knn_train(ds, p); }},
             spec);
  return model;
}

std::vector<int> predict_all(const Model& model, const Dataset& ds, unsigned threads) {
  if (ds.cols() != model.n_features()) {
    throw ArityMismatch("dataset has " + std::to_string(ds.cols()) + " features, model expects " +
                        std::to_string(model.n_features()));
  }
  std::vector<int> out(ds.rows());
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (ds.rows() + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(ds.rows(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) out[i] = model.predict(ds.row(i));
  });
  return out;
}

}  // namespace hasprof
