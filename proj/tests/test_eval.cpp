#include <algorithm>
#include <set>

#include "doctest.h"
#include "hasprof/errors.hpp"
#include "hasprof/eval.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace hasprof;

namespace {

void check_partition(const std::vector<std::vector<std::size_t>>& folds, std::size_t n, std::size_t k) {
  REQUIRE(folds.size() == k);
  std::vector<int> seen(n, 0);
  std::size_t lo = n;
  std::size_t hi = 0;
  for (const auto& f : folds) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    for (auto i : f) {
      REQUIRE(i < n);
      ++seen[i];
    }
  }
  for (int c : seen) REQUIRE(c == 1);
  REQUIRE(hi - lo <= 1);
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("k-fold sizes") {
    const auto five = kfold_split(10, 5, 1);
    for (const auto& f : five) CHECK(f.size() == 2);
    const auto three = kfold_split(10, 3, 1);
    CHECK(three[0].size() == 4);
    CHECK(three[1].size() == 3);
    CHECK(three[2].size() == 3);
    CHECK(kfold_split(10, 3, 1) == three);
    CHECK_THROWS_AS(kfold_split(10, 1, 1), BadK);
    CHECK_THROWS_AS(kfold_split(10, 11, 1), BadK);
    CHECK_NOTHROW(kfold_split(10, 10, 1));
  }

  TEST_CASE("k-fold partition property on random triples") {
    Rng rng(21);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t n = 2 + rng.below(300);
      const std::size_t k = 2 + rng.below(n - 1);
      check_partition(kfold_split(n, k, rng()), n, k);
    }
  }

  TEST_CASE("confusion matrix") {
    const std::vector<int> truth{0, 1, 2, 1};
    ConfusionMatrix diag = confusion(truth, truth, {"a", "b", "c"});
    CHECK(diag.accuracy() == 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        if (i != j) CHECK(diag.at(i, j) == 0);
      }
    }
    const std::vector<int> t1{0};
    const std::vector<int> p1{1};
    const ConfusionMatrix one = confusion(t1, p1, {"A", "B"});
    CHECK(one.at(0, 1) == 1);
    CHECK(one.total() == 1);
    CHECK(one.correct() == 0);
    CHECK_FALSE(one.recall(1).has_value());

    ConfusionMatrix m({"A", "B"});
    m.add(0, 0, 8);
    m.add(0, 1, 2);
    const auto pct = m.row_percentages();
    CHECK(pct[0][0] == doctest::Approx(80.0));
    CHECK(pct[0][1] == doctest::Approx(20.0));
    CHECK(pct[1][0] == 0.0);
    CHECK(*m.recall(0) == doctest::Approx(0.8));
    const std::string text = m.to_text();
    CHECK(text.find("80.0") != std::string::npos);
    CHECK(text.find("20.0") != std::string::npos);
    CHECK_THROWS(m.add(2, 0));
  }

  TEST_CASE("mean and std") {
    const double v[] = {1, 2, 3};
    const MeanStd ms = mean_std(v);
    CHECK(ms.mean == doctest::Approx(2.0));
    CHECK(ms.std == doctest::Approx(0.8164965809));
    const double single[] = {4.0};
    CHECK(mean_std(single).std == 0.0);
  }

  TEST_CASE("cross-validation validates every sample once") {
    Rng rng(22);
    Dataset ds = test::blobs(rng, 30, 3, 3, 0.3);
    const CvReport r = cross_validate(ds, TreeParams{}, 5, 7);
    CHECK(r.overall_accuracy == 1.0);
    CHECK(r.pooled.total() == ds.rows());
    std::size_t sum = 0;
    for (auto s : r.fold_sizes) sum += s;
    CHECK(sum == ds.rows());
    CHECK(r.predictions.size() == ds.rows());
    CHECK(r.per_scenario.empty());

    const nlohmann::json j = nlohmann::json::parse(r.to_json());
    CHECK(j["k"] == 5);
    CHECK(j["overall_accuracy"] == 1.0);
    CHECK_FALSE(j.contains("timing"));
    CHECK(nlohmann::json::parse(r.to_json(true)).contains("timing"));
    CHECK(cross_validate(ds, TreeParams{}, 5, 7).to_json() == r.to_json());

    KnnParams kp;
    kp.threads = 3;
    CHECK(cross_validate(ds, kp, 4, 1).predictions == cross_validate(ds, serial(kp), 4, 1).predictions);
  }

  TEST_CASE("per-scenario accuracy") {
    Dataset ds({"x"}, {"A", "B"});
    const double v[1] = {0};
    ds.add_row(v, 0, "s1");
    ds.add_row(v, 1, "s1");
    ds.add_row(v, 1, "s4");
    ds.add_row(v, 0, "s4");
    const std::vector<int> pred{0, 1, 0, 0};
    const auto acc = per_scenario_accuracy(ds, pred);
    CHECK(acc.size() == 2);
    CHECK(acc.at("s1") == 1.0);
    CHECK(acc.at("s4") == 0.5);
    CHECK(acc.count("s2") == 0);

    Dataset single({"x"}, {"A", "B"});
    for (int i = 0; i < 5; ++i) single.add_row(v, i % 2, "s7");
    const std::vector<int> p2{0, 0, 0, 1, 0};
    CHECK(per_scenario_accuracy(single, p2).at("s7") == doctest::Approx(confusion(single.labels(), p2, {"A", "B"}).accuracy()));
  }

  TEST_CASE("benchmark") {
    Rng rng(23);
    const Dataset ds = test::blobs(rng, 20, 2, 3, 1.0);
    ForestParams fp;
    fp.n_trees = 5;
    const RuntimeStats one = benchmark(fp, ds, 1);
    CHECK(one.repetitions == 1);
    CHECK(one.train_seconds.std == 0.0);
    CHECK(one.predict_ms_per_1000.std == 0.0);
    const std::string text = benchmark(fp, ds, 2).to_text();
    CHECK(text.find("training") != std::string::npos);
    CHECK(text.find("prediction") != std::string::npos);
  }
}
