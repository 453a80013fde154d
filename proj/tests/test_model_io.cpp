#include <cstring>
#include <sstream>

#include "doctest.h"
#include "hasprof/errors.hpp"
#include "hasprof/model.hpp"
#include "hasprof/model_io.hpp"
#include "test_support.hpp"

using namespace hasprof;

namespace {

std::string serialize(const Model& m) {
  std::ostringstream out(std::ios::binary);
  save_model(out, m);
  return out.str();
}

Model deserialize(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return load_model(in);
}

std::uint32_t le32(const std::string& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("round trips keep every prediction") {
    Rng rng(7);
    const Dataset ds = test::blobs(rng, 40, 4, 5, 5.0);
    ForestParams fp;
    fp.n_trees = 10;
    KnnParams kp;
    kp.k = 3;
    for (const ModelSpec& spec : {ModelSpec{TreeParams{}}, ModelSpec{fp}, ModelSpec{kp}}) {
      const Model m = train(spec, ds);
      const std::string bytes = serialize(m);
      const Model back = deserialize(bytes);
      CHECK(back == m);
      CHECK(serialize(back) == bytes);
      for (int q = 0; q < 100; ++q) {
        std::vector<double> x(5);
        for (auto& v : x) v = rng.uniform(-5, 25);
        CHECK(back.predict(x) == m.predict(x));
        CHECK(back.scores(x) == m.scores(x));
      }
    }
  }

  TEST_CASE("header layout") {
    Dataset ds({"a", "bb"}, {"x", "y"});
    const double r0[2] = {0, 0};
    const double r1[2] = {1, 0};
    ds.add_row(r0, 0);
    ds.add_row(r1, 1);
    const std::string b = serialize(train(TreeParams{}, ds));
    CHECK(std::memcmp(b.data(), "HASPMDL\0", 8) == 0);
    CHECK(le32(b, 8) == kModelFormatVersion);
    CHECK(b[12] == 1);  // tree
    CHECK(le32(b, 13) == 2);
    CHECK(le32(b, 17) == 1);
    CHECK(b.substr(21, 1) == "a");
    CHECK(le32(b, 22) == 2);
    CHECK(b.substr(26, 2) == "bb");
    CHECK(le32(b, 28) == 2);  // classes
    // Tree block after the two class names: depth 1, three nodes.
    const std::size_t tree_at = 32 + (4 + 1) + (4 + 1);
    CHECK(le32(b, tree_at) == 1);
    CHECK(le32(b, tree_at + 4) == 3);
    const std::size_t expected = tree_at + 8 + 3 * (4 + 8 + 4 + 4) + 3 * 2 * 4;
    CHECK(b.size() == expected);
  }

  TEST_CASE("corrupt files are rejected") {
    Rng rng(8);
    const Dataset ds = test::blobs(rng, 10, 2, 2, 1.0);
    ForestParams fp;
    fp.n_trees = 3;
    const std::string good = serialize(train(fp, ds));

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize(bad_magic), FormatError);

    std::string bad_version = good;
    bad_version[8] = 9;
    CHECK_THROWS_AS(deserialize(bad_version), VersionError);

    std::string bad_kind = good;
    bad_kind[12] = 7;
    CHECK_THROWS_AS(deserialize(bad_kind), FormatError);

    CHECK_THROWS_AS(deserialize(good + "x"), FormatError);
    for (std::size_t cut = 0; cut < good.size(); cut += 1 + cut / 16) {
      CAPTURE(cut);
      CHECK_THROWS_AS(deserialize(good.substr(0, cut)), FormatError);
    }
    CHECK_THROWS_AS(load_model(std::filesystem::path("/nonexistent/model.bin")), IoError);

    KnnParams kp;
    const Model knn = train(kp, ds);
    std::string zero_k = serialize(knn);
    std::size_t k_at = 8 + 4 + 1 + 4;
    for (const auto& n : knn.feature_names) k_at += 4 + n.size();
    k_at += 4;
    for (const auto& n : knn.class_names) k_at += 4 + n.size();
    REQUIRE(le32(zero_k, k_at) == 1);
    zero_k.replace(k_at, 4, std::string(4, '\0'));
    CHECK_THROWS_AS(deserialize(zero_k), FormatError);
  }
}
