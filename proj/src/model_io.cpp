#include "hasprof/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "hasprof/errors.hpp"

namespace hasprof {

namespace {

constexpr char kMagic[8] = {'H', 'A', 'S', 'P', 'M', 'D', 'L', '\0'};

enum class Kind : std::uint8_t { Tree = 1, Forest = 2, Knn = 3 };

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void uint(T v) {
    static_assert(std::is_unsigned_v<T>);
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(bytes, sizeof(T));
  }
  void u8(std::uint8_t v) { uint(v); }
  void u32(std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw FormatError("value too large for the model format");
    uint(static_cast<std::uint32_t>(v));
  }
  void i32(std::int32_t v) { uint(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) { uint(v); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T uint() {
    unsigned char bytes[sizeof(T)];
    read(reinterpret_cast<char*>(bytes), sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes[i]) << (8 * i));
    return v;
  }
  std::uint8_t u8() { return uint<std::uint8_t>(); }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(uint<std::uint32_t>()); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > kMaxString) throw FormatError("string length out of range");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  /// Element count guard against corrupt sizes before allocating.
  std::uint32_t count(std::uint64_t max_reasonable) {
    const std::uint32_t n = u32();
    if (n > max_reasonable) throw FormatError("element count out of range");
    return n;
  }
  void read(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("model file is truncated");
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after model");
  }

 private:
  static constexpr std::uint32_t kMaxString = 1u << 16;
  std::istream& in_;
};

constexpr std::uint64_t kMaxCount = 1ull << 28;

void write_tree(Writer& w, const TreeModel& t) {
  w.u32(t.max_depth_used());
  w.u32(t.nodes().size());
  for (const auto& n : t.nodes()) {
    w.i32(n.feature);
    w.f64(n.threshold);
    w.i32(n.left);
    w.i32(n.right);
  }
  for (auto c : t.all_counts()) w.u32(c);
}

TreeModel read_tree(Reader& r, std::size_t n_features, std::size_t n_classes) {
  const std::uint32_t depth = r.u32();
  const std::uint32_t n_nodes = r.count(kMaxCount);
  if (n_nodes == 0) throw FormatError("tree has no nodes");
  std::vector<TreeModel::Node> nodes(n_nodes);
  for (auto& n : nodes) {
    n.feature = r.i32();
    n.threshold = r.f64();
    n.left = r.i32();
    n.right = r.i32();
  }
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(n_nodes) * n_classes);
  for (auto& c : counts) c = r.u32();
  return TreeModel(n_features, n_classes, std::move(nodes), std::move(counts), depth);
}

}  // namespace

void save_model(std::ostream& out, const Model& model) {
  Writer w(out);
  w.raw(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(model.impl.index() + 1));
  w.u32(model.feature_names.size());
  for (const auto& s : model.feature_names) w.str(s);
  w.u32(model.class_names.size());
  for (const auto& s : model.class_names) w.str(s);

  if (const auto* tree = std::get_if<TreeModel>(&model.impl)) {
    write_tree(w, *tree);
  } else if (const auto* forest = std::get_if<ForestModel>(&model.impl)) {
    w.u32(forest->n_trees());
    w.u32(forest->feature_subsample());
    w.u64(forest->seed());
    w.u8(forest->has_bootstrap() ? 1 : 0);
    w.u32(forest->has_bootstrap() ? forest->bootstrap().front().size() : 0);
    for (std::size_t t = 0; t < forest->n_trees(); ++t) {
      write_tree(w, forest->trees()[t]);
      if (forest->has_bootstrap()) {
        for (auto i : forest->bootstrap()[t]) w.u32(i);
      }
    }
  } else {
    const auto& knn = std::get<KnnModel>(model.impl);
    w.u32(knn.k());
    w.u32(knn.n_points());
    for (double v : knn.scaler().means) w.f64(v);
    for (double v : knn.scaler().stds) w.f64(v);
    for (double v : knn.points()) w.f64(v);
    for (int label : knn.labels()) w.i32(label);
  }
  if (!out) throw IoError("failed writing model");
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_model(out, model);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

Model load_model(std::istream& in) {
  Reader r(in);
  char magic[sizeof kMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw FormatError("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw VersionError("model format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint8_t kind = r.u8();
  Model model;
  const std::uint32_t m = r.count(1u << 20);
  for (std::uint32_t i = 0; i < m; ++i) model.feature_names.push_back(r.str());
  const std::uint32_t c = r.count(1u << 16);
  if (m == 0 || c == 0) throw FormatError("model has no features or no classes");
  for (std::uint32_t i = 0; i < c; ++i) model.class_names.push_back(r.str());

  switch (static_cast<Kind>(kind)) {
    case Kind::Tree:
      model.impl = read_tree(r, m, c);
      break;
    case Kind::Forest: {
      const std::uint32_t n_trees = r.count(1u << 20);
      const std::uint32_t subsample = r.u32();
      const std::uint64_t seed = r.u64();
      const std::uint8_t has_boot = r.u8();
      if (has_boot > 1) throw FormatError("bad bootstrap flag");
      const std::uint32_t n_rows = r.count(kMaxCount);
      std::vector<TreeModel> trees;
      std::vector<std::vector<std::uint32_t>> boot;
      for (std::uint32_t t = 0; t < n_trees; ++t) {
        trees.push_back(read_tree(r, m, c));
        if (has_boot) {
          auto& b = boot.emplace_back(n_rows);
          for (auto& i : b) {
            i = r.u32();
            if (i >= n_rows) throw FormatError("bootstrap index out of range");
          }
        }
      }
      model.impl = ForestModel(std::move(trees), std::move(boot), seed, subsample);
      break;
    }
    case Kind::Knn: {
      const std::uint32_t k = r.u32();
      if (k == 0) throw FormatError("k-NN model has k = 0");
      const std::uint32_t n = r.count(kMaxCount / m);
      Scaler scaler;
      scaler.means.resize(m);
      scaler.stds.resize(m);
      for (auto& v : scaler.means) v = r.f64();
      for (auto& v : scaler.stds) v = r.f64();
      std::vector<double> points(static_cast<std::size_t>(n) * m);
      for (auto& v : points) v = r.f64();
      std::vector<int> labels(n);
      for (auto& v : labels) v = r.i32();
      model.impl = KnnModel(std::move(scaler), std::move(points), std::move(labels), c, k);
      break;
    }
    default:
      throw FormatError("unknown model kind " + std::to_string(kind));
  }
  r.expect_end();
  return model;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_model(in);
}

}  // namespace hasprof
