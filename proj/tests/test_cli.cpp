#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the command-line tool with `args`, capturing both streams.
Run run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / "hasprof_cli_runs";
  fs::create_directories(dir);
  const fs::path out = dir / ("out" + std::to_string(counter));
  const fs::path err = dir / ("err" + std::to_string(counter++));
  const std::string cmd = std::string(HASPROF_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> words(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

/// Shared fixture: a small corpus with traces on disk and both datasets.
const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    const fs::path d = hasprof::test::temp_dir("cli_corpus");
    const Run r = run_cli("corpus --out " + d.string() +
                          " --reps 1 --presets medium --downloads 4 --webs 4 --write-traces");
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2 and help with 0") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("simulate --scenario s1").code == 2);  // --out missing
  CHECK(run_cli("train --data x.csv --model svm --out m.bin").code == 2);
  const Run help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);
  const fs::path d = hasprof::test::temp_dir("cli_usage");
  const Run unknown = run_cli("simulate --scenario s9 --out " + d.string());
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("s9") != std::string::npos);
}

TEST_CASE("simulate writes traces, labels and a manifest deterministically") {
  const fs::path a = hasprof::test::temp_dir("cli_sim_a");
  const fs::path b = hasprof::test::temp_dir("cli_sim_b");
  REQUIRE(run_cli("simulate --scenario s1 --reps 2 --out " + a.string()).code == 0);
  REQUIRE(run_cli("simulate --scenario s1 --reps 2 --out " + b.string()).code == 0);
  std::size_t traces = 0;
  std::size_t labels = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const std::string name = e.path().filename().string();
    traces += name.ends_with(".trace.csv");
    labels += name.ends_with(".labels.csv");
    CHECK(slurp(e.path()) == slurp(b / name));
  }
  CHECK(traces == 2);
  CHECK(labels == 2);
  const auto manifest = lines_of(slurp(a / "manifest.csv"));
  REQUIRE(manifest.size() == 3);
  CHECK(manifest[0] == "trace_id,scenario,preset,seed,trace_file,label_file");
}

TEST_CASE("extract produces the default feature columns") {
  const fs::path d = hasprof::test::temp_dir("cli_extract");
  REQUIRE(run_cli("simulate --scenario s2 --reps 1 --out " + d.string()).code == 0);
  const Run r = run_cli("extract --manifest " + (d / "manifest.csv").string() + " --out " + (d / "ds.csv").string());
  REQUIRE(r.code == 0);
  const auto rows = lines_of(slurp(d / "ds.csv"));
  REQUIRE(rows.size() > 2);
  const std::string& header = rows[1];
  CHECK(std::count(header.begin(), header.end(), ',') == 21);  // 20 features, label, scenario
  CHECK(header.ends_with(",label,scenario"));

  const fs::path trace = d / "s2-medium-r000.trace.csv";
  const Run missing = run_cli("extract --trace " + trace.string() + " --labels " + (d / "nope.csv").string() +
                              " --out " + (d / "x.csv").string());
  CHECK(missing.code == 1);
  CHECK(missing.err.find("nope.csv") != std::string::npos);

  // Metadata and header only.
  std::ofstream(d / "empty.trace.csv") << "# client_ip=10.0.0.2\n"
                                          "time_s,src_ip,src_port,dst_ip,dst_port,protocol,payload_bytes\n";
  const Run empty = run_cli("extract --trace " + (d / "empty.trace.csv").string() + " --labels " +
                            (d / "s2-medium-r000.labels.csv").string() + " --out " + (d / "e.csv").string());
  CHECK(empty.code == 0);
  CHECK(empty.err.find("warning") != std::string::npos);
  CHECK(lines_of(slurp(d / "e.csv")).size() == 2);

  const Run bad_config = run_cli("--set Tw=1.5 extract --manifest " + (d / "manifest.csv").string() + " --out " +
                                 (d / "y.csv").string());
  CHECK(bad_config.code == 1);
}

TEST_CASE("train and predict on a constant-rate trace") {
  const fs::path& c = corpus_dir();
  const fs::path model = c / "buffer.model";
  REQUIRE(run_cli("train --data " + (c / "buffer.csv").string() + " --out " + model.string()).code == 0);
  const fs::path trace = c / "traces" / "s1-medium-r000.trace.csv";
  const Run r = run_cli("predict --model " + model.string() + " --trace " + trace.string());
  REQUIRE(r.code == 0);
  std::size_t steady = 0;
  std::map<std::string, double> last;
  for (const auto& line : lines_of(r.out)) {
    const auto w = words(line);
    REQUIRE(w.size() == 3);
    steady += w[2] == "Steady";
    const double t = std::stod(w[0]);
    if (last.count(w[1])) CHECK(t > last[w[1]]);
    last[w[1]] = t;
  }
  CHECK(steady >= 1);

  const Run scored = run_cli("predict --scores --model " + model.string() + " --trace " + trace.string());
  REQUIRE(scored.code == 0);
  const auto first = words(lines_of(scored.out).front());
  REQUIRE(first.size() == 7);
  double sum = 0.0;
  for (std::size_t i = 3; i < 7; ++i) sum += std::stod(first[i]);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-3));

  // Same inputs and seeds give the same model bytes.
  REQUIRE(run_cli("train --data " + (c / "buffer.csv").string() + " --out " + (c / "again.model").string()).code == 0);
  CHECK(slurp(model) == slurp(c / "again.model"));
  CHECK(run_cli("predict --model " + (c / "missing.model").string() + " --trace " + trace.string()).code == 1);
}

TEST_CASE("flow model labels a bulk download as non-HAS") {
  const fs::path& c = corpus_dir();
  const fs::path model = c / "flow.model";
  REQUIRE(run_cli("train --data " + (c / "service.csv").string() + " --out " + model.string()).code == 0);
  const Run r = run_cli("predict --model " + model.string() + " --trace " +
                        (c / "traces" / "download-r001.trace.csv").string());
  REQUIRE(r.code == 0);
  std::size_t non_has = 0;
  std::size_t total = 0;
  for (const auto& line : lines_of(r.out)) {
    ++total;
    non_has += words(line)[2] == "NonHAS";
  }
  REQUIRE(total > 0);
  CHECK(non_has * 2 > total);
}

TEST_CASE("evaluate prints row-normalized confusion and a runtime block") {
  const fs::path& c = corpus_dir();
  const fs::path json = c / "report.json";
  const Run r = run_cli("evaluate --k 10 --bench-reps 2 --data " + (c / "buffer.csv").string() + " --json " +
                        json.string());
  REQUIRE(r.code == 0);
  const auto lines = lines_of(r.out);
  std::size_t rows = 0;
  bool table = false;
  for (const auto& line : lines) {
    if (line.starts_with("true \\ predicted")) {
      table = true;
      continue;
    }
    if (!table) continue;
    if (line.empty()) break;
    const auto w = words(line);
    REQUIRE(w.size() == 6);
    if (std::stoull(w[5]) == 0) continue;
    double sum = 0.0;
    for (std::size_t i = 1; i < 5; ++i) sum += std::stod(w[i]);
    CHECK(sum == doctest::Approx(100.0).epsilon(0.001));
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(r.out.find("per-scenario accuracy") != std::string::npos);
  CHECK(r.out.find("runtime over 2 repetitions") != std::string::npos);

  const std::string first = slurp(json);
  REQUIRE(run_cli("evaluate --k 10 --bench-reps 0 --data " + (c / "buffer.csv").string() + " --json " +
                  json.string())
              .code == 0);
  CHECK(slurp(json) == first);
}

TEST_CASE("importance ranks an injected noise column") {
  const fs::path& c = corpus_dir();
  const Run r = run_cli("importance --noise-column --trees 20 --data " + (c / "buffer.csv").string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("out-of-bag error") != std::string::npos);
  const auto lines = lines_of(r.out);
  std::size_t ranked = 0;
  for (const auto& line : lines) {
    const auto w = words(line);
    if (w.size() == 4 && std::isdigit(static_cast<unsigned char>(w[0][0]))) ++ranked;
  }
  CHECK(ranked == 21);
  CHECK(r.out.find("noise") != std::string::npos);
}
