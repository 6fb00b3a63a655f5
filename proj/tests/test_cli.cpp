#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nct/cli.hpp>

using namespace nct;
using namespace nct::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("nct_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Result run(const std::string& args) {
  const char* bin = std::getenv("NCT_BIN");
  if (!bin) throw std::runtime_error("NCT_BIN not set");
  fs::path d = scratch("io");
  std::string cmd = std::string(bin) + " " + args + " >" + (d / "out").string() + " 2>" + (d / "err").string();
  int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(d / "out"), slurp(d / "err")};
}

fs::path write_json(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

// same document, every object written with its keys in reverse order
nlohmann::ordered_json reversed(const json& j) {
  if (j.is_object()) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    for (auto k = keys.rbegin(); k != keys.rend(); ++k) o[*k] = reversed(j.at(*k));
    return o;
  }
  if (j.is_array()) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (auto& x : j) a.push_back(reversed(x));
    return a;
  }
  return nlohmann::ordered_json::parse(j.dump());
}

const std::string kSweepCase = "07_vw-sweep.json";

}  // namespace

TEST(Config, UnknownKeyIsNamed) {
  fs::path d = scratch("cfg");
  auto p = write_json(d / "c.json", R"({"schema_version": 1, "sweep": {"t_max": 1, "bogus": 2}})");
  Result r = run("vw-sweep --config " + p.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("sweep.bogus"), std::string::npos) << r.err;
}

TEST(Config, SchemaVersionRequired) {
  EXPECT_THROW(parse_config(json::parse(R"({"window": 4})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"schema_version": 2})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"schema_version": 1, "window": "four"})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"schema_version": 1, "algebra": {"tau": [0, -1]}})")), ConfigError);
  RunConfig c = parse_config(json::parse(R"({"schema_version": 1, "algebra": {"theta": 0.2}, "sweep": {"steps": 3}})"));
  EXPECT_EQ(c.params.theta, 0.2);
  EXPECT_EQ(c.steps, 3);
}

TEST(Config, ElementSyntax) {
  RunConfig c = parse_config(json::parse(
      R"({"schema_version": 1, "sweep": {"h": {"cos_u": 0.5, "terms": [[1, 1, 0.25, 0], [-1, -1, 0.25, 0]]}}})"));
  AlgebraElement expect = 0.5 * cos_u() + AlgebraElement::from_terms({{1, 1, 0.25}, {-1, -1, 0.25}});
  EXPECT_LT((c.h - expect).l1(), 1e-15);
}

TEST(Cli, BadInvocationsExitOne) {
  EXPECT_EQ(run("no-such-experiment").code, 1);
  EXPECT_EQ(run("spectrum --window x").code, 1);
  EXPECT_EQ(run("spectrum --config /nonexistent.json").code, 1);
}

TEST(Cli, SpectrumCsvAndPlot) {
  fs::path d = scratch("spectrum");
  Result r = run("spectrum --window 3 --plot --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv(d / "spectrum.csv");
  std::string header, line;
  std::getline(csv, header);
  EXPECT_EQ(header, "index,value");
  int rows = 0;
  double prev = -1e300;
  while (std::getline(csv, line)) {
    auto comma = line.find(',');
    ASSERT_NE(comma, std::string::npos);
    double v = std::stod(line.substr(comma + 1));
    EXPECT_GE(v, prev);
    prev = v;
    ++rows;
  }
  // (2N+1)^2 basis functions times two grades
  EXPECT_EQ(rows, 2 * 7 * 7);
  EXPECT_TRUE(fs::exists(d / "spectrum.gp"));
  json rep = json::parse(slurp(d / "spectrum.json"));
  EXPECT_EQ(rep["count"], rows);
}

TEST(Cli, NumbersCarrySeventeenDigits) {
  EXPECT_EQ(num(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(num(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Cli, DeterministicOutput) {
  fs::path d = scratch("det");
  auto p = write_json(d / "c.json", R"({"schema_version": 1, "sweep": {"t_max": 1, "steps": 2, "m_lambda": 3, "m_norm": 4}})");
  Result a = run("vw-sweep --config " + p.string());
  Result b = run("vw-sweep --config " + p.string());
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_TRUE(json::parse(a.out).contains("records"));
}

TEST(Cli, FlagsOverrideConfig) {
  fs::path d = scratch("override");
  auto p = write_json(d / "c.json", R"({"schema_version": 1, "window": 5})");
  Result r = run("spectrum --window 2 --config " + p.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["window"], 2);
}

TEST(Cli, UncertifiedIndexExitsTwo) {
  fs::path d = scratch("uncert");
  auto p = write_json(d / "c.json", R"({"schema_version": 1, "ladder": {"rungs": [8]}})");
  Result r = run("index --config " + p.string());
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_EQ(json::parse(r.out)["certified"], false);
}

TEST(Compare, ToleranceAndStructure) {
  ToleranceTable t;
  std::vector<std::string> d;
  compare_json(json::parse(R"({"a": 1.0, "b": [1, 2]})"), json::parse(R"({"b": [1, 2], "a": 1.0000000000001})"), t, "x",
               "", d);
  EXPECT_TRUE(d.empty());

  compare_json(json::parse(R"({"a": 1.0})"), json::parse(R"({"a": 1.001})"), t, "x", "", d);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].find("x.a"), std::string::npos);

  d.clear();
  compare_json(json::parse(R"({"a": 1, "b": 2})"), json::parse(R"({"a": 1, "c": 2})"), t, "x", "", d);
  EXPECT_EQ(d.size(), 2u);

  d.clear();
  compare_json(json::parse("[1, 2]"), json::parse("[1, 2, 3]"), t, "x", "", d);
  EXPECT_EQ(d.size(), 1u);

  d.clear();
  compare_json(json::parse(R"({"s": "left"})"), json::parse(R"({"s": "right"})"), t, "x", "", d);
  EXPECT_EQ(d.size(), 1u);
}

TEST(Compare, PerFieldTolerance) {
  ToleranceTable t = parse_tolerances(json::parse(R"({"rel": 1e-12, "fields": {"loose": {"rel": 1e-2}}})"));
  std::vector<std::string> d;
  compare_json(json::parse(R"({"loose": [1.0], "tight": 1.0})"), json::parse(R"({"loose": [1.005], "tight": 1.0})"), t,
               "x", "", d);
  EXPECT_TRUE(d.empty());
  compare_json(json::parse(R"({"tight": 1.0})"), json::parse(R"({"tight": 1.000001})"), t, "x", "", d);
  EXPECT_EQ(d.size(), 1u);
}

TEST(Regression, BundledCorpusReplays) {
  Result r = run("regression --all");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.err.find("MISMATCH"), std::string::npos) << r.err;
}

TEST(Regression, PerturbedLambdaIsReported) {
  fs::path d = scratch("perturbed");
  json c = load_json_file(default_corpus() + "/" + kSweepCase);
  c["expected"]["records"][1]["lambda1"] = c["expected"]["records"][1]["lambda1"].get<double>() + 1e-3;
  std::ofstream(d / kSweepCase) << c.dump(2);
  Result r = run("regression --corpus " + d.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("records[1].lambda1"), std::string::npos) << r.err;
}

TEST(Regression, ReorderedKeysStillMatch) {
  fs::path d = scratch("reordered");
  json c = load_json_file(default_corpus() + "/" + kSweepCase);
  std::string text = reversed(c).dump(1);
  ASSERT_NE(text, c.dump(1));
  std::ofstream(d / kSweepCase) << text;
  Result r = run("regression --corpus " + d.string());
  EXPECT_EQ(r.code, 0) << r.err;
}
