#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "mgt/score_model.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = mgt::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mgt_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("synth is reproducible") {
  TempDir dir;
  REQUIRE(run({"synth", "--out", dir / "a.jsonl", "--seed", "1", "--n-machine", "20", "--n-human", "20"}).code == 0);
  REQUIRE(run({"synth", "--out", dir / "b.jsonl", "--seed", "1", "--n-machine", "20", "--n-human", "20"}).code == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(mgt::read_corpus_file(dir / "a.jsonl").size() == 40);
}

TEST_CASE("usage errors exit with 1") {
  const Result r = run({"fit", "--train", "t.jsonl", "--val", "v.jsonl", "--model-file", "m.json"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--method") != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({"fit", "--method", "gptzero", "--train", "t", "--val", "v", "--model-file", "m"}).code == 1);
  CHECK(run({"eval", "--in", "x", "--method", "likelihood", "--fpr", "2"}).code == 1);
}

TEST_CASE("help exits with 0") {
  const Result r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("detect") != std::string::npos);
}

TEST_CASE("data errors exit with 2") {
  TempDir dir;
  std::ofstream(dir / "bad.jsonl") << "{not json\n";
  const Result r = run({"analyze", "--in", dir / "bad.jsonl"});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 1") != std::string::npos);
}

TEST_CASE("fit then detect") {
  TempDir dir;
  REQUIRE(run({"synth", "--out", dir / "train.jsonl", "--seed", "2", "--n-machine", "30", "--n-human", "30"}).code == 0);
  REQUIRE(run({"synth", "--out", dir / "val.jsonl", "--seed", "3", "--n-machine", "30", "--n-human", "30"}).code == 0);
  REQUIRE(run({"synth", "--out", dir / "test.jsonl", "--seed", "4", "--n-machine", "5", "--n-human", "5"}).code == 0);
  const Result fitted = run({"fit", "--method", "likelihood", "--train", dir / "train.jsonl", "--val",
                             dir / "val.jsonl", "--model-file", dir / "m.json"});
  REQUIRE(fitted.code == 0);
  CHECK(fs::exists(dir / "m.json"));

  SUBCASE("csv") {
    const Result r = run({"detect", "--model-file", dir / "m.json", "--in", dir / "test.jsonl",
                          "--dump-calibrated", dir / "cal.jsonl"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0] == "id,F,f_enh,r_rule,error");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(std::count(rows[i].begin(), rows[i].end(), ',') == 4);
      CHECK(rows[i].back() == ',');
    }
    const auto dumped = mgt::read_corpus_file(dir / "cal.jsonl");
    REQUIRE(dumped.size() == 10);
    CHECK(dumped.records[0].has_stream("calibrated"));
  }
  SUBCASE("jsonl") {
    const Result r = run({"detect", "--model-file", dir / "m.json", "--in", dir / "test.jsonl", "--format",
                          "jsonl", "--threads", "2"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 10);
    const auto first = nlohmann::json::parse(rows[0]);
    CHECK(first.contains("F"));
    CHECK(first.contains("r_rule"));
  }
  SUBCASE("config file supplies defaults, flags win") {
    std::ofstream(dir / "cfg.toml") << "[fit]\nmethod = \"likelihood\"\nlambda = 0.25\n";
    REQUIRE(run({"fit", "--config", dir / "cfg.toml", "--train", dir / "train.jsonl", "--val", dir / "val.jsonl",
                 "--model-file", dir / "m2.json"})
                .code == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "m2.json"))["lambda"] == 0.25);
    REQUIRE(run({"fit", "--config", dir / "cfg.toml", "--lambda", "0.5", "--train", dir / "train.jsonl", "--val",
                 dir / "val.jsonl", "--model-file", dir / "m3.json"})
                .code == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "m3.json"))["lambda"] == 0.5);
  }
}

TEST_CASE("eval and analyze") {
  TempDir dir;
  REQUIRE(run({"synth", "--out", dir / "c.jsonl", "--n-machine", "50", "--n-human", "50"}).code == 0);

  const Result e = run({"eval", "--in", dir / "c.jsonl", "--method", "likelihood", "--seeds", "1,2",
                        "--baseline-out", dir / "base.csv"});
  REQUIRE(e.code == 0);
  const auto rows = lines(e.out);
  CHECK(rows[0] == "seed,group,auroc,tpr_at_fpr");
  CHECK(rows.size() == 1 + 4 + 4);
  CHECK(lines(slurp(dir / "base.csv")).size() == rows.size());

  CHECK(run({"eval", "--in", dir / "c.jsonl", "--method", "likelihood", "--train-source", "nope"}).code == 1);

  const Result k = run({"analyze", "--in", dir / "c.jsonl", "--kind", "khop", "--ks", "1,5"});
  REQUIRE(k.code == 0);
  CHECK(lines(k.out).size() == 3);
  const Result p = run({"analyze", "--in", dir / "c.jsonl", "--kind", "position", "--format", "jsonl"});
  REQUIRE(p.code == 0);
  CHECK(nlohmann::json::parse(lines(p.out)[0])["t"] == 1);
  const Result s = run({"analyze", "--in", dir / "c.jsonl", "--kind", "stats"});
  REQUIRE(s.code == 0);
  CHECK(lines(s.out).size() == 101);
}
