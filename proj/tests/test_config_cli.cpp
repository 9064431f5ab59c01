#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "pods/cli.hpp"
#include "pods/config.hpp"
#include "pods/curve_io.hpp"

using namespace pods;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("pods_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "pods");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("config parsing") {
  const TrainConfig c = train_config_from_json(json::parse(R"({"n": 32, "m": 8, "rule": "random", "rule_seed": 4,
      "cost": {"sat_batch": 256}})"));
  CHECK(c.n == 32);
  CHECK(c.m == 8);
  REQUIRE(c.rule.has_value());
  CHECK(c.rule->kind == RuleKind::random);
  CHECK(c.rule->seed == 4u);
  CHECK(c.cost.sat_batch == 256.0);
  CHECK(c.cost.floor_frac == CostModelParams{}.floor_frac);

  CHECK(!train_config_from_json(json::parse(R"({"n": 8, "m": 8, "rule": "none"})")).rule);

  auto key_of = [](const std::string& text) {
    try {
      train_config_from_json(json::parse(text));
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  CHECK(key_of(R"({"m": 8})") == "n");
  CHECK(key_of(R"({"n": 8, "m": 8, "lr": 1})") == "lr");
  CHECK(key_of(R"({"n": 8, "m": 8, "rule": "median"})") == "rule");
  CHECK(key_of(R"({"n": 8, "m": 8, "cost": {"sat": 1}})") == "cost.sat");
  CHECK(key_of(R"({"n": 8, "m": -1})") == "m");
  CHECK(key_of(R"({"n": 8, "m": 9})") == "<config>");
}

TEST_CASE("config serialization round-trips") {
  TrainConfig c;
  c.name = "x";
  c.n = 24;
  c.m = 6;
  c.rule = DownSampleRule{RuleKind::max_reward, {}};
  c.cost.t_update_step = 7.0;
  const TrainConfig d = train_config_from_json(to_json(c));
  CHECK(to_json(d) == to_json(c));
}

TEST_CASE("overrides") {
  json doc = json::parse(R"({"n": 16, "m": 4})");
  apply_overrides(doc, {"m=8", "name=probe", "cost.sat_batch=64", "rule=\"random\""});
  CHECK(doc["m"] == 8);
  CHECK(doc["name"] == "probe");
  CHECK(doc["cost"]["sat_batch"] == 64);
  CHECK(doc["rule"] == "random");
  CHECK_THROWS_AS(apply_overrides(doc, {"novalue"}), ConfigError);
}

TEST_CASE("curve csv and json") {
  const TrainingCurve c = {{1.5, 0.25, 3.0, 1.75, 5}, {3.0, 0.5, 2.5, 2.0, 10}};
  std::ostringstream os;
  write_curve_csv(os, c);
  CHECK(os.str() == "sim_seconds,accuracy,mean_len,mean_reward,iter\n1.5,0.25,3,1.75,5\n3,0.5,2.5,2,10\n");
  const TrainingCurve back = curve_from_json(json::parse(to_json(c).dump()));
  REQUIRE(back.size() == 2);
  CHECK(back[1].sim_seconds == 3.0);
  CHECK(back[1].iter == 10);
  CHECK(format_real(0.1) == "0.1");
}

TEST_CASE("cli: missing required key exits with a config error naming it") {
  TempDir dir("missing");
  write_file(dir.path / "bad.json", R"({"m": 4})");
  const auto r = run({"train", "--config", (dir.path / "bad.json").string(), "--out", (dir.path / "o").string()});
  CHECK(r.code == exit_config);
  CHECK(r.err.find("'n'") != std::string::npos);
  CHECK(run({"train", "--config", (dir.path / "absent.json").string()}).code == exit_config);
  CHECK(run({"frobnicate"}).code == exit_config);
}

TEST_CASE("cli: train is reproducible and writes a reusable manifest") {
  TempDir dir("train");
  write_file(dir.path / "c.json", R"({"name": "tiny", "n": 8, "m": 4, "iterations": 6, "eval_every": 3})");
  const auto a = run({"train", "--config", (dir.path / "c.json").string(), "--out", (dir.path / "a").string()});
  const auto b = run({"train", "--config", (dir.path / "c.json").string(), "--out", (dir.path / "b").string()});
  REQUIRE(a.code == exit_ok);
  REQUIRE(b.code == exit_ok);
  for (const char* f : {"curve.csv", "curve.json", "policy.json", "manifest.json"})
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  CHECK(lines(slurp(dir.path / "a" / "curve.csv")).size() == 3);

  // Re-running from the manifest reproduces the run.
  const auto c = run({"train", "--config", (dir.path / "a" / "manifest.json").string(), "--out",
                      (dir.path / "c").string()});
  REQUIRE(c.code == exit_ok);
  CHECK(slurp(dir.path / "a" / "curve.csv") == slurp(dir.path / "c" / "curve.csv"));

  const auto d = run({"train", "--config", (dir.path / "c.json").string(), "--set", "iterations=3", "--seed", "7",
                      "--out", (dir.path / "d").string()});
  REQUIRE(d.code == exit_ok);
  const json m = json::parse(slurp(dir.path / "d" / "manifest.json"));
  CHECK(m["resolved_config"]["iterations"] == 3);
  CHECK(m["resolved_config"]["seed"] == 7);
  CHECK(m["seed"] == 7);
}

TEST_CASE("cli: compare writes curves and speedups") {
  TempDir dir("compare");
  write_file(dir.path / "base.json", R"({"name": "base", "n": 8, "m": 8, "rule": "none", "iterations": 6, "eval_every": 3})");
  write_file(dir.path / "cand.json", R"({"name": "cand", "n": 16, "m": 8, "iterations": 6, "eval_every": 3})");
  const auto r = run({"compare", "--config", (dir.path / "base.json").string(), "--config",
                      (dir.path / "cand.json").string(), "--out", (dir.path / "o").string()});
  REQUIRE(r.code == exit_ok);
  const auto speed = lines(slurp(dir.path / "o" / "speedup.csv"));
  REQUIRE(speed.size() == 3);
  CHECK(speed[0] == "name,peak_acc,t_to_target,ratio");
  CHECK(speed[1].rfind("base,", 0) == 0);
  CHECK(speed[1].substr(speed[1].rfind(',') + 1) == "1");
  const auto curves = lines(slurp(dir.path / "o" / "curves.csv"));
  CHECK(curves[0] == "name,sim_seconds,accuracy,mean_len,mean_reward,iter");
  CHECK(curves.size() == 5);
}

TEST_CASE("cli: sweep and simulate-cost") {
  TempDir dir("sweep");
  write_file(dir.path / "c.json", R"({"n": 8, "m": 4, "iterations": 4, "eval_every": 2})");
  auto r = run({"sweep", "--config", (dir.path / "c.json").string(), "--n-grid", "8,16", "--m-grid", "2,4", "--out",
                (dir.path / "s").string()});
  REQUIRE(r.code == exit_ok);
  CHECK(lines(slurp(dir.path / "s" / "sweep.csv")).size() == 1 + 4 * 2);
  r = run({"sweep", "--config", (dir.path / "c.json").string(), "--n-grid", "4", "--m-grid", "8", "--out",
           (dir.path / "s2").string()});
  CHECK(r.code == exit_config);

  r = run({"simulate-cost", "--batches", "1,512", "--out", (dir.path / "k").string()});
  REQUIRE(r.code == exit_ok);
  const auto rows = lines(slurp(dir.path / "k" / "cost.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "batch,per_token_time,inference_time,update_time,iteration_time");
  CHECK(rows[1].rfind("1,1,", 0) == 0);
  CHECK(r.out.find("0.047619047619047") != std::string::npos);  // 1/21
}

TEST_CASE("cli: bench-select reports the growth check") {
  TempDir dir("bench");
  const auto r = run({"bench-select", "--sizes", "1000,4000", "--reps", "3", "--out", dir.path.string()});
  REQUIRE(r.code == exit_ok);
  CHECK((r.out.rfind("PASS", 0) == 0 || r.out.rfind("FAIL", 0) == 0));
  CHECK(lines(slurp(dir.path / "bench.csv")).size() == 3);
  const std::vector<BenchRow> rows = {{1000, 100.0}, {1000000, 200000.0}};
  const ComplexityCheck c = check_nlogn(rows);
  CHECK(c.bound == doctest::Approx(2500.0));
  CHECK(c.pass);
}
