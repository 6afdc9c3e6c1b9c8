#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tripleq/cli.hpp"
#include "tripleq/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tripleq;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "tripleq");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tripleq_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("run writes one CSV row per episode plus sidecars") {
  const auto dir = scratch_dir("run");
  const auto res = invoke({"run", "--env", "chain", "--episodes", "1000", "--seed", "7", "--mode", "practical",
                           "--out", dir.string()});
  REQUIRE(res.code == cli::kOk);
  CHECK(res.out.find("seed 7: episodes=1000") != std::string::npos);
  std::ifstream csv(dir / "run_seed7.csv");
  const auto rows = read_metrics_csv(csv);
  CHECK(rows.size() == 1000);
  const auto header = Json::parse(slurp(dir / "run_seed7.json"));
  CHECK(header["seed"] == 7);
  CHECK(header["env"] == "chain");
  CHECK(header["hyperparams"]["mode"] == "practical");
  CHECK(header.contains("timestamp"));
  const auto learner = learner_from_json(Json::parse(slurp(dir / "run_seed7.learner.json")));
  CHECK(learner.episodes_done() == 1000);
  fs::remove_all(dir);
}

TEST_CASE("identical invocations produce byte-identical CSVs") {
  const auto a = scratch_dir("same_a");
  const auto b = scratch_dir("same_b");
  for (const auto& dir : {a, b}) {
    REQUIRE(invoke({"run", "--env", "random", "--episodes", "500", "--seed", "1..2", "--out", dir.string()}).code ==
            cli::kOk);
  }
  for (const char* f : {"run_seed1.csv", "run_seed2.csv"}) {
    const auto x = slurp(a / f);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(b / f));
  }
  CHECK(slurp(a / "run_seed1.csv") != slurp(a / "run_seed2.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("baseline prints the LP optimum or infeasible") {
  auto res = invoke({"baseline", "--env", "chain"});
  REQUIRE(res.code == cli::kOk);
  auto doc = Json::parse(res.out);
  CHECK(doc["status"] == "optimal");
  CHECK(doc["objective"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));

  res = invoke({"baseline", "--env", "chain", "--epsilon", "0.1"});
  CHECK(Json::parse(res.out)["objective"].get<double>() == doctest::Approx(0.4).epsilon(1e-9));

  res = invoke({"baseline", "--env", "chain", "--rho", "1.5"});
  CHECK(res.code == cli::kOk);
  CHECK(Json::parse(res.out)["status"] == "infeasible");

  res = invoke({"baseline", "--env", "chain", "--policy"});
  doc = Json::parse(res.out);
  CHECK(doc["policy"][0][0][0].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("exit codes") {
  CHECK(invoke({"run", "--env", "chain"}).code == cli::kConfigError);
  CHECK(invoke({"baseline", "--env", "chain", "--rho", "-1"}).code == cli::kConfigError);
  CHECK(invoke({"baseline", "--env", "nowhere.json"}).code == cli::kConfigError);
  CHECK(invoke({"run", "--env", "chain", "--episodes", "10", "--mode", "greedy"}).code == cli::kConfigError);
  CHECK(invoke({"run", "--env", "chain", "--episodes", "0"}).code == cli::kConfigError);
  CHECK(invoke({"run", "--env", "chain", "--episodes", "10", "--seed", "5..1"}).code == cli::kConfigError);
  CHECK(invoke({"bogus"}).code == cli::kConfigError);
  const auto dir = scratch_dir("infeasible");
  const auto res = invoke({"run", "--env", "chain", "--rho", "1.5", "--episodes", "10", "--out", dir.string()});
  CHECK(res.code == cli::kInfeasible);
  CHECK(res.err.find("infeasible") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("theory mode refuses hyperparameter overrides") {
  const auto res = invoke({"run", "--env", "chain", "--episodes", "10", "--mode", "theory", "--iota", "1"});
  CHECK(res.code == cli::kConfigError);
  CHECK(res.err.find("mode") != std::string::npos);
}

TEST_CASE("config file supplies defaults and flags override it") {
  const auto dir = scratch_dir("config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"env": "chain", "episodes": 50, "seed": [3, 4], "mode": "practical", "out": ")"
        << (dir / "from_file").string() << "\"}";
  }
  REQUIRE(invoke({"run", "--config", (dir / "cfg.json").string()}).code == cli::kOk);
  CHECK(fs::exists(dir / "from_file" / "run_seed3.csv"));
  CHECK(fs::exists(dir / "from_file" / "run_seed4.csv"));

  REQUIRE(invoke({"run", "--config", (dir / "cfg.json").string(), "--episodes", "20", "--seed", "9", "--out",
                  (dir / "flags").string()})
              .code == cli::kOk);
  std::ifstream csv(dir / "flags" / "run_seed9.csv");
  CHECK(read_metrics_csv(csv).size() == 20);

  {
    std::ofstream bad(dir / "bad.json");
    bad << "{not json";
  }
  CHECK(invoke({"run", "--config", (dir / "bad.json").string()}).code == cli::kConfigError);
  fs::remove_all(dir);
}

TEST_CASE("env prints a spec that loads back, and compare summarizes CSVs") {
  auto res = invoke({"env", "--env", "gridworld"});
  REQUIRE(res.code == cli::kOk);
  const auto spec = cmdp_from_json(Json::parse(res.out));
  CHECK(spec.num_states() == 64);
  CHECK(spec.rho() == 14.0);

  const auto dir = scratch_dir("compare");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "spec.json");
    f << res.out;
  }
  CHECK(invoke({"baseline", "--env", (dir / "spec.json").string()}).code == cli::kOk);
  REQUIRE(invoke({"run", "--env", "chain", "--episodes", "100", "--seed", "2", "--out", dir.string()}).code ==
          cli::kOk);
  res = invoke({"compare", (dir / "run_seed2.csv").string(), "--tail", "0.5"});
  REQUIRE(res.code == cli::kOk);
  CHECK(res.out.rfind("file,episodes,", 0) == 0);
  CHECK(res.out.find("run_seed2.csv,100,") != std::string::npos);
  CHECK(invoke({"compare", (dir / "missing.csv").string()}).code == cli::kConfigError);
  fs::remove_all(dir);
}
