#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mipnn/data.hpp"

namespace fs = std::filesystem;

namespace {

const char* cli() { return MIPNN_CLI_PATH; }

int run(const std::string& args, const std::string& log = "/dev/null") {
  std::string cmd = std::string(cli()) + " " + args + " > " + log + " 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("train on the synthetic fixture records >= 0.9 accuracy") {
  TempDir out("mipnn_cli_train");
  int code = run(
      "train --synthetic 60 --synthetic-test 40 --objective sat-margin "
      "--p 1 --hidden 2 --n 20 --seed 1 --time-limit 120 --out " +
      out.str());
  REQUIRE(code == 0);
  nlohmann::json record;
  std::ifstream(out.path / "run.json") >> record;
  CHECK(record["train_acc"].get<double>() >= 0.9);
  CHECK(fs::exists(out.path / "network.json"));

  // The saved network evaluates.
  int eval_code =
      run("eval --network " + (out.path / "network.json").string() +
          " --synthetic 60 --synthetic-test 40 --seed 1");
  CHECK(eval_code == 0);
}

TEST_CASE("missing dataset paths exit with the IO error code") {
  CHECK(run("train --objective sat-margin --p 1 --n 5") == 4);
  CHECK(run("train --train nope.csv --test nope.csv --schema nope.json "
            "--n 5") == 4);
}

TEST_CASE("p = 0 fails config validation before any work") {
  CHECK(run("train --synthetic 30 --objective sat-margin --p 0 --n 5") == 1);
}

TEST_CASE("export-mps is deterministic and prints model stats") {
  TempDir out("mipnn_cli_export");
  const std::string mps_a = (out.path / "a.mps").string();
  const std::string mps_b = (out.path / "b.mps").string();
  const std::string log = (out.path / "log.txt").string();
  REQUIRE(run("export-mps --synthetic 30 --objective sat-margin --p 1 "
              "--hidden 2 --n 6 --seed 1 --out " + mps_a, log) == 0);
  REQUIRE(run("export-mps --synthetic 30 --objective sat-margin --p 1 "
              "--hidden 2 --n 6 --seed 1 --out " + mps_b) == 0);
  CHECK(slurp(mps_a) == slurp(mps_b));
  CHECK(!slurp(mps_a).empty());

  // Closed-form counts for arch [2,2,2], |T|=6, P=1 with sat-margin:
  // vars = 8w + 4b + 12u + 24c + 12o = 60; rows = 96 link + 24 sign big-M
  // + 24 margin big-M = 144.
  std::string stats = slurp(log);
  CHECK(stats.find("variables 60") != std::string::npos);
  CHECK(stats.find("constraints 144") != std::string::npos);
}

TEST_CASE("verify passes on tiny instances and catches corruption") {
  CHECK(run("verify --arch 2,2,2 --p 1 --n 2 --seeds 1 --objectives "
            "sat-margin max-correct") == 0);
  CHECK(run("verify --arch 2,2,2 --p 1 --n 3 --seeds 1 --objectives "
            "max-correct min-hinge --corrupt-big-m") == 0);
}

TEST_CASE("prep-data writes encoded caches usable by train") {
  TempDir out("mipnn_cli_prep");
  REQUIRE(run("prep-data --synthetic 40 --synthetic-test 20 --emit-csv "
              "--out " + out.str()) == 0);
  CHECK(fs::exists(out.path / "train.csv"));
  CHECK(fs::exists(out.path / "schema.json"));
  mipnn::EncodedDataset train =
      mipnn::EncodedDataset::load((out.path / "train").string());
  CHECK(train.size() == 40);

  TempDir run_out("mipnn_cli_prep_train");
  CHECK(run("train --data-dir " + out.str() +
            " --objective max-correct --p 1 --hidden 2 --n 10 --seed 2 "
            "--time-limit 120 --out " + run_out.str()) == 0);
}

TEST_CASE("exp1 produces results, summary and the plot script") {
  TempDir out("mipnn_cli_exp1");
  int code = run(
      "exp1 --synthetic 30 --synthetic-test 30 --hidden 2 --p 1 "
      "--samples 6 8 --seeds 1 2 --models sat-margin gd --time-limit 60 "
      "--out " + out.str());
  REQUIRE(code == 0);
  std::string results = slurp((out.path / "results.csv").string());
  CHECK(results.find("model,objective,p,n_samples,seed,train_acc,test_acc,"
                     "wall_time_s,status,objective_value") == 0);
  // 1 model x 2 counts x 2 seeds for each of sat-margin and gd.
  CHECK(std::count(results.begin(), results.end(), '\n') == 1 + 8);
  CHECK(fs::exists(out.path / "summary.csv"));
  CHECK(fs::exists(out.path / "plot_results.py"));
}

TEST_CASE("gd training writes the epoch history CSV") {
  TempDir out("mipnn_cli_gd");
  REQUIRE(run("train --synthetic 40 --objective gd --hidden 2 --n 16 "
              "--seed 1 --gd-epochs 30 --out " + out.str()) == 0);
  std::string history = slurp((out.path / "history.csv").string());
  CHECK(history.find("epoch,loss,train_accuracy") == 0);
  CHECK(std::count(history.begin(), history.end(), '\n') == 1 + 30);
  CHECK(fs::exists(out.path / "network.json"));
}

TEST_CASE("exp2 sweeps P values from the command line") {
  TempDir out("mipnn_cli_exp2");
  REQUIRE(run("exp2 --synthetic 30 --synthetic-test 20 --hidden 2 "
              "--p-values 1 --samples 6 --seeds 1 2 --time-limit 60 "
              "--out " + out.str()) == 0);
  std::string results = slurp((out.path / "results.csv").string());
  CHECK(std::count(results.begin(), results.end(), '\n') == 1 + 2);
  CHECK(results.find("sat-margin") != std::string::npos);
}

TEST_CASE("config file values apply but flags win") {
  TempDir out("mipnn_cli_config");
  const std::string cfg_path = (out.path / "cfg.json").string();
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"synthetic": 30, "n": 6, "hidden": [2], "objective")"
        << R"(: "max-correct", "time_limit": 60, "out": ")" << out.str()
        << R"("})";
  }
  REQUIRE(run("train --config " + cfg_path + " --seed 3") == 0);
  nlohmann::json record;
  std::ifstream(out.path / "run.json") >> record;
  CHECK(record["model"] == "max-correct");
  CHECK(record["n_samples"] == 6);

  // Flag overrides the config's objective.
  REQUIRE(run("train --config " + cfg_path +
              " --objective sat-margin --seed 3") == 0);
  std::ifstream(out.path / "run.json") >> record;
  CHECK(record["model"] == "sat-margin");
}
