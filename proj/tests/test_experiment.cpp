#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "mipnn/data.hpp"
#include "mipnn/errors.hpp"
#include "mipnn/experiment.hpp"

using namespace mipnn;
namespace fs = std::filesystem;

namespace {

std::pair<EncodedDataset, EncodedDataset> fixture(size_t n_train,
                                                  size_t n_test,
                                                  uint64_t seed) {
  ColumnSchema schema = separable_schema();
  RawTable train = make_separable_table(n_train, seed, 0.2);
  RawTable test = make_separable_table(n_test, seed + 1, 0.2);
  EncodeResult enc = fit_encode(train, test, schema);
  return {std::move(enc.train), std::move(enc.test)};
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.hidden = {2};
  cfg.time_limit_s = 120.0;
  cfg.accuracy_stop = 0.9;
  cfg.sample_counts = {6, 10};
  cfg.seeds = {1, 2};
  cfg.gd.epochs = 60;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The results CSV with the wall_time_s column blanked out.
std::string stable_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  for (const auto& r : records) {
    os << r.model << '|' << r.objective << '|' << r.p << '|' << r.n_samples
       << '|' << r.seed << '|' << r.train_acc << '|' << r.test_acc << '|'
       << r.status << '|' << r.objective_value << '|' << r.error << '\n';
  }
  return os.str();
}

}  // namespace

TEST_CASE("experiment 1 produces one record per model/count/seed") {
  auto [train, test] = fixture(24, 30, 7);
  ExperimentConfig cfg = tiny_config();
  cfg.models = {TrainMethod::SatMargin, TrainMethod::Gd};
  std::vector<RunRecord> records = run_experiment1(cfg, train, test);
  CHECK(records.size() == 2 * 2 * 2);
  for (const auto& r : records) {
    CHECK(r.error.empty());
    CHECK(r.train_acc >= 0.0);
    CHECK(r.train_acc <= 1.0);
    CHECK(r.wall_time_s >= 0.0);
  }
}

TEST_CASE("solver runs end at the stopping accuracy or without a proof") {
  auto [train, test] = fixture(24, 20, 37);
  ExperimentConfig cfg = tiny_config();
  cfg.models = {TrainMethod::MaxCorrect, TrainMethod::MinHinge,
                TrainMethod::SatMargin};
  cfg.sample_counts = {8};
  std::vector<RunRecord> records = run_experiment1(cfg, train, test);
  for (const auto& r : records) {
    REQUIRE(r.error.empty());
    bool solved = r.status == "optimal" || r.status == "feasible-stopped";
    CHECK((r.train_acc >= 0.9 || !solved));
  }
}

TEST_CASE("experiment 1 is deterministic apart from wall time") {
  auto [train, test] = fixture(20, 20, 13);
  ExperimentConfig cfg = tiny_config();
  cfg.models = {TrainMethod::MaxCorrect, TrainMethod::Gd};
  cfg.sample_counts = {8};
  std::vector<RunRecord> a = run_experiment1(cfg, train, test);
  std::vector<RunRecord> b = run_experiment1(cfg, train, test);
  CHECK(stable_csv(a) == stable_csv(b));
}

TEST_CASE("summary rows average the per-seed results") {
  std::vector<RunRecord> records;
  for (uint64_t seed : {1, 2, 3}) {
    RunRecord r;
    r.model = "sat-margin";
    r.objective = "sat-margin";
    r.p = 1;
    r.n_samples = 10;
    r.seed = seed;
    r.train_acc = 0.9 + 0.03 * seed;  // 0.93, 0.96, 0.99
    r.test_acc = 0.5;
    r.status = "optimal";
    records.push_back(r);
  }
  const std::string path =
      (fs::temp_directory_path() / "mipnn_summary_test.csv").string();
  write_summary_csv(path, records);
  std::string text = slurp(path);
  CHECK(text.find("sat-margin,1,10,3,0.96,") != std::string::npos);
  fs::remove(path);
}

TEST_CASE("results CSV columns are fixed") {
  const std::string path =
      (fs::temp_directory_path() / "mipnn_results_test.csv").string();
  write_records_csv(path, {});
  CHECK(slurp(path) ==
        "model,objective,p,n_samples,seed,train_acc,test_acc,wall_time_s,"
        "status,objective_value\n");
  fs::remove(path);
}

TEST_CASE("equal seeds share the training subset across P values") {
  auto [train, test] = fixture(30, 10, 19);
  (void)test;
  EncodedDataset a = subsample(train, 12, 5);
  EncodedDataset b = subsample(train, 12, 5);
  CHECK(a.features == b.features);  // P plays no role in the subset draw
  EncodedDataset c = subsample(train, 12, 6);
  CHECK(a.features != c.features);
}

TEST_CASE("experiment 2 sweeps P and keeps per-run wall times") {
  auto [train, test] = fixture(20, 16, 23);
  ExperimentConfig cfg = tiny_config();
  cfg.p_values = {1};
  cfg.sample_counts = {6};
  std::vector<RunRecord> records = run_experiment2(cfg, train, test);
  CHECK(records.size() == 2);  // one P, two seeds
  for (const auto& r : records) {
    CHECK(r.model == "sat-margin");
    CHECK(r.p == 1);
    CHECK(r.wall_time_s > 0.0);
  }
  const std::string dir =
      (fs::temp_directory_path() / "mipnn_exp2_test").string();
  fs::create_directories(dir);
  write_records_csv(dir + "/results.csv", records);
  write_summary_csv(dir + "/summary.csv", records);
  std::string summary = slurp(dir + "/summary.csv");
  CHECK(summary.find("mean_wall_time_s") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("failed runs are recorded and the drive continues") {
  auto [train, test] = fixture(10, 10, 29);
  ExperimentConfig cfg = tiny_config();
  cfg.models = {TrainMethod::SatMargin};
  cfg.sample_counts = {6};
  cfg.seeds = {1};
  cfg.backend = BackendKind::External;
  cfg.solver_cmd = "exit 7";  // always fails
  std::vector<RunRecord> records = run_experiment1(cfg, train, test);
  REQUIRE(records.size() == 1);
  CHECK(records[0].status == "error");
  CHECK(!records[0].error.empty());
}

TEST_CASE("parallel execution yields the same records as serial") {
  auto [train, test] = fixture(20, 12, 31);
  ExperimentConfig cfg = tiny_config();
  cfg.models = {TrainMethod::MaxCorrect, TrainMethod::SatMargin,
                TrainMethod::Gd};
  cfg.sample_counts = {6};
  std::vector<RunRecord> serial = run_experiment1(cfg, train, test);
  cfg.jobs = 4;
  std::vector<RunRecord> parallel = run_experiment1(cfg, train, test);
  CHECK(stable_csv(serial) == stable_csv(parallel));
}

TEST_CASE("trend helpers flag only broken trends") {
  std::vector<RunRecord> good;
  for (const char* model : {"sat-margin", "max-correct"}) {
    RunRecord r;
    r.model = model;
    r.p = 1;
    r.n_samples = 40;
    r.seed = 1;
    r.test_acc = model == std::string("sat-margin") ? 0.8 : 0.7;
    good.push_back(r);
  }
  CHECK(trend_warnings_exp1(good).empty());
  good[0].test_acc = 0.6;
  CHECK(trend_warnings_exp1(good).size() == 1);

  std::vector<RunRecord> times;
  for (uint64_t seed : {1, 2, 3}) {
    for (int p : {1, 7}) {
      RunRecord r;
      r.model = "sat-margin";
      r.p = p;
      r.n_samples = 40;
      r.seed = seed;
      r.wall_time_s = p == 7 ? 1.0 : 2.0;
      times.push_back(r);
    }
  }
  CHECK(trend_warnings_exp2(times).empty());
  for (auto& r : times) {
    if (r.p == 7) r.wall_time_s = 5.0;
  }
  CHECK(trend_warnings_exp2(times).size() == 1);
}

TEST_CASE("config validation rejects nonsense") {
  ExperimentConfig cfg = tiny_config();
  cfg.p_bound = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = tiny_config();
  cfg.sample_counts.clear();
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = tiny_config();
  cfg.accuracy_stop = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = tiny_config();
  cfg.margin = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("method names round-trip") {
  CHECK(train_method_from_string("max-correct") == TrainMethod::MaxCorrect);
  CHECK(train_method_from_string("gd") == TrainMethod::Gd);
  CHECK(std::string(to_string(TrainMethod::MinHinge)) == "min-hinge");
  CHECK_THROWS_AS(train_method_from_string("uphill"), InputError);
}
