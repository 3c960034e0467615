#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mipnn/baseline.hpp"
#include "mipnn/data.hpp"
#include "mipnn/errors.hpp"
#include "mipnn/experiment.hpp"
#include "mipnn/mps.hpp"
#include "mipnn/network.hpp"
#include "mipnn/oracle.hpp"
#include "mipnn/solve.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 config validation, 2 infeasible, 3 time limit
// without incumbent, 4 solver/parse/IO error.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitTimeout = 3;
constexpr int kExitError = 4;

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const mipnn::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const mipnn::TimeoutError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTimeout;
  } catch (const mipnn::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

// Late-bound defaults: a config file value applies only when the flag was
// not given on the command line (flags win).
class ConfigBinder {
 public:
  template <typename T>
  void bind(CLI::Option* opt, T& target, std::string key) {
    appliers_.push_back([opt, &target, key](const json& j) {
      if (opt->count() == 0 && j.contains(key)) {
        target = j.at(key).get<T>();
      }
    });
  }

  void apply_file(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw mipnn::ParseError("cannot read config file: " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw mipnn::ParseError("config file " + path + ": " + e.what());
    }
    for (auto& f : appliers_) f(j);
  }

 private:
  std::vector<std::function<void(const json&)>> appliers_;
};

struct DatasetOpts {
  std::string train_csv, test_csv, schema_path, data_dir;
  int synthetic = 0;
  int synthetic_test = 200;
  uint64_t synthetic_seed = 7;
  double synthetic_margin = 0.2;

  void add_flags(CLI::App* cmd, ConfigBinder& binder) {
    binder.bind(cmd->add_option("--train", train_csv, "Training CSV"),
                train_csv, "train");
    binder.bind(cmd->add_option("--test", test_csv, "Test CSV"), test_csv,
                "test");
    binder.bind(
        cmd->add_option("--schema", schema_path, "Column schema JSON"),
        schema_path, "schema");
    binder.bind(cmd->add_option("--data-dir", data_dir,
                                "Directory with encoded train/ and test/ "
                                "caches (from prep-data)"),
                data_dir, "data_dir");
    binder.bind(cmd->add_option("--synthetic", synthetic,
                                "Generate a separable synthetic training set "
                                "of this size instead of loading files"),
                synthetic, "synthetic");
    binder.bind(cmd->add_option("--synthetic-test", synthetic_test,
                                "Synthetic test set size"),
                synthetic_test, "synthetic_test");
    binder.bind(cmd->add_option("--synthetic-seed", synthetic_seed,
                                "Synthetic data seed"),
                synthetic_seed, "synthetic_seed");
  }

  std::pair<mipnn::EncodedDataset, mipnn::EncodedDataset> load() const {
    if (!train_csv.empty() || !test_csv.empty()) {
      if (train_csv.empty() || test_csv.empty() || schema_path.empty()) {
        throw mipnn::ParseError(
            "need --train, --test and --schema together for CSV input");
      }
      mipnn::ColumnSchema schema = mipnn::ColumnSchema::load(schema_path);
      mipnn::RawTable train = mipnn::load_csv(train_csv, schema);
      mipnn::RawTable test = mipnn::load_csv(test_csv, schema);
      mipnn::EncodeResult enc = mipnn::fit_encode(train, test, schema);
      for (const auto& w : enc.warnings) std::cerr << "warning: " << w << "\n";
      return {std::move(enc.train), std::move(enc.test)};
    }
    if (!data_dir.empty()) {
      return {mipnn::EncodedDataset::load(data_dir + "/train"),
              mipnn::EncodedDataset::load(data_dir + "/test")};
    }
    if (synthetic > 0) {
      mipnn::ColumnSchema schema = mipnn::separable_schema();
      mipnn::RawTable train = mipnn::make_separable_table(
          synthetic, synthetic_seed, synthetic_margin);
      mipnn::RawTable test = mipnn::make_separable_table(
          synthetic_test, synthetic_seed + 1, synthetic_margin);
      mipnn::EncodeResult enc = mipnn::fit_encode(train, test, schema);
      return {std::move(enc.train), std::move(enc.test)};
    }
    throw mipnn::ParseError(
        "no dataset: pass --train/--test/--schema, --data-dir, or "
        "--synthetic N");
  }
};

struct ModelOpts {
  std::string objective = "sat-margin";
  int p = 1;
  std::vector<int> hidden = {16};
  double time_limit = 600.0;
  double accuracy_stop = 0.9;
  bool no_accuracy_stop = false;
  double eps = 1e-5;
  double margin = 0.5;
  double pwl_spacing = 0.25;
  std::string backend = "builtin";
  std::string solver_cmd;
  bool linearize = false;
  double gd_lr = 0.1;
  int gd_epochs = 500;
  int gd_batch = 16;

  void add_flags(CLI::App* cmd, ConfigBinder& binder, bool with_objective) {
    if (with_objective) {
      binder.bind(cmd->add_option("--objective", objective,
                                  "max-correct | min-hinge | sat-margin | gd"),
                  objective, "objective");
    }
    binder.bind(cmd->add_option("--p", p, "Parameter bound P"), p, "p");
    binder.bind(cmd->add_option("--hidden", hidden,
                                "Hidden layer widths (default 16)"),
                hidden, "hidden");
    binder.bind(
        cmd->add_option("--time-limit", time_limit, "Solve time limit (s)"),
        time_limit, "time_limit");
    binder.bind(cmd->add_option("--accuracy-stop", accuracy_stop,
                                "Stop once training accuracy reaches this"),
                accuracy_stop, "accuracy_stop");
    cmd->add_flag("--no-accuracy-stop", no_accuracy_stop,
                  "Always solve to optimality");
    binder.bind(cmd->add_option("--eps", eps, "Strict-inequality tolerance"),
                eps, "eps");
    binder.bind(cmd->add_option("--margin", margin, "Sat-margin m"), margin,
                "margin");
    binder.bind(cmd->add_option("--pwl-spacing", pwl_spacing,
                                "Hinge breakpoint spacing"),
                pwl_spacing, "pwl_spacing");
    binder.bind(cmd->add_option("--backend", backend, "builtin | external"),
                backend, "backend");
    binder.bind(cmd->add_option("--solver-cmd", solver_cmd,
                                "External solver command template with {mps} "
                                "{sol} {time_limit_s} {target}"),
                solver_cmd, "solver_cmd");
    cmd->add_flag("--linearize", linearize,
                  "Solve the big-M form with the built-in backend");
    binder.bind(cmd->add_option("--gd-lr", gd_lr, "GD learning rate"), gd_lr,
                "gd_lr");
    binder.bind(cmd->add_option("--gd-epochs", gd_epochs, "GD epochs"),
                gd_epochs, "gd_epochs");
    binder.bind(cmd->add_option("--gd-batch", gd_batch, "GD batch size"),
                gd_batch, "gd_batch");
  }

  void fill(mipnn::ExperimentConfig& cfg) const {
    cfg.p_bound = p;
    cfg.hidden = hidden;
    cfg.time_limit_s = time_limit;
    if (no_accuracy_stop) {
      cfg.accuracy_stop.reset();
    } else {
      cfg.accuracy_stop = accuracy_stop;
    }
    cfg.eps = eps;
    cfg.margin = margin;
    cfg.pwl_spacing = pwl_spacing;
    cfg.linearize = linearize;
    if (backend == "builtin") {
      cfg.backend = mipnn::BackendKind::Builtin;
    } else if (backend == "external") {
      cfg.backend = mipnn::BackendKind::External;
    } else {
      throw mipnn::InputError("unknown backend: " + backend);
    }
    cfg.solver_cmd = solver_cmd;
    cfg.gd.learning_rate = gd_lr;
    cfg.gd.epochs = gd_epochs;
    cfg.gd.batch_size = gd_batch;
  }
};

json record_to_json(const mipnn::RunRecord& r) {
  json j;
  j["model"] = r.model;
  j["objective"] = r.objective;
  j["p"] = r.p;
  j["n_samples"] = r.n_samples;
  j["seed"] = r.seed;
  j["train_acc"] = r.train_acc;
  j["test_acc"] = r.test_acc;
  j["wall_time_s"] = r.wall_time_s;
  j["status"] = r.status;
  j["objective_value"] = r.objective_value;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

std::vector<int> parse_arch(const std::string& s) {
  std::vector<int> arch;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) arch.push_back(std::stoi(tok));
  return arch;
}

mipnn::MipModel build_objective_model(const mipnn::EncodedDataset& sub,
                                      const std::vector<int>& arch, int p,
                                      double eps, const std::string& objective,
                                      double margin, double pwl_spacing,
                                      mipnn::VarMap& varmap) {
  mipnn::BuildResult built = mipnn::build_base(sub, arch, p, eps);
  if (objective == "max-correct") {
    mipnn::attach_max_correct(built.model, built.varmap, sub.labels);
  } else if (objective == "min-hinge") {
    mipnn::attach_min_hinge(built.model, built.varmap, sub.labels,
                            mipnn::PwlSpec::uniform(pwl_spacing));
  } else if (objective == "sat-margin") {
    mipnn::attach_sat_margin(built.model, built.varmap, sub.labels, margin);
  } else {
    throw mipnn::InputError("unknown MIP objective: " + objective);
  }
  varmap = std::move(built.varmap);
  return std::move(built.model);
}

// ---------------------------------------------------------------- train --

void setup_train(CLI::App& app) {
  auto cmd = app.add_subcommand("train", "Train one network by MIP or GD");
  auto binder = std::make_shared<ConfigBinder>();
  auto data = std::make_shared<DatasetOpts>();
  auto model = std::make_shared<ModelOpts>();
  auto config_path = std::make_shared<std::string>();
  auto n = std::make_shared<int>(20);
  auto seed = std::make_shared<uint64_t>(1);
  auto out_dir = std::make_shared<std::string>("mipnn-out");

  cmd->add_option("--config", *config_path, "JSON config file (flags win)");
  data->add_flags(cmd, *binder);
  model->add_flags(cmd, *binder, /*with_objective=*/true);
  binder->bind(cmd->add_option("--n", *n, "Training samples"), *n, "n");
  binder->bind(cmd->add_option("--seed", *seed, "Run seed"), *seed, "seed");
  binder->bind(cmd->add_option("--out", *out_dir, "Output directory"),
               *out_dir, "out");

  cmd->callback([=]() {
    std::exit(run_guarded([&]() {
      binder->apply_file(*config_path);
      mipnn::ExperimentConfig cfg;
      model->fill(cfg);
      cfg.sample_counts = {*n};
      cfg.seeds = {*seed};
      cfg.validate();
      mipnn::TrainMethod method =
          mipnn::train_method_from_string(model->objective);

      auto [train, test] = data->load();
      if (*n > static_cast<int>(train.size())) {
        throw mipnn::InputError("--n exceeds the available training rows");
      }
      mipnn::IntegerNetwork net = mipnn::IntegerNetwork::zeros(
          cfg.arch_for(train.feature_width(), train.num_classes()), 1);
      std::vector<mipnn::EpochStats> history;
      mipnn::RunRecord record = mipnn::run_training(
          cfg, method, model->p, *n, *seed, train, test, &net, &history);

      fs::create_directories(*out_dir);
      net.save((fs::path(*out_dir) / "network.json").string());
      if (method == mipnn::TrainMethod::Gd) {
        mipnn::save_history_csv(history,
                                (fs::path(*out_dir) / "history.csv").string());
      }
      std::ofstream run_out(fs::path(*out_dir) / "run.json");
      run_out << record_to_json(record).dump(2) << "\n";
      std::cout << "status=" << record.status
                << " objective=" << record.objective_value
                << " train_acc=" << record.train_acc
                << " test_acc=" << record.test_acc << "\n";
    }));
  });
}

// ----------------------------------------------------------------- eval --

void setup_eval(CLI::App& app) {
  auto cmd = app.add_subcommand("eval", "Evaluate a saved network");
  auto binder = std::make_shared<ConfigBinder>();
  auto data = std::make_shared<DatasetOpts>();
  auto network_path = std::make_shared<std::string>();
  auto seed = std::make_shared<uint64_t>(1);

  data->add_flags(cmd, *binder);
  cmd->add_option("--network", *network_path, "Network JSON file")
      ->required();
  cmd->add_option("--seed", *seed, "Tie-break seed");

  cmd->callback([=]() {
    std::exit(run_guarded([&]() {
      mipnn::IntegerNetwork net = mipnn::IntegerNetwork::load(*network_path);
      auto [train, test] = data->load();
      std::cout << "train_accuracy " << mipnn::accuracy(net, train, *seed)
                << "\n";
      std::cout << "test_accuracy " << mipnn::accuracy(net, test, *seed)
                << "\n";
    }));
  });
}

// ----------------------------------------------------------- export-mps --

void setup_export(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "export-mps", "Build, linearize and write a model without solving");
  auto binder = std::make_shared<ConfigBinder>();
  auto data = std::make_shared<DatasetOpts>();
  auto model = std::make_shared<ModelOpts>();
  auto config_path = std::make_shared<std::string>();
  auto n = std::make_shared<int>(20);
  auto seed = std::make_shared<uint64_t>(1);
  auto out_path = std::make_shared<std::string>("model.mps");

  cmd->add_option("--config", *config_path, "JSON config file (flags win)");
  data->add_flags(cmd, *binder);
  model->add_flags(cmd, *binder, /*with_objective=*/true);
  binder->bind(cmd->add_option("--n", *n, "Training samples"), *n, "n");
  binder->bind(cmd->add_option("--seed", *seed, "Subsample seed"), *seed,
               "seed");
  binder->bind(cmd->add_option("--out", *out_path, "Output MPS path"),
               *out_path, "out");

  cmd->callback([=]() {
    std::exit(run_guarded([&]() {
      binder->apply_file(*config_path);
      if (model->p < 1) throw mipnn::InputError("P must be a positive integer");
      auto [train, test] = data->load();
      (void)test;
      mipnn::EncodedDataset sub = mipnn::subsample(train, *n, *seed);
      std::vector<int> arch;
      arch.push_back(sub.feature_width());
      arch.insert(arch.end(), model->hidden.begin(), model->hidden.end());
      arch.push_back(sub.num_classes());

      mipnn::VarMap varmap;
      mipnn::MipModel m =
          build_objective_model(sub, arch, model->p, model->eps,
                                model->objective, model->margin,
                                model->pwl_spacing, varmap);
      size_t n_ind = m.indicators().size();
      mipnn::MipModel lin = mipnn::linearize_indicators(m);
      mipnn::export_mps(lin, *out_path);

      size_t n_bin = 0, n_int = 0, n_cont = 0;
      for (const auto& v : lin.vars()) {
        if (v.kind == mipnn::VarKind::Binary) ++n_bin;
        else if (v.kind == mipnn::VarKind::Integer) ++n_int;
        else ++n_cont;
      }
      std::cout << "wrote " << *out_path << "\n"
                << "variables " << lin.vars().size() << " (integer " << n_int
                << ", binary " << n_bin << ", continuous " << n_cont << ")\n"
                << "constraints " << lin.rows().size() << " (from " << n_ind
                << " indicators)\n";
    }));
  });
}

// ------------------------------------------------------------ exp1/exp2 --

void run_experiment_command(
    const DatasetOpts& data, const mipnn::ExperimentConfig& cfg,
    const std::string& out_dir, bool experiment2) {
  auto [train, test] = data.load();
  for (int n : cfg.sample_counts) {
    if (n > static_cast<int>(train.size())) {
      throw mipnn::InputError("sample count " + std::to_string(n) +
                              " exceeds the training rows (" +
                              std::to_string(train.size()) + ")");
    }
  }
  std::vector<mipnn::RunRecord> records =
      experiment2 ? mipnn::run_experiment2(cfg, train, test)
                  : mipnn::run_experiment1(cfg, train, test);

  fs::create_directories(out_dir);
  mipnn::write_records_csv((fs::path(out_dir) / "results.csv").string(),
                           records);
  mipnn::write_summary_csv((fs::path(out_dir) / "summary.csv").string(),
                           records);
  mipnn::write_plot_script((fs::path(out_dir) / "plot_results.py").string());

  size_t failures = 0;
  for (const auto& r : records) {
    if (!r.error.empty()) {
      ++failures;
      std::cerr << "warning: run (" << r.model << ", p=" << r.p
                << ", n=" << r.n_samples << ", seed=" << r.seed
                << ") failed: " << r.error << "\n";
    }
  }
  const auto warnings = experiment2 ? mipnn::trend_warnings_exp2(records)
                                    : mipnn::trend_warnings_exp1(records);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << records.size() << " runs (" << failures
            << " failed) to " << out_dir << "\n";
  if (failures == records.size()) {
    throw mipnn::SolverError("every run failed");
  }
}

void setup_experiments(CLI::App& app) {
  for (bool experiment2 : {false, true}) {
    auto cmd = app.add_subcommand(
        experiment2 ? "exp2" : "exp1",
        experiment2 ? "Sat-margin sweep over parameter bounds P"
                    : "Compare the three MIP objectives against GD");
    auto binder = std::make_shared<ConfigBinder>();
    auto data = std::make_shared<DatasetOpts>();
    auto model = std::make_shared<ModelOpts>();
    auto config_path = std::make_shared<std::string>();
    auto samples = std::make_shared<std::vector<int>>();
    auto seeds = std::make_shared<std::vector<uint64_t>>();
    auto models = std::make_shared<std::vector<std::string>>();
    auto p_values = std::make_shared<std::vector<int>>();
    auto jobs = std::make_shared<int>(1);
    auto out_dir = std::make_shared<std::string>(experiment2 ? "exp2-out"
                                                             : "exp1-out");

    cmd->add_option("--config", *config_path, "JSON config file (flags win)");
    data->add_flags(cmd, *binder);
    model->add_flags(cmd, *binder, /*with_objective=*/false);
    binder->bind(cmd->add_option("--samples", *samples,
                                 "Training sample counts (default 10 20)"),
                 *samples, "samples");
    binder->bind(
        cmd->add_option("--seeds", *seeds, "Run seeds (default 1 2 3)"),
        *seeds, "seeds");
    if (!experiment2) {
      binder->bind(cmd->add_option("--models", *models,
                                   "Subset of max-correct min-hinge "
                                   "sat-margin gd"),
                   *models, "models");
    } else {
      binder->bind(cmd->add_option("--p-values", *p_values,
                                   "Parameter bounds (default 1 3 7 15)"),
                   *p_values, "p_values");
    }
    binder->bind(cmd->add_option("--jobs", *jobs, "Concurrent runs"), *jobs,
                 "jobs");
    binder->bind(cmd->add_option("--out", *out_dir, "Output directory"),
                 *out_dir, "out");

    cmd->callback([=]() {
      std::exit(run_guarded([&]() {
        binder->apply_file(*config_path);
        mipnn::ExperimentConfig cfg;
        model->fill(cfg);
        if (!samples->empty()) cfg.sample_counts = *samples;
        else cfg.sample_counts = {10, 20};
        if (!seeds->empty()) cfg.seeds = *seeds;
        if (!models->empty()) {
          cfg.models.clear();
          for (const auto& name : *models) {
            cfg.models.push_back(mipnn::train_method_from_string(name));
          }
        }
        if (!p_values->empty()) cfg.p_values = *p_values;
        cfg.jobs = *jobs;
        cfg.validate();
        run_experiment_command(*data, cfg, *out_dir, experiment2);
      }));
    });
  }
}

// --------------------------------------------------------------- verify --

void setup_verify(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "verify",
      "Cross-check the built-in solver against brute-force enumeration");
  auto arch_str = std::make_shared<std::string>("2,2,2");
  auto p = std::make_shared<int>(1);
  auto n = std::make_shared<int>(3);
  auto seeds = std::make_shared<std::vector<uint64_t>>();
  auto objectives = std::make_shared<std::vector<std::string>>();
  auto time_limit = std::make_shared<double>(600.0);
  auto corrupt = std::make_shared<bool>(false);

  cmd->add_option("--arch", *arch_str, "Architecture, e.g. 2,2,2");
  cmd->add_option("--p", *p, "Parameter bound P");
  cmd->add_option("--n", *n, "Samples per instance");
  cmd->add_option("--seeds", *seeds, "Dataset seeds (default 1 2)");
  cmd->add_option("--objectives", *objectives,
                  "Subset of max-correct min-hinge sat-margin");
  cmd->add_option("--time-limit", *time_limit, "Per-solve limit (s)");
  cmd->add_flag("--corrupt-big-m", *corrupt,
                "Fault injection: shrink big-M constants and expect failure");

  cmd->callback([=]() {
    std::exit(run_guarded([&]() {
      const std::vector<int> arch = parse_arch(*arch_str);
      if (arch.size() < 3) throw mipnn::InputError("--arch needs >= 3 widths");
      if (*p < 1) throw mipnn::InputError("P must be a positive integer");
      std::vector<uint64_t> seed_list =
          seeds->empty() ? std::vector<uint64_t>{1, 2} : *seeds;
      std::vector<std::string> objective_list =
          objectives->empty()
              ? std::vector<std::string>{"max-correct", "min-hinge",
                                         "sat-margin"}
              : *objectives;

      bool all_ok = true;
      std::cout << "objective      seed   oracle        builtin       "
                   "linearized    verdict\n";
      for (const auto& objective : objective_list) {
        for (uint64_t seed : seed_list) {
          mipnn::EncodedDataset data = mipnn::make_random_grid_dataset(
              *n, arch.front(), arch.back(), seed);

          mipnn::OracleProblem problem;
          problem.arch = arch;
          problem.p_bound = *p;
          problem.objective = objective == "max-correct"
                                  ? mipnn::ObjectiveKind::MaxCorrect
                              : objective == "min-hinge"
                                  ? mipnn::ObjectiveKind::MinHinge
                                  : mipnn::ObjectiveKind::SatMargin;
          problem.pwl = mipnn::PwlSpec::uniform();
          mipnn::OracleResult oracle =
              mipnn::enumerate_optimum(problem, data);

          mipnn::VarMap varmap;
          mipnn::MipModel m = build_objective_model(
              data, arch, *p, 1e-5, objective, 0.5, 0.25, varmap);
          mipnn::SolveParams params;
          params.time_limit_s = *time_limit;
          params.seed = seed;
          mipnn::SolveOutcome native = mipnn::solve_builtin(m, params);

          mipnn::MipModel lin = mipnn::linearize_indicators(m);
          if (*corrupt) mipnn::corrupt_big_m(lin, 0.25);
          mipnn::SolveOutcome big_m = mipnn::solve_builtin(lin, params);

          const double tol = objective == "min-hinge" ? 1e-6 : 1e-9;
          auto matches = [&](const mipnn::SolveOutcome& got) {
            if (!oracle.objective.has_value()) {
              return got.status == mipnn::SolveStatus::Infeasible;
            }
            return got.status == mipnn::SolveStatus::Optimal &&
                   got.objective.has_value() &&
                   std::abs(*got.objective - *oracle.objective) <= tol;
          };
          const bool ok = matches(native) && matches(big_m);
          all_ok = all_ok && ok;

          auto fmt = [](const mipnn::SolveOutcome& o) {
            if (!o.objective.has_value()) return std::string("infeasible");
            std::ostringstream os;
            os << *o.objective;
            return os.str();
          };
          std::ostringstream oracle_s;
          if (oracle.objective) oracle_s << *oracle.objective;
          else oracle_s << "infeasible";
          std::printf("%-14s %-6llu %-13s %-13s %-13s %s\n", objective.c_str(),
                      static_cast<unsigned long long>(seed),
                      oracle_s.str().c_str(), fmt(native).c_str(),
                      fmt(big_m).c_str(), ok ? "PASS" : "FAIL");
          if (!ok) {
            json counterexample;
            counterexample["arch"] = arch;
            counterexample["p"] = *p;
            counterexample["objective"] = objective;
            counterexample["seed"] = seed;
            counterexample["features"] = data.features;
            counterexample["labels"] = data.labels;
            counterexample["oracle"] =
                oracle.objective ? json(*oracle.objective) : json("infeasible");
            counterexample["builtin"] =
                native.objective ? json(*native.objective) : json(nullptr);
            counterexample["linearized"] =
                big_m.objective ? json(*big_m.objective) : json(nullptr);
            std::cerr << counterexample.dump(2) << "\n";
          }
        }
      }
      if (*corrupt) {
        // Fault injection must be detected.
        if (all_ok) {
          throw mipnn::SolverError(
              "corrupted big-M went undetected by the oracle suite");
        }
        std::cout << "corruption detected as expected\n";
        return;
      }
      if (!all_ok) throw mipnn::SolverError("oracle mismatch (see above)");
      std::cout << "all checks passed\n";
    }));
  });
}

// ------------------------------------------------------------ prep-data --

void setup_prep_data(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "prep-data", "Encode CSV datasets (or emit the synthetic fixture)");
  auto binder = std::make_shared<ConfigBinder>();
  auto data = std::make_shared<DatasetOpts>();
  auto out_dir = std::make_shared<std::string>("data-out");
  auto emit_csv = std::make_shared<bool>(false);

  data->add_flags(cmd, *binder);
  cmd->add_option("--out", *out_dir, "Output directory");
  cmd->add_flag("--emit-csv", *emit_csv,
                "Also write raw CSVs + schema (synthetic source only)");

  cmd->callback([=]() {
    std::exit(run_guarded([&]() {
      fs::create_directories(*out_dir);
      if (data->synthetic > 0 && *emit_csv) {
        mipnn::ColumnSchema schema = mipnn::separable_schema();
        mipnn::RawTable train = mipnn::make_separable_table(
            data->synthetic, data->synthetic_seed, data->synthetic_margin);
        mipnn::RawTable test = mipnn::make_separable_table(
            data->synthetic_test, data->synthetic_seed + 1,
            data->synthetic_margin);
        mipnn::save_csv((fs::path(*out_dir) / "train.csv").string(), schema,
                        train);
        mipnn::save_csv((fs::path(*out_dir) / "test.csv").string(), schema,
                        test);
        schema.save((fs::path(*out_dir) / "schema.json").string());
        std::cout << "wrote synthetic CSVs to " << *out_dir << "\n";
      }
      auto [train, test] = data->load();
      train.save((fs::path(*out_dir) / "train").string());
      test.save((fs::path(*out_dir) / "test").string());
      std::cout << "encoded " << train.size() << " train rows and "
                << test.size() << " test rows (feature width "
                << train.feature_width() << ") into " << *out_dir << "\n";
    }));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "mipnn: trains small integer-valued and binarized neural networks by "
      "mixed-integer programming"};
  app.require_subcommand(1);

  setup_train(app);
  setup_eval(app);
  setup_export(app);
  setup_experiments(app);
  setup_verify(app);
  setup_prep_data(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return kExitOk;
}
