#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mipnn/baseline.hpp"
#include "mipnn/data.hpp"
#include "mipnn/mip.hpp"
#include "mipnn/mps.hpp"
#include "mipnn/network.hpp"
#include "mipnn/solve.hpp"

namespace mipnn {

enum class TrainMethod { MaxCorrect, MinHinge, SatMargin, Gd };

const char* to_string(TrainMethod method);
TrainMethod train_method_from_string(const std::string& name);

enum class BackendKind { Builtin, External };

struct ExperimentConfig {
  std::vector<TrainMethod> models = {TrainMethod::MaxCorrect,
                                     TrainMethod::MinHinge,
                                     TrainMethod::SatMargin, TrainMethod::Gd};
  int p_bound = 1;
  std::vector<int> p_values = {1, 3, 7, 15};
  std::vector<int> sample_counts = {10, 20, 40, 60};
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::vector<int> hidden = {16};
  double time_limit_s = 600.0;
  std::optional<double> accuracy_stop = 0.9;
  double eps = 1e-5;
  double margin = 0.5;
  double pwl_spacing = 0.25;
  bool linearize = false;  // builtin backend may solve either form
  BackendKind backend = BackendKind::Builtin;
  std::string solver_cmd;  // external template; falls back to MIPNN_SOLVER_CMD
  GdHyper gd;
  int jobs = 1;

  std::vector<int> arch_for(int feature_width, int n_classes) const;
  void validate() const;
};

struct RunRecord {
  std::string model;      // max-correct | min-hinge | sat-margin | gd_nn
  std::string objective;  // MIP objective kind, or sgd-squared-hinge
  int p = 0;
  int n_samples = 0;
  uint64_t seed = 0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double wall_time_s = 0.0;
  std::string status;
  double objective_value = 0.0;
  std::string error;  // nonempty when the run failed
};

// One training run: subsample -> build -> attach -> (linearize) -> solve ->
// decode -> evaluate. On success *out_net holds the trained network; for
// GD runs *out_history receives the per-epoch stats.
RunRecord run_training(const ExperimentConfig& cfg, TrainMethod method, int p,
                       int n, uint64_t seed, const EncodedDataset& train,
                       const EncodedDataset& test,
                       IntegerNetwork* out_net = nullptr,
                       std::vector<EpochStats>* out_history = nullptr);

// Model x sample-count x seed sweep against the GD baseline.
std::vector<RunRecord> run_experiment1(const ExperimentConfig& cfg,
                                       const EncodedDataset& train,
                                       const EncodedDataset& test);

// Sat-margin only, P x sample-count x seed sweep. Equal seeds share the
// training subset across P values.
std::vector<RunRecord> run_experiment2(const ExperimentConfig& cfg,
                                       const EncodedDataset& train,
                                       const EncodedDataset& test);

void write_records_csv(const std::string& path,
                       const std::vector<RunRecord>& records);
// Mean over seeds per (model, p, n_samples) group.
void write_summary_csv(const std::string& path,
                       const std::vector<RunRecord>& records);
void write_plot_script(const std::string& path);

// Non-gating trend checks; returns human-readable warnings (empty = all
// trends hold).
std::vector<std::string> trend_warnings_exp1(
    const std::vector<RunRecord>& records);
std::vector<std::string> trend_warnings_exp2(
    const std::vector<RunRecord>& records);

}  // namespace mipnn
