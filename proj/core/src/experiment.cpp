#include "mipnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "mipnn/errors.hpp"

namespace mipnn {

const char* to_string(TrainMethod method) {
  switch (method) {
    case TrainMethod::MaxCorrect: return "max-correct";
    case TrainMethod::MinHinge: return "min-hinge";
    case TrainMethod::SatMargin: return "sat-margin";
    case TrainMethod::Gd: return "gd_nn";
  }
  return "?";
}

TrainMethod train_method_from_string(const std::string& name) {
  if (name == "max-correct") return TrainMethod::MaxCorrect;
  if (name == "min-hinge") return TrainMethod::MinHinge;
  if (name == "sat-margin") return TrainMethod::SatMargin;
  if (name == "gd" || name == "gd_nn") return TrainMethod::Gd;
  throw InputError("unknown training method: " + name);
}

std::vector<int> ExperimentConfig::arch_for(int feature_width,
                                            int n_classes) const {
  std::vector<int> arch;
  arch.push_back(feature_width);
  arch.insert(arch.end(), hidden.begin(), hidden.end());
  arch.push_back(n_classes);
  return arch;
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw InputError("config: empty model list");
  if (sample_counts.empty()) throw InputError("config: empty sample_counts");
  if (seeds.empty()) throw InputError("config: empty seeds");
  if (p_bound < 1) throw InputError("config: P must be a positive integer");
  for (int p : p_values) {
    if (p < 1) throw InputError("config: every P must be a positive integer");
  }
  for (int n : sample_counts) {
    if (n < 1) throw InputError("config: sample counts must be positive");
  }
  if (hidden.empty()) throw InputError("config: at least one hidden layer");
  for (int h : hidden) {
    if (h < 1) throw InputError("config: hidden widths must be positive");
  }
  if (time_limit_s <= 0) throw InputError("config: time limit must be positive");
  if (accuracy_stop && !(*accuracy_stop > 0.0 && *accuracy_stop <= 1.0)) {
    throw InputError("config: accuracy stop must lie in (0, 1]");
  }
  if (!(margin > 0.0 && margin <= 1.0)) {
    throw InputError("config: margin must lie in (0, 1]");
  }
  if (eps <= 0.0) throw InputError("config: eps must be positive");
  if (jobs < 1) throw InputError("config: jobs must be positive");
}

namespace {

ObjectiveKind objective_kind_for(TrainMethod method) {
  switch (method) {
    case TrainMethod::MaxCorrect: return ObjectiveKind::MaxCorrect;
    case TrainMethod::MinHinge: return ObjectiveKind::MinHinge;
    case TrainMethod::SatMargin: return ObjectiveKind::SatMargin;
    default: return ObjectiveKind::None;
  }
}

const char* objective_name(TrainMethod method) {
  switch (method) {
    case TrainMethod::MaxCorrect: return "max-correct";
    case TrainMethod::MinHinge: return "min-hinge";
    case TrainMethod::SatMargin: return "sat-margin";
    case TrainMethod::Gd: return "sgd-squared-hinge";
  }
  return "?";
}

}  // namespace

RunRecord run_training(const ExperimentConfig& cfg, TrainMethod method, int p,
                       int n, uint64_t seed, const EncodedDataset& train,
                       const EncodedDataset& test, IntegerNetwork* out_net,
                       std::vector<EpochStats>* out_history) {
  RunRecord record;
  record.model = to_string(method);
  record.objective = objective_name(method);
  record.p = method == TrainMethod::Gd ? 1 : p;
  record.n_samples = n;
  record.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  EncodedDataset sub = subsample(train, static_cast<size_t>(n), seed);
  const std::vector<int> arch =
      cfg.arch_for(sub.feature_width(), sub.num_classes());

  if (method == TrainMethod::Gd) {
    GdHyper hyper = cfg.gd;
    hyper.seed = seed;
    auto [net, history] = train_gd(sub, arch, hyper);
    IntegerNetwork bin = net.binarized();
    record.train_acc = accuracy(bin, sub, seed);
    record.test_acc = accuracy(bin, test, seed);
    record.status = "trained";
    record.objective_value = history.empty() ? 0.0 : history.back().loss;
    if (out_net) *out_net = bin;
    if (out_history) *out_history = std::move(history);
  } else {
    BuildResult built = build_base(sub, arch, p, cfg.eps);
    switch (method) {
      case TrainMethod::MaxCorrect:
        attach_max_correct(built.model, built.varmap, sub.labels);
        break;
      case TrainMethod::MinHinge:
        attach_min_hinge(built.model, built.varmap, sub.labels,
                         PwlSpec::uniform(cfg.pwl_spacing));
        break;
      case TrainMethod::SatMargin:
        attach_sat_margin(built.model, built.varmap, sub.labels, cfg.margin);
        break;
      default:
        break;
    }

    SolveParams params;
    params.time_limit_s = cfg.time_limit_s;
    params.seed = seed;
    params.stop_at_train_accuracy = cfg.accuracy_stop;

    SolveOutcome outcome;
    if (cfg.backend == BackendKind::External) {
      ExternalBackend backend{cfg.solver_cmd};
      if (backend.command_template.empty()) {
        backend = ExternalBackend::from_env();
      }
      outcome = solve_external(built.model, params, backend);
    } else {
      const MipModel* model = &built.model;
      MipModel linearized;
      if (cfg.linearize) {
        linearized = linearize_indicators(built.model);
        model = &linearized;
      }
      IncumbentCallback callback;
      if (cfg.accuracy_stop) {
        const MipModel& m = *model;
        const VarMap& vm = built.varmap;
        double threshold = *cfg.accuracy_stop;
        callback = [&m, &vm, &sub, threshold,
                    seed](const std::vector<double>& assignment, double) {
          return early_stop_check(assignment, vm, m, sub, threshold, seed);
        };
      }
      outcome = solve_builtin(*model, params, callback);
    }

    record.status = to_string(outcome.status);
    record.objective_value = outcome.objective.value_or(0.0);
    if (!outcome.assignment.empty()) {
      IntegerNetwork net =
          decode_network(outcome.assignment, built.varmap, arch, p);
      record.train_acc = accuracy(net, sub, seed);
      record.test_acc = accuracy(net, test, seed);
      if (out_net) *out_net = net;
    } else if (outcome.status == SolveStatus::Infeasible) {
      throw InfeasibleError("training model is infeasible");
    } else {
      throw TimeoutError("no incumbent within the time limit");
    }
  }

  record.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return record;
}

namespace {

struct PlannedRun {
  TrainMethod method;
  int p;
  int n;
  uint64_t seed;
};

std::vector<RunRecord> execute_runs(const ExperimentConfig& cfg,
                                    const std::vector<PlannedRun>& plan,
                                    const EncodedDataset& train,
                                    const EncodedDataset& test) {
  std::vector<RunRecord> records(plan.size());
  auto run_one = [&](size_t i) {
    const PlannedRun& r = plan[i];
    try {
      records[i] = run_training(cfg, r.method, r.p, r.n, r.seed, train, test);
    } catch (const std::exception& e) {
      RunRecord failed;
      failed.model = to_string(r.method);
      failed.objective = objective_name(r.method);
      failed.p = r.p;
      failed.n_samples = r.n;
      failed.seed = r.seed;
      failed.status = "error";
      failed.error = e.what();
      records[i] = failed;
    }
  };

  const int jobs = std::max<int>(
      1, static_cast<int>(std::min<size_t>(cfg.jobs, plan.size())));
  if (jobs == 1) {
    for (size_t i = 0; i < plan.size(); ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int t = 0; t < jobs; ++t) {
      workers.emplace_back([&]() {
        for (;;) {
          size_t i = next.fetch_add(1);
          if (i >= plan.size()) return;
          run_one(i);
        }
      });
    }
    for (auto& w : workers) w.join();
  }
  return records;
}

}  // namespace

std::vector<RunRecord> run_experiment1(const ExperimentConfig& cfg,
                                       const EncodedDataset& train,
                                       const EncodedDataset& test) {
  cfg.validate();
  std::vector<PlannedRun> plan;
  for (TrainMethod method : cfg.models) {
    for (int n : cfg.sample_counts) {
      for (uint64_t seed : cfg.seeds) {
        plan.push_back({method, cfg.p_bound, n, seed});
      }
    }
  }
  return execute_runs(cfg, plan, train, test);
}

std::vector<RunRecord> run_experiment2(const ExperimentConfig& cfg,
                                       const EncodedDataset& train,
                                       const EncodedDataset& test) {
  cfg.validate();
  std::vector<PlannedRun> plan;
  for (int p : cfg.p_values) {
    for (int n : cfg.sample_counts) {
      for (uint64_t seed : cfg.seeds) {
        plan.push_back({TrainMethod::SatMargin, p, n, seed});
      }
    }
  }
  return execute_runs(cfg, plan, train, test);
}

namespace {

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_records_csv(const std::string& path,
                       const std::vector<RunRecord>& records) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write results file: " + path);
  out << "model,objective,p,n_samples,seed,train_acc,test_acc,wall_time_s,"
         "status,objective_value\n";
  for (const auto& r : records) {
    out << r.model << ',' << r.objective << ',' << r.p << ',' << r.n_samples
        << ',' << r.seed << ',' << csv_num(r.train_acc) << ','
        << csv_num(r.test_acc) << ',' << csv_num(r.wall_time_s) << ','
        << r.status << ',' << csv_num(r.objective_value) << "\n";
  }
}

void write_summary_csv(const std::string& path,
                       const std::vector<RunRecord>& records) {
  struct Group {
    int runs = 0;
    double train = 0, test = 0, wall = 0, objective = 0;
  };
  std::map<std::tuple<std::string, int, int>, Group> groups;
  for (const auto& r : records) {
    if (!r.error.empty()) continue;
    Group& g = groups[{r.model, r.p, r.n_samples}];
    ++g.runs;
    g.train += r.train_acc;
    g.test += r.test_acc;
    g.wall += r.wall_time_s;
    g.objective += r.objective_value;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write summary file: " + path);
  out << "model,p,n_samples,runs,mean_train_acc,mean_test_acc,"
         "mean_wall_time_s,mean_objective_value\n";
  for (const auto& [key, g] : groups) {
    out << std::get<0>(key) << ',' << std::get<1>(key) << ','
        << std::get<2>(key) << ',' << g.runs << ','
        << csv_num(g.train / g.runs) << ',' << csv_num(g.test / g.runs) << ','
        << csv_num(g.wall / g.runs) << ',' << csv_num(g.objective / g.runs)
        << "\n";
  }
}

void write_plot_script(const std::string& path) {
  static const char* kScript = R"py(#!/usr/bin/env python3
"""Plot accuracy and runtime curves from mipnn experiment CSVs."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt


def load(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def main():
    summary = sys.argv[1] if len(sys.argv) > 1 else "summary.csv"
    rows = load(summary)
    by_model = defaultdict(list)
    for row in rows:
        key = row["model"] + (f" P={row['p']}" if row["model"] == "sat-margin" else "")
        by_model[key].append((int(row["n_samples"]),
                              float(row["mean_train_acc"]),
                              float(row["mean_test_acc"]),
                              float(row["mean_wall_time_s"])))
    fig, axes = plt.subplots(1, 3, figsize=(15, 4))
    for name, pts in sorted(by_model.items()):
        pts.sort()
        ns = [p[0] for p in pts]
        axes[0].plot(ns, [p[1] for p in pts], marker="o", label=name)
        axes[1].plot(ns, [p[2] for p in pts], marker="o", label=name)
        axes[2].plot(ns, [p[3] for p in pts], marker="o", label=name)
    for ax, title in zip(axes, ["train accuracy", "test accuracy", "wall time (s)"]):
        ax.set_xlabel("training samples")
        ax.set_title(title)
        ax.legend()
    axes[2].set_yscale("log")
    fig.tight_layout()
    out = summary.replace(".csv", ".png")
    fig.savefig(out, dpi=120)
    print("wrote", out)


if __name__ == "__main__":
    main()
)py";
  std::ofstream out(path);
  if (!out) throw InputError("cannot write plot script: " + path);
  out << kScript;
}

namespace {

// Mean of `field` over runs matching (model, p, n); nan when absent.
template <typename Get>
double mean_over(const std::vector<RunRecord>& records,
                 const std::string& model, int p, int n, Get get) {
  double sum = 0;
  int count = 0;
  for (const auto& r : records) {
    if (r.model == model && r.p == p && r.n_samples == n && r.error.empty()) {
      sum += get(r);
      ++count;
    }
  }
  return count == 0 ? std::nan("") : sum / count;
}

}  // namespace

std::vector<std::string> trend_warnings_exp1(
    const std::vector<RunRecord>& records) {
  std::vector<std::string> warnings;
  // Largest n where both sat-margin and max-correct ran.
  int best_n = -1;
  int p = 1;
  for (const auto& r : records) {
    if (r.model == "sat-margin") p = r.p;
  }
  for (const auto& r : records) {
    if (r.n_samples > best_n) best_n = r.n_samples;
  }
  if (best_n < 0) return warnings;
  double sat = mean_over(records, "sat-margin", p, best_n,
                         [](const RunRecord& r) { return r.test_acc; });
  double max_c = mean_over(records, "max-correct", p, best_n,
                           [](const RunRecord& r) { return r.test_acc; });
  if (!std::isnan(sat) && !std::isnan(max_c) && sat < max_c) {
    std::ostringstream os;
    os << "trend: mean test accuracy of sat-margin (" << sat
       << ") fell below max-correct (" << max_c << ") at n=" << best_n;
    warnings.push_back(os.str());
  }
  return warnings;
}

std::vector<std::string> trend_warnings_exp2(
    const std::vector<RunRecord>& records) {
  std::vector<std::string> warnings;
  int best_n = -1;
  for (const auto& r : records) best_n = std::max(best_n, r.n_samples);
  if (best_n < 0) return warnings;

  std::map<uint64_t, std::pair<double, double>> by_seed;  // seed -> (p1, p7)
  for (const auto& r : records) {
    if (r.n_samples != best_n || !r.error.empty()) continue;
    if (r.p == 1) by_seed[r.seed].first = r.wall_time_s;
    if (r.p == 7) by_seed[r.seed].second = r.wall_time_s;
  }
  int total = 0, quicker = 0;
  for (const auto& [seed, times] : by_seed) {
    if (times.first <= 0 || times.second <= 0) continue;
    ++total;
    if (times.second <= times.first) ++quicker;
  }
  if (total == 0) return warnings;
  const int needed = (2 * total + 2) / 3;  // "2 of 3" scaled to the seed count
  if (quicker < needed) {
    std::ostringstream os;
    os << "trend: P=7 solved at least as fast as P=1 in only " << quicker
       << " of " << total << " seeds at n=" << best_n;
    warnings.push_back(os.str());
  }
  return warnings;
}

}  // namespace mipnn
