#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mipnn/mip.hpp"
#include "mipnn/network.hpp"

namespace mipnn {

struct SolveParams {
  double time_limit_s = 36000.0;
  uint64_t seed = 0;
  // Stop as soon as an incumbent decodes to at least this training
  // accuracy (handled by the caller via the incumbent callback, or by the
  // objective_target shortcut where one exists).
  std::optional<double> stop_at_train_accuracy;
  // Stop as soon as the incumbent objective reaches this value.
  std::optional<double> objective_target;
};

enum class SolveStatus { Optimal, FeasibleStopped, Infeasible, TimeLimit, Error };

const char* to_string(SolveStatus status);

struct SolveOutcome {
  SolveStatus status = SolveStatus::Error;
  std::optional<double> objective;
  // Indexed by variable id; empty unless an incumbent exists.
  std::vector<double> assignment;
  double wall_time_s = 0.0;
  uint64_t nodes = 0;
};

// Return true to stop the search with status FeasibleStopped.
using IncumbentCallback =
    std::function<bool(const std::vector<double>& assignment, double objective)>;

// Exact depth-first branch-and-bound for desk-scale instances. Branches on
// integer and binary variables in declaration order (weights, then biases,
// then activations, then output indicators); in the training models every
// variable past the parameters is forced by bound propagation, so the
// search effectively enumerates parameter space with pruning. Indicator
// constraints are enforced natively when present. The seed only permutes
// the value order tried at each variable.
SolveOutcome solve_builtin(const MipModel& model, const SolveParams& params,
                           const IncumbentCallback& on_incumbent = {});

// Rounds weight/bias variables to integers (tolerance 1e-4) and
// range-checks them against {-P..P}.
IntegerNetwork decode_network(const std::vector<double>& assignment,
                              const VarMap& varmap,
                              const std::vector<int>& arch, int p_bound);

// True iff the decoded incumbent reaches the accuracy threshold on the
// training data. For max-correct models the objective value alone can
// certify the threshold without decoding.
bool early_stop_check(const std::vector<double>& assignment,
                      const VarMap& varmap, const MipModel& model,
                      const EncodedDataset& train, double threshold,
                      uint64_t seed);

}  // namespace mipnn
