#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mipnn/data.hpp"
#include "mipnn/mip.hpp"

namespace mipnn {

// Brute-force reference optimum: straight-line enumeration of every
// weight/bias assignment in {-P..P}^(n_w + n_b), scoring each objective
// directly from the activation semantics. Deliberately independent of the
// model builder and the branch-and-bound solver; used by the verification
// harness to cross-check them.
struct OracleResult {
  // Empty when no parameter assignment is feasible.
  std::optional<double> objective;
  uint64_t enumerated = 0;
  uint64_t feasible = 0;
  // One optimal parameter vector (weights then biases, declaration order).
  std::vector<int> best_params;
};

struct OracleProblem {
  std::vector<int> arch;
  int p_bound = 1;
  double eps = 1e-5;
  ObjectiveKind objective = ObjectiveKind::SatMargin;
  double margin = 0.5;       // sat-margin only
  PwlSpec pwl;               // min-hinge only
};

OracleResult enumerate_optimum(const OracleProblem& problem,
                               const EncodedDataset& data);

}  // namespace mipnn
