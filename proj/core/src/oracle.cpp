#include "mipnn/oracle.hpp"

#include <cmath>

#include "mipnn/errors.hpp"

namespace mipnn {

namespace {

// Per-assignment evaluation state, reused across the enumeration.
struct Scratch {
  std::vector<int> signs_prev;
  std::vector<int> signs_cur;
  std::vector<double> raw_outputs;  // integer-valued sums, kept as doubles
};

}  // namespace

OracleResult enumerate_optimum(const OracleProblem& problem,
                               const EncodedDataset& data) {
  const auto& arch = problem.arch;
  const int P = problem.p_bound;
  const double eps = problem.eps;
  if (arch.size() < 3) throw InputError("oracle needs at least one hidden layer");
  if (P < 1) throw InputError("oracle needs P >= 1");
  if (data.size() == 0) throw InputError("oracle needs at least one sample");
  if (data.feature_width() != arch.front() ||
      data.num_classes() != arch.back()) {
    throw InputError("oracle dataset does not match the architecture");
  }

  const int L = static_cast<int>(arch.size()) - 1;
  const int T = static_cast<int>(data.size());
  const double scale = 2.0 / (static_cast<double>(P) * (arch[L - 1] + 1));
  const double margin_raw = problem.margin / scale;
  const double cut_raw = (problem.margin - eps) / scale;
  const bool maximize = problem.objective != ObjectiveKind::MinHinge;

  // Flattened parameter order: weights layer-major (l, i, j), then biases.
  int n_weights = 0, n_biases = 0;
  for (int l = 1; l <= L; ++l) {
    n_weights += arch[l - 1] * arch[l];
    n_biases += arch[l];
  }
  const int n_params = n_weights + n_biases;
  std::vector<int> params(n_params, -P);

  // Offsets into the flat vector.
  std::vector<int> w_off(L), b_off(L);
  {
    int off = 0;
    for (int l = 1; l <= L; ++l) {
      w_off[l - 1] = off;
      off += arch[l - 1] * arch[l];
    }
    for (int l = 1; l <= L; ++l) {
      b_off[l - 1] = off;
      off += arch[l];
    }
  }
  auto w_at = [&](const std::vector<int>& p, int l, int i, int j) {
    return p[w_off[l - 1] + i * arch[l] + j];
  };
  auto b_at = [&](const std::vector<int>& p, int l, int j) {
    return p[b_off[l - 1] + j];
  };

  Scratch scratch;
  scratch.raw_outputs.resize(arch[L]);

  // Scores one parameter vector; returns false when infeasible (layer-1
  // preactivation inside (-eps, 0), or a sample without exactly one
  // nonnegative output under max-correct, or a sat-margin product inside
  // the (m - eps, m) window).
  auto score = [&](const std::vector<int>& p, double& objective) {
    objective = 0.0;
    for (int k = 0; k < T; ++k) {
      const auto& x = data.features[k];
      scratch.signs_prev.assign(arch[1], 0);
      for (int j = 0; j < arch[1]; ++j) {
        double v = b_at(p, 1, j);
        for (int i = 0; i < arch[0]; ++i) v += x[i] * w_at(p, 1, i, j);
        if (v > -eps && v < 0.0) return false;
        scratch.signs_prev[j] = v >= 0.0 ? 1 : -1;
      }
      for (int l = 2; l <= L - 1; ++l) {
        scratch.signs_cur.assign(arch[l], 0);
        for (int j = 0; j < arch[l]; ++j) {
          double v = b_at(p, l, j);
          for (int i = 0; i < arch[l - 1]; ++i) {
            v += scratch.signs_prev[i] * w_at(p, l, i, j);
          }
          if (v > -eps && v < 0.0) return false;
          scratch.signs_cur[j] = v >= 0.0 ? 1 : -1;
        }
        scratch.signs_prev.swap(scratch.signs_cur);
      }
      for (int j = 0; j < arch[L]; ++j) {
        double v = b_at(p, L, j);
        for (int i = 0; i < arch[L - 1]; ++i) {
          v += scratch.signs_prev[i] * w_at(p, L, i, j);
        }
        scratch.raw_outputs[j] = v;
      }

      switch (problem.objective) {
        case ObjectiveKind::MaxCorrect: {
          int nonneg = -1, count = 0;
          for (int j = 0; j < arch[L]; ++j) {
            if (scratch.raw_outputs[j] >= 0.0) {
              nonneg = j;
              ++count;
            }
          }
          if (count != 1) return false;
          if (data.labels[k][nonneg] == 1) objective += 1.0;
          break;
        }
        case ObjectiveKind::SatMargin: {
          for (int j = 0; j < arch[L]; ++j) {
            double z_raw = data.labels[k][j] * scratch.raw_outputs[j];
            if (z_raw >= margin_raw) {
              objective += 1.0;
            } else if (!(z_raw <= cut_raw)) {
              return false;
            }
          }
          break;
        }
        case ObjectiveKind::MinHinge: {
          for (int j = 0; j < arch[L]; ++j) {
            double z = data.labels[k][j] * (scale * scratch.raw_outputs[j]);
            objective += problem.pwl.evaluate(z);
          }
          break;
        }
        case ObjectiveKind::None:
          throw InputError("oracle needs an objective");
      }
    }
    return true;
  };

  OracleResult result;
  for (;;) {
    ++result.enumerated;
    double objective = 0.0;
    if (score(params, objective)) {
      ++result.feasible;
      bool better = !result.objective.has_value() ||
                    (maximize ? objective > *result.objective
                              : objective < *result.objective);
      if (better) {
        result.objective = objective;
        result.best_params = params;
      }
    }
    // Odometer over {-P..P}^n, last index fastest.
    int pos = n_params - 1;
    while (pos >= 0 && params[pos] == P) {
      params[pos] = -P;
      --pos;
    }
    if (pos < 0) break;
    ++params[pos];
  }
  return result;
}

}  // namespace mipnn
