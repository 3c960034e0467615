#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mipnn/data.hpp"

namespace mipnn {

enum class VarKind { Binary, Integer, Continuous };
enum class Relation { LessEqual, Equal, GreaterEqual };
enum class ObjSense { Minimize, Maximize };
enum class ObjectiveKind { None, MaxCorrect, MinHinge, SatMargin };

struct LinTerm {
  int var;
  double coeff;
};

struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  void add(int var, double coeff) {
    if (coeff != 0.0) terms.push_back({var, coeff});
  }
  double evaluate(const std::vector<double>& assignment) const;
};

struct Variable {
  int id;
  VarKind kind;
  double lb;
  double ub;
  std::string name;
  // Continuous variables whose value is implied once all integer variables
  // are fixed (connection values, hinge epigraphs). The built-in solver
  // only accepts continuous variables carrying this flag.
  bool derived = false;
};

struct LinearConstraint {
  std::vector<LinTerm> terms;
  Relation rel;
  double rhs;
  std::string name;
};

// (guard == guard_value) implies `implied`.
struct IndicatorConstraint {
  int guard;
  int guard_value;  // 0 or 1
  LinearConstraint implied;
};

struct Objective {
  ObjSense sense = ObjSense::Minimize;
  LinExpr expr;
};

struct ModelInfo {
  std::vector<int> arch;  // [N_0, ..., N_L]
  int p_bound = 0;
  double eps = 1e-5;
  int n_samples = 0;
  double output_scale = 0.0;  // 2 / (P * (N_{L-1} + 1))
  ObjectiveKind objective_kind = ObjectiveKind::None;
  double margin = 0.0;  // sat-margin m, when attached
};

class MipModel {
 public:
  int add_var(VarKind kind, double lb, double ub, std::string name,
              bool derived = false);
  void add_row(std::vector<LinTerm> terms, Relation rel, double rhs,
               std::string name);
  void add_indicator(int guard, int guard_value, std::vector<LinTerm> terms,
                     Relation rel, double rhs, std::string name);

  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<LinearConstraint>& rows() const { return rows_; }
  const std::vector<IndicatorConstraint>& indicators() const {
    return indicators_;
  }
  const Objective& objective() const { return objective_; }
  Objective& objective() { return objective_; }
  ModelInfo& info() { return info_; }
  const ModelInfo& info() const { return info_; }

  int var_by_name(const std::string& name) const;  // -1 if absent

  // Human-readable listing of variables and constraints.
  void dump(std::ostream& os) const;

 private:
  void check_terms(const std::vector<LinTerm>& terms) const;

  std::vector<Variable> vars_;
  std::vector<LinearConstraint> rows_;
  std::vector<IndicatorConstraint> indicators_;
  Objective objective_;
  ModelInfo info_;
};

// Map from model variables back to network roles. Layer indices are
// 1-based as in variable names; sample/neuron indices are 0-based.
struct VarMap {
  // weight[l-1][i][j], bias[l-1][j]
  std::vector<std::vector<std::vector<int>>> weight;
  std::vector<std::vector<int>> bias;
  // activation[k][l-1][j] for hidden layers l in 1..L-1
  std::vector<std::vector<std::vector<int>>> activation;
  // connection[k][l-2][i][j] for layers l in 2..L
  std::vector<std::vector<std::vector<std::vector<int>>>> connection;
  // Normalized output expressions (scale included).
  std::vector<std::vector<LinExpr>> output_expr;  // [k][j]
  // Objective attachments.
  std::vector<std::vector<int>> output_indicator;  // o[k][j], when present
  std::vector<std::vector<int>> hinge_epigraph;    // t[k][j], when present
};

struct BuildResult {
  MipModel model;
  VarMap varmap;
};

// Base training model: integer weights/biases, binary sign activations,
// connection linking rows, and normalized output expressions for every
// sample of `data`. Objective attachments come separately.
BuildResult build_base(const EncodedDataset& data, const std::vector<int>& arch,
                       int p_bound, double eps = 1e-5);

// Maximize the number of samples whose true-class output is the unique
// nonnegative one. Exactly one output indicator per sample is allowed on.
void attach_max_correct(MipModel& model, VarMap& varmap,
                        const std::vector<std::vector<int>>& labels);

// Piecewise-linear squared hinge: breakpoints over [-2, 2] with the exact
// hinge values; margin fixed at 1/2.
struct PwlSpec {
  std::vector<double> breakpoints;
  std::vector<double> values;
  double margin = 0.5;

  // Breakpoints -2, -2+spacing, ..., 2. Default spacing keeps 0.5 (the
  // hinge knee) on the grid so the zero region is exact.
  static PwlSpec uniform(double spacing = 0.25);
  static PwlSpec from_breakpoints(std::vector<double> breakpoints);

  // Upper envelope through the breakpoints (max over all secants).
  double evaluate(double z) const;
};

double squared_hinge(double z, double margin = 0.5);

// Epigraph variables t >= every secant of the hinge through consecutive
// breakpoints; objective minimizes their sum.
void attach_min_hinge(MipModel& model, VarMap& varmap,
                      const std::vector<std::vector<int>>& labels,
                      const PwlSpec& pwl);

// Maximize the number of (sample, output) pairs with y * yhat >= m.
void attach_sat_margin(MipModel& model, VarMap& varmap,
                       const std::vector<std::vector<int>>& labels,
                       double margin = 0.5);

// Expression bound used for big-M constants: P * (N_{l-1} + 1) for hidden
// preactivations, 2 for normalized outputs (layer == L).
double compute_big_m(const std::vector<int>& arch, int p_bound, int layer);

// Replaces every indicator with one big-M row; the M for each row is the
// tightest value compatible with the guarded expression's variable bounds.
// The returned model has an empty indicator list and an identical feasible
// projection onto the integer variables.
MipModel linearize_indicators(const MipModel& model);

// Fault-injection hook for the verification harness: scales the big-M
// coefficient of every linearized indicator row by `factor`, breaking the
// equivalence on purpose. Only rows produced by linearize_indicators are
// touched.
void corrupt_big_m(MipModel& model, double factor);

}  // namespace mipnn
