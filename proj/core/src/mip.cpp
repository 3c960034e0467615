#include "mipnn/mip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "mipnn/errors.hpp"

namespace mipnn {

double LinExpr::evaluate(const std::vector<double>& assignment) const {
  double v = constant;
  for (const auto& t : terms) v += t.coeff * assignment[t.var];
  return v;
}

int MipModel::add_var(VarKind kind, double lb, double ub, std::string name,
                      bool derived) {
  if (lb > ub) throw BuildError("variable " + name + " has lb > ub");
  if (kind == VarKind::Binary && (lb < 0.0 || ub > 1.0)) {
    throw BuildError("binary variable " + name + " with non-{0,1} bounds");
  }
  int id = static_cast<int>(vars_.size());
  vars_.push_back({id, kind, lb, ub, std::move(name), derived});
  return id;
}

void MipModel::check_terms(const std::vector<LinTerm>& terms) const {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size())) {
      throw BuildError("constraint references undeclared variable id " +
                       std::to_string(t.var));
    }
  }
}

void MipModel::add_row(std::vector<LinTerm> terms, Relation rel, double rhs,
                       std::string name) {
  check_terms(terms);
  rows_.push_back({std::move(terms), rel, rhs, std::move(name)});
}

void MipModel::add_indicator(int guard, int guard_value,
                             std::vector<LinTerm> terms, Relation rel,
                             double rhs, std::string name) {
  check_terms(terms);
  if (guard < 0 || guard >= static_cast<int>(vars_.size()) ||
      vars_[guard].kind != VarKind::Binary) {
    throw BuildError("indicator guard must be a declared binary variable");
  }
  if (guard_value != 0 && guard_value != 1) {
    throw BuildError("indicator guard value must be 0 or 1");
  }
  indicators_.push_back(
      {guard, guard_value, {std::move(terms), rel, rhs, std::move(name)}});
}

int MipModel::var_by_name(const std::string& name) const {
  for (const auto& v : vars_) {
    if (v.name == name) return v.id;
  }
  return -1;
}

namespace {

const char* rel_str(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::Equal: return "=";
    case Relation::GreaterEqual: return ">=";
  }
  return "?";
}

void dump_row(std::ostream& os, const MipModel& m,
              const LinearConstraint& row) {
  bool first = true;
  for (const auto& t : row.terms) {
    if (!first) os << " + ";
    os << t.coeff << "*" << m.vars()[t.var].name;
    first = false;
  }
  if (first) os << "0";
  os << " " << rel_str(row.rel) << " " << row.rhs;
}

}  // namespace

void MipModel::dump(std::ostream& os) const {
  os << "variables (" << vars_.size() << "):\n";
  for (const auto& v : vars_) {
    os << "  " << v.name << " ";
    switch (v.kind) {
      case VarKind::Binary: os << "bin"; break;
      case VarKind::Integer: os << "int"; break;
      case VarKind::Continuous: os << "cont"; break;
    }
    os << " [" << v.lb << ", " << v.ub << "]\n";
  }
  os << "constraints (" << rows_.size() << "):\n";
  for (const auto& row : rows_) {
    os << "  " << row.name << ": ";
    dump_row(os, *this, row);
    os << "\n";
  }
  os << "indicators (" << indicators_.size() << "):\n";
  for (const auto& ind : indicators_) {
    os << "  (" << vars_[ind.guard].name << " = " << ind.guard_value
       << ") -> " << ind.implied.name << ": ";
    dump_row(os, *this, ind.implied);
    os << "\n";
  }
  os << "objective: "
     << (objective_.sense == ObjSense::Maximize ? "max" : "min") << " ";
  bool first = true;
  for (const auto& t : objective_.expr.terms) {
    if (!first) os << " + ";
    os << t.coeff << "*" << vars_[t.var].name;
    first = false;
  }
  if (objective_.expr.constant != 0.0 || first) {
    os << (first ? "" : " + ") << objective_.expr.constant;
  }
  os << "\n";
}

namespace {

std::string idx_name(const char* stem, std::initializer_list<int> idx) {
  std::string s = stem;
  for (int v : idx) {
    s += '_';
    s += std::to_string(v);
  }
  return s;
}

}  // namespace

BuildResult build_base(const EncodedDataset& data, const std::vector<int>& arch,
                       int p_bound, double eps) {
  if (p_bound < 1) throw BuildError("parameter bound P must be a positive integer");
  if (eps <= 0.0) throw BuildError("eps must be positive");
  if (data.size() == 0) throw BuildError("empty sample set");
  if (arch.size() < 3) throw BuildError("architecture needs at least one hidden layer");
  for (int n : arch) {
    if (n <= 0) throw BuildError("architecture widths must be positive");
  }
  if (data.feature_width() != arch.front()) {
    throw BuildError("architecture input width " + std::to_string(arch.front()) +
                     " does not match feature width " +
                     std::to_string(data.feature_width()));
  }
  for (const auto& row : data.features) {
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw BuildError("features must lie in [0,1]");
      }
    }
  }

  const int L = static_cast<int>(arch.size()) - 1;
  const int T = static_cast<int>(data.size());
  const double P = p_bound;

  BuildResult result;
  MipModel& m = result.model;
  VarMap& vm = result.varmap;

  m.info().arch = arch;
  m.info().p_bound = p_bound;
  m.info().eps = eps;
  m.info().n_samples = T;
  m.info().output_scale = 2.0 / (P * (arch[L - 1] + 1));

  // Declaration order fixes the built-in solver's branch order:
  // weights, biases, activations; objective indicators come later.
  vm.weight.resize(L);
  for (int l = 1; l <= L; ++l) {
    vm.weight[l - 1].assign(arch[l - 1], std::vector<int>(arch[l], -1));
    for (int i = 0; i < arch[l - 1]; ++i) {
      for (int j = 0; j < arch[l]; ++j) {
        vm.weight[l - 1][i][j] =
            m.add_var(VarKind::Integer, -P, P, idx_name("w", {i, l, j}));
      }
    }
  }
  vm.bias.resize(L);
  for (int l = 1; l <= L; ++l) {
    vm.bias[l - 1].assign(arch[l], -1);
    for (int j = 0; j < arch[l]; ++j) {
      vm.bias[l - 1][j] =
          m.add_var(VarKind::Integer, -P, P, idx_name("b", {l, j}));
    }
  }
  vm.activation.resize(T);
  for (int k = 0; k < T; ++k) {
    vm.activation[k].resize(L - 1);
    for (int l = 1; l <= L - 1; ++l) {
      vm.activation[k][l - 1].assign(arch[l], -1);
      for (int j = 0; j < arch[l]; ++j) {
        vm.activation[k][l - 1][j] =
            m.add_var(VarKind::Binary, 0, 1, idx_name("u", {k, l, j}));
      }
    }
  }
  vm.connection.resize(T);
  for (int k = 0; k < T; ++k) {
    vm.connection[k].resize(L - 1);
    for (int l = 2; l <= L; ++l) {
      vm.connection[k][l - 2].assign(arch[l - 1],
                                     std::vector<int>(arch[l], -1));
      for (int i = 0; i < arch[l - 1]; ++i) {
        for (int j = 0; j < arch[l]; ++j) {
          vm.connection[k][l - 2][i][j] = m.add_var(
              VarKind::Continuous, -P, P, idx_name("c", {k, i, l, j}), true);
        }
      }
    }
  }

  // Preactivation of neuron j in layer l for sample k. Layer-1 connection
  // values are data-scaled weights, not variables.
  auto preactivation = [&](int k, int l, int j) {
    std::vector<LinTerm> terms;
    if (l == 1) {
      for (int i = 0; i < arch[0]; ++i) {
        double x = data.features[k][i];
        if (x != 0.0) terms.push_back({vm.weight[0][i][j], x});
      }
    } else {
      for (int i = 0; i < arch[l - 1]; ++i) {
        terms.push_back({vm.connection[k][l - 2][i][j], 1.0});
      }
    }
    terms.push_back({vm.bias[l - 1][j], 1.0});
    return terms;
  };

  // Sign activation: u = 1 iff preactivation >= 0 (the negative branch is
  // pushed eps below zero so the disjunction is exclusive).
  for (int k = 0; k < T; ++k) {
    for (int l = 1; l <= L - 1; ++l) {
      for (int j = 0; j < arch[l]; ++j) {
        const int u = vm.activation[k][l - 1][j];
        m.add_indicator(u, 1, preactivation(k, l, j), Relation::GreaterEqual,
                        0.0, idx_name("sign_pos", {k, l, j}));
        m.add_indicator(u, 0, preactivation(k, l, j), Relation::LessEqual,
                        -eps, idx_name("sign_neg", {k, l, j}));
      }
    }
  }

  // Linking rows force c = (2u - 1) * w for every connection past layer 1.
  for (int k = 0; k < T; ++k) {
    for (int l = 2; l <= L; ++l) {
      for (int i = 0; i < arch[l - 1]; ++i) {
        const int u_prev = vm.activation[k][l - 2][i];
        for (int j = 0; j < arch[l]; ++j) {
          const int c = vm.connection[k][l - 2][i][j];
          const int w = vm.weight[l - 1][i][j];
          m.add_row({{c, 1.0}, {w, -1.0}, {u_prev, 2.0 * P}},
                    Relation::LessEqual, 2.0 * P,
                    idx_name("link1", {k, i, l, j}));
          m.add_row({{c, 1.0}, {w, 1.0}, {u_prev, -2.0 * P}},
                    Relation::LessEqual, 0.0, idx_name("link2", {k, i, l, j}));
          m.add_row({{c, 1.0}, {w, -1.0}, {u_prev, -2.0 * P}},
                    Relation::GreaterEqual, -2.0 * P,
                    idx_name("link3", {k, i, l, j}));
          m.add_row({{c, 1.0}, {w, 1.0}, {u_prev, 2.0 * P}},
                    Relation::GreaterEqual, 0.0,
                    idx_name("link4", {k, i, l, j}));
        }
      }
    }
  }

  // Normalized output expressions.
  const double scale = m.info().output_scale;
  vm.output_expr.resize(T);
  for (int k = 0; k < T; ++k) {
    vm.output_expr[k].resize(arch[L]);
    for (int j = 0; j < arch[L]; ++j) {
      LinExpr expr;
      for (const auto& t : preactivation(k, L, j)) {
        expr.add(t.var, scale * t.coeff);
      }
      vm.output_expr[k][j] = std::move(expr);
    }
  }

  return result;
}

namespace {

void check_labels(const MipModel& m,
                  const std::vector<std::vector<int>>& labels,
                  bool need_unique_positive) {
  const auto& arch = m.info().arch;
  const int n_out = arch.back();
  if (static_cast<int>(labels.size()) != m.info().n_samples) {
    throw InputError("label count does not match the model's sample count");
  }
  for (const auto& row : labels) {
    if (static_cast<int>(row.size()) != n_out) {
      throw InputError("label width does not match the output layer");
    }
    int plus = 0;
    for (int v : row) {
      if (v != 1 && v != -1) throw InputError("labels must be +/-1 encoded");
      plus += v == 1;
    }
    if (need_unique_positive && plus != 1) {
      throw InputError("each sample needs exactly one true class");
    }
  }
}

// Output rows are emitted on the raw output sum (the expression before the
// 2/(P(N+1)) normalizer) so their coefficients stay integral; thresholds
// on yhat are divided by the scale instead.
std::vector<LinTerm> raw_output_terms(const VarMap& vm, const MipModel& m,
                                      int k, int j, double sign) {
  const double scale = m.info().output_scale;
  std::vector<LinTerm> terms;
  for (const auto& t : vm.output_expr[k][j].terms) {
    terms.push_back({t.var, sign * t.coeff / scale});
  }
  return terms;
}

void require_base(const MipModel& m, const VarMap& vm) {
  if (m.info().objective_kind != ObjectiveKind::None) {
    throw InputError("model already has an objective attached");
  }
  if (vm.output_expr.empty()) throw InputError("base model not built");
}

}  // namespace

void attach_max_correct(MipModel& model, VarMap& varmap,
                        const std::vector<std::vector<int>>& labels) {
  require_base(model, varmap);
  check_labels(model, labels, /*need_unique_positive=*/true);
  const int T = model.info().n_samples;
  const int n_out = model.info().arch.back();
  const double eps_out = model.info().eps / model.info().output_scale;

  varmap.output_indicator.assign(T, std::vector<int>(n_out, -1));
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      varmap.output_indicator[k][j] =
          model.add_var(VarKind::Binary, 0, 1, idx_name("o", {k, j}));
    }
  }
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      const int o = varmap.output_indicator[k][j];
      model.add_indicator(o, 1, raw_output_terms(varmap, model, k, j, 1.0),
                          Relation::GreaterEqual, 0.0,
                          idx_name("correct_pos", {k, j}));
      model.add_indicator(o, 0, raw_output_terms(varmap, model, k, j, 1.0),
                          Relation::LessEqual, -eps_out,
                          idx_name("correct_neg", {k, j}));
    }
    // One positive output per sample.
    std::vector<LinTerm> excl;
    for (int j = 0; j < n_out; ++j) {
      excl.push_back({varmap.output_indicator[k][j], 1.0});
    }
    model.add_row(std::move(excl), Relation::Equal, 1.0,
                  idx_name("one_hot", {k}));
  }

  Objective obj;
  obj.sense = ObjSense::Maximize;
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      if (labels[k][j] == 1) {
        obj.expr.add(varmap.output_indicator[k][j], 1.0);
      }
    }
  }
  model.objective() = std::move(obj);
  model.info().objective_kind = ObjectiveKind::MaxCorrect;
}

double squared_hinge(double z, double margin) {
  double gap = margin - z;
  return gap > 0.0 ? gap * gap : 0.0;
}

PwlSpec PwlSpec::uniform(double spacing) {
  if (spacing <= 0.0 || spacing > 4.0) {
    throw InputError("breakpoint spacing must be in (0, 4]");
  }
  std::vector<double> breakpoints;
  int steps = static_cast<int>(std::round(4.0 / spacing));
  if (std::abs(steps * spacing - 4.0) > 1e-12 || steps < 1) {
    throw InputError("breakpoint spacing must divide the range [-2, 2]");
  }
  for (int i = 0; i <= steps; ++i) breakpoints.push_back(-2.0 + i * spacing);
  breakpoints.back() = 2.0;
  return from_breakpoints(std::move(breakpoints));
}

PwlSpec PwlSpec::from_breakpoints(std::vector<double> breakpoints) {
  if (breakpoints.size() < 2) throw InputError("need at least 2 breakpoints");
  for (size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw InputError("breakpoints must be strictly increasing");
    }
  }
  if (breakpoints.front() != -2.0 || breakpoints.back() != 2.0) {
    throw InputError("breakpoints must cover [-2, 2] exactly");
  }
  PwlSpec spec;
  spec.breakpoints = std::move(breakpoints);
  spec.values.reserve(spec.breakpoints.size());
  for (double z : spec.breakpoints) {
    spec.values.push_back(squared_hinge(z, spec.margin));
  }
  return spec;
}

double PwlSpec::evaluate(double z) const {
  if (z <= breakpoints.front()) return values.front();
  if (z >= breakpoints.back()) return values.back();
  size_t hi = 1;
  while (breakpoints[hi] < z) ++hi;
  const double za = breakpoints[hi - 1], zb = breakpoints[hi];
  const double ga = values[hi - 1], gb = values[hi];
  const double slope = (gb - ga) / (zb - za);
  return ga + slope * (z - za);
}

void attach_min_hinge(MipModel& model, VarMap& varmap,
                      const std::vector<std::vector<int>>& labels,
                      const PwlSpec& pwl) {
  require_base(model, varmap);
  check_labels(model, labels, /*need_unique_positive=*/false);
  if (pwl.breakpoints.size() < 2 || pwl.breakpoints.front() > -2.0 ||
      pwl.breakpoints.back() < 2.0) {
    throw InputError("PWL breakpoints must cover [-2, 2]");
  }
  const int T = model.info().n_samples;
  const int n_out = model.info().arch.back();
  const double scale = model.info().output_scale;

  double t_ub = 0.0;
  for (double v : pwl.values) t_ub = std::max(t_ub, v);

  varmap.hinge_epigraph.assign(T, std::vector<int>(n_out, -1));
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      varmap.hinge_epigraph[k][j] = model.add_var(
          VarKind::Continuous, 0.0, t_ub, idx_name("t", {k, j}), true);
    }
  }
  // t >= secant(z) for every breakpoint interval, z = y * yhat. Convexity
  // plus minimization makes t the upper envelope through the breakpoints.
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      const int t = varmap.hinge_epigraph[k][j];
      const double y = labels[k][j];
      for (size_t s = 1; s < pwl.breakpoints.size(); ++s) {
        const double za = pwl.breakpoints[s - 1], zb = pwl.breakpoints[s];
        const double ga = pwl.values[s - 1], gb = pwl.values[s];
        const double slope = (gb - ga) / (zb - za);
        const double intercept = ga - slope * za;
        std::vector<LinTerm> terms{{t, 1.0}};
        if (slope != 0.0) {
          for (const auto& yt : varmap.output_expr[k][j].terms) {
            // yhat carries the scale; fold slope and label into the coeffs.
            terms.push_back({yt.var, -slope * y * yt.coeff});
          }
        }
        model.add_row(std::move(terms), Relation::GreaterEqual, intercept,
                      idx_name("hinge", {k, j, static_cast<int>(s)}));
      }
      (void)scale;
    }
  }

  Objective obj;
  obj.sense = ObjSense::Minimize;
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      obj.expr.add(varmap.hinge_epigraph[k][j], 1.0);
    }
  }
  model.objective() = std::move(obj);
  model.info().objective_kind = ObjectiveKind::MinHinge;
}

void attach_sat_margin(MipModel& model, VarMap& varmap,
                       const std::vector<std::vector<int>>& labels,
                       double margin) {
  require_base(model, varmap);
  check_labels(model, labels, /*need_unique_positive=*/false);
  if (!(margin > 0.0 && margin <= 1.0)) {
    throw InputError("sat-margin m must lie in (0, 1]");
  }
  const int T = model.info().n_samples;
  const int n_out = model.info().arch.back();
  const double scale = model.info().output_scale;
  const double margin_raw = margin / scale;
  const double cut_raw = (margin - model.info().eps) / scale;

  varmap.output_indicator.assign(T, std::vector<int>(n_out, -1));
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      varmap.output_indicator[k][j] =
          model.add_var(VarKind::Binary, 0, 1, idx_name("o", {k, j}));
    }
  }
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      const int o = varmap.output_indicator[k][j];
      const double y = labels[k][j];
      model.add_indicator(o, 1, raw_output_terms(varmap, model, k, j, y),
                          Relation::GreaterEqual, margin_raw,
                          idx_name("margin_pos", {k, j}));
      model.add_indicator(o, 0, raw_output_terms(varmap, model, k, j, y),
                          Relation::LessEqual, cut_raw,
                          idx_name("margin_neg", {k, j}));
    }
  }

  Objective obj;
  obj.sense = ObjSense::Maximize;
  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < n_out; ++j) {
      obj.expr.add(varmap.output_indicator[k][j], 1.0);
    }
  }
  model.objective() = std::move(obj);
  model.info().objective_kind = ObjectiveKind::SatMargin;
  model.info().margin = margin;
}

double compute_big_m(const std::vector<int>& arch, int p_bound, int layer) {
  const int L = static_cast<int>(arch.size()) - 1;
  if (layer < 1 || layer > L) throw InputError("layer index out of range");
  if (layer == L) return 2.0;  // normalized outputs
  return static_cast<double>(p_bound) * (arch[layer - 1] + 1);
}

MipModel linearize_indicators(const MipModel& model) {
  MipModel out;
  out.info() = model.info();
  for (const auto& v : model.vars()) {
    out.add_var(v.kind, v.lb, v.ub, v.name, v.derived);
  }
  for (const auto& row : model.rows()) {
    out.add_row(row.terms, row.rel, row.rhs, row.name);
  }
  out.objective() = model.objective();

  for (const auto& ind : model.indicators()) {
    const auto& row = ind.implied;
    // Interval bounds of the guarded expression from the declared domains.
    double lo = 0.0, hi = 0.0;
    for (const auto& t : row.terms) {
      const Variable& v = model.vars()[t.var];
      if (!std::isfinite(v.lb) || !std::isfinite(v.ub)) {
        throw BuildError("unbounded guarded expression in " + row.name);
      }
      lo += t.coeff * (t.coeff > 0 ? v.lb : v.ub);
      hi += t.coeff * (t.coeff > 0 ? v.ub : v.lb);
    }
    if (row.rel == Relation::Equal) {
      throw BuildError("equality indicators are not produced by this builder");
    }
    // (g = v) => expr >= rhs  ~~>  expr + M*lit-complement >= rhs, with the
    // tightest M that frees the expression when the guard is off. The M
    // term is appended last; corrupt_big_m relies on that.
    std::vector<LinTerm> terms = row.terms;
    if (row.rel == Relation::GreaterEqual) {
      const double m_val = std::max(0.0, row.rhs - lo);
      if (ind.guard_value == 1) {
        // expr >= rhs - M*(1-g)
        terms.push_back({ind.guard, -m_val});
        out.add_row(std::move(terms), Relation::GreaterEqual, row.rhs - m_val,
                    row.name + "_bm");
      } else {
        // expr >= rhs - M*g
        terms.push_back({ind.guard, m_val});
        out.add_row(std::move(terms), Relation::GreaterEqual, row.rhs,
                    row.name + "_bm");
      }
    } else {
      const double m_val = std::max(0.0, hi - row.rhs);
      if (ind.guard_value == 1) {
        // expr <= rhs + M*(1-g)
        terms.push_back({ind.guard, m_val});
        out.add_row(std::move(terms), Relation::LessEqual, row.rhs + m_val,
                    row.name + "_bm");
      } else {
        // expr <= rhs + M*g
        terms.push_back({ind.guard, -m_val});
        out.add_row(std::move(terms), Relation::LessEqual, row.rhs,
                    row.name + "_bm");
      }
    }
  }
  return out;
}

void corrupt_big_m(MipModel& model, double factor) {
  MipModel patched;
  patched.info() = model.info();
  for (const auto& v : model.vars()) {
    patched.add_var(v.kind, v.lb, v.ub, v.name, v.derived);
  }
  for (const auto& row : model.rows()) {
    std::vector<LinTerm> terms = row.terms;
    double rhs = row.rhs;
    if (row.name.size() > 3 &&
        row.name.compare(row.name.size() - 3, 3, "_bm") == 0 &&
        !terms.empty()) {
      LinTerm& m_term = terms.back();
      const double old_m = std::abs(m_term.coeff);
      const double new_m = old_m * factor;
      // Keep the off-state right-hand side consistent with the new M.
      if (row.rel == Relation::GreaterEqual && m_term.coeff < 0) {
        rhs += old_m - new_m;
      } else if (row.rel == Relation::LessEqual && m_term.coeff > 0) {
        rhs -= old_m - new_m;
      }
      m_term.coeff = m_term.coeff < 0 ? -new_m : new_m;
    }
    patched.add_row(std::move(terms), row.rel, rhs, row.name);
  }
  patched.objective() = model.objective();
  model = std::move(patched);
}

}  // namespace mipnn
