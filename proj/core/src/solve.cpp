#include "mipnn/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include "mipnn/data.hpp"
#include "mipnn/errors.hpp"
#include "mipnn/rng.hpp"

namespace mipnn {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::FeasibleStopped: return "feasible-stopped";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimeLimit: return "time-limit";
    case SolveStatus::Error: return "error";
  }
  return "?";
}

namespace {

constexpr double kFeasTol = 1e-9;   // row feasibility slack
constexpr double kIntSnap = 1e-6;   // integrality snapping for tightened bounds
constexpr double kVerifyTol = 1e-6; // incumbent verification

struct Row {
  std::vector<LinTerm> terms;
  Relation rel = Relation::LessEqual;
  double rhs = 0.0;
  int guard = -1;  // -1: unconditional
  int guard_value = 0;
};

// Bound store with activity caching and a value-restoring trail. Row
// activities are recomputed from scratch (fixed term order) whenever a
// member variable moves, so identical subproblems always see identical
// floating-point values regardless of the path that reached them.
class Propagator {
 public:
  explicit Propagator(const MipModel& model) {
    const auto& vars = model.vars();
    lb_.resize(vars.size());
    ub_.resize(vars.size());
    is_int_.resize(vars.size());
    for (size_t v = 0; v < vars.size(); ++v) {
      lb_[v] = vars[v].lb;
      ub_[v] = vars[v].ub;
      is_int_[v] = vars[v].kind != VarKind::Continuous;
      if (is_int_[v]) {
        lb_[v] = std::ceil(lb_[v] - kIntSnap);
        ub_[v] = std::floor(ub_[v] + kIntSnap);
      }
    }
    for (const auto& r : model.rows()) {
      rows_.push_back({r.terms, r.rel, r.rhs, -1, 0});
    }
    for (const auto& ind : model.indicators()) {
      rows_.push_back({ind.implied.terms, ind.implied.rel, ind.implied.rhs,
                       ind.guard, ind.guard_value});
    }
    var_rows_.resize(vars.size());
    for (size_t r = 0; r < rows_.size(); ++r) {
      for (const auto& t : rows_[r].terms) {
        var_rows_[t.var].push_back(static_cast<int>(r));
      }
      if (rows_[r].guard >= 0) {
        var_rows_[rows_[r].guard].push_back(static_cast<int>(r));
      }
    }
    for (auto& rows : var_rows_) {
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    }
    min_act_.resize(rows_.size());
    max_act_.resize(rows_.size());
    in_queue_.assign(rows_.size(), 0);
    for (size_t r = 0; r < rows_.size(); ++r) {
      recompute_activity(static_cast<int>(r));
      enqueue(static_cast<int>(r));
    }
  }

  double lb(int v) const { return lb_[v]; }
  double ub(int v) const { return ub_[v]; }
  bool fixed(int v) const { return ub_[v] - lb_[v] <= kFeasTol; }

  size_t trail_mark() const { return trail_.size(); }

  void backtrack_to(size_t mark) {
    while (trail_.size() > mark) {
      const Undo& u = trail_.back();
      switch (u.kind) {
        case Undo::LB: lb_[u.index] = u.old_value; break;
        case Undo::UB: ub_[u.index] = u.old_value; break;
        case Undo::MinAct: min_act_[u.index] = u.old_value; break;
        case Undo::MaxAct: max_act_[u.index] = u.old_value; break;
      }
      trail_.pop_back();
    }
    queue_.clear();
    std::fill(in_queue_.begin(), in_queue_.end(), 0);
  }

  bool assign(int v, double value) {
    return set_lb(v, value) && set_ub(v, value);
  }

  bool propagate() {
    while (!queue_.empty()) {
      int r = queue_.front();
      queue_.pop_front();
      in_queue_[r] = 0;
      if (!check_row(r)) return false;
    }
    return true;
  }

  // Active rows evaluated at `x`; returns false with the first violation.
  bool verify(const std::vector<double>& x) const {
    for (const auto& row : rows_) {
      if (row.guard >= 0) {
        int g = static_cast<int>(std::lround(x[row.guard]));
        if (g != row.guard_value) continue;
      }
      double acc = 0.0;
      for (const auto& t : row.terms) acc += t.coeff * x[t.var];
      switch (row.rel) {
        case Relation::LessEqual:
          if (acc > row.rhs + kVerifyTol) return false;
          break;
        case Relation::GreaterEqual:
          if (acc < row.rhs - kVerifyTol) return false;
          break;
        case Relation::Equal:
          if (std::abs(acc - row.rhs) > kVerifyTol) return false;
          break;
      }
    }
    return true;
  }

 private:
  struct Undo {
    enum Kind { LB, UB, MinAct, MaxAct } kind;
    int index;
    double old_value;
  };

  void enqueue(int r) {
    if (!in_queue_[r]) {
      in_queue_[r] = 1;
      queue_.push_back(r);
    }
  }

  void recompute_activity(int r) {
    double lo = 0.0, hi = 0.0;
    for (const auto& t : rows_[r].terms) {
      if (t.coeff > 0) {
        lo += t.coeff * lb_[t.var];
        hi += t.coeff * ub_[t.var];
      } else {
        lo += t.coeff * ub_[t.var];
        hi += t.coeff * lb_[t.var];
      }
    }
    min_act_[r] = lo;
    max_act_[r] = hi;
  }

  void touch_rows(int v) {
    for (int r : var_rows_[v]) {
      trail_.push_back({Undo::MinAct, r, min_act_[r]});
      trail_.push_back({Undo::MaxAct, r, max_act_[r]});
      recompute_activity(r);
      enqueue(r);
    }
  }

  bool set_lb(int v, double value) {
    if (is_int_[v]) value = std::ceil(value - kIntSnap);
    if (value <= lb_[v] + kFeasTol) return true;
    if (value > ub_[v] + kFeasTol) return false;
    trail_.push_back({Undo::LB, v, lb_[v]});
    lb_[v] = value;
    touch_rows(v);
    return true;
  }

  bool set_ub(int v, double value) {
    if (is_int_[v]) value = std::floor(value + kIntSnap);
    if (value >= ub_[v] - kFeasTol) return true;
    if (value < lb_[v] - kFeasTol) return false;
    trail_.push_back({Undo::UB, v, ub_[v]});
    ub_[v] = value;
    touch_rows(v);
    return true;
  }

  bool guard_fixed_to(int g, int value) const {
    return value == 1 ? lb_[g] > 0.5 : ub_[g] < 0.5;
  }

  bool check_row(int r) {
    const Row& row = rows_[r];
    if (row.guard >= 0) {
      if (guard_fixed_to(row.guard, 1 - row.guard_value)) return true;
      if (!guard_fixed_to(row.guard, row.guard_value)) {
        // Guard still free: refute it when the implied row cannot hold.
        bool impossible =
            (row.rel == Relation::GreaterEqual &&
             max_act_[r] < row.rhs - kFeasTol) ||
            (row.rel == Relation::LessEqual &&
             min_act_[r] > row.rhs + kFeasTol) ||
            (row.rel == Relation::Equal &&
             (max_act_[r] < row.rhs - kFeasTol ||
              min_act_[r] > row.rhs + kFeasTol));
        if (impossible) {
          double forced = 1 - row.guard_value;
          return assign(row.guard, forced);
        }
        return true;
      }
    }
    if (row.rel != Relation::LessEqual) {  // >= or ==
      if (max_act_[r] < row.rhs - kFeasTol) return false;
      for (const auto& t : row.terms) {
        if (t.coeff == 0.0) continue;
        double others = max_act_[r] -
                        t.coeff * (t.coeff > 0 ? ub_[t.var] : lb_[t.var]);
        double bound = (row.rhs - others) / t.coeff;
        if (t.coeff > 0) {
          if (bound > lb_[t.var] + kFeasTol && !set_lb(t.var, bound))
            return false;
        } else {
          if (bound < ub_[t.var] - kFeasTol && !set_ub(t.var, bound))
            return false;
        }
      }
    }
    if (row.rel != Relation::GreaterEqual) {  // <= or ==
      if (min_act_[r] > row.rhs + kFeasTol) return false;
      for (const auto& t : row.terms) {
        if (t.coeff == 0.0) continue;
        double others = min_act_[r] -
                        t.coeff * (t.coeff > 0 ? lb_[t.var] : ub_[t.var]);
        double bound = (row.rhs - others) / t.coeff;
        if (t.coeff > 0) {
          if (bound < ub_[t.var] - kFeasTol && !set_ub(t.var, bound))
            return false;
        } else {
          if (bound > lb_[t.var] + kFeasTol && !set_lb(t.var, bound))
            return false;
        }
      }
    }
    return true;
  }

  std::vector<Row> rows_;
  std::vector<std::vector<int>> var_rows_;
  std::vector<double> lb_, ub_, min_act_, max_act_;
  std::vector<char> is_int_;
  std::vector<uint8_t> in_queue_;
  std::deque<int> queue_;
  std::vector<Undo> trail_;
};

class BranchAndBound {
 public:
  BranchAndBound(const MipModel& model, const SolveParams& params,
                 const IncumbentCallback& on_incumbent)
      : model_(model),
        params_(params),
        on_incumbent_(on_incumbent),
        prop_(model),
        sense_(model.objective().sense) {
    for (const auto& v : model.vars()) {
      if (v.kind == VarKind::Continuous) {
        if (!v.derived) {
          throw InputError(
              "unsupported model for the built-in solver: continuous "
              "variable " +
              v.name + " is not derived from the integer assignment");
        }
        continue;
      }
      if (!std::isfinite(v.lb) || !std::isfinite(v.ub)) {
        throw InputError("unsupported model: unbounded integer variable " +
                         v.name);
      }
      branch_vars_.push_back(v.id);
    }
    // Seeded value order per branch variable (the only use of the seed).
    Rng rng = Rng::stream(params.seed, 0xb4a9c0);
    value_order_.resize(model.vars().size());
    for (int v : branch_vars_) {
      const auto& var = model.vars()[v];
      std::vector<double> values;
      for (double x = std::ceil(var.lb - kIntSnap);
           x <= var.ub + kIntSnap; x += 1.0) {
        values.push_back(x);
      }
      rng.shuffle(values);
      value_order_[v] = std::move(values);
    }
    obj_coeff_.assign(model.vars().size(), 0.0);
    for (const auto& t : model.objective().expr.terms) {
      obj_coeff_[t.var] += t.coeff;
    }
  }

  SolveOutcome run() {
    const auto start = std::chrono::steady_clock::now();
    start_ = start;
    SolveOutcome out;
    bool root_ok = prop_.propagate();
    if (root_ok) {
      dfs(0);
    }
    out.nodes = nodes_;
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (stop_ == Stop::Time) {
      out.status = SolveStatus::TimeLimit;
    } else if (stop_ == Stop::Target || stop_ == Stop::Callback) {
      out.status = SolveStatus::FeasibleStopped;
    } else {
      out.status = has_incumbent_ ? SolveStatus::Optimal
                                  : SolveStatus::Infeasible;
    }
    if (has_incumbent_) {
      out.objective = best_obj_;
      out.assignment = best_assignment_;
    }
    return out;
  }

 private:
  enum class Stop { None, Time, Target, Callback };

  bool time_exceeded() {
    if ((nodes_ & 0xfff) != 0) return false;
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    return elapsed >= params_.time_limit_s;
  }

  double optimistic_objective() const {
    const auto& obj = model_.objective().expr;
    double bound = obj.constant;
    for (const auto& t : obj.terms) {
      bool take_ub = (t.coeff > 0) == (sense_ == ObjSense::Maximize);
      bound += t.coeff * (take_ub ? prop_.ub(t.var) : prop_.lb(t.var));
    }
    return bound;
  }

  bool can_beat_incumbent(double bound) const {
    if (!has_incumbent_) return true;
    return sense_ == ObjSense::Maximize ? bound > best_obj_ + kFeasTol
                                        : bound < best_obj_ - kFeasTol;
  }

  // Returns false to unwind the whole search (time limit / stop request).
  bool dfs(size_t cursor) {
    ++nodes_;
    if (time_exceeded()) {
      stop_ = Stop::Time;
      return false;
    }
    if (!can_beat_incumbent(optimistic_objective())) return true;

    while (cursor < branch_vars_.size() && prop_.fixed(branch_vars_[cursor]))
      ++cursor;
    if (cursor == branch_vars_.size()) return handle_leaf();

    const int v = branch_vars_[cursor];
    for (double value : value_order_[v]) {
      if (value < prop_.lb(v) - kIntSnap || value > prop_.ub(v) + kIntSnap)
        continue;
      size_t mark = prop_.trail_mark();
      if (prop_.assign(v, value) && prop_.propagate()) {
        if (!dfs(cursor + 1)) return false;
      }
      prop_.backtrack_to(mark);
    }
    return true;
  }

  bool handle_leaf() {
    std::vector<double> x(model_.vars().size());
    for (const auto& var : model_.vars()) {
      if (prop_.fixed(var.id)) {
        x[var.id] = prop_.lb(var.id);
        continue;
      }
      // Free continuous variable: push it to the endpoint the objective
      // prefers; verification below rejects the leaf if that breaks a row.
      double c = obj_coeff_[var.id];
      bool take_ub = (c > 0) == (sense_ == ObjSense::Maximize) && c != 0.0;
      x[var.id] = take_ub ? prop_.ub(var.id) : prop_.lb(var.id);
    }
    double obj = model_.objective().expr.evaluate(x);
    if (has_incumbent_) {
      bool better = sense_ == ObjSense::Maximize ? obj > best_obj_ + kFeasTol
                                                 : obj < best_obj_ - kFeasTol;
      if (!better) return true;
    }
    if (!prop_.verify(x)) return true;
    best_assignment_ = std::move(x);
    best_obj_ = obj;
    has_incumbent_ = true;
    if (params_.objective_target) {
      bool reached = sense_ == ObjSense::Maximize
                         ? best_obj_ >= *params_.objective_target - kFeasTol
                         : best_obj_ <= *params_.objective_target + kFeasTol;
      if (reached) {
        stop_ = Stop::Target;
        return false;
      }
    }
    if (on_incumbent_ && on_incumbent_(best_assignment_, best_obj_)) {
      stop_ = Stop::Callback;
      return false;
    }
    return true;
  }

  const MipModel& model_;
  const SolveParams& params_;
  const IncumbentCallback& on_incumbent_;
  Propagator prop_;
  ObjSense sense_;
  std::vector<int> branch_vars_;
  std::vector<std::vector<double>> value_order_;
  std::vector<double> obj_coeff_;
  std::vector<double> best_assignment_;
  double best_obj_ = 0.0;
  bool has_incumbent_ = false;
  uint64_t nodes_ = 0;
  Stop stop_ = Stop::None;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

SolveOutcome solve_builtin(const MipModel& model, const SolveParams& params,
                           const IncumbentCallback& on_incumbent) {
  if (params.time_limit_s <= 0) throw InputError("time limit must be positive");
  if (params.stop_at_train_accuracy &&
      !(*params.stop_at_train_accuracy > 0.0 &&
        *params.stop_at_train_accuracy <= 1.0)) {
    throw InputError("accuracy stop threshold must lie in (0, 1]");
  }
  BranchAndBound solver(model, params, on_incumbent);
  return solver.run();
}

IntegerNetwork decode_network(const std::vector<double>& assignment,
                              const VarMap& varmap,
                              const std::vector<int>& arch, int p_bound) {
  auto decode_int = [&](int var, const char* role) {
    if (var < 0 || var >= static_cast<int>(assignment.size())) {
      throw DecodeError(std::string("assignment does not cover a ") + role +
                        " variable");
    }
    double v = assignment[var];
    double r = std::round(v);
    if (std::abs(v - r) > 1e-4) {
      throw DecodeError(std::string(role) + " value " + std::to_string(v) +
                        " is not integral");
    }
    int i = static_cast<int>(r);
    if (i < -p_bound || i > p_bound) {
      throw DecodeError(std::string(role) + " value " + std::to_string(i) +
                        " outside {-P..P}");
    }
    return i;
  };

  const int L = static_cast<int>(arch.size()) - 1;
  std::vector<std::vector<std::vector<int>>> weights(L);
  std::vector<std::vector<int>> biases(L);
  for (int l = 1; l <= L; ++l) {
    weights[l - 1].assign(arch[l - 1], std::vector<int>(arch[l], 0));
    biases[l - 1].assign(arch[l], 0);
    for (int i = 0; i < arch[l - 1]; ++i) {
      for (int j = 0; j < arch[l]; ++j) {
        weights[l - 1][i][j] =
            decode_int(varmap.weight[l - 1][i][j], "weight");
      }
    }
    for (int j = 0; j < arch[l]; ++j) {
      biases[l - 1][j] = decode_int(varmap.bias[l - 1][j], "bias");
    }
  }
  return IntegerNetwork(arch, p_bound, std::move(weights), std::move(biases));
}

bool early_stop_check(const std::vector<double>& assignment,
                      const VarMap& varmap, const MipModel& model,
                      const EncodedDataset& train, double threshold,
                      uint64_t seed) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InputError("early-stop threshold must lie in (0, 1]");
  }
  const int T = model.info().n_samples;
  if (model.info().objective_kind == ObjectiveKind::MaxCorrect) {
    // Objective route: each counted sample is predicted correctly without
    // ties, so objective >= ceil(threshold * |T|) certifies the accuracy.
    double obj = model.objective().expr.evaluate(assignment);
    double needed = std::ceil(threshold * T - kFeasTol);
    if (obj >= needed - kFeasTol) return true;
  }
  IntegerNetwork net =
      decode_network(assignment, varmap, model.info().arch,
                     model.info().p_bound);
  return accuracy(net, train, seed) >= threshold;
}

}  // namespace mipnn
