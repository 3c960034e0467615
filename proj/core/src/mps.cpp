#include "mipnn/mps.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "mipnn/errors.hpp"

namespace mipnn {

namespace {

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void column_entry(std::ostream& os, const std::string& var,
                  const std::string& row, double coeff) {
  os << "    " << var << "  " << row << "  " << fmt_num(coeff) << "\n";
}

}  // namespace

std::string mps_string(const MipModel& model) {
  if (!model.indicators().empty()) {
    throw BuildError("model still has indicator constraints; linearize first");
  }
  const bool maximize = model.objective().sense == ObjSense::Maximize;
  const double obj_sign = maximize ? -1.0 : 1.0;

  std::ostringstream os;
  os << "* generated by mipnn\n";
  if (maximize) {
    os << "* OBJSENSE: MAX (objective negated in this file)\n";
  } else {
    os << "* OBJSENSE: MIN\n";
  }
  os << "NAME          MIPNN\n";

  os << "ROWS\n";
  os << " N  OBJ\n";
  for (const auto& row : model.rows()) {
    char kind = row.rel == Relation::LessEqual ? 'L'
                : row.rel == Relation::GreaterEqual ? 'G'
                                                    : 'E';
    os << " " << kind << "  " << row.name << "\n";
  }

  // Per-variable objective coefficients and row occurrences.
  std::vector<double> obj_coeff(model.vars().size(), 0.0);
  for (const auto& t : model.objective().expr.terms) {
    obj_coeff[t.var] += t.coeff;
  }
  std::vector<std::vector<std::pair<const std::string*, double>>> occurrences(
      model.vars().size());
  for (const auto& row : model.rows()) {
    std::unordered_map<int, double> merged;
    for (const auto& t : row.terms) merged[t.var] += t.coeff;
    for (const auto& t : row.terms) {
      auto it = merged.find(t.var);
      if (it == merged.end()) continue;  // already emitted
      occurrences[t.var].push_back({&row.name, it->second});
      merged.erase(it);
    }
  }

  os << "COLUMNS\n";
  bool in_int_block = false;
  int marker_count = 0;
  for (const auto& var : model.vars()) {
    const bool is_int = var.kind != VarKind::Continuous;
    if (is_int && !in_int_block) {
      os << "    MARKER" << marker_count++
         << "  'MARKER'  'INTORG'\n";
      in_int_block = true;
    } else if (!is_int && in_int_block) {
      os << "    MARKER" << marker_count++
         << "  'MARKER'  'INTEND'\n";
      in_int_block = false;
    }
    column_entry(os, var.name, "OBJ", obj_sign * obj_coeff[var.id]);
    for (const auto& [row_name, coeff] : occurrences[var.id]) {
      column_entry(os, var.name, *row_name, coeff);
    }
  }
  if (in_int_block) {
    os << "    MARKER" << marker_count++ << "  'MARKER'  'INTEND'\n";
  }

  os << "RHS\n";
  if (model.objective().expr.constant != 0.0) {
    column_entry(os, "RHS", "OBJ",
                 -obj_sign * model.objective().expr.constant);
  }
  for (const auto& row : model.rows()) {
    column_entry(os, "RHS", row.name, row.rhs);
  }

  os << "BOUNDS\n";
  for (const auto& var : model.vars()) {
    os << " LO BND  " << var.name << "  " << fmt_num(var.lb) << "\n";
    os << " UP BND  " << var.name << "  " << fmt_num(var.ub) << "\n";
  }
  os << "ENDATA\n";
  return os.str();
}

void export_mps(const MipModel& model, const std::string& path) {
  std::string text = mps_string(model);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write MPS file: " + path);
  out << text;
  if (!out.good()) throw InputError("failed while writing MPS file: " + path);
}

std::vector<std::pair<std::string, double>> parse_solution_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read solution file: " + path);
  std::vector<std::pair<std::string, double>> values;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (!std::isalnum(static_cast<unsigned char>(line[start]))) continue;
    std::istringstream ss(line.substr(start));
    std::string name, value_str, extra;
    ss >> name >> value_str;
    if (value_str.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'name value'");
    }
    if (ss >> extra) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": trailing content '" + extra + "'");
    }
    try {
      size_t pos = 0;
      double v = std::stod(value_str, &pos);
      if (pos != value_str.size() || !std::isfinite(v)) throw std::exception();
      values.emplace_back(name, v);
    } catch (...) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": bad value '" + value_str + "'");
    }
  }
  return values;
}

ExternalBackend ExternalBackend::from_env() {
  const char* cmd = std::getenv("MIPNN_SOLVER_CMD");
  return {cmd ? cmd : ""};
}

namespace {

std::string substitute(std::string templ, const std::string& key,
                       const std::string& value) {
  size_t pos = 0;
  while ((pos = templ.find(key, pos)) != std::string::npos) {
    templ.replace(pos, key.size(), value);
    pos += value.size();
  }
  return templ;
}

// Runs the command under /bin/sh with a hard deadline; the child is killed
// 30 s past the time limit. Returns the exit code, or -1 when killed.
int run_with_deadline(const std::string& command, double deadline_s) {
  pid_t pid = fork();
  if (pid < 0) throw SolverError("fork failed for external solver");
  if (pid == 0) {
    execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }
  const auto start = std::chrono::steady_clock::now();
  for (;;) {
    int status = 0;
    pid_t done = waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      if (WIFEXITED(status)) return WEXITSTATUS(status);
      return -1;
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (elapsed > deadline_s) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      return -1;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

std::string temp_stub() {
  static int counter = 0;
  auto now = std::chrono::steady_clock::now().time_since_epoch().count();
  std::ostringstream os;
  os << "mipnn_" << getpid() << "_" << now << "_" << counter++;
  return (std::filesystem::temp_directory_path() / os.str()).string();
}

}  // namespace

SolveOutcome solve_external(const MipModel& model, const SolveParams& params,
                            const ExternalBackend& backend) {
  if (backend.command_template.empty()) {
    throw SolverError(
        "no external solver command template (set MIPNN_SOLVER_CMD or pass "
        "--solver-cmd)");
  }
  if (params.time_limit_s <= 0) throw InputError("time limit must be positive");

  const MipModel* m = &model;
  MipModel linearized;
  if (!model.indicators().empty()) {
    linearized = linearize_indicators(model);
    m = &linearized;
  }

  const std::string stub = temp_stub();
  const std::string mps_path = stub + ".mps";
  const std::string sol_path = stub + ".sol";
  export_mps(*m, mps_path);

  std::string target;
  if (params.objective_target) {
    target = fmt_num(*params.objective_target);
  } else if (params.stop_at_train_accuracy &&
             m->info().objective_kind == ObjectiveKind::MaxCorrect) {
    // The accuracy rule maps to an objective cutoff for max-correct only.
    target = fmt_num(
        std::ceil(*params.stop_at_train_accuracy * m->info().n_samples - 1e-9));
  }

  std::string cmd = backend.command_template;
  cmd = substitute(cmd, "{mps}", mps_path);
  cmd = substitute(cmd, "{sol}", sol_path);
  cmd = substitute(cmd, "{time_limit_s}", fmt_num(params.time_limit_s));
  cmd = substitute(cmd, "{target}", target);

  const auto start = std::chrono::steady_clock::now();
  int exit_code = run_with_deadline(cmd, params.time_limit_s + 30.0);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  const bool have_sol = std::filesystem::exists(sol_path);
  auto cleanup = [&]() {
    std::error_code ec;
    std::filesystem::remove(mps_path, ec);
    std::filesystem::remove(sol_path, ec);
  };

  SolveOutcome out;
  out.wall_time_s = wall;
  if (exit_code == 2 && !have_sol) {
    cleanup();
    out.status = SolveStatus::Infeasible;
    return out;
  }
  if (exit_code == 3 && !have_sol) {
    cleanup();
    out.status = SolveStatus::TimeLimit;
    return out;
  }
  if (!have_sol || (exit_code != 0 && exit_code != 3)) {
    cleanup();
    throw SolverError("external solver failed (exit " +
                      std::to_string(exit_code) + ", command: " + cmd + ")");
  }

  std::vector<std::pair<std::string, double>> parsed;
  try {
    parsed = parse_solution_file(sol_path);
  } catch (...) {
    cleanup();
    throw;
  }
  cleanup();

  std::unordered_map<std::string, int> by_name;
  for (const auto& v : m->vars()) by_name[v.name] = v.id;

  std::vector<double> assignment(m->vars().size(), 0.0);
  std::vector<char> seen(m->vars().size(), 0);
  for (const auto& [name, value] : parsed) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw ParseError("solution file names unknown variable '" + name + "'");
    }
    const Variable& var = m->vars()[it->second];
    double v = value;
    if (var.kind != VarKind::Continuous) {
      double r = std::round(v);
      if (std::abs(v - r) > 1e-4) {
        throw DecodeError("integer variable " + name + " has value " +
                          fmt_num(v));
      }
      v = r;
    }
    assignment[it->second] = v;
    seen[it->second] = 1;
  }
  for (const auto& v : m->vars()) {
    if (!seen[v.id]) {
      throw DecodeError("solution file is missing variable '" + v.name + "'");
    }
  }

  out.assignment = std::move(assignment);
  out.objective = m->objective().expr.evaluate(out.assignment);
  out.status =
      exit_code == 3 ? SolveStatus::TimeLimit : SolveStatus::Optimal;
  return out;
}

}  // namespace mipnn
