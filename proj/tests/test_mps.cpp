#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "mipnn/data.hpp"
#include "mipnn/errors.hpp"
#include "mipnn/mip.hpp"
#include "mipnn/mps.hpp"
#include "mipnn/solve.hpp"

using namespace mipnn;
namespace fs = std::filesystem;

namespace {

MipModel one_var_model() {
  MipModel m;
  int v = m.add_var(VarKind::Integer, -3, 5, "x0");
  m.add_row({{v, 2.0}}, Relation::LessEqual, 4.0, "cap");
  Objective obj;
  obj.sense = ObjSense::Maximize;
  obj.expr.add(v, 1.0);
  m.objective() = obj;
  return m;
}

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (fs::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

bool have_scipy() {
  return std::system(
             "python3 -c 'import scipy.optimize' >/dev/null 2>&1") == 0;
}

}  // namespace

TEST_CASE("MPS round-trips through a reference parser") {
  MipModel m = one_var_model();
  std::string text = mps_string(m);
  test_helpers::MpsFile parsed = test_helpers::parse_mps_text(text);

  CHECK(parsed.maximize);
  REQUIRE(parsed.var_order.size() == 1);
  const test_helpers::MpsVar& v = parsed.vars.at("x0");
  CHECK(v.lb == -3.0);
  CHECK(v.ub == 5.0);
  CHECK(v.is_integer);
  CHECK(v.obj_coeff == -1.0);  // negated for maximization
  REQUIRE(parsed.row_order.size() == 1);
  const test_helpers::MpsRow& row = parsed.rows.at("cap");
  CHECK(row.sense == 'L');
  CHECK(row.rhs == 4.0);
  REQUIRE(row.terms.size() == 1);
  CHECK(row.terms[0].second == 2.0);
}

TEST_CASE("MPS output is byte-identical for the same model") {
  EncodedDataset data = make_random_grid_dataset(2, 2, 2, 7);
  BuildResult a = build_base(data, {2, 2, 2}, 1);
  attach_sat_margin(a.model, a.varmap, data.labels, 0.5);
  MipModel lin_a = linearize_indicators(a.model);

  BuildResult b = build_base(data, {2, 2, 2}, 1);
  attach_sat_margin(b.model, b.varmap, data.labels, 0.5);
  MipModel lin_b = linearize_indicators(b.model);

  CHECK(mps_string(lin_a) == mps_string(lin_b));
}

TEST_CASE("models with indicators cannot be exported") {
  EncodedDataset data = make_random_grid_dataset(1, 2, 2, 7);
  BuildResult built = build_base(data, {2, 2, 2}, 1);
  CHECK_THROWS_AS(mps_string(built.model), BuildError);
}

TEST_CASE("solution files parse name/value lines and skip comments") {
  const std::string path = write_temp("mipnn_sol_ok.txt",
                                      "# comment\n"
                                      "* another\n"
                                      "w_0_1_0 1.0000\n"
                                      "\n"
                                      "b_1_0 -2\n");
  auto values = parse_solution_file(path);
  REQUIRE(values.size() == 2);
  CHECK(values[0].first == "w_0_1_0");
  CHECK(values[0].second == doctest::Approx(1.0));
  CHECK(values[1].second == doctest::Approx(-2.0));
  fs::remove(path);

  const std::string bad = write_temp("mipnn_sol_bad.txt", "w_0_1_0 abc\n");
  CHECK_THROWS_WITH_AS(parse_solution_file(bad),
                       doctest::Contains(":1:"), ParseError);
  fs::remove(bad);

  const std::string trailing =
      write_temp("mipnn_sol_trail.txt", "w_0_1_0 1.0 junk\n");
  CHECK_THROWS_AS(parse_solution_file(trailing), ParseError);
  fs::remove(trailing);
}

TEST_CASE("external backend consumes a scripted solver") {
  MipModel m = one_var_model();
  SolveParams params;
  params.time_limit_s = 10.0;

  SUBCASE("well-formed solution") {
    ExternalBackend fake{"printf 'x0 2.0000\\n' > {sol}"};
    SolveOutcome out = solve_external(m, params, fake);
    CHECK(out.status == SolveStatus::Optimal);
    CHECK(*out.objective == doctest::Approx(2.0));
    CHECK(out.assignment[0] == doctest::Approx(2.0));
  }

  SUBCASE("integer values within 1e-4 are rounded") {
    ExternalBackend fake{"printf 'x0 1.99997\\n' > {sol}"};
    SolveOutcome out = solve_external(m, params, fake);
    CHECK(out.assignment[0] == doctest::Approx(2.0));
  }

  SUBCASE("integrality violations are decode errors") {
    ExternalBackend fake{"printf 'x0 0.5\\n' > {sol}"};
    CHECK_THROWS_AS(solve_external(m, params, fake), DecodeError);
  }

  SUBCASE("unknown names are parse errors") {
    ExternalBackend fake{"printf 'zz 1\\n' > {sol}"};
    CHECK_THROWS_AS(solve_external(m, params, fake), ParseError);
  }

  SUBCASE("missing variables are decode errors") {
    ExternalBackend fake{"printf '# empty\\n' > {sol}"};
    CHECK_THROWS_AS(solve_external(m, params, fake), DecodeError);
  }

  SUBCASE("nonzero exit without a solution file is a solver error") {
    ExternalBackend fake{"exit 7"};
    CHECK_THROWS_AS(solve_external(m, params, fake), SolverError);
  }

  SUBCASE("exit 2 without a solution file reports infeasible") {
    ExternalBackend fake{"exit 2"};
    SolveOutcome out = solve_external(m, params, fake);
    CHECK(out.status == SolveStatus::Infeasible);
  }

  SUBCASE("exit 3 with an incumbent reports the time limit") {
    ExternalBackend fake{"printf 'x0 2\\n' > {sol}; exit 3"};
    SolveOutcome out = solve_external(m, params, fake);
    CHECK(out.status == SolveStatus::TimeLimit);
    CHECK(*out.objective == doctest::Approx(2.0));
  }
}

TEST_CASE("command templates receive the time limit and target") {
  MipModel m = one_var_model();
  SolveParams params;
  params.time_limit_s = 12.0;
  params.objective_target = 5.0;
  const std::string echo_path =
      (fs::temp_directory_path() / "mipnn_echo_args.txt").string();
  ExternalBackend fake{"printf '%s %s' '{time_limit_s}' '{target}' > " +
                       echo_path + "; printf 'x0 2\\n' > {sol}"};
  solve_external(m, params, fake);
  std::ifstream in(echo_path);
  std::string time_s, target_s;
  in >> time_s >> target_s;
  CHECK(time_s == "12");
  CHECK(target_s == "5");
  fs::remove(echo_path);
}

TEST_CASE("scipy reference backend matches the built-in solver") {
  if (!have_scipy()) {
    MESSAGE("scipy unavailable; skipping cross-backend check");
    return;
  }
  const std::string script =
      std::string(MIPNN_TOOLS_DIR) + "/external_solver.py";
  ExternalBackend scipy{"python3 " + script +
                        " {mps} {sol} {time_limit_s} {target}"};

  EncodedDataset data = make_random_grid_dataset(3, 2, 2, 61);
  for (ObjectiveKind kind :
       {ObjectiveKind::MaxCorrect, ObjectiveKind::SatMargin}) {
    BuildResult built = build_base(data, {2, 2, 2}, 1);
    if (kind == ObjectiveKind::MaxCorrect) {
      attach_max_correct(built.model, built.varmap, data.labels);
    } else {
      attach_sat_margin(built.model, built.varmap, data.labels, 0.5);
    }
    SolveParams params;
    params.time_limit_s = 120.0;
    SolveOutcome builtin = solve_builtin(built.model, params);
    SolveOutcome external = solve_external(built.model, params, scipy);
    REQUIRE(builtin.status == SolveStatus::Optimal);
    REQUIRE(external.status == SolveStatus::Optimal);
    CHECK(std::abs(*builtin.objective - *external.objective) <= 1e-6);
  }
}
