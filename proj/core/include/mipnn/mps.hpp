#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mipnn/mip.hpp"
#include "mipnn/solve.hpp"

namespace mipnn {

// Serializes a linearized model (no indicator constraints) as an MPS file:
// ROWS / COLUMNS (integers inside MARKER INTORG/INTEND) / RHS / BOUNDS.
// Maximization is encoded by negating the objective row; a leading comment
// records the original sense. Output is byte-identical for equal models.
std::string mps_string(const MipModel& model);
void export_mps(const MipModel& model, const std::string& path);

// Whitespace-separated "name value" lines; lines starting with a
// non-alphanumeric character are comments. Unknown names and malformed
// values raise ParseError with the line number.
std::vector<std::pair<std::string, double>> parse_solution_file(
    const std::string& path);

// Command template with {mps}, {sol}, {time_limit_s} and {target}
// placeholders. Exit protocol: 0 optimal, 2 infeasible, 3 stopped at the
// time limit (solution file present iff an incumbent exists), anything
// else is a solver error.
struct ExternalBackend {
  std::string command_template;

  // Reads MIPNN_SOLVER_CMD; empty template if unset.
  static ExternalBackend from_env();
};

// Exports the (linearized) model to a temporary MPS file, runs the
// external solver as a subprocess bounded by time_limit plus a 30 s grace
// kill, and decodes the solution file back through the model's variable
// names. Integer variables are rounded when within 1e-4 of an integer.
SolveOutcome solve_external(const MipModel& model, const SolveParams& params,
                            const ExternalBackend& backend);

}  // namespace mipnn
