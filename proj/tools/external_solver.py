#!/usr/bin/env python3
"""Reference external MILP backend for mipnn.

Parses the MPS files written by `mipnn export-mps`, solves them with
scipy.optimize.milp (HiGHS), and writes a `name value` solution file.

Usage:
    external_solver.py MPS_PATH SOL_PATH [TIME_LIMIT_S] [TARGET]

The optional TARGET argument is accepted for command-template
compatibility but ignored (scipy exposes no objective cutoff).

Exit codes: 0 optimal, 2 infeasible, 3 stopped at the time limit
(solution file written iff an incumbent exists), 4 anything else.
"""
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp


def parse_mps(path):
    obj_row = None
    row_sense = {}
    col_order = []
    col_index = {}
    integrality = []
    obj_coeffs = {}
    entries = []  # (row, col_idx, coeff)
    rhs = {}
    bounds_lo = {}
    bounds_hi = {}
    section = None
    in_integer = False

    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("*"):
                continue
            if not line[0].isspace():
                section = line.split()[0]
                continue
            parts = line.split()
            if section == "ROWS":
                sense, name = parts[0], parts[1]
                if sense == "N":
                    obj_row = name
                else:
                    row_sense[name] = sense
            elif section == "COLUMNS":
                if len(parts) >= 3 and parts[1] == "'MARKER'":
                    in_integer = parts[2] == "'INTORG'"
                    continue
                name = parts[0]
                if name not in col_index:
                    col_index[name] = len(col_order)
                    col_order.append(name)
                    integrality.append(1 if in_integer else 0)
                idx = col_index[name]
                for i in range(1, len(parts) - 1, 2):
                    row, coeff = parts[i], float(parts[i + 1])
                    if row == obj_row:
                        obj_coeffs[idx] = obj_coeffs.get(idx, 0.0) + coeff
                    else:
                        entries.append((row, idx, coeff))
            elif section == "RHS":
                for i in range(1, len(parts) - 1, 2):
                    row, value = parts[i], float(parts[i + 1])
                    if row != obj_row:
                        rhs[row] = value
            elif section == "BOUNDS":
                kind, name, value = parts[0], parts[2], float(parts[3])
                if kind == "LO":
                    bounds_lo[name] = value
                elif kind == "UP":
                    bounds_hi[name] = value
                elif kind == "FX":
                    bounds_lo[name] = value
                    bounds_hi[name] = value

    n = len(col_order)
    c = np.zeros(n)
    for idx, coeff in obj_coeffs.items():
        c[idx] = coeff
    lo = np.array([bounds_lo.get(name, 0.0) for name in col_order])
    hi = np.array([bounds_hi.get(name, np.inf) for name in col_order])

    row_names = list(row_sense.keys())
    row_pos = {name: i for i, name in enumerate(row_names)}
    data, ri, ci = [], [], []
    for row, idx, coeff in entries:
        data.append(coeff)
        ri.append(row_pos[row])
        ci.append(idx)
    a_mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(row_names), n))
    con_lo = np.empty(len(row_names))
    con_hi = np.empty(len(row_names))
    for name, i in row_pos.items():
        b = rhs.get(name, 0.0)
        sense = row_sense[name]
        con_lo[i] = -np.inf if sense == "L" else b
        con_hi[i] = np.inf if sense == "G" else b

    return col_order, c, np.array(integrality), Bounds(lo, hi), \
        LinearConstraint(a_mat, con_lo, con_hi)


def main():
    if len(sys.argv) < 3:
        print(__doc__, file=sys.stderr)
        return 4
    mps_path, sol_path = sys.argv[1], sys.argv[2]
    options = {"presolve": True}
    if len(sys.argv) > 3 and sys.argv[3]:
        options["time_limit"] = float(sys.argv[3])

    names, c, integrality, bounds, constraint = parse_mps(mps_path)
    res = milp(c=c, constraints=[constraint] if constraint.A.shape[0] else [],
               integrality=integrality, bounds=bounds, options=options)

    if res.status == 2:
        return 2
    if res.status in (0, 1):
        if res.x is None:
            return 3 if res.status == 1 else 4
        with open(sol_path, "w") as fh:
            fh.write("# mipnn external solution\n")
            for name, value in zip(names, res.x):
                fh.write("%s %.12g\n" % (name, value))
        return 0 if res.status == 0 else 3
    return 4


if __name__ == "__main__":
    sys.exit(main())
