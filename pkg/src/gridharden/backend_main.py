"""Bundled MILP solver executable: MPS in, plain solution file out.

Run as `python -m gridharden.backend_main model.mps model.sol --mip-gap G
--time-limit T [--warm-start FILE]`. Solves with scipy's HiGHS interface.
A warm start file is accepted for interface compatibility but this solver
cannot seed incumbents, so it is acknowledged and ignored.

Internal failures are reported in-band (`# status error`) so the caller
can distinguish solver outcomes from launch problems.
"""

from __future__ import annotations

import argparse
import math
import sys
import traceback
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import SENSE_GE, SENSE_LE
from .mps import parse_mps


def _solve(args: argparse.Namespace) -> tuple[dict[str, object], dict[str, float]]:
    parsed = parse_mps(Path(args.model).read_text())
    names = parsed.var_order
    n = len(names)
    c = np.zeros(n)
    lb = np.zeros(n)
    ub = np.zeros(n)
    integrality = np.zeros(n)
    for j, name in enumerate(names):
        c[j] = parsed.objective.get(name, 0.0)
        lb[j], ub[j] = parsed.bounds[name]
        integrality[j] = 1.0 if name in parsed.integer else 0.0

    index = {name: j for j, name in enumerate(names)}
    m = len(parsed.rows)
    mat = sparse.lil_matrix((m, n))
    row_lo = np.full(m, -np.inf)
    row_hi = np.full(m, np.inf)
    for i, (_, sense, rhs, coeffs) in enumerate(parsed.rows):
        for var, coef in coeffs.items():
            mat[i, index[var]] = coef
        if sense == SENSE_LE:
            row_hi[i] = rhs
        elif sense == SENSE_GE:
            row_lo[i] = rhs
        else:
            row_lo[i] = row_hi[i] = rhs

    note = None
    if args.warm_start:
        n_warm = sum(1 for line in Path(args.warm_start).read_text().splitlines()
                     if line.strip() and not line.lstrip().startswith("#"))
        note = f"warm start with {n_warm} values acknowledged but not used"

    kwargs = {}
    if m:
        kwargs["constraints"] = LinearConstraint(mat.tocsr(), row_lo, row_hi)
    res = milp(c, integrality=integrality, bounds=Bounds(lb, ub),
               options={"mip_rel_gap": args.mip_gap, "time_limit": args.time_limit,
                        "disp": False}, **kwargs)

    meta: dict[str, object] = {}
    if note:
        meta["note"] = note
    if res.status == 0:
        gap = res.mip_gap if getattr(res, "mip_gap", None) is not None else 0.0
        dual = getattr(res, "mip_dual_bound", None)
        if dual is not None and abs(res.fun - dual) <= 1e-9 * max(1.0, abs(res.fun)):
            gap = 0.0  # relative gap is ill-defined near zero objectives
        meta.update(status="optimal", objective=res.fun, gap=gap)
        if getattr(res, "mip_node_count", None) is not None:
            meta["nodes"] = res.mip_node_count
        return meta, dict(zip(names, res.x))
    if res.status == 2:
        meta["status"] = "infeasible"
        return meta, {}
    if res.status == 1:
        meta["status"] = "time-limit"
        if res.x is not None:
            gap = res.mip_gap if getattr(res, "mip_gap", None) is not None else math.inf
            meta.update(objective=res.fun, gap=gap)
            return meta, dict(zip(names, res.x))
        return meta, {}
    meta.update(status="error", message=f"solver status {res.status}: {res.message}")
    return meta, {}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="solve an MPS file with HiGHS (via scipy)")
    ap.add_argument("model", help="input MPS file")
    ap.add_argument("solution", help="output solution file")
    ap.add_argument("--mip-gap", type=float, default=0.01)
    ap.add_argument("--time-limit", type=float, default=300.0)
    ap.add_argument("--warm-start", default=None)
    args = ap.parse_args(argv)

    try:
        meta, values = _solve(args)
    except Exception as exc:  # report in-band; caller re-verifies anyway
        meta = {"status": "error",
                "message": f"{type(exc).__name__}: {exc}"}
        values = {}
        traceback.print_exc(file=sys.stderr)

    lines = [f"# {k} {v}" for k, v in meta.items()]
    lines += [f"{name} {repr(float(val))}" for name, val in values.items()]
    Path(args.solution).write_text("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
