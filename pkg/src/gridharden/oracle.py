"""Exhaustive verification solver for small mixed-integer models.

Enumerates every assignment of the free integer variables, checks the
rows that involve only fixed/integer columns as constants, and solves the
continuous restriction of the survivors. Small restrictions go through the
in-repo dense simplex so the result is independent of the production
backend; larger ones delegate to the backend with all integers pinned.

The returned optimum is global (proven by enumeration); ties between
assignments resolve to the lexicographically smallest one.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import simplex
from .backends import (STATUS_INFEASIBLE, STATUS_OPTIMAL, BackendConfig,
                       Solution, SolveOptions, solve)
from .model import ROW_FEAS_TOL, SENSE_EQ, SENSE_GE, SENSE_LE, MilpModel

DEFAULT_BINARY_CAP = 16
SIMPLEX_VAR_LIMIT = 200


class OracleCapError(ValueError):
    pass


def oracle_solve(model: MilpModel, cap: int = DEFAULT_BINARY_CAP,
                 simplex_var_limit: int = SIMPLEX_VAR_LIMIT,
                 backend: BackendConfig | None = None) -> Solution:
    enum_vars = model.free_binaries
    if len(enum_vars) > cap:
        raise OracleCapError(
            f"oracle cap exceeded: {len(enum_vars)} free binaries > cap {cap}")

    domains = []
    for v in enum_vars:
        lo, hi = math.ceil(v.lb - 1e-9), math.floor(v.ub + 1e-9)
        domains.append(tuple(float(k) for k in range(lo, hi + 1)))

    names = [v.name for v in model.variables]
    col = {name: j for j, name in enumerate(names)}
    n = len(names)
    m = len(model.rows)
    a = np.zeros((m, n))
    rhs = np.empty(m)
    senses = []
    for i, row in enumerate(model.rows):
        for var, coef in row.coeffs.items():
            a[i, col[var]] += coef
        rhs[i] = row.rhs
        senses.append(row.sense)
    c = np.zeros(n)
    for var, coef in model.objective.items():
        c[col[var]] = coef
    lb = np.array([v.lb for v in model.variables])
    ub = np.array([v.ub for v in model.variables])

    enum_idx = np.array([col[v.name] for v in enum_vars], dtype=int)
    enum_set = set(enum_idx.tolist())
    pinned = np.array([j for j, v in enumerate(model.variables)
                       if v.lb == v.ub and j not in enum_set], dtype=int)
    pinned_set = set(pinned.tolist())
    free_idx = np.array([j for j in range(n)
                         if j not in enum_set and j not in pinned_set],
                        dtype=int)

    # Row split: rows touching no free column are pure constants per assignment.
    touches_free = (np.abs(a[:, free_idx]) > 0).any(axis=1) if free_idx.size else \
        np.zeros(m, dtype=bool)
    dyn_rows = np.flatnonzero(touches_free)
    const_rows = np.flatnonzero(~touches_free)

    x_pinned = lb[pinned]
    base_dyn_rhs = rhs[dyn_rows] - a[np.ix_(dyn_rows, pinned)] @ x_pinned
    a_dyn_enum = a[np.ix_(dyn_rows, enum_idx)]
    a_dyn_free = a[np.ix_(dyn_rows, free_idx)]
    base_const_act = a[np.ix_(const_rows, pinned)] @ x_pinned
    a_const_enum = a[np.ix_(const_rows, enum_idx)]
    const_sense = [senses[i] for i in const_rows]
    const_rhs = rhs[const_rows]
    dyn_sense = [senses[i] for i in dyn_rows]
    c_free = c[free_idx]
    c_enum = c[enum_idx]
    pinned_obj = float(c[pinned] @ x_pinned)

    use_simplex = free_idx.size <= simplex_var_limit
    best_obj = math.inf
    best_values: dict[str, float] | None = None
    lp_solves = 0
    assignments = 0

    for combo in itertools.product(*domains) if domains else [()]:
        assignments += 1
        a_vec = np.asarray(combo, dtype=float)
        const_act = base_const_act + a_const_enum @ a_vec
        ok = True
        for act, sense, target in zip(const_act, const_sense, const_rhs):
            if sense == SENSE_LE and act > target + ROW_FEAS_TOL:
                ok = False
                break
            if sense == SENSE_GE and act < target - ROW_FEAS_TOL:
                ok = False
                break
            if sense == SENSE_EQ and abs(act - target) > ROW_FEAS_TOL:
                ok = False
                break
        if not ok:
            continue

        obj_const = pinned_obj + float(c_enum @ a_vec)
        dyn_rhs = base_dyn_rhs - a_dyn_enum @ a_vec

        if free_idx.size == 0:
            if obj_const < best_obj - 1e-12:
                best_obj = obj_const
                best_values = _assemble(names, lb, pinned, enum_idx, a_vec,
                                        free_idx, np.empty(0))
            continue

        lp_solves += 1
        if use_simplex:
            res = simplex.solve_lp(c_free, a_dyn_free, dyn_sense, dyn_rhs,
                                   lb[free_idx], ub[free_idx])
            if res.status == simplex.STATUS_INFEASIBLE:
                continue
            if res.status != simplex.STATUS_OPTIMAL:
                raise RuntimeError(f"restriction LP returned {res.status}")
            obj = obj_const + res.objective
            x_free = res.x
        else:
            restricted = model.fixed({v.name: float(val)
                                      for v, val in zip(enum_vars, combo)})
            sub = solve(restricted, SolveOptions(mip_gap=0.0, backend=backend))
            if sub.status == STATUS_INFEASIBLE:
                continue
            if sub.status not in (STATUS_OPTIMAL,):
                raise RuntimeError(f"backend restriction returned {sub.status}: "
                                   f"{sub.diagnostics}")
            obj = sub.objective
            x_free = np.array([sub.values[names[j]] for j in free_idx])

        if obj < best_obj - 1e-12:
            best_obj = obj
            best_values = _assemble(names, lb, pinned, enum_idx, a_vec,
                                    free_idx, x_free)

    stats = {"oracle": True, "assignments": assignments, "lp_solves": lp_solves,
             "lp_route": "simplex" if use_simplex else "backend"}
    if best_values is None:
        return Solution(status=STATUS_INFEASIBLE, stats=stats)
    return Solution(status=STATUS_OPTIMAL, objective=best_obj, gap=0.0,
                    values=best_values, stats=stats)


def _assemble(names, lb, pinned, enum_idx, a_vec, free_idx, x_free) -> dict[str, float]:
    full = np.zeros(len(names))
    full[pinned] = lb[pinned]
    if enum_idx.size:
        full[enum_idx] = a_vec
    if free_idx.size:
        full[free_idx] = x_free
    return {name: float(full[j]) for j, name in enumerate(names)}
