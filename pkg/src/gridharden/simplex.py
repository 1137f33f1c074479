"""Dense revised simplex for small LPs with general variable bounds.

Used by the exhaustive verifier to solve the continuous restriction after
fixing binaries, so it must be independent of any external solver. Scope:
tiny dense problems (a few hundred variables); production solves go
through a backend instead.

Method: rows become equalities via slacks, phase 1 minimizes signed
artificials, phase 2 the true objective. Nonbasic variables sit at a bound
(or at zero when free); the ratio test accounts for both the leaving
variable's bounds and the entering variable's own range (bound flips).
Dantzig pricing with a Bland fallback after a stall guards against
cycling; the basis inverse is refreshed periodically for accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SENSE_EQ, SENSE_GE, SENSE_LE

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"

_AT_LOWER = 0
_AT_UPPER = 1
_FREE = 2
_BASIC = 3

_REFRESH_EVERY = 64
_BLAND_AFTER = 3000


class SimplexError(RuntimeError):
    pass


@dataclass
class LpResult:
    status: str
    objective: float | None = None
    x: np.ndarray | None = None


def solve_lp(c, a_matrix, senses, rhs, lb, ub,
             max_iter: int = 50000, tol: float = 1e-9) -> LpResult:
    """Minimize c@x subject to rows (a_matrix, senses, rhs) and lb<=x<=ub."""
    c = np.asarray(c, dtype=float)
    a = np.atleast_2d(np.asarray(a_matrix, dtype=float))
    b = np.asarray(rhs, dtype=float)
    lo = np.asarray(lb, dtype=float).copy()
    hi = np.asarray(ub, dtype=float).copy()
    n = c.size
    m = b.size
    if m == 0:
        return _solve_unconstrained(c, lo, hi)
    if a.shape != (m, n):
        raise ValueError(f"matrix shape {a.shape} != ({m}, {n})")

    # Slack per inequality row turns everything into equalities.
    slack_cols = []
    slack_lo, slack_hi = [], []
    for i, sense in enumerate(senses):
        if sense == SENSE_EQ:
            continue
        col = np.zeros(m)
        col[i] = 1.0 if sense == SENSE_LE else -1.0
        slack_cols.append(col)
        slack_lo.append(0.0)
        slack_hi.append(math.inf)
    if slack_cols:
        a = np.hstack([a, np.column_stack(slack_cols)])
        lo = np.concatenate([lo, slack_lo])
        hi = np.concatenate([hi, slack_hi])
        c_full = np.concatenate([c, np.zeros(len(slack_cols))])
    else:
        c_full = c.copy()
    n_real = a.shape[1]

    # Nonbasic start: finite lower bound if any, else finite upper, else 0.
    status = np.empty(n_real, dtype=np.int8)
    x = np.zeros(n_real)
    for j in range(n_real):
        if np.isfinite(lo[j]):
            status[j], x[j] = _AT_LOWER, lo[j]
        elif np.isfinite(hi[j]):
            status[j], x[j] = _AT_UPPER, hi[j]
        else:
            status[j], x[j] = _FREE, 0.0

    # Artificials absorb the residual so the initial basis is the identity.
    resid = b - a @ x
    art_sign = np.where(resid >= 0.0, 1.0, -1.0)
    a = np.hstack([a, np.diag(art_sign)])
    lo = np.concatenate([lo, np.zeros(m)])
    hi = np.concatenate([hi, np.full(m, math.inf)])
    x = np.concatenate([x, np.abs(resid)])
    status = np.concatenate([status, np.full(m, _BASIC, dtype=np.int8)])
    basis = list(range(n_real, n_real + m))
    n_total = n_real + m

    phase1_cost = np.concatenate([np.zeros(n_real), np.ones(m)])
    phase2_cost = np.concatenate([c_full, np.zeros(m)])

    state = _State(a=a, b=b, lo=lo, hi=hi, x=x, status=status, basis=basis,
                   tol=tol)
    state.refresh()

    outcome = _iterate(state, phase1_cost, max_iter)
    if outcome == STATUS_UNBOUNDED:
        raise SimplexError("phase 1 reported unbounded")
    phase1_obj = float(phase1_cost @ state.x)
    if phase1_obj > 1e-7:
        return LpResult(status=STATUS_INFEASIBLE)

    # Lock artificials at zero for phase 2.
    state.lo[n_real:] = 0.0
    state.hi[n_real:] = 0.0
    state.x[n_real:] = np.where(np.abs(state.x[n_real:]) < 1e-9,
                                0.0, state.x[n_real:])
    for j in range(n_real, n_total):
        if state.status[j] != _BASIC:
            state.status[j] = _AT_LOWER
            state.x[j] = 0.0

    outcome = _iterate(state, phase2_cost, max_iter)
    if outcome == STATUS_UNBOUNDED:
        return LpResult(status=STATUS_UNBOUNDED)
    xs = state.x[:n]
    return LpResult(status=STATUS_OPTIMAL, objective=float(c @ xs), x=xs.copy())


def _solve_unconstrained(c, lo, hi) -> LpResult:
    x = np.zeros_like(c)
    for j, cj in enumerate(c):
        if cj > 0:
            if not np.isfinite(lo[j]):
                return LpResult(status=STATUS_UNBOUNDED)
            x[j] = lo[j]
        elif cj < 0:
            if not np.isfinite(hi[j]):
                return LpResult(status=STATUS_UNBOUNDED)
            x[j] = hi[j]
        else:
            x[j] = lo[j] if np.isfinite(lo[j]) else (hi[j] if np.isfinite(hi[j]) else 0.0)
    if np.any(x < lo) or np.any(x > hi):
        return LpResult(status=STATUS_INFEASIBLE)
    return LpResult(status=STATUS_OPTIMAL, objective=float(c @ x), x=x)


class _State:
    def __init__(self, a, b, lo, hi, x, status, basis, tol):
        self.a = a
        self.b = b
        self.lo = lo
        self.hi = hi
        self.x = x
        self.status = status
        self.basis = basis
        self.tol = tol
        self.binv: np.ndarray | None = None
        self.pivots_since_refresh = 0

    def refresh(self):
        basis_matrix = self.a[:, self.basis]
        try:
            self.binv = np.linalg.inv(basis_matrix)
        except np.linalg.LinAlgError as exc:
            raise SimplexError(f"singular basis: {exc}") from exc
        self.pivots_since_refresh = 0
        self.recompute_basic_values()

    def recompute_basic_values(self):
        nonbasic_mask = self.status != _BASIC
        rhs = self.b - self.a[:, nonbasic_mask] @ self.x[nonbasic_mask]
        xb = self.binv @ rhs
        self.x[self.basis] = xb

    def pivot(self, entering: int, leaving_pos: int, w: np.ndarray):
        # Elementary row transformation keeps binv = inv(A[:, basis]).
        piv = w[leaving_pos]
        if abs(piv) < 1e-11:
            raise SimplexError("pivot element too small")
        e = -w / piv
        e[leaving_pos] = 1.0 / piv
        updated = self.binv + np.outer(e, self.binv[leaving_pos])
        updated[leaving_pos] = self.binv[leaving_pos] / piv
        self.binv = updated
        self.basis[leaving_pos] = entering
        self.pivots_since_refresh += 1
        if self.pivots_since_refresh >= _REFRESH_EVERY:
            self.refresh()


def _iterate(state: _State, cost: np.ndarray, max_iter: int) -> str:
    tol = state.tol
    for iteration in range(max_iter):
        y = cost[state.basis] @ state.binv
        reduced = cost - y @ state.a

        movable = (state.hi - state.lo) > 1e-12
        eligible_up = (((state.status == _AT_LOWER) | (state.status == _FREE))
                       & (reduced < -1e-7) & movable)
        eligible_dn = (((state.status == _AT_UPPER) | (state.status == _FREE))
                       & (reduced > 1e-7) & movable)
        candidates = np.flatnonzero(eligible_up | eligible_dn)
        if candidates.size == 0:
            return STATUS_OPTIMAL

        if iteration < _BLAND_AFTER:
            entering = int(candidates[np.argmax(np.abs(reduced[candidates]))])
        else:
            entering = int(candidates[0])  # Bland: smallest index
        direction = 1.0 if (eligible_up[entering]) else -1.0

        w = state.binv @ state.a[:, entering]
        # Basic variables move by -direction * w * step.
        step = math.inf
        leaving_pos = -1
        leaving_to_upper = False
        basis_arr = np.asarray(state.basis)
        xb = state.x[basis_arr]
        delta = -direction * w
        for i in range(len(state.basis)):
            if delta[i] > tol:
                room = state.hi[basis_arr[i]] - xb[i]
                ratio = room / delta[i]
                if ratio < step - 1e-12:
                    step, leaving_pos, leaving_to_upper = ratio, i, True
            elif delta[i] < -tol:
                room = xb[i] - state.lo[basis_arr[i]]
                ratio = room / (-delta[i])
                if ratio < step - 1e-12:
                    step, leaving_pos, leaving_to_upper = ratio, i, False
        own_range = state.hi[entering] - state.lo[entering]
        flip = False
        if own_range < step:
            step, flip = own_range, True

        if math.isinf(step):
            return STATUS_UNBOUNDED
        step = max(step, 0.0)

        state.x[entering] += direction * step
        state.x[basis_arr] = xb + delta * step

        if flip:
            state.status[entering] = (_AT_UPPER if direction > 0 else _AT_LOWER)
            continue
        if leaving_pos < 0:
            raise SimplexError("no leaving variable despite finite step")
        leaving = state.basis[leaving_pos]
        state.status[leaving] = _AT_UPPER if leaving_to_upper else _AT_LOWER
        state.x[leaving] = (state.hi[leaving] if leaving_to_upper
                            else state.lo[leaving])
        state.status[entering] = _BASIC
        state.pivot(entering, leaving_pos, w)
    raise SimplexError(f"iteration limit {max_iter} exceeded")
