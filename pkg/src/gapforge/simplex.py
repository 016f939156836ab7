"""Bounded-variable revised simplex for ``max c^T x, A x <= b, lo <= x <= hi``.

The solver is dense and deterministic: Dantzig pricing with lowest-index tie
breaking, falling back to Bland's rule after a run of degenerate pivots.
Nonbasic variables start at whichever bound their objective coefficient
favours; rows violated by that start get an artificial variable and a phase-1
pass drives them to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import defaults
from .instance import IpInstance, Model


class Infeasible(Exception):
    pass


class IterationLimit(Exception):
    pass


@dataclass
class LpSolution:
    x_star: np.ndarray
    u_star: np.ndarray
    value: float
    frac_idx: np.ndarray
    N0: np.ndarray
    N1: np.ndarray
    reduced_costs: np.ndarray  # (A^T u - c)_i
    iterations: int = 0
    basis: list[int] = field(default_factory=list)
    pivots: list[tuple[int, int]] | None = None


@dataclass
class GapBreakdown:
    slack_term: float
    reduced_cost_term: float
    total: float


@dataclass
class PropsReport:
    u_norm2: float
    u_norm1: float
    n0_frac: float
    u_threshold: float
    n0_threshold: float
    u_ok: bool
    n0_ok: bool

    @property
    def ok(self) -> bool:
        return self.u_ok and self.n0_ok


@dataclass
class _Raw:
    x: np.ndarray
    y: np.ndarray
    iterations: int
    basis: list[int]
    pivots: list[tuple[int, int]] | None


def _run(M, b, cost, lo, hi, x, state, basis, max_iter, tol, pivots, it0=0):
    """Primal simplex iterations until no improving nonbasic variable remains.

    ``state`` is -1 (at lower bound), +1 (at upper bound) or 0 (basic).
    Arrays are modified in place; returns the iteration count and duals.
    """
    ptol = 1e-9
    degenerate_run = 0
    bland = False
    it = it0
    idx = np.arange(M.shape[1])
    while True:
        B = M[:, basis]
        x[basis] = 0.0
        x[basis] = np.linalg.solve(B, b - M @ x)
        y = np.linalg.solve(B.T, cost[basis])
        d = cost - M.T @ y
        up = (state == -1) & (d > tol) & (hi > lo)
        dn = (state == 1) & (d < -tol)
        elig = up | dn
        if not elig.any():
            return it, y
        if it >= max_iter:
            raise IterationLimit(f"no optimum after {max_iter} iterations")
        it += 1
        if bland:
            q = int(idx[elig][0])
        else:
            q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
        dirn = 1.0 if up[q] else -1.0
        delta = dirn * np.linalg.solve(B, M[:, q])
        xb = x[basis]
        step = hi[q] - lo[q]
        leave = -1
        to_upper = False
        leave_var = None
        for r in range(len(basis)):
            dr = delta[r]
            if dr > ptol:
                lim = (xb[r] - lo[basis[r]]) / dr
                upper = False
            elif dr < -ptol and np.isfinite(hi[basis[r]]):
                lim = (hi[basis[r]] - xb[r]) / (-dr)
                upper = True
            else:
                continue
            lim = max(lim, 0.0)
            if lim < step - 1e-12 or (leave >= 0 and abs(lim - step) <= 1e-12 and basis[r] < leave_var):
                step, leave, to_upper, leave_var = lim, r, upper, basis[r]
        if pivots is not None:
            pivots.append((q, -1 if leave < 0 else basis[leave]))
        if step <= tol:
            degenerate_run += 1
            if degenerate_run >= defaults.BLAND_AFTER:
                bland = True
        else:
            degenerate_run = 0
        if leave < 0:
            x[q] = hi[q] if dirn > 0 else lo[q]
            state[q] = 1 if dirn > 0 else -1
            continue
        p = basis[leave]
        x[p] = hi[p] if to_upper else lo[p]
        state[p] = 1 if to_upper else -1
        x[q] = x[q] + dirn * step
        state[q] = 0
        basis[leave] = q


def solve_box_lp(A: np.ndarray, b: np.ndarray, c: np.ndarray, *, tol: float = defaults.TOL,
                 max_iter: int | None = None, record_pivots: bool = False) -> _Raw:
    """Solve ``max c^T x, A x <= b, 0 <= x <= 1`` and return primal and duals.

    Raises :class:`Infeasible` when no ``x`` in the box satisfies ``A x <= b``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if max_iter is None:
        max_iter = 20 * (n + m) + 1000
    x0 = (c > 0).astype(float)
    resid = b - A @ x0
    art_rows = np.flatnonzero(resid < 0)
    r = len(art_rows)
    N = n + m + r
    M = np.zeros((m, N))
    M[:, :n] = A
    M[:, n : n + m] = np.eye(m)
    for j, row in enumerate(art_rows):
        M[row, n + m + j] = -1.0
    lo = np.zeros(N)
    hi = np.concatenate([np.ones(n), np.full(m, np.inf), np.full(r, np.inf)])
    x = np.zeros(N)
    x[:n] = x0
    state = np.full(N, -1, dtype=np.int8)
    state[:n] = np.where(x0 > 0, 1, -1)
    basis = list(range(n, n + m))
    for j, row in enumerate(art_rows):
        basis[row] = n + m + j
    for j in basis:
        state[j] = 0
    pivots = [] if record_pivots else None
    it = 0
    if r:
        cost1 = np.zeros(N)
        cost1[n + m :] = -1.0
        it, _ = _run(M, b, cost1, lo, hi, x, state, basis, max_iter, tol, pivots)
        infeas = x[n + m :].sum()
        if infeas > tol * max(1.0, np.abs(b).max(initial=0.0)):
            raise Infeasible(f"phase 1 ended with infeasibility {infeas:.3e}")
        hi[n + m :] = 0.0
        x[n + m :] = 0.0
        art_nb = np.flatnonzero(state[n + m :] != 0) + n + m
        state[art_nb] = -1
    cost = np.zeros(N)
    cost[:n] = c
    it, y = _run(M, b, cost, lo, hi, x, state, basis, max_iter, tol, pivots, it)
    xs = np.clip(x[:n], 0.0, 1.0)
    return _Raw(xs, y, it, list(basis), pivots)


def classify(x: np.ndarray, tol: float = defaults.TOL):
    """Snap near-integral coordinates and split indices into N0, N1, fractional."""
    x = x.copy()
    x[x <= tol] = 0.0
    x[x >= 1.0 - tol] = 1.0
    N0 = np.flatnonzero(x == 0.0)
    N1 = np.flatnonzero(x == 1.0)
    frac = np.flatnonzero((x > 0.0) & (x < 1.0))
    return x, N0, N1, frac


def solution_from_arrays(A, b, c, *, tol: float = defaults.TOL, record_pivots: bool = False) -> LpSolution:
    raw = solve_box_lp(A, b, c, tol=tol, record_pivots=record_pivots)
    x, N0, N1, frac = classify(raw.x, tol)
    u = np.where(raw.y > tol, raw.y, 0.0)
    if np.any(raw.y < -1e3 * tol):
        raise ArithmeticError("negative dual at reported optimum")
    rc = np.asarray(A).T @ u - np.asarray(c)
    return LpSolution(x, u, float(np.dot(c, x)), frac, N0, N1, rc, raw.iterations, raw.basis, raw.pivots)


def solve_lp(instance: IpInstance, *, tol: float = defaults.TOL, record_pivots: bool = False) -> LpSolution:
    """LP relaxation of ``instance`` with a basic optimal primal/dual pair."""
    return solution_from_arrays(instance.A, instance.b, instance.c, tol=tol, record_pivots=record_pivots)


def dual_value_arrays(u, A, b, c) -> float:
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("dual vector must be nonnegative")
    return float(np.dot(b, u) + np.maximum(c - A.T @ u, 0.0).sum())


def dual_value(u, instance: IpInstance) -> float:
    """``b^T u + ||(c - A^T u)^+||_1``, an upper bound on every feasible value."""
    return dual_value_arrays(u, instance.A, instance.b, instance.c)


def gap_formula(x, u, instance: IpInstance) -> GapBreakdown:
    """Split ``dual_value(u) - c^T x`` into a slack term and a reduced-cost term."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    A, c = instance.A, instance.c
    if instance.discrete and np.all((x == 0) | (x == 1)):
        slack = (instance.b_num - instance.A_num @ x.astype(np.int64)) / instance.k
    else:
        slack = instance.b - A @ x
    rc = A.T @ u - c
    slack_term = float(np.dot(slack, u))
    rc_term = float(np.dot(x, np.maximum(rc, 0.0)) + np.dot(1.0 - x, np.maximum(-rc, 0.0)))
    return GapBreakdown(slack_term, rc_term, slack_term + rc_term)


def check_solution_props(sol: LpSolution, instance: IpInstance, *, u_threshold: float | None = None,
                         n0_threshold: float | None = None) -> PropsReport:
    """Dual norm and zero-set size against the thresholds of the model."""
    u2 = float(np.linalg.norm(sol.u_star))
    u1 = float(np.abs(sol.u_star).sum())
    n0 = len(sol.N0) / instance.n
    if instance.model is Model.PACKING:
        ut = 6.0 / instance.beta if u_threshold is None else u_threshold
        nt = 0.0 if n0_threshold is None else n0_threshold
        u_ok = u1 <= ut
    else:
        ut = 32.0 if u_threshold is None else u_threshold
        nt = 1e-5 if n0_threshold is None else n0_threshold
        u_ok = u2 <= ut
    return PropsReport(u2, u1, n0, ut, nt, u_ok, n0 >= nt)
