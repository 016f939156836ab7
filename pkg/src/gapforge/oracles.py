"""Exhaustive reference computations.

Everything here is exponential in the number of columns and exists only to
check the fast code paths: the tests and the ``verify`` command compare the
solvers against these enumerations.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .instance import IpInstance

_CHUNK_BITS = 16


def _bit_table(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int8)


def brute_force_ip_arrays(A, b, c, *, exact: bool = False):
    """Optimal value and maximiser of ``max c^T x, A x <= b, x in {0,1}^n``.

    With ``exact`` the constraint data must be integers and feasibility is
    decided in integer arithmetic. Returns ``(None, None)`` when no 0/1 point
    is feasible. Ties go to the lowest pattern index (bit ``i`` is ``x_i``).
    """
    A = np.asarray(A, dtype=np.int64 if exact else float)
    b = np.asarray(b, dtype=np.int64 if exact else float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    lo_n = min(n, _CHUNK_BITS)
    hi_n = n - lo_n
    bits = _bit_table(lo_n)
    lo_sum = bits.astype(A.dtype) @ A[:, :lo_n].T
    lo_val = bits @ c[:lo_n]
    best_val, best_x = -np.inf, None
    for h in range(1 << hi_n):
        hbits = np.array([(h >> j) & 1 for j in range(hi_n)], dtype=np.int64)
        hs = A[:, lo_n:] @ hbits.astype(A.dtype) if hi_n else np.zeros(m, dtype=A.dtype)
        hv = float(c[lo_n:] @ hbits) if hi_n else 0.0
        feas = np.all(lo_sum + hs[None, :] <= b[None, :] if exact else lo_sum + hs[None, :] <= b[None, :] + 1e-12,
                      axis=1)
        if not feas.any():
            continue
        vals = np.where(feas, lo_val + hv, -np.inf)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_x = np.concatenate([bits[j].astype(np.int64), hbits])
    if best_x is None:
        return None, None
    return best_val, best_x


def brute_force_ip(instance: IpInstance):
    if instance.discrete:
        return brute_force_ip_arrays(instance.A_num, instance.b_num, instance.c, exact=True)
    return brute_force_ip_arrays(instance.A, instance.b, instance.c)


def lp_vertex_value(A, b, c, tol: float = 1e-9) -> float | None:
    """LP optimum over ``[0,1]^n`` by enumerating every basic solution.

    The standard form has ``A x + s = b`` with ``s >= 0``. A basis picks ``m``
    of the ``n + m`` variables; every other structural sits at 0 or 1 and
    every other slack at 0. Returns None if no basic solution is feasible.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    M = np.hstack([A, np.eye(m)])
    best = None
    for basis in combinations(range(n + m), m):
        B = M[:, basis]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        free = [j for j in range(n) if j not in basis]
        pats = _bit_table(len(free)).astype(float)
        rhs = b[None, :] - pats @ A[:, free].T
        xb = np.linalg.solve(B, rhs.T).T
        ok = np.ones(len(pats), dtype=bool)
        val = pats @ c[free]
        for r, j in enumerate(basis):
            if j < n:
                ok &= (xb[:, r] >= -tol) & (xb[:, r] <= 1 + tol)
                val = val + c[j] * xb[:, r]
            else:
                ok &= xb[:, r] >= -tol
        if ok.any():
            v = float(val[ok].max())
            best = v if best is None else max(best, v)
    return best


def brute_force_pmf(int_columns, p: float) -> dict[tuple[int, ...], float]:
    """Law of ``A 1_S`` by summing over all ``2^n`` subsets."""
    A = np.atleast_2d(np.asarray(int_columns, dtype=np.int64))
    m, nb = A.shape
    bits = _bit_table(nb).astype(np.int64)
    sums = bits @ A.T
    card = bits.sum(axis=1)
    w = p**card * (1 - p) ** (nb - card)
    out: dict[tuple[int, ...], float] = {}
    for s, pr in zip(map(tuple, sums), w):
        out[s] = out.get(s, 0.0) + float(pr)
    return out


def brute_force_subsets(int_columns, t, band=None):
    """All ``(cardinality, mask)`` with ``A 1_T == t``; masks index ``_bit_table``."""
    A = np.atleast_2d(np.asarray(int_columns, dtype=np.int64))
    m, nb = A.shape
    bits = _bit_table(nb).astype(np.int64)
    hit = np.all(bits @ A.T == np.asarray(t, dtype=np.int64)[None, :], axis=1)
    card = bits.sum(axis=1)
    if band is not None:
        hit &= (card >= band[0]) & (card <= band[1])
    return [frozenset(np.flatnonzero(bits[j]).tolist()) for j in np.flatnonzero(hit)]


def brute_force_knapsack_count(weights, G: float) -> int:
    w = np.asarray(weights, dtype=float)
    bits = _bit_table(len(w)).astype(float)
    return int(np.count_nonzero(bits @ w <= G * (1 + 1e-9) + 1e-12))
