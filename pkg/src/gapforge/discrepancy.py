"""Column subsampling, subset target hitting, and distribution oracles for A 1_S.

``S`` includes each column independently with probability ``p``. Integer
columns are always passed as numerators already multiplied by their scale,
so the lattice of reachable sums is ``Z^m`` and the Fourier domain is
``[-1/2, 1/2]^m``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import defaults

log = logging.getLogger(__name__)


class BoxOverflow(MemoryError):
    def __init__(self, required: int, available: int):
        super().__init__(f"state space needs {required} bytes, budget is {available}")
        self.required = required
        self.available = available


class GridTooCoarse(UserWarning):
    pass


@dataclass
class DiscrepancyQuery:
    """Inputs of one hitting problem; ``columns`` is ``m x n_bar``."""

    columns: np.ndarray
    p: float
    mu: np.ndarray
    sigma: float
    kappa: float
    target: np.ndarray
    scale: int = 1

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def band(self) -> tuple[int, int]:
        return cardinality_band(self.p, self.columns.shape[1])


def cardinality_band(p: float, n_bar: int) -> tuple[int, int]:
    """Integer cardinalities inside ``[p n / 2, 3 p n / 2]``."""
    return math.ceil(0.5 * p * n_bar - 1e-12), math.floor(1.5 * p * n_bar + 1e-12)


# ---------------------------------------------------------------- subsampling

@dataclass
class SelectionTrace:
    selected: np.ndarray
    running_sum: np.ndarray  # real units
    norm_cap: float
    accepted: np.ndarray
    inner_sign: np.ndarray  # sign of <running sum, A_i - mu> before column i
    norm_ok: np.ndarray
    centered_num: np.ndarray | None = field(default=None, repr=False)
    exact: bool = False

    def contraction_holds(self) -> bool:
        """``||sum (A_i - mu)||^2 <= sum ||A_i - mu||^2`` over the selected columns."""
        if self.centered_num is not None:
            sel = self.centered_num[:, self.selected]
            s = sel.sum(axis=1)
            lhs = int(np.dot(s, s)) if self.exact else float(np.dot(s, s))
            rhs = int((sel * sel).sum()) if self.exact else float((sel * sel).sum())
            return lhs <= rhs if self.exact else lhs <= rhs + 1e-9 * max(1.0, rhs)
        raise ValueError("trace was built without centered columns")


def _coins(seed: int, n: int) -> np.ndarray:
    g = np.random.Generator(np.random.Philox(key=[seed % (1 << 64), 1 << 63]))
    return g.random(n) < 0.5


def _exact_centering(scale: int, mu) -> tuple[int, list[int]] | None:
    """Common denominator D and integers D*scale*mu, or None if too large."""
    fr = []
    for v in mu:
        if not isinstance(v, Fraction):
            # floats such as 2/3 come back as their nearest small rational when that is exact
            small = Fraction(float(v)).limit_denominator(1 << 20)
            v = small if float(small) == float(v) else Fraction(float(v))
        fr.append(v)
    fr = [f * scale for f in fr]
    D = 1
    for f in fr:
        D = D * f.denominator // math.gcd(D, f.denominator)
    if D > 1 << 20:
        return None
    return D, [int(f * D) for f in fr]


def subsample(columns, mu, sigma: float, kappa: float, coin_seed, scale: int = 1):
    """Greedy drift-taming filter over the columns, in index order.

    Column ``i`` is accepted when its centered norm is at most
    ``10 sigma sqrt(m / kappa)`` and its inner product with the running
    centered sum is negative; an exactly zero inner product is settled by a
    fair coin. ``columns`` may be ``(m, n)`` or a batch ``(T, m, n)``; a batch
    returns one trace per slice and needs one coin seed per slice. Integer
    columns are numerators over ``scale`` and are processed exactly.
    """
    if sigma <= 0 or not 0 < kappa <= 1:
        raise ValueError("need sigma > 0 and kappa in (0, 1]")
    cols = np.asarray(columns)
    single = cols.ndim == 2
    if single:
        cols = cols[None]
    T, m, n = cols.shape
    seeds = [coin_seed] if single and np.isscalar(coin_seed) else list(coin_seed)
    if len(seeds) != T:
        raise ValueError("need one coin seed per trace")
    mu_list = list(np.broadcast_to(np.asarray(mu, dtype=object), (m,)))
    cap = defaults.NORM_CAP_C * sigma * math.sqrt(m / kappa)
    exact = cols.dtype.kind in "iu"
    cent = None
    if exact:
        ec = _exact_centering(scale, mu_list)
        if ec is None:
            exact = False
        else:
            D, mu_num = ec
            cent = D * cols.astype(np.int64) - np.asarray(mu_num, dtype=np.int64)[None, :, None]
            unit = D * scale
            cap2 = (cap * unit) ** 2
    if not exact:
        unit = scale
        cent = cols.astype(float) - np.array([float(v) for v in mu_list])[None, :, None] * scale
        cap2 = (cap * scale) ** 2
    coins = np.stack([_coins(s, n) for s in seeds])
    run = np.zeros((T, m), dtype=cent.dtype)
    acc = np.zeros((T, n), dtype=bool)
    sign = np.zeros((T, n), dtype=np.int8)
    nok = np.zeros((T, n), dtype=bool)
    norms2 = (cent * cent).sum(axis=1)
    ok_all = norms2 <= cap2
    for i in range(n):
        v = cent[:, :, i]
        dot = (run * v).sum(axis=1)
        ok = ok_all[:, i]
        take = ok & ((dot < 0) | ((dot == 0) & coins[:, i]))
        run += v * take[:, None]
        acc[:, i] = take
        sign[:, i] = np.sign(dot)
        nok[:, i] = ok
    traces = []
    for b in range(T):
        traces.append(SelectionTrace(np.flatnonzero(acc[b]), run[b] / unit, cap, acc[b], sign[b], nok[b],
                                     cent[b], exact))
    return traces[0] if single else traces


# ---------------------------------------------------------------- target hitting

class HitStatus(str, Enum):
    EXACT = "exact"
    WITHIN_TOL = "within_tol"
    BEST = "best"


@dataclass
class SubsetCertificate:
    subset: np.ndarray
    achieved: np.ndarray
    residual_norm: float
    cardinality_band: tuple[float, float] | None
    exact: bool
    status: HitStatus = HitStatus.EXACT
    restarts: int = 0

    @property
    def ok(self) -> bool:
        return self.status is not HitStatus.BEST


@dataclass
class NotFound:
    reason: str
    ok: bool = False


def _pair_slices(offset: Sequence[int], shape: Sequence[int]):
    """Slices so that ``dst[d] <- src[s]`` realises a shift by ``offset``."""
    d, s = [], []
    for o, w in zip(offset, shape):
        o = int(o)
        if abs(o) >= w:
            return None
        if o >= 0:
            d.append(slice(o, w))
            s.append(slice(0, w - o))
        else:
            d.append(slice(0, w + o))
            s.append(slice(-o, w))
    return tuple(d), tuple(s)


def hit_target_exact(int_columns, k: int, t, band=None, *, cardinality: bool = True,
                     budget_bytes: int = defaults.DP_BUDGET_BYTES, m_max: int = defaults.EXACT_M_MAX):
    """Complete search for ``T`` with ``A 1_T == t`` and ``|T|`` inside ``band``.

    ``int_columns`` and ``t`` are integer numerators (already multiplied by
    ``k``). With ``cardinality`` on, the layered reachability table tracks
    ``|T|`` and the smallest admissible cardinality is returned. With it off,
    each state stores the fewest columns reaching it; this is complete only
    for bands starting at 0. Witnesses are rebuilt from the stored layers,
    preferring to skip a column whenever possible.
    """
    A = np.asarray(int_columns, dtype=np.int64)
    if A.ndim == 1:
        A = A[None]
    m, nb = A.shape
    t = np.asarray(t, dtype=np.int64).reshape(m)
    if m > m_max:
        raise ValueError(f"exact hitting supports m <= {m_max}")
    lo_c, hi_c = (0, nb) if band is None else (max(0, int(band[0])), min(nb, int(band[1])))
    if not cardinality and lo_c > 0:
        raise ValueError("a band with a positive lower end needs the cardinality table")
    if lo_c > hi_c:
        return NotFound("empty cardinality band")
    neg = np.minimum(A, 0).sum(axis=1)
    pos = np.maximum(A, 0).sum(axis=1)
    box_lo = np.maximum(neg, t - pos)
    box_hi = np.minimum(pos, t - neg)
    amin = np.minimum(A.min(axis=1, initial=0), 0)
    amax = np.maximum(A.max(axis=1, initial=0), 0)
    box_lo = np.maximum(box_lo, np.maximum(hi_c * amin, t - hi_c * amax))
    box_hi = np.minimum(box_hi, np.minimum(hi_c * amax, t - hi_c * amin))
    if np.any(box_lo > 0) or np.any(box_hi < 0) or np.any(box_lo > box_hi):
        return NotFound("target outside the reachable box")
    shape = tuple(int(v) for v in box_hi - box_lo + 1)
    origin = tuple(int(v) for v in -box_lo)
    tgt = tuple(int(v) for v in t - box_lo)
    states = int(np.prod(shape))
    if cardinality:
        layer_bytes = states * (hi_c + 1)
    else:
        layer_bytes = states * 2
    need = layer_bytes * (nb + 1)
    if need > budget_bytes:
        raise BoxOverflow(need, budget_bytes)
    INF = np.uint16(65534)
    if cardinality:
        cur = np.zeros((hi_c + 1,) + shape, dtype=bool)
        cur[(0,) + origin] = True
    else:
        cur = np.full(shape, INF, dtype=np.uint16)
        cur[origin] = 0
    layers = [cur]
    for i in range(nb):
        nxt = cur.copy()
        sl = _pair_slices(A[:, i], shape)
        if sl is not None:
            d, s = sl
            if cardinality:
                nxt[(slice(1, None),) + d] |= cur[(slice(0, -1),) + s]
            else:
                np.minimum(nxt[d], cur[s] + np.uint16(1), out=nxt[d])
        layers.append(nxt)
        cur = nxt
    if cardinality:
        cands = [c for c in range(lo_c, hi_c + 1) if cur[(c,) + tgt]]
        if not cands:
            return NotFound("no subset in the band hits the target")
        c = cands[0]
    else:
        c = int(cur[tgt])
        if c > hi_c:
            return NotFound("no subset in the band hits the target")
    pos_ = np.array(tgt)
    chosen = []
    for i in range(nb - 1, -1, -1):
        prev = layers[i]
        if cardinality:
            if prev[(c,) + tuple(pos_)]:
                continue
        elif prev[tuple(pos_)] == c:
            continue
        chosen.append(i)
        pos_ = pos_ - A[:, i]
        c -= 1
    T = np.array(sorted(chosen), dtype=np.int64)
    achieved = A[:, T].sum(axis=1) if len(T) else np.zeros(m, dtype=np.int64)
    assert np.array_equal(achieved, t)
    return SubsetCertificate(T, achieved, 0.0, (lo_c, hi_c), True, HitStatus.EXACT)


class _Search:
    """Greedy construction plus swap-based local search on one instance."""

    def __init__(self, A: np.ndarray, t: np.ndarray, lo: int, hi: int, tol: float):
        self.A, self.t, self.lo, self.hi, self.tol = A, t, lo, hi, tol
        self.nb = A.shape[1]
        self.cols = A.T.copy()
        self.tree = cKDTree(self.cols)
        self.pairs = None
        if self.nb <= 700:
            i1, i2 = np.triu_indices(self.nb, 1)
            self.pairs = (i1, i2)
            self.pair_tree = cKDTree(self.cols[i1] + self.cols[i2])

    def greedy(self, rng: np.random.Generator) -> np.ndarray:
        inset = np.zeros(self.nb, dtype=bool)
        r = self.t.copy()
        size = 0
        while size < self.hi:
            cand = np.linalg.norm(r[None, :] - self.cols, axis=1)
            cand[inset] = np.inf
            cur = np.linalg.norm(r)
            order = np.argsort(cand, kind="stable")[:3]
            order = order[np.isfinite(cand[order])]
            if not len(order):
                break
            if cand[order[0]] >= cur and size >= self.lo:
                break
            pick = order[rng.integers(len(order))] if cand[order[-1]] < cur else order[0]
            inset[pick] = True
            r -= self.cols[pick]
            size += 1
        return inset

    def _nearest(self, tree, pts, k, valid):
        k = min(k, tree.n)
        dist, idx = tree.query(pts, k=k)
        if k == 1:
            dist, idx = dist[:, None], idx[:, None]
        best = (np.inf, -1, -1)
        for row in range(len(pts)):
            for d, j in zip(dist[row], idx[row]):
                if valid(j):
                    if d < best[0]:
                        best = (d, row, j)
                    break
        return best

    def improve(self, inset: np.ndarray, max_moves: int = 400) -> np.ndarray:
        r = self.t - self.cols[inset].sum(axis=0)
        for _ in range(max_moves):
            cur = float(np.linalg.norm(r))
            if cur <= self.tol:
                break
            size = int(inset.sum())
            ins = np.flatnonzero(inset)
            best = (cur, None)
            if size < self.hi:
                d = np.linalg.norm(r[None, :] - self.cols, axis=1)
                d[inset] = np.inf
                j = int(np.argmin(d))
                if d[j] < best[0]:
                    best = (d[j], ("add", j))
            if size > self.lo and len(ins):
                d = np.linalg.norm(r[None, :] + self.cols[ins], axis=1)
                j = int(np.argmin(d))
                if d[j] < best[0]:
                    best = (d[j], ("rm", ins[j]))
            if len(ins):
                pts = r[None, :] + self.cols[ins]
                dd, row, j = self._nearest(self.tree, pts, 8, lambda j: not inset[j])
                if dd < best[0]:
                    best = (dd, ("swap", [ins[row]], [j]))
            if self.pairs is not None:
                p1, p2 = self.pairs
                free = lambda j: not inset[p1[j]] and not inset[p2[j]]
                if len(ins) and size < self.hi:
                    pts = r[None, :] + self.cols[ins]
                    dd, row, j = self._nearest(self.pair_tree, pts, 16, free)
                    if dd < best[0]:
                        best = (dd, ("swap", [ins[row]], [p1[j], p2[j]]))
                if len(ins) >= 2:
                    a, bb = np.triu_indices(len(ins), 1)
                    pts = r[None, :] + self.cols[ins[a]] + self.cols[ins[bb]]
                    dd, row, j = self._nearest(self.pair_tree, pts, 16, free)
                    if dd < best[0]:
                        best = (dd, ("swap", [ins[a[row]], ins[bb[row]]], [p1[j], p2[j]]))
                    if size > self.lo:
                        dd, row, j = self._nearest(self.tree, pts, 8, lambda j: not inset[j])
                        if dd < best[0]:
                            best = (dd, ("swap", [ins[a[row]], ins[bb[row]]], [j]))
                if size + 2 <= self.hi:
                    dd, row, j = self._nearest(self.pair_tree, r[None, :], 16, free)
                    if dd < best[0]:
                        best = (dd, ("swap", [], [p1[j], p2[j]]))
            move = best[1]
            if move is None or best[0] >= cur * (1 - 1e-12):
                break
            if move[0] == "add":
                out_, in_ = [], [move[1]]
            elif move[0] == "rm":
                out_, in_ = [move[1]], []
            else:
                out_, in_ = move[1], move[2]
            for j in out_:
                inset[j] = False
                r += self.cols[j]
            for j in in_:
                inset[j] = True
                r -= self.cols[j]
        return inset


def _meet_in_middle(A: np.ndarray, t: np.ndarray, lo: int, hi: int, rng: np.random.Generator,
                    half: int = defaults.MITM_HALF) -> np.ndarray:
    """Best pair of half-subsets over a random sample of ``2 * half`` columns."""
    nb = A.shape[1]
    cols = rng.permutation(nb)[: 2 * half]
    left, right = cols[: len(cols) // 2], cols[len(cols) // 2 :]
    bl = _bit_table(len(left))
    br = _bit_table(len(right))
    sl, sr = bl @ A[:, left].T, br @ A[:, right].T
    cl, cr = bl.sum(axis=1), br.sum(axis=1)
    tree = cKDTree(sr)
    kq = min(8, len(sr))
    dist, idx = tree.query(t[None, :] - sl, k=kq)
    if kq == 1:
        dist, idx = dist[:, None], idx[:, None]
    card = cl[:, None] + cr[idx]
    dist = np.where((card >= lo) & (card <= hi), dist, np.inf)
    flat = int(np.argmin(dist))
    i, j = divmod(flat, kq)
    inset = np.zeros(nb, dtype=bool)
    if np.isfinite(dist[i, j]):
        inset[left[bl[i] > 0]] = True
        inset[right[br[idx[i, j]] > 0]] = True
    return inset


def _bit_table(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


def _exhaustive_best(A: np.ndarray, t: np.ndarray, lo: int, hi: int):
    nb = A.shape[1]
    bits = _bit_table(nb)
    card = bits.sum(axis=1)
    res = np.linalg.norm(bits @ A.T - t[None, :], axis=1)
    res[(card < lo) | (card > hi)] = np.inf
    j = int(np.argmin(res))
    return np.flatnonzero(bits[j]), float(res[j])


def hit_target_approx(columns, t, band=None, tol: float = defaults.APPROX_TOL,
                      budget: int = defaults.APPROX_RESTARTS, seed: int = 0) -> SubsetCertificate:
    """Subset of real columns whose sum is within ``tol`` of ``t``.

    Small inputs are enumerated outright. Otherwise restarts alternate
    between a randomised greedy descent and a meet-in-the-middle search over
    a random sample of columns; each start is then polished by add, remove
    and swap moves of up to two columns on each side. The first restart reaching ``tol`` wins;
    otherwise the best subset over all restarts is returned with status
    ``BEST`` (ties go to the lowest restart index).
    """
    A = np.asarray(columns, dtype=float)
    if A.ndim == 1:
        A = A[None]
    m, nb = A.shape
    t = np.asarray(t, dtype=float).reshape(m)
    lo, hi = (0, nb) if band is None else (max(0, int(band[0])), min(nb, int(band[1])))
    bnd = None if band is None else (band[0], band[1])
    if lo > hi:
        return SubsetCertificate(np.array([], dtype=np.int64), np.zeros(m), float(np.linalg.norm(t)), bnd,
                                 False, HitStatus.BEST)

    def cert(idx, restarts):
        idx = np.sort(np.asarray(idx, dtype=np.int64))
        ach = A[:, idx].sum(axis=1)
        res = float(np.linalg.norm(ach - t))
        return SubsetCertificate(idx, ach, res, bnd, False,
                                 HitStatus.WITHIN_TOL if res <= tol else HitStatus.BEST, restarts)

    if nb <= defaults.APPROX_EXHAUSTIVE_MAX:
        idx, _ = _exhaustive_best(A, t, lo, hi)
        return cert(idx, 0)
    search = _Search(A, t, lo, hi, tol)
    best, best_res = None, np.inf
    for r in range(budget):
        rng = np.random.Generator(np.random.Philox(key=[seed % (1 << 64), r]))
        start = search.greedy(rng) if r % 2 == 0 else _meet_in_middle(A, t, lo, hi, rng)
        inset = search.improve(start)
        res = float(np.linalg.norm(t - search.cols[inset].sum(axis=0)))
        if res < best_res:
            best, best_res = np.flatnonzero(inset), res
        if res <= tol:
            return cert(best, r + 1)
    return cert(best, budget)


# ---------------------------------------------------------------- distributions

@dataclass
class Pmf:
    """Probabilities on the integer box ``offset + [0, shape)``."""

    offset: np.ndarray
    probabilities: np.ndarray

    @property
    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.offset, self.offset + np.array(self.probabilities.shape) - 1

    @property
    def total_mass(self) -> float:
        return float(self.probabilities.sum())

    def prob(self, point) -> float:
        idx = np.asarray(point) - self.offset
        if np.any(idx < 0) or np.any(idx >= self.probabilities.shape):
            return 0.0
        return float(self.probabilities[tuple(idx)])

    def points(self) -> np.ndarray:
        grids = np.meshgrid(*[np.arange(w) for w in self.probabilities.shape], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1) + self.offset


def _reach_box(A: np.ndarray):
    return np.minimum(A, 0).sum(axis=1), np.maximum(A, 0).sum(axis=1)


def pmf_convolution(int_columns, k: int, p: float, *, budget_bytes: int = defaults.DP_BUDGET_BYTES,
                    m_max: int = defaults.EXACT_M_MAX) -> Pmf:
    """Exact law of ``A 1_S`` by mixing in one Bernoulli column at a time."""
    A = np.asarray(int_columns, dtype=np.int64)
    if A.ndim == 1:
        A = A[None]
    m, nb = A.shape
    if m > m_max:
        raise ValueError(f"pmf tables support m <= {m_max}")
    lo, hi = _reach_box(A)
    shape = tuple(int(v) for v in hi - lo + 1)
    need = int(np.prod(shape)) * 8 * 2
    if need > budget_bytes:
        raise BoxOverflow(need, budget_bytes)
    cur = np.zeros(shape)
    cur[tuple(-lo)] = 1.0
    for i in range(nb):
        nxt = (1.0 - p) * cur
        d, s = _pair_slices(A[:, i], shape)
        nxt[d] += p * cur[s]
        cur = nxt
    return Pmf(lo.copy(), cur)


def charfn(columns, p: float, theta):
    """``prod_j ((1 - p) + p exp(2 pi i <theta, A_j>))`` for one or many ``theta``."""
    A = np.asarray(columns, dtype=float)
    if A.ndim == 1:
        A = A[None]
    th = np.asarray(theta, dtype=float)
    single = th.ndim <= 1
    th = np.atleast_2d(th).reshape(-1, A.shape[0])
    phase = 2.0 * np.pi * (th @ A)
    val = np.prod((1.0 - p) + p * np.exp(1j * phase), axis=1)
    return complex(val[0]) if single else val


def fourier_grid(grid: int) -> np.ndarray:
    return -0.5 + np.arange(grid) / grid


def pmf_fourier(int_columns, k: int, p: float, lam, grid: int | None = None):
    """``Pr[A 1_S = lam]`` by equispaced quadrature of the inversion integral.

    The integrand is a trigonometric polynomial, so the quadrature is exact as
    soon as ``grid`` exceeds the width of the reachable box on every axis. A
    coarser grid aliases and triggers a :class:`GridTooCoarse` warning.
    ``lam`` may be one point or an array of points.
    """
    A = np.asarray(int_columns, dtype=np.int64)
    if A.ndim == 1:
        A = A[None]
    m, nb = A.shape
    if m > defaults.EXACT_M_MAX:
        raise ValueError(f"quadrature supports m <= {defaults.EXACT_M_MAX}")
    lo, hi = _reach_box(A)
    width = int((hi - lo).max(initial=0)) + 1
    if grid is None:
        grid = 2 * nb * int(np.abs(A).max(initial=1)) + 1
    if width > grid:
        warnings.warn(f"grid {grid} is below the support width {width}", GridTooCoarse, stacklevel=2)
    ax = fourier_grid(grid)
    mesh = np.meshgrid(*([ax] * m), indexing="ij")
    thetas = np.stack([g.ravel() for g in mesh], axis=1)
    dhat = charfn(A, p, thetas).reshape((grid,) * m)
    lam_arr = np.asarray(lam, dtype=float)
    single = lam_arr.ndim <= 1
    lam_arr = np.atleast_2d(lam_arr).reshape(-1, m)
    W = [np.exp(-2j * np.pi * np.outer(lam_arr[:, a], ax)) for a in range(m)]
    if m == 1:
        out = W[0] @ dhat
    elif m == 2:
        out = np.einsum("kb,kb->k", np.einsum("ab,ka->kb", dhat, W[0]), W[1])
    else:
        tmp = np.einsum("abc,ka->kbc", dhat, W[0])
        tmp = np.einsum("kbc,kb->kc", tmp, W[1])
        out = np.einsum("kc,kc->k", tmp, W[2])
    out = out.real / grid**m
    return float(out[0]) if single else out


@dataclass
class DecayRow:
    r_lo: float
    r_hi: float
    max_abs: float
    points: int


@dataclass
class DecayProfile:
    rows: list[DecayRow]
    beta_aux: float


def decay_profile(int_columns, p: float, radii: Sequence[float], *, grid: int = 129, norm: str = "inf"):
    """Maximum of ``|charfn|`` over closed shells ``r_lo <= ||theta|| <= r_hi``.

    ``radii`` lists shell edges; consecutive pairs form the shells. The grid
    covers ``[-1/2, 1/2]^m`` and always contains the origin for odd ``grid``.
    """
    A = np.asarray(int_columns, dtype=float)
    if A.ndim == 1:
        A = A[None]
    m, nb = A.shape
    if m > 2:
        raise ValueError("decay profiles are evaluated on a dense grid, m <= 2")
    ax = np.linspace(-0.5, 0.5, grid)
    mesh = np.meshgrid(*([ax] * m), indexing="ij")
    thetas = np.stack([g.ravel() for g in mesh], axis=1)
    mag = np.abs(charfn(A, p, thetas))
    r = np.abs(thetas).max(axis=1) if norm == "inf" else np.linalg.norm(thetas, axis=1)
    beta_aux = 1.0 / (80.0 * p * math.sqrt(m))
    log.info("decay_profile: beta_aux=%.6g", beta_aux)
    rows = []
    for lo, hi in zip(radii[:-1], radii[1:]):
        sel = (r >= lo - 1e-12) & (r <= hi + 1e-12)
        rows.append(DecayRow(float(lo), float(hi), float(mag[sel].max()) if sel.any() else float("nan"),
                             int(sel.sum())))
    return DecayProfile(rows, beta_aux)


def fitted_decay_constant(max_abs: float, p: float, n_bar: int) -> float:
    """``c`` with ``max_abs == exp(-c p n_bar)``."""
    return -math.log(max_abs) / (p * n_bar)
