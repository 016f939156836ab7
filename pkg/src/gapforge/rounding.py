"""Round the LP optimum to a 0/1 point and certify its objective gap.

Both pipelines follow the same plan. Floor the basic LP solution, collect
zero-columns whose reduced cost is tiny, then add a subset of them chosen by
a target-hitting search so that every positive-dual row ends tight again.
The dual of the LP then bounds how much objective the 0/1 point gave up.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import norm

from . import defaults
from .discrepancy import HitStatus, NotFound, cardinality_band, hit_target_approx, hit_target_exact
from .instance import IpInstance, Model
from .simplex import GapBreakdown, Infeasible, LpSolution, dual_value, gap_formula, solution_from_arrays, solve_lp

log = logging.getLogger(__name__)


class EmptyPool(RuntimeError):
    def __init__(self, counts, edges):
        super().__init__(f"no candidate columns; reduced-cost histogram {np.asarray(counts).tolist()} "
                         f"on {np.asarray(edges).tolist()}")
        self.counts = counts
        self.edges = edges


class RepairFailed(RuntimeError):
    def __init__(self, certificate):
        super().__init__(f"repair failed: {certificate.failure}")
        self.certificate = certificate


class InfeasiblePerturbed(RuntimeError):
    pass


class Mode(str, Enum):
    FAITHFUL = "faithful"
    FILTER = "filter"


@dataclass
class SelectionConfig:
    """Pipeline knobs; ``None`` fields are derived from the instance size."""

    mode: Mode = Mode.FILTER
    delta: float | None = None
    C: float | None = None
    gamma: float | None = None
    r: int | None = None
    p: float | None = None
    kappa: float = defaults.KAPPA
    delta_c: float = defaults.DELTA_C
    gamma_c: float = defaults.GAMMA_C
    s_pool: float = defaults.PACKING_S_POOL
    c1: float = defaults.PACKING_C1
    c2: float = defaults.PACKING_C2
    li_shift: float | str | None = defaults.LI_SHIFT
    tol: float = defaults.APPROX_TOL
    approx_budget: int = defaults.APPROX_RESTARTS
    mean_zero_samples: int = defaults.MEAN_ZERO_SAMPLES
    # skip the repair when the LP optimum is already integral (off: the band is always enforced)
    shortcut_integral: bool = False

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d


def centered_delta(n: int, m: int, delta_c: float = defaults.DELTA_C) -> float:
    return delta_c * m**3 * math.log(n) / n


def strip_width(u: np.ndarray, kappa: float = defaults.KAPPA) -> float:
    return defaults.STRIP_C * float(np.linalg.norm(u)) / math.sqrt(kappa)


@dataclass
class PackingParams:
    r: int
    p: float
    mu: float
    gamma: float
    delta: float


def packing_params(n: int, m: int, k: int, beta: float, config: SelectionConfig | None = None) -> PackingParams:
    cfg = config or SelectionConfig()
    r = cfg.r if cfg.r is not None else math.ceil(1e6 * m**12 * math.log(n) / cfg.s_pool**2)
    mu = (k + math.ceil(k / (3 * m))) / (2 * k)
    if cfg.gamma is not None:
        gamma = cfg.gamma
    elif cfg.p is not None:
        gamma = cfg.p * mu * r
    else:
        gamma = cfg.gamma_c * r * mu / (1000.0 * m**5)
    # the hitting rate is tied to the shift: the expected hit |T| mu equals gamma
    p = gamma / (mu * r)
    delta = cfg.delta if cfg.delta is not None else 3 * math.exp(cfg.c1 / beta) * r / (cfg.c2 * beta**4 * n)
    return PackingParams(int(r), float(p), float(mu), float(gamma), float(delta))


@dataclass
class RoundDown:
    x_prime: np.ndarray
    err_norm: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.err_norm <= self.bound + 1e-12


def round_down(x_star, A=None, tol: float = defaults.TOL):
    """Floor ``x_star`` after snapping near-integral coordinates.

    Without ``A`` only the 0/1 vector is returned. With ``A`` the result also
    records ``||A (x* - x')||`` next to ``sqrt(m) max_i ||A_i||``.
    """
    x = np.asarray(x_star, dtype=float)
    xp = np.where(x >= 1.0 - tol, 1, 0).astype(np.int64)
    if A is None:
        return xp
    A = np.asarray(A, dtype=float)
    err = float(np.linalg.norm(A @ (x - xp)))
    bound = math.sqrt(A.shape[0]) * float(np.linalg.norm(A, axis=0).max(initial=0.0))
    return RoundDown(xp, err, bound)


@dataclass
class Selection:
    Z: np.ndarray
    delta: float
    C: float
    eligible: int
    accept_prob: np.ndarray | None = None
    mean_zero: dict | None = None


@dataclass
class RoundingCertificate:
    x_rounded: np.ndarray
    candidates: np.ndarray
    repair_set: np.ndarray
    x_final: np.ndarray
    feasible: bool
    slack: np.ndarray
    gap_upper: float
    breakdown: GapBreakdown
    target_used: np.ndarray
    residual: float
    delta: float
    failure: str | None = None
    dual_value: float = float("nan")
    objective: float = float("nan")
    extras: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.feasible and self.failure is None


def _coin_stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed % (1 << 64), (1 << 62) + tag]))


def _rc_histogram(rc: np.ndarray):
    return np.histogram(rc, bins=10)


def centered_acceptance(uy, C: float, delta: float):
    """Acceptance probability of the strip/window schedule for given ``u*^T A_i``.

    The objective is standard normal, so the window probability conditional
    on a nonnegative reduced cost is ``(Phi(uy) - Phi(uy - delta)) / Phi(uy)``.
    """
    uy = np.asarray(uy, dtype=float)
    M = delta * math.exp(-0.5 * (C + delta) ** 2)
    window = (norm.cdf(uy) - norm.cdf(uy - delta)) / norm.cdf(uy)
    return np.where(np.abs(uy) <= C, M / window, 0.0), M


def packing_acceptance(uy, delta: float, u1: float):
    """Same for exponential objectives, window ``(e^{-(uy-d)} - e^{-uy}) / (1 - e^{-uy})``."""
    uy = np.asarray(uy, dtype=float)
    M = delta * math.exp(-u1)
    window = (np.exp(-(uy - delta)) - np.exp(-uy)) / -np.expm1(-uy)
    return M / window, M


@dataclass
class MeanZeroing:
    """Second acceptance round ``g(x) = (4 + alpha 1{<x, v> >= q}) / 5``."""

    direction: np.ndarray
    threshold: float
    alpha: float
    strip_mean_norm: float
    achieved_mean_norm: float

    def accept_prob(self, cols: np.ndarray) -> np.ndarray:
        if self.alpha == 0.0:
            return np.ones(len(cols))
        return (4.0 + self.alpha * (cols @ self.direction >= self.threshold)) / 5.0


def fit_mean_zeroing(law, m: int, u: np.ndarray, C: float, samples: int, seed: int) -> MeanZeroing:
    """Estimate the strip-conditioned mean and zero it along its own direction.

    The halfspace ``{<x, v> >= q}`` with ``v = -mean / ||mean||`` and ``q`` the
    upper quartile of ``<x, v>`` carries a quarter of the mass; ``alpha`` is
    set so that the reweighted mean has no component along ``v``.
    """
    rng = _coin_stream(seed, 7)
    X = law.sample(rng, samples, m)
    X = X[np.abs(X @ u) <= C]
    mu = X.mean(axis=0)
    mn = float(np.linalg.norm(mu))
    if mn == 0.0 or len(X) < 10:
        return MeanZeroing(np.zeros(m), 0.0, 0.0, mn, mn)
    v = -mu / mn
    proj = X @ v
    q = float(np.quantile(proj, 0.75))
    top = proj >= q
    lift = float((proj * top).mean())
    alpha = min(1.0, 4.0 * mn / lift) if lift > 0 else 0.0
    if alpha >= 1.0:
        log.warning("mean-zeroing weight clipped at 1 (strip mean %.3g)", mn)
    g = (4.0 + alpha * top) / 5.0
    achieved = float(np.linalg.norm((g[:, None] * X).mean(axis=0) / g.mean()))
    log.info("mean-zeroing: strip mean %.3g, reweighted mean %.3g", mn, achieved)
    return MeanZeroing(v, q, alpha, mn, achieved)


def select_candidates_centered(instance: IpInstance, sol: LpSolution, config: SelectionConfig | None = None,
                               seed: int = 0) -> Selection:
    """Zero-columns with reduced cost in ``[0, delta]`` inside the strip ``|u*^T A_i| <= C``.

    Raises :class:`EmptyPool`, carrying the reduced-cost histogram of the
    zero set, when no column survives.
    """
    cfg = config or SelectionConfig()
    delta = cfg.delta if cfg.delta is not None else centered_delta(instance.n, instance.m, cfg.delta_c)
    C = cfg.C if cfg.C is not None else strip_width(sol.u_star, cfg.kappa)
    uA = instance.A.T @ sol.u_star
    rc = sol.reduced_costs
    N0 = sol.N0
    elig_mask = (rc[N0] >= 0) & (rc[N0] <= delta) & (np.abs(uA[N0]) <= C)
    elig = N0[elig_mask]
    prob = None
    mz = None
    if cfg.mode is Mode.FAITHFUL and len(elig):
        prob, _ = centered_acceptance(uA[elig], C, delta)
        if np.any(prob > 1.0):
            log.warning("acceptance probability above 1 on %d columns; clipped", int((prob > 1).sum()))
        coins = _coin_stream(seed, 1).random(instance.n)[elig]
        take = coins < np.minimum(prob, 1.0)
        if instance.model is Model.LOGCONCAVE:
            if instance.law is None:
                raise ValueError("faithful mode needs the column law of a logconcave instance")
            mzf = fit_mean_zeroing(instance.law, instance.m, sol.u_star, C, cfg.mean_zero_samples, seed)
            coins2 = _coin_stream(seed, 2).random(instance.n)[elig]
            take &= coins2 < mzf.accept_prob(instance.A[:, elig].T)
            mz = asdict(mzf)
        Z = elig[take]
    else:
        Z = elig
    if len(Z) == 0:
        counts, edges = _rc_histogram(rc[N0] if len(N0) else rc)
        raise EmptyPool(counts, edges)
    return Selection(np.sort(Z), delta, C, len(elig), prob, mz)


def _li_shift(cfg: SelectionConfig, n: int, m: int, z: int) -> float:
    if cfg.li_shift is None:
        return 1e-3
    if cfg.li_shift == "theory":
        p = cfg.kappa**4 / (1000.0 * m**5)
        return n**4 * math.exp(-p * cfg.kappa**3 * z / m)
    return float(cfg.li_shift)


def _snap_floor(v: np.ndarray) -> np.ndarray:
    r = np.round(v)
    v = np.where(np.abs(v - r) <= 1e-7, r, v)
    return np.floor(v).astype(np.int64)


def _finish(instance: IpInstance, u: np.ndarray, xp: np.ndarray, Z: np.ndarray, T: np.ndarray, t,
            residual: float, delta: float, failure: str | None, extras: dict) -> RoundingCertificate:
    x2 = xp.copy()
    x2[T] += 1
    if instance.discrete:
        slack_num = instance.b_num - instance.A_num @ x2
        feasible = bool(np.all(slack_num >= 0))
        slack = slack_num / instance.k
        extras = dict(extras, slack_num=slack_num)
    else:
        slack = instance.b - instance.A @ x2
        feasible = bool(np.all(slack >= 0))
    feasible = feasible and bool(np.all((x2 == 0) | (x2 == 1)))
    dv = dual_value(u, instance)
    obj = float(instance.c @ x2)
    bd = gap_formula(x2, u, instance)
    if failure is None and not feasible:
        failure = "infeasible"
    return RoundingCertificate(xp, Z, T, x2, feasible, slack, dv - obj, bd, np.asarray(t), residual, delta,
                               failure, dv, obj, extras)


def repair_centered(instance: IpInstance, sol: LpSolution | None = None, config: SelectionConfig | None = None,
                    seed: int = 0, *, strict: bool = False) -> RoundingCertificate:
    """Centered pipeline: floor, select, hit the rounding error, add the hit columns."""
    if instance.model is Model.PACKING:
        raise ValueError("use repair_packing for packing instances")
    cfg = config or SelectionConfig()
    sol = sol if sol is not None else solve_lp(instance)
    rd = round_down(sol.x_star, instance.A)
    xp = rd.x_prime
    try:
        sel = select_candidates_centered(instance, sol, cfg, seed)
    except EmptyPool as e:
        log.info("%s", e)
        delta = cfg.delta if cfg.delta is not None else centered_delta(instance.n, instance.m, cfg.delta_c)
        C = cfg.C if cfg.C is not None else strip_width(sol.u_star, cfg.kappa)
        sel = Selection(np.array([], dtype=np.int64), delta, C, 0)
    Z = sel.Z
    extras = {"round_err": rd.err_norm, "round_bound": rd.bound, "C": sel.C, "eligible": sel.eligible,
              "mean_zero": sel.mean_zero}
    failure = None
    T = np.array([], dtype=np.int64)
    if cfg.p is not None:
        p = cfg.p
    else:
        p = defaults.CENTERED_P_LI if instance.model is Model.LOGCONCAVE else defaults.CENTERED_P
    band = cardinality_band(p, len(Z))
    extras["band"] = band
    integral = cfg.shortcut_integral and len(sol.frac_idx) == 0
    if instance.discrete:
        t = _snap_floor(instance.A_num @ (sol.x_star - xp))
        residual = float(np.linalg.norm(t))
        if np.any(t != 0) or (band[0] > 0 and not integral):
            if len(Z) == 0:
                failure = "empty_pool"
            else:
                res = hit_target_exact(instance.A_num[:, Z], instance.k, t, band)
                if isinstance(res, NotFound):
                    failure = "not_found"
                else:
                    T = Z[res.subset]
                    residual = 0.0
        else:
            residual = 0.0
        t_used = t / instance.k
    else:
        shift = _li_shift(cfg, instance.n, instance.m, len(Z))
        tol = min(cfg.tol, shift / 2)
        t_used = instance.A @ (sol.x_star - xp) - shift
        residual = float(np.linalg.norm(t_used))
        extras["shift"] = shift
        if integral:
            t_used = np.zeros(instance.m)
            residual = 0.0
        elif residual > tol or band[0] > 0:
            if len(Z) == 0:
                failure = "empty_pool"
            else:
                res = hit_target_approx(instance.A[:, Z], t_used, band, tol, cfg.approx_budget, seed)
                residual = res.residual_norm
                if res.status is HitStatus.BEST:
                    failure = "above_tol"
                else:
                    T = Z[res.subset]
    if failure is not None:
        T = np.array([], dtype=np.int64)
    cert = _finish(instance, sol.u_star, xp, Z, T, t_used, residual, sel.delta, failure, extras)
    _check_certificate(cert, sol, instance)
    if strict and not cert.ok:
        raise RepairFailed(cert)
    return cert


def _check_certificate(cert: RoundingCertificate, sol: LpSolution, instance: IpInstance):
    if not cert.ok:
        return
    if len(cert.repair_set):
        rc_sum = float(sol.reduced_costs[cert.repair_set].sum())
        assert rc_sum <= len(cert.repair_set) * cert.delta + 1e-9, "repair columns exceed the reduced-cost ceiling"
    assert abs(cert.breakdown.total - cert.gap_upper) <= 1e-9 * max(1.0, abs(cert.dual_value))


def repair_packing(instance: IpInstance, config: SelectionConfig | None = None, seed: int = 0, *,
                   strict: bool = False) -> RoundingCertificate:
    """Packing pipeline: solve with every RHS lowered by ``gamma``, then refill exactly.

    Rows with a positive dual are refilled to equality; the remaining rows
    receive ``floor(gamma)``, which the lowered RHS leaves room for.
    """
    if instance.model is not Model.PACKING:
        raise ValueError("repair_packing needs a packing instance")
    cfg = config or SelectionConfig()
    m, n, k = instance.m, instance.n, instance.k
    prm = packing_params(n, m, k, instance.beta, cfg)
    b_shift = instance.b - prm.gamma
    if np.any(b_shift <= 0):
        raise InfeasiblePerturbed(f"shift {prm.gamma:.4g} leaves a non-positive right-hand side")
    sol = solution_from_arrays(instance.A, b_shift, instance.c)
    rd = round_down(sol.x_star, instance.A)
    xp = rd.x_prime
    u = sol.u_star
    rc = sol.reduced_costs
    uA = instance.A.T @ u
    low = math.ceil(k / (3 * m))
    N0 = sol.N0
    in_box = np.all(instance.A_num[:, N0] >= low, axis=0)
    elig = N0[(rc[N0] >= 0) & (rc[N0] <= prm.delta) & in_box]
    prob = None
    if cfg.mode is Mode.FAITHFUL and len(elig):
        u1 = float(u.sum())
        prob, _ = packing_acceptance(uA[elig], prm.delta, u1)
        if np.any(prob > 1.0):
            log.warning("acceptance probability above 1 on %d columns; clipped", int((prob > 1).sum()))
        coins = _coin_stream(seed, 3).random(n)[elig]
        Z = elig[coins < np.minimum(prob, 1.0)]
    else:
        Z = elig
    Z = np.sort(Z)[: prm.r]
    ax_num = instance.A_num @ xp
    pos = u > 0
    floor_gamma = math.floor(prm.gamma)
    t_num = np.where(pos, instance.b_num - ax_num, k * floor_gamma).astype(np.int64)
    extras = {"round_err": rd.err_norm, "round_bound": rd.bound, "eligible": int(len(elig)), "r": prm.r,
              "gamma": prm.gamma, "p": prm.p, "mu": prm.mu, "sol": sol}
    failure = None
    T = np.array([], dtype=np.int64)
    residual = float(np.linalg.norm(t_num)) / k
    band = cardinality_band(prm.p, prm.r)
    band = (min(band[0], len(Z)), min(band[1], len(Z)))
    extras["band"] = band
    if np.any(t_num < 0):
        failure = "negative_target"
    elif np.any(t_num != 0) or (band[0] > 0 and not (cfg.shortcut_integral and len(sol.frac_idx) == 0)):
        if len(Z) == 0:
            failure = "empty_pool"
        else:
            res = hit_target_exact(instance.A_num[:, Z], k, t_num, band)
            if isinstance(res, NotFound):
                failure = "not_found"
            else:
                T = Z[res.subset]
                residual = 0.0
    else:
        residual = 0.0
    if failure is not None:
        T = np.array([], dtype=np.int64)
    cert = _finish(instance, u, xp, Z, T, t_num / k, residual, prm.delta, failure, extras)
    _check_certificate(cert, sol, instance)
    if cert.ok:
        tight = cert.extras["slack_num"][pos]
        assert np.all(tight == 0), "positive-dual rows must end tight"
    if strict and not cert.ok:
        raise RepairFailed(cert)
    return cert


@dataclass
class GapReport:
    model: str
    m: int
    n: int
    k: int
    beta: float | None
    seed: int
    val_lp: float = float("nan")
    u_norm: float = float("nan")
    n0_frac: float = float("nan")
    z_size: int = 0
    t_size: int = 0
    residual: float = float("nan")
    feasible: bool = False
    gap_upper: float = float("nan")
    ipgap_exact: float | None = None
    error: str | None = None


def measure_gap(instance: IpInstance, config: SelectionConfig | None = None, seed: int = 0,
                *, exact_upto: int = defaults.BRUTE_FORCE_N) -> GapReport:
    """Run the pipeline for the model and summarise it; small instances also get the exact gap."""
    from .oracles import brute_force_ip

    cfg = config or SelectionConfig()
    rep = GapReport(instance.model.value, instance.m, instance.n, instance.k, instance.beta, instance.seed)
    try:
        sol = solve_lp(instance)
    except Infeasible as e:
        rep.error = f"lp_infeasible: {e}"
        return rep
    rep.val_lp = sol.value
    rep.n0_frac = len(sol.N0) / instance.n
    try:
        if instance.model is Model.PACKING:
            cert = repair_packing(instance, cfg, seed)
            rep.u_norm = float(np.abs(cert.extras["sol"].u_star).sum())
        else:
            cert = repair_centered(instance, sol, cfg, seed)
            rep.u_norm = float(np.linalg.norm(sol.u_star))
    except (RuntimeError, Infeasible, ValueError) as e:
        rep.error = f"{type(e).__name__}: {e}"
        return rep
    rep.z_size = int(len(cert.candidates))
    rep.t_size = int(len(cert.repair_set))
    rep.residual = float(cert.residual)
    rep.feasible = bool(cert.ok)
    if cert.ok:
        rep.gap_upper = float(cert.gap_upper)
    else:
        rep.error = cert.failure
    if instance.n <= exact_upto:
        val_ip, _ = brute_force_ip(instance)
        if val_ip is not None:
            rep.ipgap_exact = float(sol.value - val_ip)
            if cert.ok:
                assert rep.ipgap_exact <= rep.gap_upper + 1e-9, "exact gap exceeds the certified bound"
    return rep
