"""Moments, entropy, tail bounds and anti-concentration certificates for column laws."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.stats import norm, qmc

from . import defaults
from .instance import ColumnLaw


def entropy(x: float) -> float:
    """Binary entropy in nats, with ``H(0) = H(1) = 0``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("entropy is defined on [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log1p(-x)


def binomial_prefix_sum(n: int, alpha: float) -> int:
    """``sum_{i <= floor(alpha n)} C(n, i)`` as an exact integer."""
    return sum(math.comb(n, i) for i in range(math.floor(alpha * n) + 1))


def dsu_moments(k: int) -> tuple[Fraction, Fraction]:
    """Second and fourth moments of the uniform law on ``{-k..k}/k``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    vals = range(-k, k + 1)
    m2 = Fraction(sum(v * v for v in vals), (2 * k + 1) * k * k)
    m4 = Fraction(sum(v**4 for v in vals), (2 * k + 1) * k**4)
    return m2, m4


def chernoff_lower(mu: float, eps: float) -> float:
    """Bound on ``Pr[X <= (1 - eps) mu]`` for a sum of independent bits with mean ``mu``."""
    return math.exp(-eps * eps * mu / 2.0)


def chernoff_upper(mu: float, eps: float) -> float:
    """Bound on ``Pr[X >= (1 + eps) mu]``."""
    return math.exp(-eps * eps * mu / 3.0)


def azuma_upper(mu: float, n: int, eps: float) -> float:
    """Bound on ``Pr[X >= (1 + eps) mu]`` when ``mu`` sums conditional means of ``n`` bits."""
    return math.exp(-eps * eps * mu * mu / (2.0 * n))


def dsu_weighted_sum_law(a, k: int, budget: int = 2_000_000) -> np.ndarray:
    """All equally likely values of ``sum a_i U_i`` with ``U_i`` uniform on ``{-k..k}/k``."""
    x = np.arange(-k, k + 1) / k
    if (2 * k + 1) ** len(a) > budget:
        raise ValueError("enumeration exceeds the budget")
    vals = np.zeros(1)
    for ai in a:
        vals = (vals[:, None] + ai * x[None, :]).ravel()
    return vals


@dataclass
class KhinchineCheck:
    second: float
    first_sq_times3: float
    fourth: float
    second_sq_times3: float

    @property
    def holds(self) -> bool:
        return (self.second <= self.first_sq_times3 * (1 + 1e-12)
                and self.fourth <= self.second_sq_times3 * (1 + 1e-12))


def khinchine_check(a, k: int) -> KhinchineCheck:
    z = np.abs(dsu_weighted_sum_law(a, k))
    e1, e2, e4 = z.mean(), (z**2).mean(), (z**4).mean()
    return KhinchineCheck(float(e2), float(3 * e1 * e1), float(e4), float(3 * e2 * e2))


# ---------------------------------------------------------------- anti-concentration

class AcMethod(str, Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class AcCertificate:
    law: ColumnLaw
    m: int
    theta_grid: np.ndarray
    nu_grid: np.ndarray
    worst_prob: float
    kappa_test: float
    method: AcMethod
    trials: int | None = None
    std_error: float = 0.0
    worst_theta: np.ndarray | None = None
    worst_nu: np.ndarray | None = None

    @property
    def passes(self) -> bool:
        return self.worst_prob >= self.kappa_test


def theta_grid(m: int, points: int = defaults.THETA_POINTS, half_width: float = 0.5) -> np.ndarray:
    """Tensor grid on ``[-w, w]^m`` with the origin removed."""
    ax = np.linspace(-half_width, half_width, points)
    mesh = np.meshgrid(*([ax] * m), indexing="ij")
    th = np.stack([g.ravel() for g in mesh], axis=1)
    return th[np.abs(th).max(axis=1) > 0]


def nu_grid(m: int, points: int = defaults.NU_POINTS, seed: int = 0) -> np.ndarray:
    """Unit directions: both signs for ``m = 1``, equispaced angles for ``m = 2``, Sobol otherwise."""
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if m == 2:
        ang = 2 * np.pi * np.arange(points) / points
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    pts = qmc.Sobol(d=m, scramble=True, seed=seed).random(points)
    g = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _ac_probabilities(X, w, mean, thetas, nus, thr):
    """Conditional event frequencies; ``w`` are point weights (uniform for samples)."""
    proj = X @ thetas.T  # (K, T)
    dist = np.abs(proj - np.round(proj))
    # a lattice point is never far from the lattice, which settles theta = 0 where thr = 0
    event = ((dist >= thr[None, :] - 1e-12) & (dist > 1e-12)).astype(float)  # (K, T)
    half = (X @ nus.T <= (mean @ nus.T)[None, :] + 1e-12).astype(float) * w[:, None]  # (K, N)
    mass = half.sum(axis=0)
    probs = (event.T @ half) / np.where(mass > 0, mass, 1.0)[None, :]  # (T, N)
    return probs, mass


def ac_certify(law: ColumnLaw, m: int, kappa_test: float = defaults.AC_KAPPA_TEST, thetas=None, nus=None,
               trials: int | None = None, seed: int = 0, budget: int = defaults.AC_ENUM_BUDGET) -> AcCertificate:
    """Worst conditional probability that ``theta^T X`` sits far from the integers.

    The threshold is ``kappa_test * min(1, ||theta||_inf sigma)`` and the
    conditioning is on the halfspace ``<nu, X> <= <nu, mean>``. Finite laws
    are enumerated exactly unless ``trials`` is given; continuous laws need
    ``trials`` and report the binomial standard error at the worst cell.
    """
    thetas = theta_grid(m) if thetas is None else np.atleast_2d(np.asarray(thetas, dtype=float))
    nus = nu_grid(m) if nus is None else np.atleast_2d(np.asarray(nus, dtype=float))
    sigma = law.sigma()
    thr = kappa_test * np.minimum(1.0, np.abs(thetas).max(axis=1) * sigma)
    mean = law.mean(m)
    if law.is_finite and trials is None:
        size = len(law.entry_values()) ** m
        if size > budget:
            raise BudgetExceeded(f"support of {size} points exceeds the budget {budget}")
        X = law.support(m)
        probs, _ = _ac_probabilities(X, np.ones(len(X)), mean, thetas, nus, thr)
        i, j = np.unravel_index(int(np.argmin(probs)), probs.shape)
        return AcCertificate(law, m, thetas, nus, float(probs[i, j]), kappa_test, AcMethod.EXACT,
                             worst_theta=thetas[i], worst_nu=nus[j])
    if trials is None:
        raise ValueError("continuous laws need a Monte-Carlo trial count")
    rng = np.random.Generator(np.random.Philox(key=[seed, 0xAC]))
    X = law.sample(rng, int(trials), m)
    probs, mass = _ac_probabilities(X, np.ones(len(X)), mean, thetas, nus, thr)
    i, j = np.unravel_index(int(np.argmin(probs)), probs.shape)
    pw = float(probs[i, j])
    se = math.sqrt(max(pw * (1 - pw), 1e-300) / max(mass[j], 1.0))
    return AcCertificate(law, m, thetas, nus, pw, kappa_test, AcMethod.MONTE_CARLO, int(trials), se,
                         thetas[i], nus[j])


ADMISSIBLE_MASS = 1.0 / (4.0 * math.e**2)


@dataclass
class GrunbaumReport:
    min_mass: float
    std_error: float
    worst_nu: np.ndarray
    threshold: float = ADMISSIBLE_MASS

    @property
    def ok(self) -> bool:
        return self.min_mass >= self.threshold - 3 * self.std_error


def grunbaum_check(law: ColumnLaw | Callable, m: int, nus=None, trials: int = 100_000, seed: int = 0,
                   mean=None) -> GrunbaumReport:
    """Smallest sampled mass of a halfspace ``<nu, X> >= <nu, mean>`` over the direction grid.

    ``law`` is a :class:`ColumnLaw` or a sampler ``f(rng, size) -> (size, m)``,
    in which case ``mean`` is required.
    """
    nus = nu_grid(m) if nus is None else np.atleast_2d(np.asarray(nus, dtype=float))
    rng = np.random.Generator(np.random.Philox(key=[seed, 0x6B]))
    if isinstance(law, ColumnLaw):
        X = law.sample(rng, trials, m)
        mu = law.mean(m) if mean is None else np.asarray(mean, dtype=float)
    else:
        if mean is None:
            raise ValueError("a bare sampler needs its mean")
        X = np.asarray(law(rng, trials)).reshape(trials, m)
        mu = np.asarray(mean, dtype=float)
    masses = (X @ nus.T >= (mu @ nus.T)[None, :]).mean(axis=0)
    j = int(np.argmin(masses))
    q = float(masses[j])
    return GrunbaumReport(q, math.sqrt(max(q * (1 - q), 1e-300) / trials), nus[j])
