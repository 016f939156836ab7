"""Random 0/1 integer program instances: generation, storage, text I/O.

An instance is ``max c^T x  s.t.  A x <= b, x in {0,1}^n``. Discrete models
keep ``A`` and ``b`` as integer numerators over a global denominator ``k`` so
that feasibility checks downstream can be done in exact integer arithmetic.

Each column ``(A_i, c_i)`` is drawn from its own Philox stream keyed by
``(seed, i)``; column ``i`` therefore depends only on the seed, the column
index and the row count, never on ``n`` or on generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from . import defaults

HEADER = "gapforge-ip v1"
GENERATOR_NAME = "philox-column-v1"
_U64 = 1 << 64


class InstanceError(ValueError):
    """Base class for malformed or out-of-domain instances."""


class FormatError(InstanceError):
    pass


class DimensionMismatch(InstanceError):
    pass


class DomainError(InstanceError):
    pass


class Model(str, Enum):
    DSU = "dsu"
    LOGCONCAVE = "logconcave"
    PACKING = "packing"


class LawFamily(str, Enum):
    DSU_SYMMETRIC = "dsu"
    DISCRETE_INTERVAL = "interval"
    PACKING_UNIFORM = "packing"
    UNIFORM_CUBE = "cube"
    UNIFORM_BALL = "ball"
    TRUNCATED_GAUSSIAN = "tgauss"


_FINITE = {LawFamily.DSU_SYMMETRIC, LawFamily.DISCRETE_INTERVAL, LawFamily.PACKING_UNIFORM}


@dataclass(frozen=True)
class ColumnLaw:
    """Law of one constraint column with i.i.d. or isotropic structure.

    Discrete laws are expressed in real units: ``DSU_SYMMETRIC`` takes values
    ``{-k..k}/k``, ``PACKING_UNIFORM`` takes ``{1..k}/k`` and
    ``DISCRETE_INTERVAL`` takes the integers ``{a..a+k}``. The continuous
    families are scaled to identity covariance; the truncated Gaussian is
    scaled first and truncated afterwards.
    """

    family: LawFamily
    k: int | None = None
    a: int = 0
    radius: float | None = None

    def __post_init__(self):
        if self.family in _FINITE and (self.k is None or self.k < 1):
            raise ValueError(f"{self.family.value} law needs k >= 1")
        if self.family is LawFamily.TRUNCATED_GAUSSIAN and not (self.radius and self.radius > 0):
            raise ValueError("truncated Gaussian needs a positive radius")

    @property
    def is_finite(self) -> bool:
        return self.family in _FINITE

    def entry_values(self) -> np.ndarray:
        """Per-coordinate support of a finite law, in real units."""
        k = self.k
        if self.family is LawFamily.DSU_SYMMETRIC:
            return np.arange(-k, k + 1) / k
        if self.family is LawFamily.PACKING_UNIFORM:
            return np.arange(1, k + 1) / k
        if self.family is LawFamily.DISCRETE_INTERVAL:
            return np.arange(self.a, self.a + k + 1, dtype=float)
        raise ValueError(f"{self.family.value} has no finite support")

    def mean(self, m: int) -> np.ndarray:
        if self.is_finite:
            return np.full(m, self.entry_values().mean())
        return np.zeros(m)

    def variance(self) -> float:
        """Per-coordinate variance (the covariance is a multiple of I)."""
        if self.is_finite:
            v = self.entry_values()
            return float(np.mean((v - v.mean()) ** 2))
        return 1.0

    def sigma(self) -> float:
        """Square root of the covariance operator norm (an upper bound for tgauss)."""
        return math.sqrt(self.variance())

    def support_radius(self, m: int) -> float:
        if self.is_finite:
            return float(np.max(np.abs(self.entry_values())) * math.sqrt(m))
        if self.family is LawFamily.UNIFORM_CUBE:
            return math.sqrt(3.0 * m)
        if self.family is LawFamily.UNIFORM_BALL:
            return math.sqrt(m + 2.0)
        return float(self.radius)

    def support(self, m: int) -> np.ndarray:
        """All support points of a finite law as a ``(K, m)`` array."""
        v = self.entry_values()
        grids = np.meshgrid(*([v] * m), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def sample(self, rng: np.random.Generator, size: int, m: int) -> np.ndarray:
        """Draw ``size`` columns as a ``(size, m)`` array."""
        f = self.family
        if f is LawFamily.DSU_SYMMETRIC:
            return rng.integers(-self.k, self.k + 1, size=(size, m)) / self.k
        if f is LawFamily.PACKING_UNIFORM:
            return rng.integers(1, self.k + 1, size=(size, m)) / self.k
        if f is LawFamily.DISCRETE_INTERVAL:
            return rng.integers(self.a, self.a + self.k + 1, size=(size, m)).astype(float)
        if f is LawFamily.UNIFORM_CUBE:
            half = math.sqrt(3.0)
            return rng.uniform(-half, half, size=(size, m))
        if f is LawFamily.UNIFORM_BALL:
            g = rng.standard_normal((size, m))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            rad = math.sqrt(m + 2.0) * rng.random(size) ** (1.0 / m)
            return g * rad[:, None]
        out = np.empty((size, m))
        filled = 0
        r2 = self.radius**2
        while filled < size:
            g = rng.standard_normal((size - filled, m))
            keep = g[np.einsum("ij,ij->i", g, g) <= r2]
            out[filled : filled + len(keep)] = keep
            filled += len(keep)
        return out

    def tag(self) -> str:
        if self.family is LawFamily.TRUNCATED_GAUSSIAN:
            return f"tgauss:{self.radius!r}"
        if self.family is LawFamily.DISCRETE_INTERVAL:
            return f"interval:{self.a}:{self.k}"
        if self.is_finite:
            return f"{self.family.value}:{self.k}"
        return self.family.value

    @classmethod
    def from_tag(cls, tag: str) -> "ColumnLaw":
        parts = tag.split(":")
        fam = LawFamily(parts[0])
        if fam is LawFamily.TRUNCATED_GAUSSIAN:
            return cls(fam, radius=float(parts[1]))
        if fam is LawFamily.DISCRETE_INTERVAL:
            return cls(fam, a=int(parts[1]), k=int(parts[2]))
        if fam in _FINITE:
            return cls(fam, k=int(parts[1]))
        return cls(fam)


def default_tgauss_radius(n: int, m: int) -> float:
    return math.sqrt(2.0 * math.log(max(n, 2))) + 2.0 * math.sqrt(m)


@dataclass(eq=False)
class IpInstance:
    """``max c^T x, A x <= b, x in {0,1}^n``.

    For discrete models ``A = A_num / k`` and ``b = b_num / k`` with integer
    numerators. For the logconcave model ``k == 1`` and the arrays are real.
    """

    model: Model
    m: int
    n: int
    k: int
    A_num: np.ndarray
    b_num: np.ndarray
    c: np.ndarray
    beta: float | None = None
    seed: int = 0
    law: ColumnLaw | None = None
    generator: str = GENERATOR_NAME
    _A: np.ndarray | None = field(default=None, repr=False)

    @property
    def discrete(self) -> bool:
        return self.model is not Model.LOGCONCAVE

    @property
    def A(self) -> np.ndarray:
        if self._A is None:
            self._A = self.A_num / self.k if self.discrete else np.asarray(self.A_num, dtype=float)
        return self._A

    @property
    def b(self) -> np.ndarray:
        return self.b_num / self.k if self.discrete else np.asarray(self.b_num, dtype=float)

    def with_rhs(self, b_num: np.ndarray) -> "IpInstance":
        """Same columns and objective, different right-hand side numerators."""
        return IpInstance(self.model, self.m, self.n, self.k, self.A_num, np.asarray(b_num), self.c,
                          self.beta, self.seed, self.law, self.generator, self._A)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IpInstance):
            return NotImplemented
        return (
            self.model == other.model
            and (self.m, self.n, self.k, self.seed) == (other.m, other.n, other.k, other.seed)
            and self.beta == other.beta
            and self.law == other.law
            and self.A_num.dtype.kind == other.A_num.dtype.kind
            and np.array_equal(self.A_num, other.A_num)
            and np.array_equal(self.b_num, other.b_num)
            and np.array_equal(self.c, other.c)
        )

    def validate(self) -> None:
        if self.A_num.shape != (self.m, self.n):
            raise DimensionMismatch(f"A has shape {self.A_num.shape}, expected {(self.m, self.n)}")
        if self.b_num.shape != (self.m,) or self.c.shape != (self.n,):
            raise DimensionMismatch("b or c has the wrong length")
        if not 0 <= self.seed < _U64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.model is Model.DSU:
            if np.abs(self.A_num).max(initial=0) > self.k:
                raise DomainError(f"DSU entries must lie in [-{self.k}, {self.k}]")
        elif self.model is Model.PACKING:
            if self.A_num.size and (self.A_num.min() < 1 or self.A_num.max() > self.k):
                raise DomainError(f"packing entries must lie in [1, {self.k}]")
            lo, hi = packing_rhs_bounds(self.n, self.k, self.beta)
            if np.any(self.b_num < lo) or np.any(self.b_num > hi):
                raise DomainError(f"packing b_num must lie in [{lo}, {hi}]")


def column_rng(seed: int, col: int) -> np.random.Generator:
    """Independent stream for column ``col`` of the instance with ``seed``."""
    return np.random.Generator(np.random.Philox(key=[seed % _U64, col]))


def _check_common(n: int, m: int, seed: int) -> None:
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    if not 0 <= seed < _U64:
        raise ValueError("seed must be an unsigned 64-bit integer")


def _discrete_rhs(b_spec, m: int, k: int) -> np.ndarray:
    """Numerators of an explicit real right-hand side; must be integral over k."""
    if isinstance(b_spec, str):
        if b_spec == "zero":
            return np.zeros(m, dtype=np.int64)
        raise ValueError(f"unknown b rule {b_spec!r}")
    b = np.asarray(b_spec, dtype=float).reshape(-1)
    if b.shape != (m,):
        raise DimensionMismatch(f"b has length {b.size}, expected {m}")
    scaled = b * k
    num = np.rint(scaled)
    if np.any(np.abs(scaled - num) > 1e-9):
        raise DomainError("b is not integral over k")
    return num.astype(np.int64)


def gen_centered_dsu(n: int, m: int, k: int, b_spec="zero", seed: int = 0) -> IpInstance:
    """Entries of ``A`` uniform on ``{-k..k}/k``, ``c`` standard normal."""
    _check_common(n, m, seed)
    if k < 1:
        raise ValueError("need k >= 1")
    b_num = _discrete_rhs(b_spec, m, k)
    A_num = np.empty((m, n), dtype=np.int64)
    c = np.empty(n)
    for i in range(n):
        g = column_rng(seed, i)
        A_num[:, i] = g.integers(-k, k + 1, size=m)
        c[i] = g.standard_normal()
    return IpInstance(Model.DSU, m, n, k, A_num, b_num, c, None, seed, ColumnLaw(LawFamily.DSU_SYMMETRIC, k=k))


def gen_centered_logconcave(n: int, m: int, family: ColumnLaw | str = "cube", b_spec="zero",
                            seed: int = 0) -> IpInstance:
    """Isotropic logconcave columns (cube, ball or truncated Gaussian)."""
    _check_common(n, m, seed)
    if isinstance(family, str):
        if family in ("tgauss", "truncated_gaussian"):
            family = ColumnLaw(LawFamily.TRUNCATED_GAUSSIAN, radius=default_tgauss_radius(n, m))
        else:
            family = ColumnLaw.from_tag(family)
    if family.is_finite:
        raise ValueError("logconcave model needs a continuous family")
    if isinstance(b_spec, str):
        if b_spec != "zero":
            raise ValueError(f"unknown b rule {b_spec!r}")
        b = np.zeros(m)
    else:
        b = np.asarray(b_spec, dtype=float).reshape(-1)
        if b.shape != (m,):
            raise DimensionMismatch(f"b has length {b.size}, expected {m}")
    A = np.empty((m, n))
    c = np.empty(n)
    for i in range(n):
        g = column_rng(seed, i)
        A[:, i] = family.sample(g, 1, m)[0]
        c[i] = g.standard_normal()
    return IpInstance(Model.LOGCONCAVE, m, n, 1, A, b, c, None, seed, family)


def packing_rhs_bounds(n: int, k: int, beta: float) -> tuple[int, int]:
    """Smallest and largest integer numerators strictly inside (knβ, kn(1/2-β))."""
    lo = math.floor(k * n * beta) + 1
    hi = math.ceil(k * n * (0.5 - beta)) - 1
    return lo, hi


def gen_packing(n: int, m: int, k: int, beta: float, b_spec="mid", seed: int = 0) -> IpInstance:
    """Entries of ``A`` uniform on ``{1..k}/k``, ``c`` exponential with rate 1."""
    _check_common(n, m, seed)
    if k < 3:
        raise ValueError("packing model needs k >= 3")
    if not 0 < beta < 0.25:
        raise ValueError("beta must lie in (0, 1/4)")
    lo, hi = packing_rhs_bounds(n, k, beta)
    if lo > hi:
        raise DomainError(f"no integer numerator inside ({k * n * beta}, {k * n * (0.5 - beta)})")
    if isinstance(b_spec, str) and b_spec == "mid":
        mid = math.floor(k * n / 4 + 0.5)
        b_num = np.full(m, min(max(mid, lo), hi), dtype=np.int64)
    else:
        b_num = _discrete_rhs(b_spec, m, k)
        if np.any(b_num < lo) or np.any(b_num > hi):
            raise DomainError(f"packing b_num must lie in [{lo}, {hi}]")
    A_num = np.empty((m, n), dtype=np.int64)
    c = np.empty(n)
    for i in range(n):
        g = column_rng(seed, i)
        A_num[:, i] = g.integers(1, k + 1, size=m)
        c[i] = g.standard_exponential()
    return IpInstance(Model.PACKING, m, n, k, A_num, b_num, c, beta, seed,
                      ColumnLaw(LawFamily.PACKING_UNIFORM, k=k))


def generate(model: Model | str, n: int, m: int, k: int = 3, beta: float | None = None,
             b_spec=None, seed: int = 0, family: ColumnLaw | str = "cube") -> IpInstance:
    """Dispatch on the model tag with the default right-hand side for each model."""
    model = Model(model)
    if model is Model.DSU:
        return gen_centered_dsu(n, m, k, "zero" if b_spec is None else b_spec, seed)
    if model is Model.LOGCONCAVE:
        return gen_centered_logconcave(n, m, family, "zero" if b_spec is None else b_spec, seed)
    return gen_packing(n, m, k, 0.1 if beta is None else beta, "mid" if b_spec is None else b_spec, seed)


# ---------------------------------------------------------------- text format

def _fmt(x: float) -> str:
    return defaults.FLOAT_FMT % x


def dumps(inst: IpInstance) -> str:
    tag = inst.model.value
    if inst.model is Model.LOGCONCAVE:
        tag += ":" + inst.law.tag()
    beta = "-" if inst.beta is None else _fmt(inst.beta)
    lines = [HEADER, f"model={tag} m={inst.m} n={inst.n} k={inst.k} beta={beta} seed={inst.seed}"]
    if inst.discrete:
        lines += [" ".join(str(int(v)) for v in row) for row in inst.A_num]
        lines.append(" ".join(str(int(v)) for v in inst.b_num))
    else:
        lines += [" ".join(_fmt(v) for v in row) for row in inst.A_num]
        lines.append(" ".join(_fmt(v) for v in inst.b_num))
    lines.append(" ".join(_fmt(v) for v in inst.c))
    return "\n".join(lines) + "\n"


def save(inst: IpInstance, path: str | Path) -> None:
    Path(path).write_text(dumps(inst), encoding="utf-8")


def _parse_ints(tokens: Sequence[str], what: str) -> np.ndarray:
    try:
        return np.array([int(t) for t in tokens], dtype=np.int64)
    except ValueError:
        raise DomainError(f"non-integer entry in {what}") from None


def _parse_floats(tokens: Sequence[str], what: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in tokens], dtype=float)
    except ValueError:
        raise FormatError(f"non-numeric entry in {what}") from None


def loads(text: str) -> IpInstance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != HEADER:
        raise FormatError(f"missing header line {HEADER!r}")
    if len(lines) < 2:
        raise FormatError("missing parameter line")
    params = {}
    for tok in lines[1].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise FormatError(f"bad parameter token {tok!r}")
        params[key] = val
    try:
        tag = params["model"]
        m, n, k = int(params["m"]), int(params["n"]), int(params["k"])
        beta = None if params["beta"] == "-" else float(params["beta"])
        seed = int(params["seed"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad parameter line: {exc}") from None
    model_name, _, law_tag = tag.partition(":")
    try:
        model = Model(model_name)
    except ValueError:
        raise FormatError(f"unknown model {model_name!r}") from None
    body = lines[2:]
    if len(body) != m + 2:
        raise DimensionMismatch(f"expected {m + 2} data lines, found {len(body)}")
    rows = [ln.split() for ln in body[:m]]
    if any(len(r) != n for r in rows):
        raise DimensionMismatch(f"every row of A must have {n} entries")
    b_tok, c_tok = body[m].split(), body[m + 1].split()
    if len(b_tok) != m or len(c_tok) != n:
        raise DimensionMismatch("b or c has the wrong length")
    if model is Model.LOGCONCAVE:
        A_num = _parse_floats([t for r in rows for t in r], "A").reshape(m, n)
        b_num = _parse_floats(b_tok, "b")
        law = ColumnLaw.from_tag(law_tag) if law_tag else ColumnLaw(LawFamily.UNIFORM_CUBE)
    else:
        A_num = _parse_ints([t for r in rows for t in r], "A").reshape(m, n)
        b_num = _parse_ints(b_tok, "b")
        fam = LawFamily.DSU_SYMMETRIC if model is Model.DSU else LawFamily.PACKING_UNIFORM
        law = ColumnLaw(fam, k=k)
    c = _parse_floats(c_tok, "c")
    inst = IpInstance(model, m, n, k, A_num, b_num, c, beta, seed, law)
    inst.validate()
    return inst


def load(path: str | Path) -> IpInstance:
    return loads(Path(path).read_text(encoding="utf-8"))
