"""Acceptance suites: each returns named pass/fail checks with a short measured summary.

The ``verify`` command and the test suite both run these, so the numbers a
user sees from the command line are exactly the ones the tests assert on.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from . import defaults
from .bnb import Status, best_bound_solve, knapsack_count, sweep_tree_sizes, tree_bound_check
from .discrepancy import cardinality_band, hit_target_exact, pmf_convolution, pmf_fourier, subsample
from .instance import ColumnLaw, LawFamily, generate
from .oracles import brute_force_ip, brute_force_knapsack_count, brute_force_pmf, lp_vertex_value
from .rounding import measure_gap, repair_centered, repair_packing
from .simplex import check_solution_props, dual_value_arrays, solution_from_arrays, solve_lp
from .stats import ac_certify, grunbaum_check


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] C{self.criterion} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        dt = time.perf_counter() - t0
        for r in res:
            r.seconds = dt
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _rng(*key) -> np.random.Generator:
    words = np.random.SeedSequence(list(key)).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=words))


@_timed
def suite_fourier(quick: bool = False) -> list[CheckResult]:
    """Quadrature inversion against sequential convolution and 2^n enumeration."""
    worst_q = worst_b = worst_mass = 0.0
    cases = 0
    reps = 2 if quick else 6
    for m in (1, 2):
        for p in (0.1, 0.3, 0.5):
            for r in range(reps):
                g = _rng(11, m, int(p * 10), r)
                nb = int(g.integers(1, 17))
                A = g.integers(-2, 3, size=(m, nb))
                P = pmf_convolution(A, 1, p)
                pts = P.points()
                four = pmf_fourier(A, 1, p, pts)
                worst_q = max(worst_q, float(np.abs(four - P.probabilities.ravel()).max()))
                bf = brute_force_pmf(A, p)
                ref = np.array([bf.get(tuple(x), 0.0) for x in pts])
                worst_b = max(worst_b, float(np.abs(ref - P.probabilities.ravel()).max()))
                worst_mass = max(worst_mass, abs(P.total_mass - 1.0))
                cases += 1
    return [
        CheckResult(1, "fourier-vs-convolution", worst_q <= 1e-9, f"max |diff| {worst_q:.2e} over {cases} cases"),
        CheckResult(1, "convolution-vs-bruteforce", worst_b <= 1e-12 and worst_mass <= 1e-12,
                    f"max |diff| {worst_b:.2e}, mass error {worst_mass:.2e}"),
    ]


def _ball_points(radius: float) -> np.ndarray:
    R = int(math.floor(radius))
    ax = np.arange(-R, R + 1)
    g = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    return g[np.linalg.norm(g, axis=1) <= radius + 1e-12]


def hitting_rate(draws: int, radius: float, seed: int = 0, nb: int = 300, p: float = 0.05):
    band = cardinality_band(p, nb)
    pts = _ball_points(radius)
    hits = 0
    for d in range(draws):
        g = _rng(seed, 22, d)
        A = g.integers(-1, 2, size=(2, nb))
        t = pts[g.integers(len(pts))]
        res = hit_target_exact(A, 1, t, band)
        if res.ok:
            assert band[0] <= len(res.subset) <= band[1]
            hits += 1
    return hits, band, len(pts)


@_timed
def suite_hitting(quick: bool = False) -> list[CheckResult]:
    """Exact hitting at the stated radius, plus a wider radius reported as a statistic."""
    draws = 20 if quick else 100
    p, nb = 0.05, 300
    radius = 0.5 * p * math.sqrt(2 * nb)
    hits, band, npts = hitting_rate(draws, radius)
    wide = 4 * radius
    hits_w, _, npts_w = hitting_rate(draws, wide, seed=1)
    need = math.ceil(0.95 * draws)
    return [
        CheckResult(2, "exact-hit-rate", hits >= need,
                    f"{hits}/{draws} hits, |T| in {band}, radius {radius:.3f} ({npts} lattice targets); "
                    f"radius {wide:.2f}: {hits_w}/{draws} ({npts_w} targets, not asserted)"),
    ]


@_timed
def suite_subsample(quick: bool = False) -> list[CheckResult]:
    """Contraction holds exactly on every trace and the kept set is large."""
    total = 1000 if quick else 10_000
    n, k = 2000, 3
    law = ColumnLaw(LawFamily.DSU_SYMMETRIC, k=k)
    sigma = law.sigma()
    traces = big = contraction = 0
    chunk = 500
    for m in (1, 2, 3):
        per_m = total // 3 + (1 if m <= total % 3 else 0)
        done = 0
        while done < per_m:
            T = min(chunk, per_m - done)
            g = _rng(33, m, done)
            cols = g.integers(-k, k + 1, size=(T, m, n))
            seeds = [m * 10**6 + done + i for i in range(T)]
            trs = subsample(cols, np.zeros(m), sigma, defaults.KAPPA, seeds, scale=k)
            for tr in trs:
                traces += 1
                contraction += tr.contraction_holds()
                big += len(tr.selected) >= n / 8
            done += T
    return [
        CheckResult(3, "subsample-contraction", contraction == traces, f"{contraction}/{traces} traces exact"),
        CheckResult(3, "subsample-size", big >= 0.99 * traces, f"|S| >= n/8 on {big}/{traces}"),
    ]


def random_lp(g: np.random.Generator, m: int, n: int):
    A = g.uniform(-1, 1, size=(m, n))
    c = g.uniform(-10, 10, size=n)
    if g.random() < 0.5:
        b = g.uniform(0, n / 4, size=m)
    else:
        x0 = g.random(n)
        b = A @ x0 + g.uniform(0, 1, size=m)
    return A, b, c


@_timed
def suite_lp(quick: bool = False) -> list[CheckResult]:
    """Duality, slackness and basic structure on random LPs; vertex enumeration on tiny ones."""
    N = 200 if quick else 1000
    tol = defaults.TOL
    dual_bad = cs_bad = frac_bad = hi_bad = 0
    worst_dual = 0.0
    for i in range(N):
        g = _rng(44, i)
        m = int(g.integers(1, 6))
        n = int(g.integers(1, 201))
        A, b, c = random_lp(g, m, n)
        sol = solution_from_arrays(A, b, c)
        dv = dual_value_arrays(sol.u_star, A, b, c)
        gap = abs(dv - sol.value)
        worst_dual = max(worst_dual, gap)
        dual_bad += gap > defaults.TOL_DUALITY
        slack = b - A @ sol.x_star
        rc = sol.reduced_costs
        x = sol.x_star
        ok = (np.all(np.abs(slack[sol.u_star > tol]) <= 1e-8) and np.all(slack >= -1e-8)
              and np.all(rc[x > tol] <= 1e-8) and np.all(rc[x < 1 - tol] >= -1e-8))
        cs_bad += not ok
        frac_bad += len(sol.frac_idx) > m
        if i < 100:
            ref = linprog(-c, A_ub=A, b_ub=b, bounds=(0, 1), method="highs")
            hi_bad += abs(-ref.fun - sol.value) > 1e-7
    V = 50 if quick else 200
    vert_bad = 0
    worst_v = 0.0
    for i in range(V):
        g = _rng(45, i)
        m = int(g.integers(1, 3))
        n = int(g.integers(1, 11))
        A, b, c = random_lp(g, m, n)
        sol = solution_from_arrays(A, b, c)
        ref = lp_vertex_value(A, b, c)
        d = abs(ref - sol.value)
        worst_v = max(worst_v, d)
        vert_bad += d > 1e-9
    return [
        CheckResult(4, "lp-strong-duality", dual_bad == 0, f"{N - dual_bad}/{N}, worst {worst_dual:.2e}"),
        CheckResult(4, "lp-complementary-slackness", cs_bad == 0, f"{N - cs_bad}/{N}"),
        CheckResult(4, "lp-basic-structure", frac_bad == 0, f"|frac| <= m on {N - frac_bad}/{N}"),
        CheckResult(4, "lp-vertex-enumeration", vert_bad == 0 and hi_bad == 0,
                    f"{V - vert_bad}/{V} match, worst {worst_v:.2e}; HiGHS cross-check mismatches {hi_bad}"),
    ]


@_timed
def suite_props(quick: bool = False) -> list[CheckResult]:
    """Dual norm bounds on the stated corpora."""
    S = 20 if quick else 100
    ok_c = ok_p = 0
    u2 = []
    u1 = []
    n0 = []
    for s in range(S):
        inst = generate("dsu", 2000, 2, 3, seed=s)
        sol = solve_lp(inst)
        rep = check_solution_props(sol, inst)
        ok_c += rep.u_ok
        u2.append(rep.u_norm2)
        n0.append(rep.n0_frac)
        pk = generate("packing", 2000, 2, 3, beta=0.1, seed=s)
        psol = solve_lp(pk)
        prep = check_solution_props(psol, pk)
        ok_p += prep.u_ok
        u1.append(prep.u_norm1)
    return [
        CheckResult(5, "centered-dual-norm", ok_c >= 0.99 * S,
                    f"||u*||_2 <= 32 on {ok_c}/{S} (max {max(u2):.3g}; min |N0|/n {min(n0):.3f})"),
        CheckResult(5, "packing-dual-norm", ok_p >= 0.99 * S, f"||u*||_1 <= 60 on {ok_p}/{S} (max {max(u1):.3g})"),
    ]


def _repair(inst, seed):
    if inst.model.value == "packing":
        return repair_packing(inst, None, seed)
    return repair_centered(inst, None, None, seed)


def _exact_feasible(inst, x) -> bool:
    return bool(np.all(inst.A_num @ x.astype(np.int64) <= inst.b_num))


@_timed
def suite_soundness(quick: bool = False) -> list[CheckResult]:
    """Every successful certificate is feasible and its bound dominates the exact gap."""
    want = 30 if quick else 100
    checked = violations = identity_bad = infeasible = 0
    attempts = 0
    models = [("dsu", None), ("packing", 0.1)]
    while checked < want and attempts < 5 * want:
        model, beta = models[attempts % 2]
        g = _rng(66, attempts)
        n = int(g.integers(14, 26))
        inst = generate(model, n, 2, 3, beta=beta, seed=attempts)
        attempts += 1
        try:
            cert = _repair(inst, attempts)
        except Exception:
            continue
        if not cert.ok:
            continue
        if not _exact_feasible(inst, cert.x_final):
            infeasible += 1
        dv_minus = cert.dual_value - float(inst.c @ cert.x_final)
        identity_bad += abs(dv_minus - cert.gap_upper) > 1e-9
        val_ip, _ = brute_force_ip(inst)
        ipgap = solve_lp(inst).value - val_ip
        violations += ipgap > cert.gap_upper + 1e-9
        checked += 1
    large = 10 if quick else 30
    big_ok = big_runs = 0
    for s in range(large):
        for model, beta in models:
            inst = generate(model, 1000, 2, 3, beta=beta, seed=10_000 + s)
            cert = _repair(inst, s)
            if cert.ok:
                big_runs += 1
                big_ok += _exact_feasible(inst, cert.x_final) and abs(
                    cert.dual_value - float(inst.c @ cert.x_final) - cert.gap_upper) <= 1e-9
    return [
        CheckResult(6, "certificate-feasible-and-identity",
                    infeasible == 0 and identity_bad == 0 and big_ok == big_runs,
                    f"small: {checked} certificates, {infeasible} infeasible, {identity_bad} identity misses; "
                    f"n=1000: {big_ok}/{big_runs}"),
        CheckResult(6, "exact-gap-below-bound", violations == 0 and checked >= want,
                    f"{violations} violations over {checked} brute-forced instances ({attempts} attempts)"),
    ]


def gap_scaling(model: str, n_list, seeds: int, beta=None):
    rows = []
    for n in n_list:
        gaps = []
        ok = 0
        for s in range(seeds):
            inst = generate(model, n, 2, 3, beta=beta, seed=s)
            rep = measure_gap(inst, None, s, exact_upto=0)
            if rep.feasible:
                ok += 1
                gaps.append(rep.gap_upper)
        med = float(np.median(gaps)) if gaps else float("nan")
        rows.append((n, ok, med, med * n / math.log(n) ** 2))
    return rows


@_timed
def suite_scaling(quick: bool = False) -> list[CheckResult]:
    """Success rate and flatness of ``median gap * n / log^2 n``."""
    n_list = [500, 1000, 2000, 4000]
    seeds = 10 if quick else 30
    out = []
    for model, beta in (("dsu", None), ("packing", 0.1)):
        rows = gap_scaling(model, n_list, seeds, beta)
        norm_ = [r[3] for r in rows]
        succ = all(r[1] >= 0.9 * seeds for r in rows)
        flat = all(np.isfinite(norm_)) and min(norm_) > 0 and max(norm_) / min(norm_) <= 4.0
        detail = "; ".join(f"n={r[0]}: {r[1]}/{seeds} ok, norm {r[3]:.3g}" for r in rows)
        out.append(CheckResult(7, f"gap-scaling-{model}", succ and flat, detail))
    return out


def _dsu_small(n: int, seed: int):
    g = _rng(88, n, seed)
    if seed % 2:
        b = g.integers(0, max(1, n // 3), size=2)
        return generate("dsu", n, 2, 3, b_spec=b, seed=seed)
    return generate("dsu", n, 2, 3, seed=seed)


@_timed
def suite_bnb(quick: bool = False) -> list[CheckResult]:
    """Optimality, knapsack counting, the tree-size bound and the scaling sweep."""
    S = 40 if quick else 200
    opt_bad = 0
    for s in range(S):
        g = _rng(80, s)
        n = int(g.integers(8, 21))
        inst = _dsu_small(n, s)
        res = best_bound_solve(inst, debug=True)
        val, _ = brute_force_ip(inst)
        opt_bad += res.status is not Status.OPTIMAL or abs(res.opt_value - val) > 1e-9
    K = 30 if quick else 100
    kc_bad = 0
    for i in range(K):
        g = _rng(81, i)
        n = int(g.integers(1, 21))
        w = g.exponential(size=n) * (g.random(n) < 0.9)
        G = float(g.uniform(0, w.sum() + 0.1))
        kc_bad += knapsack_count(w, G).count != brute_force_knapsack_count(w, G)
    B = 30 if quick else 100
    bound_bad = 0
    worst_ratio = 0.0
    for s in range(B):
        g = _rng(82, s)
        n = int(g.integers(10, 41))
        inst = _dsu_small(n, s)
        rep = tree_bound_check(inst, check=False)
        bound_bad += not rep.holds
        worst_ratio = max(worst_ratio, rep.nodes_explored / rep.bound)
    seeds = 10 if quick else 30
    rows = sweep_tree_sizes({"model": "dsu", "m": 2, "k": 3}, [20, 40, 80, 160], seeds)
    exps = [r.exponent for r in rows]
    max_exps = [math.log(max(r.max_nodes, 1)) / math.log(r.n) for r in rows]
    blowup = max(max_exps) > defaults.TREE_EXPONENT_MAX or any(r.node_limit_hits for r in rows)
    return [
        CheckResult(8, "bnb-optimality", opt_bad == 0, f"{S - opt_bad}/{S} match brute force"),
        CheckResult(8, "knapsack-count", kc_bad == 0, f"{K - kc_bad}/{K} match brute force"),
        CheckResult(8, "tree-size-bound", bound_bad == 0,
                    f"{B - bound_bad}/{B} within 2n|K|+1 (largest nodes/bound {worst_ratio:.3g})"),
        CheckResult(8, "tree-size-scaling", not blowup,
                    "median e(n) " + ", ".join(f"{e:.2f}" for e in exps) + "; max e(n) "
                    + ", ".join(f"{e:.2f}" for e in max_exps) + f" (limit {defaults.TREE_EXPONENT_MAX})"),
    ]


@_timed
def suite_ac(quick: bool = False) -> list[CheckResult]:
    """Exact certificates for the integer interval law and admissibility of the logconcave families."""
    out = []
    worst = []
    for a in (-1, 0):
        for m in (1, 2):
            cert = ac_certify(ColumnLaw(LawFamily.DISCRETE_INTERVAL, k=2, a=a), m)
            worst.append((a, m, cert.worst_prob))
    out.append(CheckResult(9, "ac-discrete-interval", all(w[2] >= 0.02 for w in worst),
                           ", ".join(f"a={a} m={m}: {p:.3f}" for a, m, p in worst)))
    trials = 20_000 if quick else 100_000
    reps = []
    for fam in (ColumnLaw(LawFamily.UNIFORM_CUBE), ColumnLaw(LawFamily.UNIFORM_BALL),
                ColumnLaw(LawFamily.TRUNCATED_GAUSSIAN, radius=6.0)):
        for m in (1, 2, 3):
            reps.append((fam.tag(), m, grunbaum_check(fam, m, trials=trials, seed=m)))
    out.append(CheckResult(9, "grunbaum-admissible", all(r[2].ok for r in reps),
                           "min mass " + ", ".join(f"{t}/m{m} {r.min_mass:.3f}" for t, m, r in reps)))
    return out


DETERMINISM_TOML = """
[sweep]
kind = "gap"
model = "{model}"
m = 2
k = 3
{beta}
n_list = [60, 120]
seeds = 4

[pipeline]
mode = "filter"
"""


@_timed
def suite_determinism(quick: bool = False) -> list[CheckResult]:
    """The same sweep, run serially and in parallel, gives byte-identical files."""
    from .cli import load_sweep_config, run_sweep

    same = True
    details = []
    with tempfile.TemporaryDirectory() as d:
        for model, beta in (("dsu", ""), ("packing", "beta = 0.1")):
            cfg_path = Path(d) / f"{model}.toml"
            cfg_path.write_text(DETERMINISM_TOML.format(model=model, beta=beta))
            outs = []
            for jobs in (1, 2, 1):
                out = Path(d) / f"{model}-{jobs}-{len(outs)}.csv"
                cfg = load_sweep_config(cfg_path)
                run_sweep(cfg, out, jobs=jobs)
                outs.append(out.read_bytes())
            ok = all(o == outs[0] for o in outs)
            same &= ok
            details.append(f"{model}: {len(outs[0])} bytes, {'identical' if ok else 'DIFFERENT'}")
        tree = Path(d) / "tree.toml"
        tree.write_text(DETERMINISM_TOML.format(model="dsu", beta="").replace('kind = "gap"', 'kind = "tree"'))
        outs = []
        for jobs in (1, 3):
            out = Path(d) / f"tree-{jobs}.csv"
            run_sweep(load_sweep_config(tree), out, jobs=jobs)
            outs.append(out.read_bytes())
        same &= outs[0] == outs[1]
        details.append(f"tree: {'identical' if outs[0] == outs[1] else 'DIFFERENT'}")
    return [CheckResult(10, "sweep-determinism", same, "; ".join(details))]


SUITES = {
    "fourier": suite_fourier,
    "hitting": suite_hitting,
    "subsample": suite_subsample,
    "lp": suite_lp,
    "props": suite_props,
    "soundness": suite_soundness,
    "scaling": suite_scaling,
    "bnb": suite_bnb,
    "ac": suite_ac,
    "determinism": suite_determinism,
}


def run_suites(names=None, quick: bool = False, echo=print) -> list[CheckResult]:
    names = list(SUITES) if not names or names == ["all"] else names
    results = []
    for name in names:
        for r in SUITES[name](quick=quick):
            echo(r.line())
            results.append(r)
    return results
