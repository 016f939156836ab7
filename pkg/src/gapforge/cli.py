"""Command-line entry point.

Exit codes: 0 success, 1 a verification check failed, 2 bad input,
3 a memory, node or iteration budget ran out.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import defaults
from .bnb import Status, best_bound_solve, tree_bound_check
from .discrepancy import BoxOverflow, NotFound, hit_target_approx, hit_target_exact, pmf_convolution, pmf_fourier
from .instance import InstanceError, generate, load, save
from .rounding import Mode, SelectionConfig, measure_gap
from .simplex import Infeasible, IterationLimit, check_solution_props, solve_lp

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("gapforge")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

CSV_VERSION = "# gapforge-csv v1"
GAP_COLUMNS = ["model", "m", "n", "k", "beta", "seed", "val_lp", "u_norm", "n0_frac", "z_size", "t_size",
               "residual", "feasible", "gap_upper", "ipgap_exact", "config_hash", "error"]
TREE_COLUMNS = ["model", "m", "n", "k", "beta", "seed", "nodes_explored", "nodes_pruned", "status", "opt_value",
                "config_hash"]


class BudgetError(RuntimeError):
    pass


def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return defaults.FLOAT_FMT % float(v)
    return str(v)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"cannot serialise {type(o).__name__}")


# ---------------------------------------------------------------- sweep configuration

@dataclass
class SweepConfig:
    kind: str = "gap"
    model: str = "dsu"
    m: int = 2
    k: int = 3
    beta: float | None = None
    b: object = None
    family: str = "cube"
    n_list: list = field(default_factory=lambda: [500, 1000, 2000, 4000])
    seeds: list = field(default_factory=lambda: list(range(30)))
    node_limit: int = defaults.NODE_LIMIT
    exact_upto: int = defaults.BRUTE_FORCE_N
    pipeline: dict = field(default_factory=lambda: SelectionConfig().to_dict())

    def resolved(self) -> dict:
        d = asdict(self)
        if self.model == "packing" and self.beta is None:
            d["beta"] = 0.1
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"), default=_json_default)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def sweep_config_from_dict(raw: dict) -> SweepConfig:
    sw = dict(raw.get("sweep", {}))
    pipe = dict(raw.get("pipeline", {}))
    unknown = set(sw) - set(SweepConfig.__dataclass_fields__) - {"out", "jobs"}
    if unknown:
        raise InstanceError(f"unknown sweep keys: {sorted(unknown)}")
    seeds = sw.pop("seeds", 30)
    sw.pop("out", None)
    sw.pop("jobs", None)
    seeds = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
    try:
        sel = SelectionConfig(**pipe)
    except TypeError as e:
        raise InstanceError(f"bad pipeline section: {e}") from None
    cfg = SweepConfig(seeds=seeds, pipeline=sel.to_dict(), **sw)
    if cfg.kind not in ("gap", "tree"):
        raise InstanceError(f"sweep kind must be 'gap' or 'tree', got {cfg.kind!r}")
    cfg.n_list = [int(n) for n in cfg.n_list]
    return cfg


def load_sweep_config(path) -> SweepConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return sweep_config_from_dict(raw)


def _gap_cell(args) -> list:
    cfg_d, n, seed, chash = args
    inst = generate(cfg_d["model"], n, cfg_d["m"], cfg_d["k"], beta=cfg_d["beta"], b_spec=cfg_d["b"], seed=seed,
                    family=cfg_d["family"])
    rep = measure_gap(inst, SelectionConfig(**cfg_d["pipeline"]), seed, exact_upto=cfg_d["exact_upto"])
    row = asdict(rep)
    row["config_hash"] = chash
    return [row[c] for c in GAP_COLUMNS]


def _tree_cell(args) -> list:
    cfg_d, n, seed, chash = args
    inst = generate(cfg_d["model"], n, cfg_d["m"], cfg_d["k"], beta=cfg_d["beta"], b_spec=cfg_d["b"], seed=seed,
                    family=cfg_d["family"])
    res = best_bound_solve(inst, cfg_d["node_limit"])
    return [inst.model.value, inst.m, n, inst.k, inst.beta, seed, res.nodes_explored, res.nodes_pruned,
            res.status.value, res.opt_value if res.incumbent is not None else None, chash]


def sweep_rows(cfg: SweepConfig, jobs: int = 1) -> tuple[list[str], list[list]]:
    """All rows of a sweep, ordered by ``(n, seed)`` regardless of ``jobs``."""
    d = cfg.resolved()
    chash = cfg.config_hash()
    cells = [(d, n, s, chash) for n in sorted(set(cfg.n_list)) for s in sorted(set(cfg.seeds))]
    fn, cols = (_gap_cell, GAP_COLUMNS) if cfg.kind == "gap" else (_tree_cell, TREE_COLUMNS)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(fn, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    else:
        rows = [fn(c) for c in cells]
    return cols, rows


def format_csv(cols, rows) -> str:
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([fmt_value(v) for v in r])
    return buf.getvalue()


def run_sweep(cfg: SweepConfig, out, jobs: int = 1) -> Path:
    """Write the CSV and its ``.json`` sidecar holding the resolved configuration."""
    out = Path(out)
    cols, rows = sweep_rows(cfg, jobs)
    out.write_text(format_csv(cols, rows))
    side = {"config_hash": cfg.config_hash(), "config": cfg.resolved(), "csv_version": CSV_VERSION[2:]}
    Path(str(out) + ".json").write_text(json.dumps(side, sort_keys=True, indent=2, default=_json_default) + "\n")
    return out


# ---------------------------------------------------------------- commands

def _b_spec(text):
    if text is None or text in ("zero", "mid"):
        return text
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InstanceError(f"--b must be 'zero', 'mid' or comma-separated numbers, got {text!r}") from None


def _selection(args) -> SelectionConfig:
    kw = {"mode": Mode(args.mode)}
    for name in ("delta_c", "gamma_c", "p", "tol"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    return SelectionConfig(**kw)


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_gen(args) -> int:
    inst = generate(args.model, args.n, args.m, args.k, beta=args.beta, b_spec=_b_spec(args.b), seed=args.seed,
                    family=args.family)
    if args.out:
        save(inst, args.out)
    else:
        from .instance import dumps

        sys.stdout.write(dumps(inst))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load(args.instance)
    sol = solve_lp(inst)
    props = check_solution_props(sol, inst)
    _emit({"value": sol.value, "x_star": sol.x_star, "u_star": sol.u_star, "frac_idx": sol.frac_idx,
           "n0": len(sol.N0), "n1": len(sol.N1), "iterations": sol.iterations, "props": asdict(props)}, args.out)
    return EXIT_OK


def cmd_gap(args) -> int:
    inst = load(args.instance)
    rep = measure_gap(inst, _selection(args), args.seed)
    row = asdict(rep)
    row["config_hash"] = hashlib.sha256(
        json.dumps(_selection(args).to_dict(), sort_keys=True, default=_json_default).encode()).hexdigest()[:16]
    text = format_csv(GAP_COLUMNS, [[row[c] for c in GAP_COLUMNS]])
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if rep.error and rep.error.startswith(("BoxOverflow", "IterationLimit")):
        return EXIT_BUDGET
    return EXIT_OK


def cmd_bnb(args) -> int:
    inst = load(args.instance)
    res = best_bound_solve(inst, args.node_limit)
    out = {"opt_value": res.opt_value if res.incumbent is not None else None, "incumbent": res.incumbent,
           "nodes_explored": res.nodes_explored, "nodes_pruned": res.nodes_pruned, "status": res.status.value}
    if res.status is Status.OPTIMAL and res.incumbent is not None and args.bound:
        rep = tree_bound_check(inst, node_limit=args.node_limit, check=False)
        out["tree_bound"] = asdict(rep)
        out["tree_bound"]["holds"] = rep.holds
    _emit(out, args.out)
    return EXIT_OK if res.status is Status.OPTIMAL else EXIT_BUDGET


def _matrix(text: str) -> np.ndarray:
    try:
        A = np.array(json.loads(text))
    except json.JSONDecodeError as e:
        raise InstanceError(f"--columns is not JSON: {e}") from None
    return np.atleast_2d(A)


def cmd_disc(args) -> int:
    A = _matrix(args.columns)
    if args.action in ("hit", "pmf", "fourier") and not np.all(A == np.round(A)):
        raise InstanceError("integer columns required; use 'approx' for real columns")
    band = tuple(int(v) for v in args.band.split(",")) if args.band else None
    if args.action == "hit":
        t = np.array(json.loads(args.target), dtype=np.int64)
        res = hit_target_exact(A.astype(np.int64), args.k, t, band)
        if isinstance(res, NotFound):
            _emit({"found": False, "reason": res.reason}, args.out)
        else:
            _emit({"found": True, "subset": res.subset, "achieved": res.achieved}, args.out)
        return EXIT_OK
    if args.action == "approx":
        t = np.array(json.loads(args.target), dtype=float)
        res = hit_target_approx(A.astype(float), t, band, args.tol or defaults.APPROX_TOL, seed=args.seed)
        _emit({"subset": res.subset, "residual": res.residual_norm, "status": res.status.value}, args.out)
        return EXIT_OK
    if args.action == "pmf":
        P = pmf_convolution(A.astype(np.int64), args.k, args.p)
        _emit({"offset": P.offset, "probabilities": P.probabilities, "mass": P.total_mass}, args.out)
        return EXIT_OK
    lam = np.array(json.loads(args.target), dtype=np.int64)
    val = pmf_fourier(A.astype(np.int64), args.k, args.p, lam, args.grid)
    _emit({"point": lam, "probability": val}, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suites

    names = args.suite or ["all"]
    bad = [s for s in names if s != "all" and s not in SUITES]
    if bad:
        raise InstanceError(f"unknown suite(s) {bad}; choose from {sorted(SUITES)}")
    results = run_suites(names, quick=args.quick)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    with open(args.config, "rb") as fh:
        raw = tomllib.load(fh).get("sweep", {})
    out = args.out or raw.get("out") or f"sweep-{cfg.config_hash()}.csv"
    jobs = args.jobs or int(raw.get("jobs", 1))
    run_sweep(cfg, out, jobs)
    print(f"wrote {out} ({cfg.config_hash()})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gapforge", description="Integrality gaps of random 0/1 programs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--model", choices=["dsu", "logconcave", "packing"], default="dsu")
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--beta", type=float)
    g.add_argument("--b", help="'zero', 'mid' or comma-separated real values")
    g.add_argument("--family", default="cube", help="logconcave family: cube, ball or tgauss")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve the LP relaxation")
    s.add_argument("instance")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("gap", help="run the rounding pipeline and report the certified gap")
    r.add_argument("instance")
    r.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.FILTER.value)
    r.add_argument("--delta-c", type=float)
    r.add_argument("--gamma-c", type=float)
    r.add_argument("--p", type=float)
    r.add_argument("--tol", type=float)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("-o", "--out")
    r.set_defaults(func=cmd_gap)

    b = sub.add_parser("bnb", help="solve exactly by best-bound branch-and-bound")
    b.add_argument("instance")
    b.add_argument("--node-limit", type=int, default=defaults.NODE_LIMIT)
    b.add_argument("--bound", action="store_true", help="also compare the tree with the counting bound")
    b.add_argument("-o", "--out")
    b.set_defaults(func=cmd_bnb)

    d = sub.add_parser("disc", help="subset-sum hitting and lattice distributions")
    d.add_argument("action", choices=["hit", "approx", "pmf", "fourier"])
    d.add_argument("--columns", required=True, help="JSON matrix, one row per coordinate")
    d.add_argument("--target", help="JSON vector (hit/approx target or fourier point)")
    d.add_argument("--k", type=int, default=1)
    d.add_argument("--p", type=float, default=0.5)
    d.add_argument("--band", help="cardinality band 'lo,hi'")
    d.add_argument("--tol", type=float)
    d.add_argument("--grid", type=int)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("-o", "--out")
    d.set_defaults(func=cmd_disc)

    v = sub.add_parser("verify", help="run acceptance suites")
    v.add_argument("--suite", action="append", help="suite name (repeatable); default all")
    v.add_argument("--quick", action="store_true", help="smaller sample sizes")
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="run a sweep described by a TOML file")
    w.add_argument("--config", required=True)
    w.add_argument("--jobs", type=int)
    w.add_argument("-o", "--out")
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "action", None) in ("hit", "approx", "fourier") and not args.target:
        ap.error("--target is required for this action")
    try:
        return args.func(args)
    except (InstanceError, ValueError, OSError, tomllib.TOMLDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (BoxOverflow, IterationLimit, BudgetError) as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except Infeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
