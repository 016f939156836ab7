"""Best-bound-first branch-and-bound for 0/1 programs, and the knapsack count bounding its tree."""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import defaults
from .instance import IpInstance, generate
from .simplex import Infeasible, LpSolution, solution_from_arrays, solve_lp

log = logging.getLogger(__name__)


class Status(str, Enum):
    OPTIMAL = "optimal"
    NODE_LIMIT = "node_limit"


@dataclass
class BnbResult:
    opt_value: float
    incumbent: np.ndarray | None
    nodes_explored: int
    nodes_pruned: int
    status: Status
    popped_bounds: list[float] = field(default_factory=list, repr=False)
    pruned: list[tuple[np.ndarray, np.ndarray, float]] = field(default_factory=list, repr=False)


@dataclass
class _Node:
    bound: float
    fix0: np.ndarray
    fix1: np.ndarray
    x: np.ndarray  # full-length LP solution


def _node_lp(instance: IpInstance, fix0, fix1, tol):
    """LP bound of the subproblem with the given fixings, or None if infeasible."""
    n = instance.n
    free = np.ones(n, dtype=bool)
    free[fix0] = False
    free[fix1] = False
    A, c = instance.A, instance.c
    b = instance.b - A[:, fix1].sum(axis=1)
    base = float(c[fix1].sum())
    x = np.zeros(n)
    x[fix1] = 1.0
    F = np.flatnonzero(free)
    if len(F) == 0:
        if instance.discrete:
            ok = np.all(instance.A_num[:, fix1].sum(axis=1) <= instance.b_num)
        else:
            ok = np.all(b >= -tol)
        return (base, x) if ok else None
    try:
        sol = solution_from_arrays(A[:, F], b, c[F], tol=tol)
    except Infeasible:
        return None
    x[F] = sol.x_star
    return base + sol.value, x


def _is_integral(x: np.ndarray) -> bool:
    return bool(np.all((x == 0.0) | (x == 1.0)))


def _exact_feasible(instance: IpInstance, x: np.ndarray) -> bool:
    xi = x.astype(np.int64)
    if instance.discrete:
        return bool(np.all(instance.A_num @ xi <= instance.b_num))
    return bool(np.all(instance.A @ xi <= instance.b + 1e-9))


def best_bound_solve(instance: IpInstance, node_limit: int = defaults.NODE_LIMIT, *, tol: float = defaults.TOL,
                     debug: bool = False, audit: bool = False) -> BnbResult:
    """Expand the open node with the largest LP bound until no bound beats the incumbent.

    Every node whose LP is solved counts toward ``nodes_explored``, so the
    count is the size of the tree. Branching takes the most fractional
    variable, lowest index on ties; open nodes with equal bounds leave the
    queue in creation order. With ``audit`` the fixings of every pruned node
    are kept together with the incumbent value at prune time.
    """
    n = instance.n
    inc_val, inc_x = -math.inf, None
    explored = pruned = 0
    pruned_log = []
    popped = []
    heap: list = []
    counter = 0

    def consider(fix0, fix1):
        nonlocal explored, pruned, inc_val, inc_x, counter
        explored += 1
        res = _node_lp(instance, fix0, fix1, tol)
        if res is None:
            pruned += 1
            if audit:
                pruned_log.append((fix0, fix1, -math.inf))
            return
        bound, x = res
        if _is_integral(x):
            if _exact_feasible(instance, x):
                val = float(instance.c @ x)
                if val > inc_val:
                    inc_val, inc_x = val, x.astype(np.int64)
            else:
                pruned += 1
            return
        if bound <= inc_val + 1e-9:
            pruned += 1
            if audit:
                pruned_log.append((fix0, fix1, inc_val))
            return
        heapq.heappush(heap, (-bound, counter, _Node(bound, fix0, fix1, x)))
        counter += 1

    empty = np.array([], dtype=np.int64)
    consider(empty, empty)
    status = Status.OPTIMAL
    while heap:
        negb, _, node = heapq.heappop(heap)
        if node.bound <= inc_val + 1e-9:
            pruned += 1 + len(heap)
            if audit:
                pruned_log.append((node.fix0, node.fix1, inc_val))
                pruned_log.extend((nd.fix0, nd.fix1, inc_val) for _, _, nd in heap)
            heap.clear()
            break
        if debug:
            assert not popped or node.bound <= popped[-1] + 1e-7, "best-bound order violated"
        popped.append(node.bound)
        if explored + 2 > node_limit:
            status = Status.NODE_LIMIT
            break
        frac = np.abs(node.x - 0.5)
        frac[(node.x == 0.0) | (node.x == 1.0)] = np.inf
        j = int(np.argmin(frac))
        consider(np.append(node.fix0, j), node.fix1)
        consider(node.fix0, np.append(node.fix1, j))
    return BnbResult(inc_val, inc_x, explored, pruned, status, popped, pruned_log)


class TimeBudget(RuntimeError):
    pass


@dataclass
class KnapsackCount:
    weights: np.ndarray
    budget: float
    count: int
    partial: bool = False

    @property
    def bound_2nK1(self) -> int:
        return 2 * len(self.weights) * self.count + 1


def knapsack_count(weights, G: float, node_budget: int = defaults.KNAPSACK_NODE_BUDGET) -> KnapsackCount:
    """Number of 0/1 vectors with ``sum x_i w_i <= G``, as an exact integer.

    Weights are sorted ascending so that a weight above the remaining budget
    closes the branch (only the all-zero completion fits) and a suffix sum
    within budget contributes every completion at once. When the node budget
    runs out the count so far is returned with ``partial`` set.
    """
    w = np.sort(np.asarray(weights, dtype=float))
    if np.any(w < 0) or G < 0:
        raise ValueError("weights and budget must be nonnegative")
    n = len(w)
    cap = G * (1 + 1e-9) + 1e-12
    suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    total = 0
    visits = 0
    stack = [(0, cap)]
    partial = False
    while stack:
        i, rem = stack.pop()
        visits += 1
        if visits > node_budget:
            partial = True
            break
        if i == n or suffix[i] <= rem:
            total += 1 << (n - i)
        elif w[i] > rem:
            total += 1
        else:
            stack.append((i + 1, rem - w[i]))
            stack.append((i + 1, rem))
    if partial:
        log.warning("knapsack count stopped after %d nodes; %d is a lower bound", node_budget, total)
    return KnapsackCount(np.asarray(weights, dtype=float), float(G), int(total), partial)


@dataclass
class TreeBoundReport:
    n: int
    nodes_explored: int
    gap: float
    count: int
    bound: int
    status: Status
    partial: bool

    @property
    def holds(self) -> bool:
        return self.nodes_explored <= self.bound


def tree_bound_check(instance: IpInstance, sol: LpSolution | None = None, gap: float | None = None,
                     node_limit: int = defaults.NODE_LIMIT, *, check: bool = True) -> TreeBoundReport:
    """Compare the tree size with ``2 n |K| + 1``; ``gap`` defaults to the exact gap."""
    sol = sol if sol is not None else solve_lp(instance)
    res = best_bound_solve(instance, node_limit)
    if gap is None:
        if res.status is not Status.OPTIMAL:
            raise ValueError("exact gap needs an optimal tree; pass an upper bound instead")
        gap = max(0.0, sol.value - res.opt_value)
    kc = knapsack_count(np.abs(sol.reduced_costs), gap)
    rep = TreeBoundReport(instance.n, res.nodes_explored, float(gap), kc.count, kc.bound_2nK1, res.status,
                          kc.partial)
    if check and res.status is Status.OPTIMAL and not kc.partial:
        assert rep.holds, f"tree of {rep.nodes_explored} nodes exceeds the counting bound {rep.bound}"
    return rep


@dataclass
class ScalingRow:
    n: int
    median_nodes: float
    max_nodes: int
    exponent: float
    node_limit_hits: int
    runs: int


def _tree_cell(args):
    model, n, m, k, beta, seed, node_limit = args
    inst = generate(model, n, m, k, beta=beta, seed=seed)
    res = best_bound_solve(inst, node_limit)
    return n, seed, res.nodes_explored, res.status


def sweep_tree_sizes(model_params: dict, n_list, seeds, node_limit: int = defaults.NODE_LIMIT,
                     executor=None) -> list[ScalingRow]:
    """Median and maximum tree size per ``n`` with ``e(n) = log(median) / log(n)``.

    Runs that hit the node limit are counted but left out of the statistics.
    """
    mp = dict(model_params)
    model = mp.get("model", "dsu")
    m, k, beta = mp.get("m", 2), mp.get("k", 3), mp.get("beta")
    seeds = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    cells = [(model, n, m, k, beta, s, node_limit) for n in n_list for s in seeds]
    mapper = executor.map if executor is not None else map
    results = sorted(mapper(_tree_cell, cells), key=lambda r: (r[0], r[1]))
    rows = []
    for n in n_list:
        sizes = [r[2] for r in results if r[0] == n and r[3] is Status.OPTIMAL]
        hits = sum(1 for r in results if r[0] == n and r[3] is not Status.OPTIMAL)
        med = float(np.median(sizes)) if sizes else float("nan")
        e = math.log(med) / math.log(n) if sizes and med > 0 else float("nan")
        rows.append(ScalingRow(n, med, max(sizes) if sizes else 0, e, hits, len(seeds)))
    return rows
