"""Certified integrality-gap bounds for random 0/1 integer programs."""

from .bnb import BnbResult, best_bound_solve, knapsack_count, tree_bound_check
from .discrepancy import (cardinality_band, hit_target_approx, hit_target_exact, pmf_convolution, pmf_fourier,
                          subsample)
from .instance import ColumnLaw, IpInstance, LawFamily, Model, generate, load, loads, save
from .rounding import Mode, SelectionConfig, measure_gap, repair_centered, repair_packing
from .simplex import LpSolution, dual_value, gap_formula, solve_lp

__version__ = "0.1.0"

__all__ = [
    "BnbResult", "best_bound_solve", "knapsack_count", "tree_bound_check",
    "cardinality_band", "hit_target_approx", "hit_target_exact", "pmf_convolution", "pmf_fourier", "subsample",
    "ColumnLaw", "IpInstance", "LawFamily", "Model", "generate", "load", "loads", "save",
    "Mode", "SelectionConfig", "measure_gap", "repair_centered", "repair_packing",
    "LpSolution", "dual_value", "gap_formula", "solve_lp",
]
