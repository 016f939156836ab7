import math
from fractions import Fraction

import numpy as np
import pytest

from gapforge.instance import ColumnLaw, LawFamily
from gapforge.stats import (ADMISSIBLE_MASS, AcMethod, BudgetExceeded, ac_certify, azuma_upper,
                            binomial_prefix_sum, chernoff_lower, chernoff_upper, dsu_moments, entropy,
                            grunbaum_check, khinchine_check, nu_grid, theta_grid)


def test_entropy_values():
    assert entropy(0.5) == pytest.approx(math.log(2))
    assert entropy(0.0) == entropy(1.0) == 0.0
    with pytest.raises(ValueError):
        entropy(1.5)


@pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3, 0.4, 0.5])
def test_binomial_prefix_bound(alpha):
    for n in range(1, 31):
        assert binomial_prefix_sum(n, alpha) <= math.exp(entropy(alpha) * n) * (1 + 1e-12)


def test_dsu_moments():
    assert dsu_moments(1)[0] == Fraction(2, 3)
    assert dsu_moments(3) == (Fraction(4, 9), Fraction(28, 81))
    for k in range(1, 101):
        m2, m4 = dsu_moments(k)
        assert m2 == Fraction(k + 1, 3 * k)
        assert m4 / m2**2 <= 2


def test_tail_bounds_are_probabilities():
    assert 0 < chernoff_lower(10, 0.5) < 1
    assert chernoff_upper(10, 0.5) > chernoff_lower(10, 0.5)
    assert azuma_upper(5, 10, 0.0) == 1.0


def test_khinchine_ratios():
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert khinchine_check(rng.normal(size=5), 2).holds


def test_grids():
    th = theta_grid(2)
    assert len(th) == 33 * 33 - 1
    assert not np.any(np.all(th == 0, axis=1))
    assert nu_grid(1).tolist() == [[1.0], [-1.0]]
    nu = nu_grid(3)
    assert np.allclose(np.linalg.norm(nu, axis=1), 1.0)


def test_three_point_example():
    law = ColumnLaw(LawFamily.DISCRETE_INTERVAL, k=2, a=-1)
    cert = ac_certify(law, 1, kappa_test=0.1, thetas=[[0.5]], nus=[[1.0]])
    assert cert.method is AcMethod.EXACT
    assert cert.worst_prob == pytest.approx(0.5)
    assert cert.passes


def test_zero_frequency_is_degenerate():
    law = ColumnLaw(LawFamily.DISCRETE_INTERVAL, k=2, a=-1)
    cert = ac_certify(law, 1, thetas=[[0.0]], nus=[[1.0]])
    assert cert.worst_prob == 0.0


def test_discrete_interval_certificates():
    for a in (-1, 0):
        assert ac_certify(ColumnLaw(LawFamily.DISCRETE_INTERVAL, k=2, a=a), 1).worst_prob == pytest.approx(0.5)
        assert ac_certify(ColumnLaw(LawFamily.DISCRETE_INTERVAL, k=2, a=a), 2).worst_prob == pytest.approx(1 / 3)


def test_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        ac_certify(ColumnLaw(LawFamily.DSU_SYMMETRIC, k=3), 3, budget=100)


def test_monte_carlo_needs_trials():
    with pytest.raises(ValueError):
        ac_certify(ColumnLaw(LawFamily.UNIFORM_CUBE), 2)
    cert = ac_certify(ColumnLaw(LawFamily.UNIFORM_CUBE), 2, trials=20_000)
    assert cert.method is AcMethod.MONTE_CARLO
    assert cert.std_error > 0
    assert cert.passes


@pytest.mark.parametrize("law", [ColumnLaw(LawFamily.UNIFORM_CUBE), ColumnLaw(LawFamily.UNIFORM_BALL),
                                 ColumnLaw(LawFamily.TRUNCATED_GAUSSIAN, radius=6.0)])
def test_logconcave_families_are_admissible(law):
    for m in (1, 2, 3):
        rep = grunbaum_check(law, m, trials=50_000, seed=m)
        assert rep.ok
        assert rep.min_mass >= 1 / math.e - 3 * rep.std_error


def test_grunbaum_on_a_bare_sampler():
    rep = grunbaum_check(lambda rng, size: rng.exponential(size=size), 1, trials=200_000, mean=[1.0])
    assert rep.min_mass == pytest.approx(math.exp(-1), abs=0.01)
    assert rep.min_mass >= ADMISSIBLE_MASS
    with pytest.raises(ValueError):
        grunbaum_check(lambda rng, size: rng.exponential(size=size), 1)
