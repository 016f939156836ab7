import numpy as np
import pytest
from hypothesis import given, strategies as st

from gapforge.instance import (ColumnLaw, DimensionMismatch, DomainError, FormatError, LawFamily, Model, dumps,
                               gen_centered_dsu, gen_centered_logconcave, gen_packing, generate, load, loads,
                               packing_rhs_bounds, save)


def test_small_dsu_instance_domain():
    inst = gen_centered_dsu(4, 1, 1, "zero", seed=7)
    assert inst.A_num.shape == (1, 4)
    assert set(np.unique(inst.A_num)) <= {-1, 0, 1}
    assert inst.b_num.tolist() == [0]


def test_dsu_second_moment_matches_closed_form():
    # E[U^2] = (k+1)/(3k) = 4/9 at k = 3
    k = 3
    law = ColumnLaw(LawFamily.DSU_SYMMETRIC, k=k)
    rng = np.random.Generator(np.random.Philox(key=[1, 2]))
    x = law.sample(rng, 1_000_000, 1).ravel()
    sq = x**2
    se = sq.std() / np.sqrt(len(sq))
    assert abs(sq.mean() - 4 / 9) <= 3 * se
    assert law.variance() == pytest.approx((k + 1) / (3 * k))


def test_same_seed_identical_bytes():
    a = dumps(generate("dsu", 50, 2, 3, seed=11))
    b = dumps(generate("dsu", 50, 2, 3, seed=11))
    assert a == b
    assert dumps(generate("dsu", 50, 2, 3, seed=12)) != a


def test_columns_do_not_depend_on_n():
    small = generate("packing", 40, 2, 3, beta=0.1, seed=5)
    big = generate("packing", 90, 2, 3, beta=0.1, seed=5)
    assert np.array_equal(small.A_num, big.A_num[:, :40])
    assert np.array_equal(small.c, big.c[:40])


def test_cube_is_isotropic():
    rng = np.random.Generator(np.random.Philox(key=[3, 3]))
    X = ColumnLaw(LawFamily.UNIFORM_CUBE).sample(rng, 100_000, 2)
    assert np.all(np.abs(X.var(axis=0) - 1.0) <= 0.02)


def test_truncated_gaussian_respects_radius():
    rng = np.random.Generator(np.random.Philox(key=[4, 4]))
    X = ColumnLaw(LawFamily.TRUNCATED_GAUSSIAN, radius=6.0).sample(rng, 200_000, 3)
    assert np.linalg.norm(X, axis=1).max() <= 6.0


def test_ball_is_centered_and_isotropic():
    rng = np.random.Generator(np.random.Philox(key=[5, 5]))
    X = ColumnLaw(LawFamily.UNIFORM_BALL).sample(rng, 1_000_000, 2)
    assert np.linalg.norm(X.mean(axis=0)) <= 0.01
    assert np.all(np.abs(X.var(axis=0) - 1.0) <= 0.01)
    assert np.linalg.norm(X, axis=1).max() <= np.sqrt(4.0)


def test_packing_mid_rhs():
    inst = gen_packing(100, 2, 3, 0.1, "mid", seed=0)
    assert inst.b_num.tolist() == [75, 75]
    assert packing_rhs_bounds(100, 3, 0.1) == (31, 119)
    assert inst.A_num.min() >= 1 and inst.A_num.max() <= 3


def test_packing_objective_mean():
    inst = gen_packing(200_000, 1, 3, 0.1, seed=1)
    assert abs(inst.c.mean() - 1.0) <= 0.01
    assert inst.c.min() >= 0


def test_packing_rejects_bad_parameters():
    with pytest.raises(ValueError):
        gen_packing(100, 2, 3, 0.3)
    with pytest.raises(ValueError):
        gen_packing(100, 2, 2, 0.1)
    with pytest.raises(DomainError):
        gen_packing(100, 2, 3, 0.1, b_spec=[5.0, 5.0])


def test_explicit_rhs_must_be_integral_over_k():
    inst = gen_centered_dsu(10, 2, 3, b_spec=[1.0, 2 / 3])
    assert inst.b_num.tolist() == [3, 2]
    with pytest.raises(DomainError):
        gen_centered_dsu(10, 2, 3, b_spec=[0.5, 0.0])
    with pytest.raises(DimensionMismatch):
        gen_centered_dsu(10, 2, 3, b_spec=[0.0])


@pytest.mark.parametrize("model,kw", [("dsu", {}), ("packing", {"beta": 0.1}), ("logconcave", {})])
def test_save_load_round_trip(tmp_path, model, kw):
    inst = generate(model, 30, 2, 3, seed=9, **kw)
    path = tmp_path / "inst.ip"
    save(inst, path)
    back = load(path)
    assert back == inst
    assert np.array_equal(back.A, inst.A)
    assert back.model is Model(model)


def test_logconcave_family_tags_round_trip():
    inst = gen_centered_logconcave(20, 2, "tgauss", seed=2)
    back = loads(dumps(inst))
    assert back.law == inst.law
    assert back.law.family is LawFamily.TRUNCATED_GAUSSIAN


def _drop_last_entry(text):
    lines = text.splitlines()
    lines[2] = " ".join(lines[2].split()[:-1])
    return "\n".join(lines) + "\n"


def test_load_with_missing_entry_is_dimension_mismatch():
    text = dumps(generate("dsu", 8, 2, 3, seed=1))
    with pytest.raises(DimensionMismatch):
        loads(_drop_last_entry(text))


def test_load_with_entry_above_k_is_domain_error():
    inst = generate("dsu", 8, 1, 3, seed=1)
    lines = dumps(inst).splitlines()
    row = lines[2].split()
    row[0] = "4"
    lines[2] = " ".join(row)
    with pytest.raises(DomainError):
        loads("\n".join(lines) + "\n")


def test_load_rejects_garbage():
    with pytest.raises(FormatError):
        loads("not an instance\n")


@given(n=st.integers(1, 40), m=st.integers(1, 3), k=st.integers(1, 5), seed=st.integers(0, 2**32))
def test_dsu_entries_stay_in_range(n, m, k, seed):
    inst = gen_centered_dsu(n, m, k, seed=seed)
    assert np.abs(inst.A_num).max() <= k
    assert np.allclose(inst.A, inst.A_num / k)
    assert loads(dumps(inst)) == inst
