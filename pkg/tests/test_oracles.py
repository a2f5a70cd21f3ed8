import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardymult.formulas import (GradedMultiplierFamily, MultiplierTable, adapted_multiplier_norm,
                                hardy_last_multiplier_norm)
from hardymult.harmonics import GroupFunction, MultiIndex, build_group, character, torus
from hardymult.hardy import sample_hardy_martingale
from hardymult.oracles import (SignAssignment, nonzero_samples, primal_pairing, primal_ratio_search,
                               prop1_dual_value, random_adapted, trial_seeds)


def z2_family():
    return GradedMultiplierFamily(1, {1: MultiplierTable.from_pairs([((0,), 1.0), ((1,), 1.0)])})


def test_prop1_z2_example():
    g = build_group([2])
    for strategy in ("optimal-character", "exhaustive-real-signs"):
        assert prop1_dual_value(z2_family(), g, strategy=strategy).value == pytest.approx(2.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_prop1_strategies_agree_with_formula(seed):
    rng = np.random.default_rng(seed)
    orders = [int(rng.choice([2, 3]))] * int(rng.integers(1, 4))
    g = build_group(orders)
    S = int(rng.integers(1, 3))
    grades = {}
    for _ in range(int(rng.integers(1, 8))):
        j = int(rng.integers(0, len(orders) + 1))
        n = MultiIndex(tuple(int(rng.integers(0, orders[i])) for i in range(j)))
        grades.setdefault(j, {})[(n, int(rng.integers(0, S)))] = float(rng.random())
    fam = GradedMultiplierFamily(S, {j: MultiplierTable(S, e) for j, e in grades.items()})
    formula = adapted_multiplier_norm(fam, g)
    opt = prop1_dual_value(fam, g, strategy="optimal-character").value
    ex = prop1_dual_value(fam, g, strategy="exhaustive-real-signs").value
    rnd = prop1_dual_value(fam, g, strategy="random-restarts", restarts=32, seed=seed).value
    assert opt == pytest.approx(formula, rel=1e-9, abs=1e-12)
    assert ex == pytest.approx(formula, rel=1e-9, abs=1e-12)
    assert rnd <= formula * (1 + 1e-9) + 1e-12


def test_prop1_bad_strategy_and_sign_validation():
    with pytest.raises(ValueError):
        prop1_dual_value(z2_family(), build_group([2]), strategy="nope")
    with pytest.raises(ValueError):
        SignAssignment({(1, MultiIndex((0,)), 0): 0.5})


def test_primal_pairing_of_character():
    g = torus(8, 2)
    lam = MultiplierTable.from_pairs([((1, 2), 3.0), ((0, 1), 1.0)])
    assert primal_pairing(lam, character(g, (1, 2))) == pytest.approx(3.0)
    with pytest.raises(TypeError):
        primal_pairing(lam, random_adapted(g, 0))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_primal_pairing_never_beats_formula_on_adapted(seed):
    g = build_group([2, 3])
    fam = GradedMultiplierFamily(1, {1: MultiplierTable.from_pairs([((1,), 0.5)]),
                                     2: MultiplierTable.from_pairs([((0, 2), 1.0), ((1, 1), 0.3)])})
    res = primal_ratio_search(fam, "adapted-L1", {"group": g}, 20, seed)
    assert res.max_ratio <= res.formula_value * (1 + 1e-9)


def test_hardy_last_search_bounded_and_seeded():
    g = torus(16, 2)
    lam = MultiplierTable.from_pairs([((0, 1), 1.0), ((2, 3), 0.5), ((-1, 2), 0.25)])
    a = primal_ratio_search(lam, "hardy-last", {"group": g, "degree": 4}, 30, 5)
    b = primal_ratio_search(lam, "hardy-last", {"group": g, "degree": 4}, 30, 5)
    assert a.ratios == b.ratios
    assert a.formula_value == hardy_last_multiplier_norm(lam)
    assert a.max_ratio >= 1.0 - 1e-12  # the character at (0, 1) alone gives 1
    with pytest.raises(ValueError):
        primal_ratio_search(lam, "nope", {"group": g}, 1, 0)


def test_seed_derivation():
    assert trial_seeds(3, 5) == trial_seeds(3, 5)
    assert trial_seeds(3, 5)[:3] == trial_seeds(3, 3)
    zero_first = iter([0, 1, 1, 1, 1])

    def make(s):
        return GroupFunction(torus(4, 1), np.full(4, next(zero_first), dtype=complex))

    out = nonzero_samples(make, 0, 2)
    assert len(out) == 2 and all(np.any(f.values != 0) for _, f in out)
    assert np.any(sample_hardy_martingale(torus(8, 1), 2, out[0][0]).values)
