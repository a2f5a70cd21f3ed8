import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import adapted_formula_naive, fefferman_naive
from hardymult.formulas import (FeffermanValue, GradedMultiplierFamily, MultiplierTable,
                                adapted_multiplier_norm, collapsed_sequence, fefferman_details,
                                fefferman_norm, hardy_last_multiplier_norm, hardy_last_terms,
                                martingale_hardy_multiplier_norm, martingale_hardy_terms)
from hardymult.harmonics import MultiIndex, build_group

seqs = st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=40)


def single(n, v=1.0, s=0, channels=1):
    return MultiplierTable(channels, {(MultiIndex(tuple(n)), s): v})


def test_fefferman_all_ones():
    lam = [0.0] + [1.0] * 8
    d = fefferman_details(lam)
    assert d.value == pytest.approx(math.sqrt(18), abs=1e-12)
    assert d.block_scale == 3 and d.block_energy == pytest.approx(18.0)


def test_fefferman_edge_cases():
    assert fefferman_details([]) == FeffermanValue(0.0, 0, 0.0)
    assert fefferman_norm([2.5]) == 2.5
    assert fefferman_norm([0, 0, 0, 5.0]) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        fefferman_norm([1.0, -1.0])


@settings(max_examples=60, deadline=None)
@given(seqs)
def test_fefferman_matches_naive_loop(lam):
    v, a = fefferman_naive(lam)
    d = fefferman_details(lam)
    assert d.value == pytest.approx(v, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seqs, st.floats(0, 5))
def test_fefferman_homogeneous_and_dominates_sup(lam, t):
    assert fefferman_norm([t * x for x in lam]) == pytest.approx(t * fefferman_norm(lam), rel=1e-9,
                                                                 abs=1e-12)
    assert fefferman_norm(lam) >= max(lam) - 1e-12


def test_single_entry_values():
    assert adapted_multiplier_norm(GradedMultiplierFamily(1, {2: single((1, 1), 0.7)})) == \
        pytest.approx(0.7, abs=1e-12)
    assert martingale_hardy_multiplier_norm(single((0, 3), 0.7)) == pytest.approx(1.4, abs=1e-12)
    assert hardy_last_multiplier_norm(single((0, 3), 0.7)) == pytest.approx(1.4, abs=1e-12)


def test_hardy_last_all_ones():
    lam = MultiplierTable.sequence([0.0] + [1.0] * 8)
    t = hardy_last_terms(lam)
    assert t.t1 == pytest.approx(math.sqrt(18), abs=1e-12)
    assert t.t2 == pytest.approx(math.sqrt(8), abs=1e-12)
    assert t.value == pytest.approx(math.sqrt(18) + math.sqrt(8), abs=1e-12)


def test_hardy_last_rejects_bad_tables():
    with pytest.raises(ValueError):
        hardy_last_terms(single((1, -2)))
    with pytest.raises(ValueError):
        hardy_last_terms(single((1,), channels=2))


def test_z2_examples():
    fam = GradedMultiplierFamily(1, {1: MultiplierTable.from_pairs([((0,), 1.0), ((1,), 1.0)])})
    assert adapted_multiplier_norm(fam, build_group([2])) == pytest.approx(2.0)
    cor = MultiplierTable.from_pairs([((1,), 1.0), ((1, 1), 1.0)])
    assert martingale_hardy_multiplier_norm(cor, build_group([2, 2])) == \
        pytest.approx(math.sqrt(2) + 1)


def test_zero_index_contributes_nothing():
    lam = single((1,))
    with_zero = lam + single((), 5.0)
    assert martingale_hardy_multiplier_norm(with_zero) == martingale_hardy_multiplier_norm(lam)


def test_collapsed_sequence():
    lam = MultiplierTable.from_pairs([((0, 2), 1.0), ((3, 2), 0.5), ((1, 1), 2.0), ((4,), 9.0)])
    assert np.allclose(collapsed_sequence(lam, 2), [0, 2.0, 1.5])


def _random_family(rng, orders, S, points):
    grades = {}
    for _ in range(points):
        j = int(rng.integers(0, len(orders) + 1))
        n = MultiIndex(tuple(int(rng.integers(0, orders[i])) for i in range(j)))
        s = int(rng.integers(0, S))
        grades.setdefault(j, {})[(n, s)] = float(rng.random())
    return GradedMultiplierFamily(S, {j: MultiplierTable(S, e) for j, e in grades.items()})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_adapted_formula_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    orders = [int(x) for x in rng.integers(2, 4, size=int(rng.integers(1, 4)))]
    fam = _random_family(rng, orders, int(rng.integers(1, 3)), int(rng.integers(1, 10)))
    entries = [(j, n.entries, s, v) for j, n, s, v in fam.support()]
    assert adapted_multiplier_norm(fam, build_group(orders)) == \
        pytest.approx(adapted_formula_naive(entries, orders), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_formulas_are_order_independent_and_monotone(seed):
    rng = np.random.default_rng(seed)
    pairs = [((int(rng.integers(-2, 3)), int(rng.integers(1, 4))), float(rng.random()))
             for _ in range(6)]
    pairs = list(dict(pairs).items())
    a = MultiplierTable.from_pairs(pairs)
    b = MultiplierTable.from_pairs(pairs[::-1])
    assert hardy_last_multiplier_norm(a) == hardy_last_multiplier_norm(b)
    assert martingale_hardy_terms(a) == martingale_hardy_terms(b)
    bigger = a + single(pairs[0][0], 1.0)
    assert hardy_last_multiplier_norm(bigger) >= hardy_last_multiplier_norm(a) - 1e-12


def test_table_validation():
    with pytest.raises(ValueError):
        single((1,), -1.0)
    with pytest.raises(ValueError):
        single((1,), float("nan"))
    with pytest.raises(ValueError):
        single((1,), 1.0, s=2, channels=2)
    with pytest.raises(ValueError):
        GradedMultiplierFamily(1, {1: single((0, 1))})
