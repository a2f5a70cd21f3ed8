import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardymult.harmonics import (GroupFunction, MultiIndex, SpectrumTable, build_group, character,
                                 dft_forward, dft_inverse, position, torus, translate)

orders = st.lists(st.integers(1, 5), min_size=1, max_size=3)


def test_group_shape_and_ranges():
    g = build_group([2, 3, 4], [False, True, True])
    assert g.shape == (2, 3, 4) and g.size == 24 and g.depth == 3
    assert list(g.frequency_range(2)) == [-1, 0, 1, 2]
    assert list(g.frequency_range(1)) == [-1, 0, 1]
    assert g.prefix(1).factor_orders == (2,)
    assert not g.all_torus and torus(8, 2).all_torus


def test_group_validation():
    with pytest.raises(ValueError):
        build_group([0])
    with pytest.raises(OverflowError):
        build_group([2**21, 2**21])
    with pytest.raises(IndexError):
        torus(8, 1).label_to_position(0, 5)


def test_multi_index_normalization():
    n = MultiIndex((1, 0, 0))
    assert n == MultiIndex((1,))
    assert n.max_support == 1 and n[5] == 0
    assert MultiIndex(()).is_zero and MultiIndex(()).max_support == 0
    assert MultiIndex((-3, 2)).is_last_positive and not MultiIndex((3, -2)).is_last_positive


def test_round_trip_4096():
    g = build_group([8, 8, 8, 8], [True, True, False, False])
    rng = np.random.default_rng(0)
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    f = GroupFunction(g, v)
    back = dft_inverse(dft_forward(f))
    assert np.max(np.abs(back.values - v)) < 1e-10


def test_probability_normalization():
    g = torus(8, 2)
    f = GroupFunction(g, np.ones(g.shape))
    F = dft_forward(f)
    assert F[MultiIndex(())] == pytest.approx(1.0)
    assert abs(F[MultiIndex((1,))]) < 1e-14


def test_character_orthonormality():
    g = build_group([3, 4], [False, True])
    labels = [MultiIndex((a, b)) for a in range(3) for b in g.frequency_range(1)]
    chars = np.array([character(g, n).values.ravel() for n in labels])
    gram = chars @ chars.conj().T / g.size
    assert np.allclose(gram, np.eye(len(labels)), atol=1e-12)


def test_character_spectrum_is_delta():
    g = torus(6, 2)
    n = MultiIndex((-2, 3))
    F = dft_forward(character(g, n))
    assert F[n] == pytest.approx(1.0)
    assert sum(abs(c) for _, c in F.items(1e-12)) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(orders, st.integers(0, 2**31 - 1))
def test_shift_covariance(ords, seed):
    g = build_group(ords)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    y = [int(rng.integers(0, n)) for n in ords]
    f = GroupFunction(g, v)
    F, Fy = dft_forward(f), dft_forward(translate(f, y))
    for n, c in F.items():
        gamma_y = np.exp(2j * np.pi * sum(n[j] * y[j] / ords[j] for j in range(len(ords))))
        assert Fy[n] == pytest.approx(c * gamma_y, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(orders, st.integers(0, 2**31 - 1))
def test_plancherel(ords, seed):
    g = build_group(ords)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    c = dft_forward(GroupFunction(g, v)).coefficients
    assert np.sum(np.abs(c) ** 2) == pytest.approx(np.mean(np.abs(v) ** 2), rel=1e-10)


def test_spectrum_from_mapping_and_channels():
    g = torus(4, 1)
    T = SpectrumTable.from_mapping(g, {MultiIndex((1,)): 2.0, MultiIndex((-1,)): 1j})
    f = dft_inverse(T)
    assert dft_forward(f)[MultiIndex((-1,))] == pytest.approx(1j)
    v = np.zeros((4, 2), dtype=complex)
    v[:, 1] = character(g, (1,)).values
    F = dft_forward(GroupFunction(g, v, channel_dim=2))
    assert F[MultiIndex((1,))][1] == pytest.approx(1.0)
    assert position(g, MultiIndex((-1,))) == (3,)


def test_group_function_is_read_only():
    f = GroupFunction.zeros(torus(4, 1))
    with pytest.raises(ValueError):
        f.values[0] = 1
