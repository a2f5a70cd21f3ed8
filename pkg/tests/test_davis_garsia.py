import itertools
import math

import numpy as np
import pytest

from hardymult.davis_garsia import davis_garsia_solve, dg_objective
from hardymult.filtration import cond_exp_array
from hardymult.harmonics import GroupFunction, build_group, torus
from hardymult.hardy import cone_mask, is_hardy_last, sample_hardy_martingale


def dg_objective_loops(f, g):
    """The objective by explicit loops over points and atoms."""
    G = f.group
    m = G.depth
    h = f.values - g.values

    def diffs(v):
        E = [cond_exp_array(v, k, m) for k in range(m + 1)]
        return [E[0]] + [E[k] - E[k - 1] for k in range(1, m + 1)]

    dg, dh = diffs(g.values), diffs(h)
    first = sum(float(np.mean(np.abs(d))) for d in dg)
    second = 0.0
    for x in itertools.product(*(range(n) for n in G.shape)):
        q = abs(dh[0][x]) ** 2
        for k in range(1, m + 1):
            fiber = [x[:k - 1] + (a,) + x[k:] for a in range(G.shape[k - 1])]
            # E_{k-1} averages over coordinates k..m; the fiber below k is enough after
            # averaging the later coordinates of |Delta_k h|^2
            sq = cond_exp_array(np.abs(dh[k]) ** 2, k, m)
            q += float(np.mean([sq[y] for y in fiber]))
        second += math.sqrt(q)
    return first + second / G.size


def test_objective_matches_loops():
    g_ = build_group([2, 3, 2])
    rng = np.random.default_rng(0)
    f = GroupFunction(g_, rng.standard_normal(g_.shape) + 1j * rng.standard_normal(g_.shape))
    g = GroupFunction(g_, rng.standard_normal(g_.shape))
    assert dg_objective(f, g) == pytest.approx(dg_objective_loops(f, g), rel=1e-12)


def test_one_step_closed_form():
    g1 = torus(8, 1)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        d = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        f = GroupFunction(g1, d - d.mean())
        pair = davis_garsia_solve(f)
        assert pair.objective == pytest.approx(np.mean(np.abs(f.values)), rel=1e-3)
        assert np.allclose(pair.g.values + pair.h.values, f.values, atol=1e-12)


def test_constrained_split_is_feasible_and_dominates():
    f = sample_hardy_martingale(torus(8, 2), 3, 4)
    con = davis_garsia_solve(f, constrain_hardy=True, tolerance=1e-4)
    unc = davis_garsia_solve(f, tolerance=1e-4, init=con.g)
    assert is_hardy_last(con.g) and is_hardy_last(con.h)
    assert np.max(np.abs(con.g.values + con.h.values - f.values)) < 1e-9
    assert con.objective >= unc.objective - 1e-9
    assert con.objective <= min(dg_objective(f, f), dg_objective(f, 0 * f)) + 1e-12
    assert dg_objective(f, con.g) == pytest.approx(con.objective, rel=1e-12)


def test_rejects_non_hardy_when_constrained():
    g_ = torus(4, 1)
    f = GroupFunction(g_, np.arange(4.0))
    with pytest.raises(ValueError):
        davis_garsia_solve(f, constrain_hardy=True)


def _cvx_dg(f, hardy):
    cp = pytest.importorskip("cvxpy")
    G = f.group
    m, n, sh = G.depth, G.size, G.shape
    eye = np.eye(n)
    E = [np.stack([cond_exp_array(eye[:, i].reshape(sh), k, m).ravel() for i in range(n)], 1)
         for k in range(m + 1)]
    D = [E[0]] + [E[k] - E[k - 1] for k in range(1, m + 1)]
    gr, gi = cp.Variable(n), cp.Variable(n)
    cons = []
    if hardy:
        W = np.stack([np.fft.fftn(eye[:, i].reshape(sh)).ravel() for i in range(n)], 1)
        Wo = W[~cone_mask(G).ravel()]
        cons = [Wo.real @ gr - Wo.imag @ gi == 0, Wo.imag @ gr + Wo.real @ gi == 0]
    obj = sum(cp.sum(cp.norm(cp.vstack([Dk @ gr, Dk @ gi]), axis=0)) / n for Dk in D)
    fv = f.values.ravel()
    hr, hi = fv.real - gr, fv.imag - gi
    a = [Dk @ hr for Dk in D]
    b = [Dk @ hi for Dk in D]
    rows = []
    for x in range(n):
        parts = [a[0][x], b[0][x]]
        for k in range(1, m + 1):
            w = np.sqrt(E[k - 1][x])
            idx = np.nonzero(w)[0]
            parts += [cp.multiply(w[idx], a[k][idx]), cp.multiply(w[idx], b[k][idx])]
        rows.append(cp.norm(cp.hstack(parts)))
    prob = cp.Problem(cp.Minimize(obj + sum(rows) / n), cons)
    prob.solve()
    return prob.value


@pytest.mark.parametrize("hardy", [False, True])
def test_matches_conic_solver(hardy):
    f = sample_hardy_martingale(torus(4, 2), 2, 1)
    ref = _cvx_dg(f, hardy)
    pair = davis_garsia_solve(f, constrain_hardy=hardy, tolerance=1e-7, budget=6000)
    assert pair.objective == pytest.approx(ref, rel=1e-5)
