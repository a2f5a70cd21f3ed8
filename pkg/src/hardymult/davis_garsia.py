"""Davis-Garsia decomposition as a convex program.

Minimizes ``sum_k E|Delta_k g| + E (sum_k E_{k-1}|Delta_k h|^2)^(1/2)`` over
``f = g + h``, optionally with ``g`` (hence ``h``) restricted to the
``>_last`` cone.  The moduli are smoothed as ``sqrt(|z|^2 + eps^2)`` and the
smoothing radius is driven down in stages; the exact objective is tracked at
every iterate and the best exact point is returned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .harmonics import GroupFunction
from .hardy import cone_mask, is_hardy_last

log = logging.getLogger(__name__)

EPS_STAGES = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
_STAGE_ITERS = 500


@dataclass(frozen=True, eq=False)
class DecompositionPair:
    g: GroupFunction
    h: GroupFunction
    objective: float
    status: str = "converged"
    iterations: int = 0


class _FlatFiltration:
    """``E_k`` on flattened arrays: block means over contiguous runs."""

    def __init__(self, shape: tuple[int, ...]):
        self.m = len(shape)
        self.n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        self.tails = [int(np.prod(shape[k:], dtype=np.int64)) if shape[k:] else 1
                      for k in range(self.m + 1)]

    def cexp(self, v: np.ndarray, k: int) -> np.ndarray:
        t = self.tails[k]
        if t == 1:
            return v
        return np.repeat(v.reshape(-1, t).sum(axis=1) * (1.0 / t), t)

    def diffs(self, v: np.ndarray) -> list[np.ndarray]:
        c = [self.cexp(v, k) for k in range(self.m + 1)]
        return [c[0]] + [c[k] - c[k - 1] for k in range(1, self.m + 1)]

    def objective(self, fv: np.ndarray, gv: np.ndarray, eps: float, grad: bool = False):
        m = self.m
        dg = self.diffs(gv)
        dh = self.diffs(fv - gv)
        e2 = eps * eps
        a = [np.sqrt(d.real ** 2 + d.imag ** 2 + e2) for d in dg]
        part1 = sum(float(x.sum()) for x in a) / self.n
        q = dh[0].real ** 2 + dh[0].imag ** 2
        for k in range(1, m + 1):
            q = q + self.cexp(dh[k].real ** 2 + dh[k].imag ** 2, k - 1)
        r = np.sqrt(q + e2)
        val = part1 + float(r.sum()) / self.n
        if not grad:
            return val, None
        if eps > 0:
            exact = (sum(float(np.abs(d).sum()) for d in dg) + float(np.sqrt(q).sum())) / self.n
        else:
            exact = val
        # D_k = E_k - E_{k-1} is an orthogonal projection, hence self-adjoint
        inv_r = 1.0 / r
        u = [dg[k] / a[k] - dh[k] * (inv_r if k == 0 else self.cexp(inv_r, k - 1))
             for k in range(m + 1)]
        # sum_k (E_k - E_{k-1}) u_k = sum_k E_k (u_k - u_{k+1})
        G = np.zeros_like(gv)
        for k in range(m + 1):
            G += self.cexp(u[k] - u[k + 1] if k < m else u[k], k)
        return val, G / self.n, exact


def dg_objective(f: GroupFunction, g: GroupFunction) -> float:
    """Exact Davis-Garsia objective of the split ``f = g + (f - g)``."""
    flat = _FlatFiltration(f.group.shape)
    return flat.objective(np.ravel(f.values), np.ravel(g.values), 0.0)[0]


def davis_garsia_solve(f: GroupFunction, constrain_hardy: bool = False, tolerance: float = 1e-6,
                       budget: int = 4000, init: GroupFunction | None = None) -> DecompositionPair:
    """Best split ``f = g + h`` found; ``status`` is ``"converged"`` or ``"budget"``.

    The starting candidates ``g = f``, ``g = 0`` and ``init`` (if given) are
    always evaluated, so the result never exceeds either pure choice.
    """
    if f.channel_dim:
        raise ValueError("Davis-Garsia solver handles scalar functions")
    g_ = f.group
    m = g_.depth
    if constrain_hardy and not is_hardy_last(f):
        raise ValueError("constrained decomposition needs a Hardy martingale f")
    fv = np.asarray(f.values, dtype=complex)
    scale = float(np.max(np.abs(fv))) if fv.size else 0.0
    if scale == 0.0:
        z = GroupFunction.zeros(g_)
        return DecompositionPair(z, z, 0.0, "converged", 0)
    fs = fv.ravel() / scale
    n = fv.size
    flat = _FlatFiltration(g_.shape)
    project = _cone_projector(g_) if constrain_hardy else (lambda u: u)

    def fun(x, eps):
        nonlocal best_val, best_g
        gv = project(x[:n] + 1j * x[n:])
        val, G, exact_val = flat.objective(fs, gv, eps, grad=True)
        # every evaluated point is feasible, line-search trials included
        if exact_val < best_val:
            best_val, best_g = exact_val, gv
        G = project(G)
        return val, np.concatenate([G.real, G.imag])

    def exact(gv):
        return flat.objective(fs, gv, 0.0)[0]

    starts = [fs, np.zeros(n, dtype=complex)]
    if init is not None:
        starts.append(project(np.ravel(init.values).astype(complex) / scale))
    best_val, best_g = min(((exact(s), s) for s in starts), key=lambda t: t[0])

    x = np.concatenate([best_g.real, best_g.imag])
    used = 0
    prev = None
    status = "budget"
    for eps in EPS_STAGES:
        if used >= budget:
            break
        res = minimize(fun, x, args=(eps,), jac=True, method="L-BFGS-B",
                       options={"maxiter": min(_STAGE_ITERS, budget - used),
                                "ftol": 1e-15, "gtol": 1e-12, "maxcor": 20})
        used += max(int(res.nit), 1)
        x = res.x
        end = exact(project(x[:n] + 1j * x[n:]))
        log.debug("eps %.0e: %d iterations, stage end %.12g, best %.12g",
                  eps, res.nit, end, best_val)
        # smoothing inflates each of the m + 2 moduli by at most eps
        if (eps * (m + 2) <= tolerance * best_val and prev is not None
                and abs(prev - end) <= tolerance * best_val):
            status = "converged"
            break
        prev = end
    gv = (best_g * scale).reshape(g_.shape)
    g = GroupFunction(g_, gv)
    h = GroupFunction(g_, fv - gv)
    log.debug("davis-garsia: objective %.10g status %s after %d iterations",
              best_val * scale, status, used)
    return DecompositionPair(g, h, best_val * scale, status, used)


_DENSE_LIMIT = 2048


def _cone_projector(group):
    """Orthogonal projection onto cone-supported functions, on flat vectors."""
    mask = cone_mask(group)
    axes = tuple(range(group.depth))
    if not axes:
        return lambda u: np.zeros_like(u)
    if group.size <= _DENSE_LIMIT:
        eye = np.eye(group.size).reshape((group.size,) + group.shape)
        spec = np.fft.fftn(eye, axes=tuple(a + 1 for a in axes))
        spec = np.where(mask, spec, 0)
        P = np.fft.ifftn(spec, axes=tuple(a + 1 for a in axes)).reshape(group.size, group.size).T
        return lambda u: P @ u

    def project(u):
        c = np.fft.fftn(u.reshape(group.shape))
        return np.fft.ifftn(np.where(mask, c, 0)).ravel()
    return project
