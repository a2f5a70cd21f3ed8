"""The canonical coordinate filtration on a finite product group.

``F_k`` is generated by the first ``k`` coordinates, so ``E_k`` is the mean
over coordinates ``k+1..m``.  Every sequence space here carries a ``k = 0``
slot (the constants), matching sequences indexed from zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .harmonics import GroupFunction, GroupSpec

log = logging.getLogger(__name__)

MEASURABILITY_TOL = 1e-12


def cond_exp_array(values: np.ndarray, k: int, depth: int) -> np.ndarray:
    """``E_k`` on a raw array whose leading ``depth`` axes are group axes."""
    if not 0 <= k <= depth:
        raise ValueError(f"k = {k} outside 0..{depth}")
    axes = tuple(range(k, depth))
    if not axes:
        return np.array(values)
    m = values.mean(axis=axes, keepdims=True)
    return np.broadcast_to(m, values.shape).copy()


def reduce_array(values: np.ndarray, k: int, depth: int) -> np.ndarray:
    """Mean over coordinates ``> k`` without broadcasting back (shape ``G^k``)."""
    axes = tuple(range(k, depth))
    return values.mean(axis=axes) if axes else np.array(values)


def conditional_expectation(f: GroupFunction, k: int) -> GroupFunction:
    return GroupFunction(f.group, cond_exp_array(f.values, k, f.group.depth), f.channel_dim)


def _sqnorm(values: np.ndarray, channel_dim) -> np.ndarray:
    a = np.abs(values) ** 2
    return a.sum(axis=-1) if channel_dim else a


@dataclass(frozen=True, eq=False)
class MartingaleDifferences:
    group: GroupSpec
    diffs: tuple[GroupFunction, ...]  # diffs[k-1] is Delta_k, k = 1..m
    mean: complex | np.ndarray

    def reconstruct(self) -> GroupFunction:
        ch = self.diffs[0].channel_dim if self.diffs else None
        v = np.broadcast_to(np.asarray(self.mean), self.group.shape + ((ch,) if ch else ()))
        v = v.astype(complex)
        for d in self.diffs:
            v = v + d.values
        return GroupFunction(self.group, v, ch)


def difference_arrays(values: np.ndarray, depth: int) -> list[np.ndarray]:
    """``[E_0 f, Delta_1 f, ..., Delta_m f]`` as full-size arrays."""
    conds = [cond_exp_array(values, k, depth) for k in range(depth + 1)]
    return [conds[0]] + [conds[k] - conds[k - 1] for k in range(1, depth + 1)]


def martingale_differences(f: GroupFunction) -> MartingaleDifferences:
    d = difference_arrays(f.values, f.group.depth)
    mean = f.mean()
    diffs = tuple(GroupFunction(f.group, a, f.channel_dim) for a in d[1:])
    return MartingaleDifferences(f.group, diffs, mean)


def square_function_norm(f: GroupFunction) -> float:
    """``E (sum_k |Delta_k f|^2)^(1/2)`` with the mean as the ``k = 0`` difference."""
    d = difference_arrays(f.values, f.group.depth)
    s = sum(_sqnorm(a, f.channel_dim) for a in d)
    return float(np.mean(np.sqrt(s)))


def conditional_square_norm(f: GroupFunction) -> float:
    """``E (sum_k E_{k-1} |Delta_k f|^2)^(1/2)``; ``E_{-1}`` acts as the identity."""
    depth = f.group.depth
    d = difference_arrays(f.values, depth)
    s = _sqnorm(d[0], f.channel_dim)
    for k in range(1, depth + 1):
        s = s + cond_exp_array(_sqnorm(d[k], f.channel_dim), k - 1, depth)
    return float(np.mean(np.sqrt(s)))


@dataclass(frozen=True, eq=False)
class AdaptedSequence:
    """Terms ``F_0..F_m`` with ``F_k`` a function of the first ``k`` coordinates.

    Construction rejects terms that fail the measurability check.
    """

    group: GroupSpec
    terms: tuple[GroupFunction, ...]
    channel_dim: int | None = None

    def __post_init__(self):
        terms = tuple(self.terms)
        if len(terms) > self.group.depth + 1:
            raise ValueError(f"{len(terms)} terms exceed depth + 1 = {self.group.depth + 1}")
        for k, t in enumerate(terms):
            if t.group != self.group or t.channel_dim != self.channel_dim:
                raise ValueError(f"term {k} has a mismatched group or channel count")
            proj = cond_exp_array(t.values, k, self.group.depth)
            err = np.max(np.abs(proj - t.values)) if t.values.size else 0.0
            scale = max(1.0, float(np.max(np.abs(t.values))) if t.values.size else 0.0)
            if err > MEASURABILITY_TOL * scale:
                raise ValueError(
                    f"term {k} is not F_{k}-measurable (deviation {err:.3g})"
                )
        # pad to m + 1 terms
        terms = terms + tuple(GroupFunction.zeros(self.group, self.channel_dim)
                              for _ in range(self.group.depth + 1 - len(terms)))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_reduced(cls, group: GroupSpec, arrays: Sequence[np.ndarray],
                     channel_dim: int | None = None) -> "AdaptedSequence":
        """Build from arrays of shape ``G^k`` (plus channels) broadcast to ``G``."""
        return cls(group, tuple(GroupFunction(group, _broadcast(a, k, group, channel_dim),
                                              channel_dim)
                                for k, a in enumerate(arrays)), channel_dim)

    def stacked(self) -> np.ndarray:
        return np.stack([t.values for t in self.terms])

    def reduced(self) -> list[np.ndarray]:
        m = self.group.depth
        return [reduce_array(t.values, k, m) for k, t in enumerate(self.terms)]


def _broadcast(a: np.ndarray, k: int, group: GroupSpec, channel_dim) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    extra = (channel_dim,) if channel_dim else ()
    head = group.shape[:k]
    if a.shape != head + extra:
        raise ValueError(f"term {k} has shape {a.shape}, expected {head + extra}")
    a = a.reshape(head + (1,) * (group.depth - k) + extra)
    return np.broadcast_to(a, group.shape + extra).copy()


def pairing(F: AdaptedSequence, Phi: AdaptedSequence) -> float:
    """``E sum_k Re <F_k, Phi_k>`` channel-wise."""
    if F.group != Phi.group or F.channel_dim != Phi.channel_dim:
        raise ValueError("pairing of sequences on different groups or channel counts")
    return float(sum(np.real(np.sum(f.values * np.conj(p.values)))
                     for f, p in zip(F.terms, Phi.terms)) / F.group.size)


def adapted_l1_norm(F: AdaptedSequence) -> float:
    s = sum(_sqnorm(t.values, F.channel_dim) for t in F.terms)
    return float(np.mean(np.sqrt(s)))


def weisz_dual_norm(Phi: AdaptedSequence) -> float:
    """``max_k max_x (E_k sum_{j>=k} ||Phi_j||^2)^(1/2)``."""
    m = Phi.group.depth
    sq = [_sqnorm(t.values, Phi.channel_dim) for t in Phi.terms]
    tail = np.zeros(Phi.group.shape)
    best = 0.0
    for k in range(m, -1, -1):
        tail = tail + sq[k]
        best = max(best, float(np.max(cond_exp_array(tail, k, m))))
    return float(np.sqrt(best))


def lepingle_project(F: AdaptedSequence) -> AdaptedSequence:
    """``k -> F_k - E_{k-1} F_k`` with ``E_{-1} = 0``."""
    m = F.group.depth
    out = [F.terms[0]]
    for k in range(1, m + 1):
        v = F.terms[k].values
        out.append(GroupFunction(F.group, v - cond_exp_array(v, k - 1, m), F.channel_dim))
    return AdaptedSequence(F.group, tuple(out), F.channel_dim)


@dataclass
class DualNormResult:
    value: float
    upper_bound: float
    status: str
    iterations: int
    maximizer: AdaptedSequence | None = field(default=None, repr=False)

    def __float__(self):
        return self.value


_EPS_STAGES = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9)
_STAGE_ITERS = 400


class _AdaptedBall:
    """Objective pieces for ``sup <F, Phi> / ||F||`` over adapted ``F``."""

    def __init__(self, Phi: AdaptedSequence):
        self.group = Phi.group
        self.m = Phi.group.depth
        self.ch = Phi.channel_dim
        self.extra = (self.ch,) if self.ch else ()
        self.phi = Phi.reduced()
        self.shapes = [self.group.shape[:k] + self.extra for k in range(self.m + 1)]
        self.sizes = [int(np.prod(s, dtype=np.int64)) for s in self.shapes]
        self.weights = [float(np.prod(self.group.shape[:k], dtype=np.int64))
                        for k in range(self.m + 1)]

    def unpack(self, z: np.ndarray) -> list[np.ndarray]:
        n = sum(self.sizes)
        c = z[:n] + 1j * z[n:]
        out, i = [], 0
        for shape, size in zip(self.shapes, self.sizes):
            out.append(c[i:i + size].reshape(shape))
            i += size
        return out

    @staticmethod
    def pack(parts: Sequence[np.ndarray]) -> np.ndarray:
        c = np.concatenate([np.ravel(p) for p in parts])
        return np.concatenate([c.real, c.imag])

    def full(self, a: np.ndarray, k: int) -> np.ndarray:
        shape = self.group.shape[:k] + (1,) * (self.m - k) + self.extra
        return np.broadcast_to(a.reshape(shape), self.group.shape + self.extra)

    def radius(self, parts, eps=0.0) -> np.ndarray:
        s = sum(_sqnorm(self.full(a, k), self.ch) for k, a in enumerate(parts))
        return np.sqrt(s + eps * eps)

    def numerator(self, parts) -> float:
        return float(sum(np.real(np.sum(a * np.conj(p))) / w
                         for a, p, w in zip(parts, self.phi, self.weights)))

    def ratio(self, parts, eps=0.0) -> float:
        den = float(np.mean(self.radius(parts, eps)))
        return self.numerator(parts) / den if den > 0 else 0.0

    def neg_ratio_and_grad(self, z: np.ndarray, eps: float):
        parts = self.unpack(z)
        r = self.radius(parts, eps)
        N = float(np.mean(r))
        P = self.numerator(parts)
        inv_r = 1.0 / r
        gP, gN = [], []
        for k, a in enumerate(parts):
            gP.append(self.phi[k] / self.weights[k])
            er = reduce_array(inv_r, k, self.m)
            if self.ch:
                er = er[..., None]
            gN.append(a * er / self.weights[k])
        grad = [(gp * N - P * gn) / (N * N) for gp, gn in zip(gP, gN)]
        return -P / N, -self.pack(grad)


def dual_norm_maximize(Phi: AdaptedSequence, budget: int = 2000,
                       rtol: float = 1e-6) -> DualNormResult:
    """Exact dual norm of the adapted ``L^1(l^2)`` space, by concave ascent.

    Maximizes ``<F, Phi> / ||F||`` over adapted ``F`` with L-BFGS on a
    smoothed norm (continuation in the smoothing radius); the value returned
    is the best exact ratio seen, hence a valid lower bound that can only
    grow with ``budget``.  A smoothed descent on the quotient formulation
    ``min ||Phi + Z||_inf`` over ``E_k Z_k = 0`` supplies an upper bound;
    status is ``"converged"`` when the two meet within ``rtol``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if np.all(Phi.stacked() == 0):
        return DualNormResult(0.0, 0.0, "converged", 0, Phi)

    ball = _AdaptedBall(Phi)
    parts = [p.copy() for p in ball.phi]
    z = ball.pack(parts)
    best = [ball.ratio(parts), z.copy()]

    def track(zk):
        r = ball.ratio(ball.unpack(zk))
        if r > best[0]:
            best[0], best[1] = r, np.array(zk)

    used = 0
    for eps in _EPS_STAGES:
        if used >= budget:
            break
        # ratio is scale-free: renormalize so eps is relative
        z = z / max(float(np.mean(ball.radius(ball.unpack(z)))), 1e-300)
        res = minimize(ball.neg_ratio_and_grad, z, args=(eps,), jac=True, method="L-BFGS-B",
                       callback=track,
                       options={"maxiter": min(_STAGE_ITERS, budget - used),
                                "ftol": 1e-15, "gtol": 1e-12, "maxcor": 30})
        used += max(int(res.nit), 1)
        z = res.x
        track(z)

    lower = best[0]
    upper = _quotient_upper_bound(Phi, budget)
    if upper < lower:
        upper = lower
    gap = (upper - lower) / upper if upper > 0 else 0.0
    status = "converged" if gap <= rtol else ("budget" if used >= budget else "gap")
    F = AdaptedSequence.from_reduced(Phi.group, ball.unpack(best[1]), Phi.channel_dim)
    log.debug("dual norm: lower %.12g upper %.12g status %s", lower, upper, status)
    return DualNormResult(lower, upper, status, used, F)


_TAU_STAGES = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 1e-7, 1e-8)


def _quotient_upper_bound(Phi: AdaptedSequence, budget: int) -> float:
    """``min_Z max_x ||Phi(x) + Z(x)||`` over ``E_k Z_k = 0``, smoothed by log-sum-exp.

    Any feasible ``Z`` gives a valid upper bound on the dual norm.
    """
    g = Phi.group
    m = g.depth
    ch = Phi.channel_dim
    base = Phi.stacked()
    shape = base.shape
    n = base.size

    def project(W):
        # W -> W_k - E_k W_k, keeps Z in the annihilator
        return np.stack([W[k] - cond_exp_array(W[k], k, m) for k in range(m + 1)])

    def qmap(W):
        Psi = base + project(W)
        q = np.abs(Psi) ** 2
        q = q.sum(axis=0)
        if ch:
            q = q.sum(axis=-1)
        return Psi, q

    def f_and_grad(w, tau):
        W = (w[:n] + 1j * w[n:]).reshape(shape)
        Psi, q = qmap(W)
        qmax = float(q.max())
        e = np.exp((q - qmax) / tau)
        S = float(e.sum())
        val = qmax + tau * np.log(S)
        p = e / S
        if ch:
            p = p[..., None]
        G = project(2 * Psi * p[None])
        G = G.ravel()
        return val, np.concatenate([G.real, G.imag])

    w = np.zeros(2 * n)
    best = float(qmap(np.zeros(shape))[1].max())

    def track(wk):
        nonlocal best
        W = (wk[:n] + 1j * wk[n:]).reshape(shape)
        best = min(best, float(qmap(W)[1].max()))

    used = 0
    for rel in _TAU_STAGES:
        if used >= budget:
            break
        tau = rel * best
        if tau <= 0:
            break
        res = minimize(f_and_grad, w, args=(tau,), jac=True, method="L-BFGS-B", callback=track,
                       options={"maxiter": min(_STAGE_ITERS, budget - used),
                                "ftol": 1e-15, "gtol": 1e-14, "maxcor": 30})
        used += max(int(res.nit), 1)
        w = res.x
        track(w)
    return float(np.sqrt(best))
