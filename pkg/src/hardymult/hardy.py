"""Hardy martingales on a discretized torus product.

A function is in ``H^1_last`` when its spectrum lies in the cone of nonzero
frequencies whose last nonzero entry is positive.  The reference norm is the
square-function norm; for analytic functions on one torus coordinate the H^1
norm is just the L^1 norm, so no maximal functions are needed.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .filtration import difference_arrays, square_function_norm
from .harmonics import GroupFunction, GroupSpec, MultiIndex, dft_forward

HARDY_TOL = 1e-10


def _require_torus(group: GroupSpec):
    if not group.all_torus:
        raise ValueError("Hardy structure needs every coordinate torus-flagged")


def cone_mask(group: GroupSpec) -> np.ndarray:
    """Boolean spectral mask of the ``>_last`` cone, in position order."""
    _require_torus(group)
    mask = np.zeros(group.shape, dtype=bool)
    decided = np.zeros(group.shape, dtype=bool)
    grids = group.label_grids()
    # scan coordinates from the last one: the first nonzero label decides
    for j in range(group.depth - 1, -1, -1):
        n = grids[j]
        fresh = ~decided & (n != 0)
        mask |= fresh & (n > 0)
        decided |= fresh
    return mask


def in_cone(n) -> bool:
    if not isinstance(n, MultiIndex):
        n = MultiIndex(tuple(n))
    return n.is_last_positive


def is_hardy_last(f: GroupFunction, tol: float = HARDY_TOL) -> bool:
    _require_torus(f.group)
    c = dft_forward(f).coefficients
    mags = np.linalg.norm(c, axis=-1) if f.channel_dim else np.abs(c)
    scale = max(1.0, float(mags.max()) if mags.size else 0.0)
    outside = mags[~cone_mask(f.group)]
    return not outside.size or float(outside.max()) <= tol * scale


def project_hardy_last(f: GroupFunction) -> GroupFunction:
    """Zero every Fourier coefficient outside the cone."""
    _require_torus(f.group)
    g = f.group
    mask = cone_mask(g)
    if f.channel_dim:
        mask = mask[..., None]
    axes = tuple(range(g.depth))
    if not axes:
        return GroupFunction(g, np.zeros_like(f.values), f.channel_dim)
    c = np.fft.fftn(f.values, axes=axes)
    return GroupFunction(g, np.fft.ifftn(np.where(mask, c, 0), axes=axes), f.channel_dim)


def l1_norm(f: GroupFunction) -> float:
    v = f.values
    a = np.linalg.norm(v, axis=-1) if f.channel_dim else np.abs(v)
    return float(np.mean(a))


def h1_last_norm(f: GroupFunction, return_l1: bool = False):
    """Square-function norm of a Hardy martingale (optionally with its L^1 norm)."""
    if not is_hardy_last(f):
        raise ValueError("h1_last_norm needs a function with spectrum in the >_last cone")
    s = square_function_norm(f)
    return (s, l1_norm(f)) if return_l1 else s


def sample_hardy_martingale(group: GroupSpec, degree: int, seed) -> GroupFunction:
    """Random Hardy martingale: ``sum_k A_k(x_<k) P_k(x_k)``.

    ``A_k`` is an independent complex Gaussian per point of ``G^{k-1}`` and
    ``P_k`` a complex Gaussian analytic polynomial with frequencies
    ``1..degree``.
    """
    _require_torus(group)
    for j, N in enumerate(group.factor_orders):
        if degree > N // 2:
            raise ValueError(f"degree {degree} exceeds N/2 = {N // 2} at coordinate {j + 1}")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    rng = np.random.default_rng(seed)
    m = group.depth
    out = np.zeros(group.shape, dtype=complex)
    if degree == 0:
        return GroupFunction(group, out)
    freqs = np.arange(1, degree + 1)
    for k in range(1, m + 1):
        head = group.shape[:k - 1]
        A = _cgauss(rng, head)
        coef = _cgauss(rng, (degree,))
        N = group.factor_orders[k - 1]
        x = np.arange(N) / N
        P = np.exp(2j * np.pi * np.outer(x, freqs)) @ coef
        term = A.reshape(head + (1,)) * P.reshape((1,) * (k - 1) + (N,))
        out += term.reshape(group.shape[:k] + (1,) * (m - k))
    return GroupFunction(group, out)


def _cgauss(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def is_analytic_1d(values: np.ndarray, tol: float = HARDY_TOL) -> bool:
    """Whether a function on one torus coordinate has only positive frequencies."""
    N = values.shape[0]
    c = np.fft.fft(values) / N
    pos = np.arange(N)
    labels = np.where(pos > N // 2, pos - N, pos)
    scale = max(1.0, float(np.abs(c).max()))
    bad = np.abs(c[labels <= 0])
    return not bad.size or float(bad.max()) <= tol * scale


def phi_psi_test_function(group: GroupSpec, k: int, phi: GroupFunction | np.ndarray | None,
                          psi: np.ndarray) -> GroupFunction:
    """``phi(x_<k) psi(x_k)`` on ``group`` (constant in later coordinates).

    ``phi`` lives on the first ``k-1`` coordinates (``None`` means 1) and
    ``psi`` is a sampled analytic, mean-zero function of coordinate ``k``.
    """
    _require_torus(group)
    m = group.depth
    if not 1 <= k <= m:
        raise ValueError(f"k = {k} outside 1..{m}")
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (group.factor_orders[k - 1],):
        raise ValueError(f"psi has shape {psi.shape}, expected ({group.factor_orders[k - 1]},)")
    if not is_analytic_1d(psi):
        raise ValueError("psi must be analytic with zero mean (positive frequencies only)")
    head = group.shape[:k - 1]
    if phi is None:
        pv = np.ones(head, dtype=complex)
    else:
        pv = np.asarray(phi.values if isinstance(phi, GroupFunction) else phi, dtype=complex)
        if pv.shape != head:
            raise ValueError(f"phi has shape {pv.shape}, expected {head}")
    v = pv.reshape(head + (1,)) * psi.reshape((1,) * (k - 1) + (-1,))
    v = v.reshape(group.shape[:k] + (1,) * (m - k))
    return GroupFunction(group, np.broadcast_to(v, group.shape))


def fejer_kernel(group: GroupSpec, radius: int) -> GroupFunction:
    """Normalized product Fejer kernel: coefficients ``prod (1 - |n_j|/(radius+1))``."""
    return _box_kernel(group, radius, fejer=True)


def dirichlet_box(group: GroupSpec, radius: int) -> GroupFunction:
    """Coefficient 1 on the box ``|n_j| <= radius``, 0 elsewhere."""
    return _box_kernel(group, radius, fejer=False)


def point_mass(group: GroupSpec) -> GroupFunction:
    """``|G| 1_{x = 0}``: every Fourier coefficient equals 1, L^1 norm 1."""
    v = np.zeros(group.shape, dtype=complex)
    v[(0,) * group.depth] = group.size
    return GroupFunction(group, v)


def _box_kernel(group: GroupSpec, radius: int, fejer: bool) -> GroupFunction:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    coef = np.ones(group.shape)
    for j, n in enumerate(group.label_grids()):
        if radius > min(group.frequency_range(j).stop - 1, -group.frequency_range(j).start):
            raise ValueError(f"radius {radius} exceeds the frequency range of coordinate {j + 1}")
        w = np.clip(1 - np.abs(n) / (radius + 1), 0, None) if fejer else (np.abs(n) <= radius) * 1.0
        coef = coef * w
    axes = tuple(range(group.depth))
    v = np.fft.ifftn(coef, axes=axes) * group.size if axes else coef
    return GroupFunction(group, v)


def analytic_polynomial(N: int, coefficients: Sequence[complex], start: int = 1) -> np.ndarray:
    """Samples on ``N`` points of ``sum_i c_i e^{2 pi i (start + i) x}``."""
    c = np.asarray(coefficients, dtype=complex)
    freqs = start + np.arange(len(c))
    if len(c) and (freqs[0] < 1 or freqs[-1] > N // 2):
        raise ValueError(f"frequencies {freqs[0]}..{freqs[-1]} not within 1..{N // 2}")
    x = np.arange(N) / N
    return np.exp(2j * np.pi * np.outer(x, freqs)) @ c if len(c) else np.zeros(N, dtype=complex)


def differences_are_analytic(f: GroupFunction, tol: float = HARDY_TOL) -> bool:
    """Check that every ``Delta_k f`` has only positive frequencies in ``x_k``."""
    g = f.group
    d = difference_arrays(f.values, g.depth)
    scale = max(1.0, float(np.abs(f.values).max()))
    if abs(d[0].flat[0]) > tol * scale:
        return False
    for k in range(1, g.depth + 1):
        c = np.fft.fft(d[k], axis=k - 1) / g.factor_orders[k - 1]
        N = g.factor_orders[k - 1]
        pos = np.arange(N)
        bad = np.take(c, np.nonzero(np.where(pos > N // 2, pos - N, pos) <= 0)[0], axis=k - 1)
        if bad.size and float(np.abs(bad).max()) > tol * scale:
            return False
    return True
