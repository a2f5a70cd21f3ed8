"""Final-theorem soundness: sampled upper side and a phi-tensor-psi lower probe.

For ``f = phi(x_<k) psi(x_k)`` with ``phi`` the point mass (all Fourier
coefficients 1, L^1 norm 1), the only nonzero martingale difference is
``f`` itself, so ``||f|| = ||psi||_1`` and the pairing collapses to
``sum_j Lambda_k(j) |psi^(j)|`` with ``Lambda_k`` the collapsed sequence.
The probe maximizes that ratio over analytic ``psi`` by local search from
structured and random starts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .formulas import MultiplierTable, collapsed_sequence, hardy_last_terms
from .harmonics import GroupSpec
from .hardy import h1_last_norm, phi_psi_test_function, point_mass
from .oracles import primal_pairing, primal_ratio_search


@dataclass
class ProbeResult:
    value: float  # best measured primal_pairing / ||phi (x) psi||
    k: int
    coefficients: list  # psi^ at frequencies 1..N/2 for the best probe
    t1: float


def _ratio_1d(lam: np.ndarray, c: np.ndarray, N: int) -> float:
    spec = np.zeros(N, dtype=complex)
    spec[1:len(c) + 1] = c
    psi = np.fft.ifft(spec) * N
    l1 = float(np.mean(np.abs(psi)))
    return float(np.dot(lam, np.abs(c))) / l1 if l1 > 0 else 0.0


def _refine(lam: np.ndarray, c0: np.ndarray, N: int, iters: int) -> np.ndarray:
    L = len(c0)

    def unpack(z):
        return z[:L] + 1j * z[L:]

    def fun(z, eps):
        c = unpack(z)
        spec = np.zeros(N, dtype=complex)
        spec[1:L + 1] = c
        psi = np.fft.ifft(spec) * N
        a = np.sqrt(np.abs(psi) ** 2 + eps ** 2)
        den = a.mean()
        b = np.sqrt(np.abs(c) ** 2 + eps ** 2)
        num = float(np.dot(lam, b))
        # gradients of den and num with respect to conj(c), as real pairs
        gpsi = psi / a / N
        gden = (np.fft.fft(gpsi))[1:L + 1] / N * N
        gnum = lam * c / b
        g = (gnum * den - num * gden) / den ** 2
        return -num / den, -np.concatenate([g.real, g.imag])

    z = np.concatenate([c0.real, c0.imag])
    scale = float(np.abs(c0).max()) or 1.0
    for eps in (1e-2, 1e-4, 1e-6):
        z = minimize(fun, z, args=(eps * scale,), jac=True, method="L-BFGS-B",
                     options={"maxiter": iters}).x
    return unpack(z)


def _starts(lam: np.ndarray, rng: np.random.Generator, restarts: int) -> list[np.ndarray]:
    L = len(lam)
    out = []
    for j in np.nonzero(lam)[0]:
        e = np.zeros(L, dtype=complex)
        e[j] = 1
        out.append(e)
    out.append(lam.astype(complex))
    # block constructions: random signs weighted by block sums, Fejer-smoothed
    for a in range(1, L + 1):
        blocks = [(lo, min(lo + a, L)) for lo in range(0, L, a)]
        sums = np.array([lam[lo:hi].sum() for lo, hi in blocks])
        if not sums.any():
            continue
        for _ in range(2):
            signs = rng.choice([-1.0, 1.0], size=len(blocks))
            c = np.zeros(L, dtype=complex)
            for (lo, hi), w, s in zip(blocks, sums, signs):
                c[lo:hi] = s * w
            out.append(c)
    for _ in range(restarts):
        out.append(rng.standard_normal(L) + 1j * rng.standard_normal(L))
    return out


def necessity_probe(table: MultiplierTable, group: GroupSpec, seed: int = 0, restarts: int = 8,
                    refine: int = 8, iters: int = 300) -> ProbeResult:
    """Best measured ``pairing / ||phi (x) psi||`` over probes on every coordinate ``k``."""
    terms = hardy_last_terms(table)
    table.check_group(group)
    rng = np.random.default_rng(seed)
    best = ProbeResult(0.0, 0, [], terms.t1)
    for k in range(1, table.max_support + 1):
        N = group.factor_orders[k - 1]
        seq = collapsed_sequence(table, k)
        lam = np.zeros(N // 2)
        lam[:len(seq) - 1] = seq[1:]
        if not lam.any():
            continue
        starts = _starts(lam, rng, restarts)
        scored = sorted(((_ratio_1d(lam, c, N), i) for i, c in enumerate(starts)), reverse=True)
        pool = [starts[i] for _, i in scored[:refine]]
        cands = starts + [_refine(lam, c, N, iters) for c in pool]
        for c in cands:
            r = _ratio_1d(lam, c, N)
            if r > best.value:
                best = ProbeResult(r, k, [complex(v) for v in c], terms.t1)
    if best.k:
        # evaluate the winner as an honest test function on the full group
        c = np.asarray(best.coefficients)
        N = group.factor_orders[best.k - 1]
        spec = np.zeros(N, dtype=complex)
        spec[1:len(c) + 1] = c
        psi = np.fft.ifft(spec) * N
        phi = point_mass(group.prefix(best.k - 1)) if best.k > 1 else None
        f = phi_psi_test_function(group, best.k, phi, psi)
        best.value = primal_pairing(table, f) / h1_last_norm(f)
    return best


def soundness_row(table: MultiplierTable, group: GroupSpec, samples: int, seed: int,
                  degree: int) -> dict:
    terms = hardy_last_terms(table)
    search = primal_ratio_search(table, "hardy-last", {"group": group, "degree": degree},
                                 samples, seed)
    probe = necessity_probe(table, group, seed)
    return {"formula": terms.value, "t1": terms.t1, "t2": terms.t2,
            "max_ratio": search.max_ratio, "ratio_over_formula": search.max_ratio / terms.value,
            "argmax": search.argmax, "probe": probe.value, "probe_k": probe.k,
            "probe_over_t1": probe.value / terms.t1 if terms.t1 > 0 else None}
