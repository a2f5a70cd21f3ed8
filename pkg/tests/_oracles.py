"""Independent brute-force oracles used only by the tests.

They share no code paths with the package's solvers: loops over points,
naive sums, and derivative-free random search.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def fefferman_naive(lam) -> tuple[float, int]:
    """Triple loop over ``a``, blocks and their members."""
    lam = list(map(float, lam))
    M = len(lam) - 1
    best, best_a = 0.0, 0
    for a in range(1, M + 1):
        e = 0.0
        k = 1
        while a * k <= M:
            s = 0.0
            for j in range(a * k, a * (k + 1)):
                if j <= M:
                    s += lam[j]
            e += s * s
            k += 1
        if e > best:
            best, best_a = e, a
    return lam[0] + math.sqrt(best), best_a


def adapted_formula_naive(entries, orders):
    """Adapted closed form by explicit enumeration of ``Gamma^k`` and tails.

    ``entries`` is a list of ``(grade, index tuple, s, value)``.
    """
    m = len(orders)
    best = 0.0
    for k in range(m + 1):
        energy = 0.0
        grades = sorted({j for j, *_ in entries if j >= k})
        channels = sorted({s for _, _, s, _ in entries})
        for j in grades:
            for tail in itertools.product(*(range(orders[i]) for i in range(k, j))):
                for s in channels:
                    tot = 0.0
                    for jj, n, ss, v in entries:
                        padded = tuple(n) + (0,) * (j - len(n))
                        if jj == j and ss == s and tuple(x % orders[i] for i, x in
                                                         enumerate(padded[k:j], start=k)) == tail:
                            tot += v
                    energy += tot * tot
        best = max(best, energy)
    return math.sqrt(best)


def adapted_point_values(F):
    """Per-point ``(sum_k |F_k|^2)^(1/2)`` computed with explicit loops."""
    g = F.group
    out = np.zeros(g.shape)
    for x in itertools.product(*(range(n) for n in g.shape)):
        tot = 0.0
        for t in F.terms:
            v = t.values[x]
            tot += float(np.sum(np.abs(v) ** 2))
        out[x] = math.sqrt(tot)
    return out


def dual_norm_random_search(Phi, seed: int = 0, starts: int = 400, steps: int = 3000) -> float:
    """Derivative-free (1+1) random search for ``sup <F, Phi> / ||F||``.

    ``F`` is parametrized by its reduced arrays; the norm and the pairing
    are evaluated by direct sums over points.  The search climbs a smoothed
    norm ``E (|F|^2 + eps^2)^(1/2)`` on the unit sphere with ``eps``
    shrinking in stages (so it does not stall on kinks where ``F``
    vanishes), while the returned value is the best exact ratio seen.
    """
    from hardymult.filtration import AdaptedSequence

    g = Phi.group
    ch = Phi.channel_dim
    extra = (ch,) if ch else ()
    shapes = [g.shape[:k] + extra for k in range(g.depth + 1)]
    sizes = [int(np.prod(s, dtype=int)) for s in shapes]
    phi = Phi.reduced()
    weights = [1.0 / np.prod(g.shape[:k], dtype=int) for k in range(g.depth + 1)]
    rng = np.random.default_rng(seed)
    dim = sum(sizes)
    best = [-np.inf]

    def ratio(z, eps):
        parts, i = [], 0
        for s, n in zip(shapes, sizes):
            parts.append(z[i:i + n].reshape(s))
            i += n
        pair = sum(w * float(np.real(np.sum(p * np.conj(q))))
                   for w, p, q in zip(weights, parts, phi))
        pts = adapted_point_values(AdaptedSequence.from_reduced(g, parts, ch))
        exact = pair / float(np.mean(pts))
        best[0] = max(best[0], exact)
        return pair / float(np.mean(np.sqrt(pts ** 2 + eps ** 2)))

    def draw():
        z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return z / np.linalg.norm(z)

    def sparse():
        # random face: keep a random subset of coordinates
        z = draw() * (rng.random(dim) < rng.uniform(0.1, 0.6))
        n = np.linalg.norm(z)
        return z / n if n else draw()

    cands = [draw() if i % 2 else sparse() for i in range(starts)]
    for j in range(dim):  # coordinate vertices with random phases
        for theta in rng.uniform(0, 2 * np.pi) + np.arange(64) * np.pi / 32:
            e = np.zeros(dim, dtype=complex)
            e[j] = np.exp(1j * theta)
            cands.append(e)
    pool = sorted(((ratio(z, 0.0), i, z) for i, z in enumerate(cands)), key=lambda t: -t[0])[:3]
    for _, _, z in pool:
        # an unsmoothed climb first keeps sparse starts near their vertex
        for eps in (0.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0):
            # one step size per coordinate plus one for isotropic moves (index dim)
            sigma = np.full(dim + 1, 10 * eps or 0.1)
            r = ratio(z, eps)
            for _ in range(steps // 8):
                j = int(rng.integers(dim + 1)) if rng.random() < 0.5 else dim
                step = draw()
                if j < dim:  # single-coordinate move, so sparse points stay sparse
                    step = np.where(np.arange(dim) == j, step / abs(step[j]), 0)
                cand = z + sigma[j] * step
                cand /= np.linalg.norm(cand)
                rc = ratio(cand, eps)
                if rc > r:
                    z, r = cand, rc
                    sigma[j] = min(2.0 * sigma[j], 1.0)
                else:
                    sigma[j] = max(0.84 * sigma[j], 1e-12)  # roughly the one-fifth success rule
    return best[0]


def _tail_term_naive(entries):
    """``max_{k>=0} (sum over (nonzero tail beyond k, s) of (sum over heads)^2)^(1/2)``."""
    depth = max((len(n) for n, _, _ in entries), default=0)
    best = 0.0
    for k in range(depth + 1):
        tails = {}
        for n, s, v in entries:
            n = tuple(n)
            while n and n[-1] == 0:
                n = n[:-1]
            if len(n) > k:
                key = (n[k:], s)
                tails[key] = tails.get(key, 0.0) + v
        best = max(best, sum(t * t for t in tails.values()))
    return math.sqrt(best)


def corollary_naive(entries):
    """Two-term martingale Hardy formula from ``(index, s, value)`` triples."""
    depth = max((len(n) for n, _, _ in entries), default=0)
    second = 0.0
    for k in range(1, depth + 1):
        per_s = {}
        for n, s, v in entries:
            n = tuple(n)
            while n and n[-1] == 0:
                n = n[:-1]
            if len(n) == k:
                per_s[s] = per_s.get(s, 0.0) + v
        second = max(second, sum(t * t for t in per_s.values()))
    return _tail_term_naive(entries) + math.sqrt(second)


def hardy_last_naive(entries):
    """Final-theorem formula: largest Fefferman norm of a collapsed sequence plus the tail term."""
    depth = max((len(n) for n, _, _ in entries), default=0)
    first = 0.0
    for k in range(1, depth + 1):
        seq = {}
        for n, _, v in entries:
            n = tuple(n)
            while n and n[-1] == 0:
                n = n[:-1]
            if len(n) == k:
                seq[n[-1]] = seq.get(n[-1], 0.0) + v
        if seq:
            lam = [seq.get(j, 0.0) for j in range(max(seq) + 1)]
            first = max(first, fefferman_naive(lam)[0])
    return first + _tail_term_naive(entries)
