"""Two-sided norm equivalences measured as observed ratio brackets.

Each tag draws seeded samples, computes a numerator and denominator norm and
records their ratio; the summary holds the min/max ratio and the sample
identifiers where they occur.  No equivalence constant is assumed anywhere.
"""

from __future__ import annotations

import math
from typing import Any, Callable, Mapping

import numpy as np

from .davis_garsia import davis_garsia_solve, dg_objective
from .filtration import (adapted_l1_norm, dual_norm_maximize, lepingle_project,
                         square_function_norm, weisz_dual_norm)
from .formulas import MultiplierTable, martingale_hardy_terms
from .harmonics import GroupSpec, MultiIndex, build_group, torus
from .hardy import l1_norm, sample_hardy_martingale
from .oracles import random_adapted
from .report import Report

WEISZ_GROUPS = ((2,), (3,), (2, 2), (3, 3), (2, 2, 2), (4, 4), (3, 3, 3), (4, 4, 4), (8, 8),
                (2, 4, 8))

DEFAULTS: dict[str, dict[str, Any]] = {
    "square-function": {"N": 8, "depths": [1, 2, 3], "degree": 4},
    "dg-square": {"N": 8, "depths": [1, 2, 3], "degree": 4, "tolerance": 1e-4, "budget": 2500},
    "muller": {"N": 8, "depths": [3], "degree": 4, "tolerance": 1e-4, "budget": 2500},
    "weisz": {"groups": [list(g) for g in WEISZ_GROUPS], "channels": [None, 2], "budget": 3000},
    "lepingle": {"groups": [list(g) for g in WEISZ_GROUPS], "channels": [None, 2]},
    "corollary-omission": {"N": 3, "depth": 3, "support": 6},
}


def _hardy_group(cfg, i: int) -> GroupSpec:
    depths = cfg["depths"]
    return torus(int(cfg["N"]), int(depths[i % len(depths)]))


def _square_function(cfg, seed, trials):
    rows = []
    for i, (s, f) in enumerate(_hardy_draws(cfg, seed, trials)):
        l1, sq = l1_norm(f), square_function_norm(f)
        rows.append({"sample": i, "seed": s, "depth": f.group.depth,
                     "numerator": l1, "denominator": sq, "ratio": l1 / sq})
    return rows


def _hardy_draws(cfg, seed, trials):
    out = []
    children = iter(np.random.SeedSequence(seed).spawn(trials + 100))
    while len(out) < trials:
        s = int(next(children).generate_state(1)[0])
        f = sample_hardy_martingale(_hardy_group(cfg, len(out)), int(cfg["degree"]), s)
        if np.any(f.values != 0):
            out.append((s, f))
    return out


def _dg_square(cfg, seed, trials):
    rows = []
    for i, (s, f) in enumerate(_hardy_draws(cfg, seed, trials)):
        pair = davis_garsia_solve(f, constrain_hardy=False, tolerance=cfg["tolerance"],
                                  budget=cfg["budget"])
        sq = square_function_norm(f)
        rows.append({"sample": i, "seed": s, "depth": f.group.depth,
                     "numerator": pair.objective, "denominator": sq,
                     "ratio": pair.objective / sq, "status": pair.status,
                     "pure_l1_bound": dg_objective(f, f), "pure_l2_bound": dg_objective(f, 0 * f)})
    return rows


def _muller(cfg, seed, trials):
    rows = []
    for i, (s, f) in enumerate(_hardy_draws(cfg, seed, trials)):
        con = davis_garsia_solve(f, constrain_hardy=True, tolerance=cfg["tolerance"],
                                 budget=cfg["budget"])
        # the constrained split is feasible for the unconstrained problem
        unc = davis_garsia_solve(f, constrain_hardy=False, tolerance=cfg["tolerance"],
                                 budget=cfg["budget"], init=con.g)
        rows.append({"sample": i, "seed": s, "depth": f.group.depth,
                     "numerator": con.objective, "denominator": unc.objective,
                     "ratio": con.objective / unc.objective,
                     "status": f"{con.status}/{unc.status}",
                     "feasibility": float(np.max(np.abs(con.g.values + con.h.values - f.values)))})
    return rows


def adapted_draws(cfg, seed, trials, sparse: bool):
    """Seeded ``(seed, AdaptedSequence)`` draws cycling through ``cfg`` groups and channels.

    With ``sparse`` each term is dropped with probability 0.4, which gives
    the Weisz comparison sequences that are not uniformly spread over ``k``.
    """
    groups = cfg["groups"]
    chans = cfg["channels"]
    out = []
    children = iter(np.random.SeedSequence(seed).spawn(trials + 100))
    while len(out) < trials:
        i = len(out)
        s = int(next(children).generate_state(1)[0])
        g = build_group(groups[i % len(groups)])
        ch = chans[(i // len(groups)) % len(chans)]
        F = random_adapted(g, s, ch)
        if sparse:
            keep = np.random.default_rng(s + 1).random(g.depth + 1) < 0.6
            terms = [t if keep[k] else 0 * t for k, t in enumerate(F.terms)]
            F = type(F)(g, tuple(terms), ch)
        if np.any(F.stacked() != 0):
            out.append((s, F))
    return out


def _weisz(cfg, seed, trials):
    rows = []
    for i, (s, Phi) in enumerate(adapted_draws(cfg, seed, trials, sparse=True)):
        res = dual_norm_maximize(Phi, budget=int(cfg["budget"]))
        w = weisz_dual_norm(Phi)
        rows.append({"sample": i, "seed": s, "group": list(Phi.group.factor_orders),
                     "channels": Phi.channel_dim or 1,
                     "numerator": res.value, "denominator": w, "ratio": res.value / w,
                     "upper_bound": res.upper_bound, "status": res.status})
    return rows


def _lepingle(cfg, seed, trials):
    rows = []
    for i, (s, F) in enumerate(adapted_draws(cfg, seed, trials, sparse=False)):
        num, den = adapted_l1_norm(lepingle_project(F)), adapted_l1_norm(F)
        rows.append({"sample": i, "seed": s, "group": list(F.group.factor_orders),
                     "channels": F.channel_dim or 1,
                     "numerator": num, "denominator": den, "ratio": num / den})
    return rows


def random_table(rng: np.random.Generator, N: int, depth: int, support: int,
                 cone: bool = False) -> MultiplierTable:
    """Random nonnegative table on ``support`` distinct nonzero indices."""
    entries = {}
    while len(entries) < support:
        j = int(rng.integers(1, depth + 1))
        if cone:
            head = rng.integers(-((N - 1) // 2), N // 2 + 1, size=j - 1)
            last = rng.integers(1, N // 2 + 1)
        else:
            head = rng.integers(0, N, size=j - 1)
            last = rng.integers(1, N)
        n = MultiIndex(tuple(int(v) for v in head) + (int(last),))
        entries[(n, 0)] = float(rng.random())
    return MultiplierTable(1, entries)


def _corollary_omission(cfg, seed, trials):
    rows = []
    children = np.random.SeedSequence(seed).spawn(trials)
    for i, child in enumerate(children):
        s = int(child.generate_state(1)[0])
        lam = random_table(np.random.default_rng(s), int(cfg["N"]), int(cfg["depth"]),
                           int(cfg["support"]))
        t = martingale_hardy_terms(lam)
        rows.append({"sample": i, "seed": s, "numerator": t.value, "denominator": t.t1,
                     "ratio": t.value / t.t1 if t.t1 > 0 else math.inf,
                     "t1": t.t1, "t2": t.t2})
    return rows


EQUIVALENCES: dict[str, Callable] = {
    "square-function": _square_function,
    "dg-square": _dg_square,
    "muller": _muller,
    "weisz": _weisz,
    "lepingle": _lepingle,
    "corollary-omission": _corollary_omission,
}

DESCRIPTIONS = {
    "square-function": "L^1 norm / square-function norm on Hardy martingales",
    "dg-square": "Davis-Garsia infimum / square-function norm",
    "muller": "Hardy-constrained / unconstrained Davis-Garsia infimum",
    "weisz": "exact adapted dual norm / Weisz formula",
    "lepingle": "||projected differences|| / ||adapted sequence|| in L^1(l^2)",
    "corollary-omission": "full corollary formula / first summand alone",
}


def equivalence_report(which: str, trials: int, seed: int,
                       sampler: Mapping[str, Any] | None = None) -> Report:
    if which not in EQUIVALENCES:
        raise ValueError(f"unknown equivalence {which!r}; choose from {sorted(EQUIVALENCES)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = dict(DEFAULTS[which])
    cfg.update(sampler or {})
    rows = EQUIVALENCES[which](cfg, seed, trials)
    ratios = np.array([r["ratio"] for r in rows], dtype=float)
    lo, hi = int(np.argmin(ratios)), int(np.argmax(ratios))
    summary = {"equivalence": which, "description": DESCRIPTIONS[which], "trials": trials,
               "min_ratio": float(ratios[lo]), "max_ratio": float(ratios[hi])}
    witnesses = {"argmin": {"sample": rows[lo]["sample"], "seed": rows[lo]["seed"]},
                 "argmax": {"sample": rows[hi]["sample"], "seed": rows[hi]["seed"]}}
    return Report("equiv-report", {"which": which, "trials": trials, "seed": seed,
                                   "sampler": cfg}, rows, summary, witnesses)
