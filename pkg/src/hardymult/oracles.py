"""Independent routes to multiplier norms.

The dual route evaluates ``sup_c ||sum c lambda gamma (x) e_k (x) e_s||`` in
the Weisz dual norm over a set of sign assignments ``c``; the primal route
samples test functions and records ``sum lambda |f^| / ||f||``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .filtration import AdaptedSequence, adapted_l1_norm
from .formulas import (GradedMultiplierFamily, MultiplierTable, adapted_multiplier_norm,
                       hardy_last_multiplier_norm)
from .harmonics import GroupFunction, GroupSpec, MultiIndex, character, dft_forward, position
from .hardy import h1_last_norm, sample_hardy_martingale

SIGN_STRATEGIES = ("exhaustive-real-signs", "optimal-character", "random-restarts")
EXHAUSTIVE_CAP = 2**20
_BATCH = 2048


@dataclass(frozen=True)
class SignAssignment:
    """Unimodular ``c`` per support point ``(grade, index, channel)``."""

    values: Mapping[tuple[int, MultiIndex, int], complex]

    def __post_init__(self):
        for key, c in self.values.items():
            if abs(abs(c) - 1) > 1e-12:
                raise ValueError(f"sign at {key} has modulus {abs(c)}")


@dataclass
class Prop1Result:
    value: float
    strategy: str
    candidates: int
    best: SignAssignment | None = field(default=None, repr=False)

    def __float__(self):
        return self.value


class _SignEvaluator:
    """Batched Weisz dual norm of ``Phi(c)`` for many sign vectors ``c``."""

    def __init__(self, family: GradedMultiplierFamily, group: GroupSpec):
        family.check_group(group)
        self.group = group
        self.m = group.depth
        self.support = family.support()
        self.lam = np.array([v for *_, v in self.support])
        self.chars = np.array([character(group, n).values.ravel() for _, n, _, _ in self.support])
        self.blocks = {}
        for p, (j, _, s, _) in enumerate(self.support):
            self.blocks.setdefault((j, s), []).append(p)

    def evaluate(self, C: np.ndarray) -> np.ndarray:
        """Weisz dual norm for each row of ``C`` (shape ``(B, P)``)."""
        B = C.shape[0]
        shape = self.group.shape
        A = np.zeros((self.m + 1, B) + shape)
        W = C * self.lam
        for (j, s), idx in self.blocks.items():
            phi = W[:, idx] @ self.chars[idx]
            A[j] += (np.abs(phi) ** 2).reshape((B,) + shape)
        tail = np.zeros((B,) + shape)
        best = np.zeros(B)
        for k in range(self.m, -1, -1):
            tail = tail + A[k]
            axes = tuple(range(1 + k, 1 + self.m))
            e = tail.mean(axis=axes) if axes else tail
            best = np.maximum(best, e.reshape(B, -1).max(axis=1))
        return np.sqrt(best)

    def assignment(self, c: np.ndarray) -> SignAssignment:
        return SignAssignment({(j, n, s): complex(ci)
                               for (j, n, s, _), ci in zip(self.support, c)})

    def optimal_characters(self) -> np.ndarray:
        """Rows ``c = conj(gamma_{<=k}(x))`` for every ``k`` and ``x in G^k``."""
        rows = []
        labels = [n.padded(self.m) for _, n, _, _ in self.support]
        N = self.group.factor_orders
        for k in range(self.m + 1):
            for x in itertools.product(*[range(N[i]) for i in range(k)]):
                phase = np.array([sum(l[i] * x[i] / N[i] for i in range(k)) for l in labels])
                rows.append(np.exp(-2j * np.pi * phase))
        return np.array(rows).reshape(-1, len(self.support))


def prop1_dual_value(family: GradedMultiplierFamily, group: GroupSpec,
                     space: str = "adapted-L1", strategy: str = "optimal-character",
                     restarts: int = 256, seed: int = 0, cap: int = EXHAUSTIVE_CAP) -> Prop1Result:
    """Max of the Weisz dual norm of ``sum c lambda gamma e_k e_s`` over candidate signs.

    ``exhaustive-real-signs`` enumerates ``{+1,-1}`` assignments (falling back
    to random restarts plus the optimal-character rows beyond ``cap``);
    ``optimal-character`` uses ``c = conj(gamma(x))`` for every level ``k``
    and point ``x``; ``random-restarts`` draws ``restarts`` uniform phases.
    """
    if space != "adapted-L1":
        raise ValueError(f"unsupported space {space!r}; only 'adapted-L1' is implemented")
    if strategy not in SIGN_STRATEGIES:
        raise ValueError(f"unknown sign strategy {strategy!r}")
    ev = _SignEvaluator(family, group)
    P = len(ev.support)
    if P == 0:
        return Prop1Result(0.0, strategy, 0)

    def batches():
        if strategy == "optimal-character":
            yield ev.optimal_characters()
        elif strategy == "exhaustive-real-signs" and 2**P <= cap:
            bits = 1 << np.arange(P)
            for start in range(0, 2**P, _BATCH):
                codes = np.arange(start, min(start + _BATCH, 2**P))[:, None]
                yield np.where(codes & bits, -1.0, 1.0).astype(complex)
        else:
            if strategy == "exhaustive-real-signs":
                yield ev.optimal_characters()
            rng = np.random.default_rng(seed)
            for start in range(0, restarts, _BATCH):
                b = min(_BATCH, restarts - start)
                yield np.exp(2j * np.pi * rng.random((b, P)))

    used = strategy
    if strategy == "exhaustive-real-signs" and 2**P > cap:
        used = "random-restarts+optimal-character"
    best, best_c, count = -1.0, None, 0
    for C in batches():
        vals = ev.evaluate(C)
        i = int(np.argmax(vals))
        count += C.shape[0]
        if vals[i] > best:
            best, best_c = float(vals[i]), C[i]
    return Prop1Result(best, used, count, ev.assignment(best_c))


def primal_pairing(lam, f) -> float:
    """``sum lambda_{gamma,s} |<f^(gamma), e_s>|``.

    Accepts a ``MultiplierTable`` with a ``GroupFunction`` or a
    ``GradedMultiplierFamily`` with an ``AdaptedSequence``.
    """
    if isinstance(lam, GradedMultiplierFamily):
        if not isinstance(f, AdaptedSequence):
            raise TypeError("a graded family pairs with an AdaptedSequence")
        if lam.max_grade > f.group.depth:
            raise ValueError(f"grade {lam.max_grade} beyond depth {f.group.depth}")
        terms = []
        for j, table in lam.grades.items():
            terms.extend(_table_terms(table, f.terms[j]))
        return math.fsum(terms)
    if isinstance(lam, MultiplierTable):
        if not isinstance(f, GroupFunction):
            raise TypeError("a MultiplierTable pairs with a GroupFunction")
        return math.fsum(_table_terms(lam, f))
    raise TypeError(f"unsupported multiplier type {type(lam).__name__}")


def _table_terms(table: MultiplierTable, f: GroupFunction) -> list[float]:
    coef = dft_forward(f).coefficients
    ch = f.channel_dim or 1
    if table.channels > ch:
        raise ValueError(f"table has {table.channels} channels, function has {ch}")
    out = []
    for (n, s), v in table.entries.items():
        c = coef[position(f.group, n)]
        out.append(v * abs(c[s] if f.channel_dim else c))
    return out


@dataclass
class RatioSearchResult:
    max_ratio: float
    argmax: str
    formula_value: float
    trials: int
    ratios: list[float] = field(repr=False, default_factory=list)

    @property
    def ratio_to_formula(self) -> float:
        return self.max_ratio / self.formula_value if self.formula_value > 0 else 0.0


def trial_seeds(seed: int, n: int) -> list[int]:
    """Per-trial seeds derived from one master seed, independent of scheduling."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def random_adapted(group: GroupSpec, seed, channels: int | None = None) -> AdaptedSequence:
    rng = np.random.default_rng(seed)
    extra = (channels,) if channels else ()
    arrays = []
    for k in range(group.depth + 1):
        sh = group.shape[:k] + extra
        arrays.append((rng.standard_normal(sh) + 1j * rng.standard_normal(sh)) / np.sqrt(2))
    return AdaptedSequence.from_reduced(group, arrays, channels)


def primal_ratio_search(lam, space: str, sampler: Mapping[str, Any], trials: int,
                        seed: int) -> RatioSearchResult:
    """Max over sampled ``f`` of ``primal_pairing(lam, f) / ||f||``.

    ``space`` is ``"hardy-last"`` (sampler keys ``group``, ``degree``;
    norm = square function) or ``"adapted-L1"`` (sampler keys ``group``,
    ``channels``).  Characters on the support of ``lam`` are always probed
    in addition to the random draws.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    group: GroupSpec = sampler["group"]
    ratios: list[float] = []
    labels: list[str] = []
    if space == "hardy-last":
        if not isinstance(lam, MultiplierTable):
            raise TypeError("hardy-last search needs a MultiplierTable")
        lam.check_group(group)
        formula = hardy_last_multiplier_norm(lam)
        degree = int(sampler.get("degree") or max(
            [abs(n[j]) for n, _ in lam.entries for j in range(n.max_support)] or [1]))
        for (n, _), _v in lam.entries.items():
            f = character(group, n)
            ratios.append(primal_pairing(lam, f) / h1_last_norm(f))
            labels.append(f"character {list(n.entries)}")
        if degree < 1:
            raise ValueError("hardy-last sampling needs degree >= 1")
        for t, (s, f) in enumerate(nonzero_samples(
                lambda s: sample_hardy_martingale(group, degree, s), seed, trials)):
            ratios.append(primal_pairing(lam, f) / h1_last_norm(f))
            labels.append(f"trial {t} seed {s}")
    elif space == "adapted-L1":
        if not isinstance(lam, GradedMultiplierFamily):
            raise TypeError("adapted-L1 search needs a GradedMultiplierFamily")
        lam.check_group(group)
        formula = adapted_multiplier_norm(lam, group)
        channels = sampler.get("channels") or (lam.channels if lam.channels > 1 else None)
        for j, n, s, _v in lam.support():
            F = _character_sequence(group, j, n, s, channels)
            ratios.append(primal_pairing(lam, F) / adapted_l1_norm(F))
            labels.append(f"character grade {j} {list(n.entries)} s={s}")
        for t, (s, F) in enumerate(nonzero_samples(
                lambda s: random_adapted(group, s, channels), seed, trials)):
            ratios.append(primal_pairing(lam, F) / adapted_l1_norm(F))
            labels.append(f"trial {t} seed {s}")
    else:
        raise ValueError(f"unknown space {space!r}")
    i = int(np.argmax(ratios)) if ratios else 0
    return RatioSearchResult(float(ratios[i]) if ratios else 0.0,
                             labels[i] if labels else "", formula, trials, ratios)


def nonzero_samples(make, seed: int, trials: int, max_redraws: int = 100):
    """``(seed, sample)`` pairs for ``trials`` draws, redrawing zero samples."""
    root = np.random.SeedSequence(seed)
    children = iter(root.spawn(trials + max_redraws))
    out = []
    while len(out) < trials:
        try:
            child = next(children)
        except StopIteration:
            raise RuntimeError("sampler keeps producing the zero function") from None
        s = int(child.generate_state(1)[0])
        x = make(s)
        values = x.stacked() if isinstance(x, AdaptedSequence) else x.values
        if np.any(values != 0):
            out.append((s, x))
    return out


def _character_sequence(group: GroupSpec, j: int, n: MultiIndex, s: int,
                        channels: int | None) -> AdaptedSequence:
    chi = character(group, n).values
    terms = [GroupFunction.zeros(group, channels) for _ in range(group.depth + 1)]
    if channels:
        v = np.zeros(group.shape + (channels,), dtype=complex)
        v[..., s] = chi
    else:
        v = chi
    terms[j] = GroupFunction(group, v, channels)
    return AdaptedSequence(group, tuple(terms), channels)
