"""Characterization norms for Fourier multipliers into l^1.

All sums run over finitely supported nonnegative tables and are reduced
with ``math.fsum``, which is correctly rounded and therefore independent of
evaluation order.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .harmonics import GroupSpec, MultiIndex, position


@dataclass(frozen=True)
class MultiplierTable:
    """Sparse nonnegative table ``(MultiIndex, channel) -> value``."""

    channels: int = 1
    entries: Mapping[tuple[MultiIndex, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.channels) < 1:
            raise ValueError("channels must be >= 1")
        clean = {}
        for (n, s), v in self.entries.items():
            n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
            s = int(s)
            v = float(v)
            if not 0 <= s < self.channels:
                raise ValueError(f"channel {s} outside 0..{self.channels - 1}")
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"entry at {n.entries}, s={s} is {v}; must be finite and >= 0")
            if (n, s) in clean:
                raise ValueError(f"duplicate entry at {n.entries}, s={s}")
            clean[(n, s)] = v
        object.__setattr__(self, "channels", int(self.channels))
        object.__setattr__(self, "entries", dict(sorted(clean.items(), key=_key_order)))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence[int], float]], channels: int = 1,
                   channel: int = 0) -> "MultiplierTable":
        return cls(channels, {(MultiIndex(tuple(n)), channel): v for n, v in pairs})

    @classmethod
    def sequence(cls, values: Sequence[float]) -> "MultiplierTable":
        """One-dimensional table ``j -> values[j]`` (zeros dropped)."""
        return cls(1, {(MultiIndex((j,)), 0): v for j, v in enumerate(values) if v})

    def scaled(self, t: float) -> "MultiplierTable":
        return MultiplierTable(self.channels, {k: t * v for k, v in self.entries.items()})

    def __add__(self, other: "MultiplierTable") -> "MultiplierTable":
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0.0) + v
        return MultiplierTable(max(self.channels, other.channels), out)

    @property
    def max_support(self) -> int:
        return max((n.max_support for n, _ in self.entries), default=0)

    def check_group(self, group: GroupSpec):
        for n, _ in self.entries:
            position(group, n)

    def __len__(self):
        return len(self.entries)


def _key_order(item):
    (n, s), _ = item
    return (len(n.entries), n.entries, s)


@dataclass(frozen=True)
class GradedMultiplierFamily:
    """Per-grade tables ``lambda^(j)`` with index support inside coordinates ``1..j``."""

    channels: int = 1
    grades: Mapping[int, MultiplierTable] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for j, table in sorted(self.grades.items()):
            j = int(j)
            if j < 0:
                raise ValueError("grades must be >= 0")
            if table.channels > self.channels:
                raise ValueError(f"grade {j} table has {table.channels} channels > {self.channels}")
            for n, _ in table.entries:
                if n.max_support > j:
                    raise ValueError(f"grade {j} entry {n.entries} is supported beyond coordinate {j}")
            if table.entries:
                clean[j] = table
        object.__setattr__(self, "grades", clean)

    @property
    def max_grade(self) -> int:
        return max(self.grades, default=0)

    def support(self) -> list[tuple[int, MultiIndex, int, float]]:
        """``(grade, index, channel, value)`` in canonical order."""
        return [(j, n, s, v) for j, t in self.grades.items() for (n, s), v in t.entries.items()]

    def check_group(self, group: GroupSpec):
        if self.max_grade > group.depth:
            raise ValueError(f"grade {self.max_grade} exceeds depth {group.depth}")
        for t in self.grades.values():
            t.check_group(group)

    def scaled(self, t: float) -> "GradedMultiplierFamily":
        return GradedMultiplierFamily(self.channels, {j: tab.scaled(t) for j, tab in self.grades.items()})


def _nonneg_sequence(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size and (np.any(lam < 0) or not np.all(np.isfinite(lam))):
        raise ValueError("fefferman_norm needs finite nonnegative entries")
    return lam


class FeffermanValue(NamedTuple):
    value: float
    block_scale: int  # maximizing a; 0 when every block is empty
    block_energy: float  # max_a sum_k (block sum)^2, before the square root


def fefferman_details(lam: Sequence[float]) -> FeffermanValue:
    """``lam_0 + sqrt(max_a sum_{k>=1} (sum_{j=ak}^{a(k+1)-1} lam_j)^2)``.

    ``a`` runs over integers ``1..M`` (longer blocks are empty).
    """
    lam = _nonneg_sequence(lam)
    if lam.size == 0:
        return FeffermanValue(0.0, 0, 0.0)
    M = lam.size - 1
    best, best_a = 0.0, 0
    for a in range(1, M + 1):
        sums = np.add.reduceat(lam[a:], np.arange(0, M - a + 1, a))
        e = math.fsum((sums * sums).tolist())
        if e > best:
            best, best_a = e, a
    return FeffermanValue(float(lam[0]) + math.sqrt(best), best_a, best)


def fefferman_norm(lam: Sequence[float]) -> float:
    return fefferman_details(lam).value


def _tail_energy(entries: Iterable[tuple[tuple[int, ...], int, float]], k: int) -> float:
    """``sum over (nonzero tail beyond k, s) of (sum over heads of lam)^2``."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    for n, s, v in entries:
        tail = n[k:]
        if tail:
            groups[(tail, s)].append(v)
    return math.fsum(math.fsum(vs) ** 2 for vs in groups.values())


def adapted_multiplier_norm(family: GradedMultiplierFamily, group: GroupSpec | None = None,
                            depth: int | None = None) -> float:
    """``sup_k (sum_{j>=k} sum_s sum_{tail} (sum_{head in Gamma^k} lam^(j))^2)^(1/2)``."""
    return adapted_multiplier_terms(family, group, depth)[0]


def adapted_multiplier_terms(family: GradedMultiplierFamily, group: GroupSpec | None = None,
                             depth: int | None = None) -> tuple[float, int, list[float]]:
    """Value, maximizing ``k`` and the per-``k`` energies."""
    if group is not None:
        family.check_group(group)
        depth = group.depth if depth is None else depth
    if depth is None:
        depth = family.max_grade
    if family.max_grade > depth:
        raise ValueError(f"grade {family.max_grade} exceeds depth {depth}")
    energies = []
    for k in range(depth + 1):
        groups: dict[tuple, list[float]] = defaultdict(list)
        for j, n, s, v in family.support():
            if j < k:
                continue
            # gamma' ranges over Gamma^{[k+1, j]}: keep the padded tail so grades stay distinct
            groups[(j, n.padded(j)[k:], s)].append(v)
        energies.append(math.fsum(math.fsum(vs) ** 2 for vs in groups.values()))
    kmax = int(np.argmax(energies)) if energies else 0
    return math.sqrt(max(energies, default=0.0)), kmax, energies


class TwoTermValue(NamedTuple):
    value: float
    t1: float
    t2: float
    k1: int
    k2: int


def _flat(table: MultiplierTable):
    return [(n.entries, s, v) for (n, s), v in table.entries.items()]


def martingale_hardy_terms(table: MultiplierTable, group: GroupSpec | None = None) -> TwoTermValue:
    if group is not None:
        table.check_group(group)
    flat = _flat(table)
    D = table.max_support
    e1 = [_tail_energy(flat, k) for k in range(D + 1)] or [0.0]
    e2 = [0.0]
    for k in range(1, D + 1):
        per_s: dict[int, list[float]] = defaultdict(list)
        for n, s, v in flat:
            if len(n) == k:
                per_s[s].append(v)
        e2.append(math.fsum(math.fsum(vs) ** 2 for vs in per_s.values()))
    k1, k2 = int(np.argmax(e1)), int(np.argmax(e2))
    t1, t2 = math.sqrt(e1[k1]), math.sqrt(e2[k2])
    return TwoTermValue(t1 + t2, t1, t2, k1, k2)


def martingale_hardy_multiplier_norm(table: MultiplierTable, group: GroupSpec | None = None) -> float:
    """Tail-sum term (``k >= 0``) plus last-coordinate term (``k >= 1``)."""
    return martingale_hardy_terms(table, group).value


def collapsed_sequence(table: MultiplierTable, k: int) -> np.ndarray:
    """``n_k -> sum_{n_<k} lam(n_<k, n_k)`` over entries with max support ``k``."""
    acc: dict[int, list[float]] = defaultdict(list)
    for (n, _), v in table.entries.items():
        if n.max_support == k:
            acc[n.entries[-1]].append(v)
    if not acc:
        return np.zeros(1)
    if min(acc) < 0:
        raise ValueError("collapsed sequence needs nonnegative last frequencies")
    out = np.zeros(max(acc) + 1)
    for i, vs in acc.items():
        out[i] = math.fsum(vs)
    return out


def hardy_last_terms(table: MultiplierTable) -> TwoTermValue:
    if table.channels != 1:
        raise ValueError("the H^1_last formula is scalar: use a single-channel table")
    for (n, _) in table.entries:
        if not n.is_last_positive:
            raise ValueError(f"index {n.entries} lies outside the >_last cone")
    D = table.max_support
    f_vals = [0.0] + [fefferman_norm(collapsed_sequence(table, k)) for k in range(1, D + 1)]
    flat = _flat(table)
    e2 = [_tail_energy(flat, k) for k in range(D + 1)] or [0.0]
    k1, k2 = int(np.argmax(f_vals)), int(np.argmax(e2))
    t1, t2 = f_vals[k1], math.sqrt(e2[k2])
    return TwoTermValue(t1 + t2, t1, t2, k1, k2)


def hardy_last_multiplier_norm(table: MultiplierTable) -> float:
    """Fefferman term (``k >= 1``) plus tail-sum term (``k >= 0``)."""
    return hardy_last_terms(table).value
