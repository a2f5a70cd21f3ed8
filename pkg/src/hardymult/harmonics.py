"""Exact Fourier analysis on finite products of cyclic groups.

A group element of ``Z_{N_1} x ... x Z_{N_m}`` is stored in lexicographic
order with coordinate 1 slowest, i.e. a function on the group is a numpy
array of shape ``(N_1, ..., N_m)`` in C order (plus a trailing channel axis
for vector-valued functions).  Conditional expectation onto the first ``k``
coordinates is then a mean over the trailing axes.

Characters are ``gamma_n(x) = exp(2 pi i sum_j n_j x_j / N_j)``.  A
coordinate flagged as a discretized torus labels its frequencies in
``(-N/2, N/2]``; a plain cyclic coordinate uses ``0..N-1``.  Spectral arrays
are stored by position ``n mod N``, so labels and positions agree for
nonnegative labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

# Largest group we agree to materialize; keeps every index inside int64.
MAX_GROUP_SIZE = 2**40


@dataclass(frozen=True)
class GroupSpec:
    factor_orders: tuple[int, ...]
    torus_flags: tuple[bool, ...]

    def __post_init__(self):
        orders = tuple(int(n) for n in self.factor_orders)
        flags = tuple(bool(t) for t in self.torus_flags)
        if len(orders) != len(flags):
            raise ValueError(
                f"torus_flags has length {len(flags)}, expected {len(orders)}"
            )
        for i, n in enumerate(orders):
            if n < 1:
                raise ValueError(f"factor order at coordinate {i + 1} is {n}; must be >= 1")
        size = 1
        for n in orders:
            size *= n
            if size > MAX_GROUP_SIZE:
                raise OverflowError(f"group size exceeds {MAX_GROUP_SIZE}")
        object.__setattr__(self, "factor_orders", orders)
        object.__setattr__(self, "torus_flags", flags)

    @property
    def depth(self) -> int:
        return len(self.factor_orders)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.factor_orders

    @property
    def size(self) -> int:
        return int(np.prod(self.factor_orders, dtype=np.int64)) if self.factor_orders else 1

    @property
    def all_torus(self) -> bool:
        return all(self.torus_flags)

    def prefix(self, k: int) -> "GroupSpec":
        """The group of the first ``k`` coordinates."""
        if not 0 <= k <= self.depth:
            raise ValueError(f"prefix length {k} outside 0..{self.depth}")
        return GroupSpec(self.factor_orders[:k], self.torus_flags[:k])

    def frequency_range(self, j: int) -> range:
        """Frequency labels of coordinate ``j`` (0-based)."""
        n = self.factor_orders[j]
        if self.torus_flags[j]:
            return range(-((n - 1) // 2), n // 2 + 1)
        return range(n)

    def label_to_position(self, j: int, label: int) -> int:
        if label not in self.frequency_range(j):
            raise IndexError(
                f"frequency {label} outside the range of coordinate {j + 1} "
                f"({self.frequency_range(j).start}..{self.frequency_range(j).stop - 1})"
            )
        return label % self.factor_orders[j]

    def position_to_label(self, j: int, pos: int) -> int:
        n = self.factor_orders[j]
        if self.torus_flags[j] and pos > n // 2:
            return pos - n
        return pos

    def frequency_labels(self, j: int) -> np.ndarray:
        """Labels of coordinate ``j`` in storage (position) order."""
        return np.array([self.position_to_label(j, p) for p in range(self.factor_orders[j])])

    def label_grids(self) -> list[np.ndarray]:
        """Per-coordinate label arrays broadcast to the full spectral shape."""
        if self.depth == 0:
            return []
        return list(np.meshgrid(*[self.frequency_labels(j) for j in range(self.depth)],
                                indexing="ij"))


def build_group(factor_orders: Sequence[int], torus_flags: Sequence[bool] | None = None) -> GroupSpec:
    if torus_flags is None:
        torus_flags = [False] * len(factor_orders)
    return GroupSpec(tuple(factor_orders), tuple(torus_flags))


def torus(N: int, depth: int) -> GroupSpec:
    """Discretized ``T^depth`` with ``N`` points per coordinate."""
    return build_group([N] * depth, [True] * depth)


@dataclass(frozen=True)
class MultiIndex:
    """Finitely supported frequency tuple, stored with trailing zeros stripped."""

    entries: tuple[int, ...] = ()

    def __post_init__(self):
        e = [int(v) for v in self.entries]
        while e and e[-1] == 0:
            e.pop()
        object.__setattr__(self, "entries", tuple(e))

    @property
    def max_support(self) -> int:
        """1-based position of the last nonzero entry; 0 for the zero index."""
        return len(self.entries)

    @property
    def is_zero(self) -> bool:
        return not self.entries

    @property
    def is_last_positive(self) -> bool:
        return bool(self.entries) and self.entries[-1] > 0

    def padded(self, length: int) -> tuple[int, ...]:
        if len(self.entries) > length:
            raise IndexError(f"index {self.entries} has support beyond coordinate {length}")
        return self.entries + (0,) * (length - len(self.entries))

    def __getitem__(self, j: int) -> int:
        """0-based entry access; zero beyond the support."""
        return self.entries[j] if j < len(self.entries) else 0

    def __repr__(self):
        return f"MultiIndex{self.entries}"


def _as_index(n) -> MultiIndex:
    return n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))


@dataclass(frozen=True, eq=False)
class GroupFunction:
    group: GroupSpec
    values: np.ndarray
    channel_dim: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        expected = self.group.shape + ((self.channel_dim,) if self.channel_dim else ())
        if v.shape != expected:
            if v.size == int(np.prod(expected, dtype=np.int64)) and v.ndim == 1:
                v = v.reshape(expected)
            else:
                raise ValueError(f"values have shape {v.shape}, expected {expected}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, group: GroupSpec, channel_dim: int | None = None) -> "GroupFunction":
        extra = (channel_dim,) if channel_dim else ()
        return cls(group, np.zeros(group.shape + extra, dtype=complex), channel_dim)

    def mean(self):
        axes = tuple(range(self.group.depth))
        m = self.values.mean(axis=axes) if axes else self.values
        return m if self.channel_dim else complex(m)

    def __add__(self, other: "GroupFunction") -> "GroupFunction":
        return GroupFunction(self.group, self.values + other.values, self.channel_dim)

    def __sub__(self, other: "GroupFunction") -> "GroupFunction":
        return GroupFunction(self.group, self.values - other.values, self.channel_dim)

    def __mul__(self, c) -> "GroupFunction":
        return GroupFunction(self.group, self.values * c, self.channel_dim)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    """Fourier coefficients by frequency position (see module docstring)."""

    group: GroupSpec
    coefficients: np.ndarray
    channel_dim: int | None = None

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        expected = self.group.shape + ((self.channel_dim,) if self.channel_dim else ())
        if c.shape != expected:
            raise ValueError(f"coefficients have shape {c.shape}, expected {expected}")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_mapping(cls, group: GroupSpec, mapping: Mapping, channel_dim: int | None = None):
        """Build from ``{MultiIndex or tuple: coefficient}``."""
        extra = (channel_dim,) if channel_dim else ()
        c = np.zeros(group.shape + extra, dtype=complex)
        for n, value in mapping.items():
            c[position(group, _as_index(n))] += value
        return cls(group, c, channel_dim)

    def __getitem__(self, n):
        return self.coefficients[position(self.group, _as_index(n))]

    def items(self, tol: float = 0.0) -> Iterator[tuple[MultiIndex, complex]]:
        """Yield ``(MultiIndex, coefficient)`` for entries above ``tol`` in modulus."""
        c = self.coefficients
        mags = np.linalg.norm(c, axis=-1) if self.channel_dim else np.abs(c)
        for pos in zip(*np.nonzero(mags > tol)):
            label = tuple(self.group.position_to_label(j, int(p)) for j, p in enumerate(pos))
            yield MultiIndex(label), c[pos]


def position(group: GroupSpec, n: MultiIndex) -> tuple[int, ...]:
    """Array position of frequency ``n``; raises IndexError if out of range."""
    labels = n.padded(group.depth)
    return tuple(group.label_to_position(j, l) for j, l in enumerate(labels))


def _spectral_axes(group: GroupSpec) -> tuple[int, ...]:
    return tuple(range(group.depth))


def dft_forward(f: GroupFunction) -> SpectrumTable:
    """Coefficients ``E[f conj(gamma)]`` with the uniform probability mean."""
    g = f.group
    axes = _spectral_axes(g)
    if axes:
        c = np.fft.fftn(f.values, axes=axes) / g.size
    else:
        c = np.array(f.values)
    return SpectrumTable(g, c, f.channel_dim)


def dft_inverse(F: SpectrumTable) -> GroupFunction:
    g = F.group
    axes = _spectral_axes(g)
    if axes:
        v = np.fft.ifftn(F.coefficients, axes=axes) * g.size
    else:
        v = np.array(F.coefficients)
    return GroupFunction(g, v, F.channel_dim)


def character(group: GroupSpec, n) -> GroupFunction:
    """The character ``gamma_n`` as a function on ``group``."""
    n = _as_index(n)
    labels = n.padded(group.depth)
    for j, l in enumerate(labels):
        group.label_to_position(j, l)
    phase = np.zeros(group.shape)
    for j, l in enumerate(labels):
        if l:
            x = np.arange(group.factor_orders[j]) / group.factor_orders[j]
            shape = [1] * group.depth
            shape[j] = -1
            phase = phase + l * x.reshape(shape)
    return GroupFunction(group, np.exp(2j * np.pi * phase))


def translate(f: GroupFunction, y: Sequence[int]) -> GroupFunction:
    """``x -> f(x + y)``; multiplies each coefficient by ``gamma(y)``."""
    axes = _spectral_axes(f.group)
    return GroupFunction(f.group, np.roll(f.values, tuple(-int(t) for t in y), axis=axes),
                         f.channel_dim)
