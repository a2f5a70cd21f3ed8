"""Multiplier table documents.

Schema (JSON)::

    {"channels": 1,
     "entries": [{"index": [0, 3], "s": 0, "value": 1.5, "grade": 2}, ...]}

``grade`` is optional and only read by :func:`parse_graded_family`; it
defaults to the index's max support.  Indices are normalized by stripping
trailing zeros, and a repeated ``(index, s)`` (or ``(grade, index, s)``) key
is rejected.
"""

from __future__ import annotations

import json
import math
from numbers import Integral, Real

from .formulas import GradedMultiplierFamily, MultiplierTable
from .harmonics import MultiIndex


class TableError(ValueError):
    pass


def _load(document):
    if isinstance(document, (str, bytes)):
        try:
            return json.loads(document)
        except json.JSONDecodeError as e:
            raise TableError(f"line {e.lineno}: {e.msg}") from None
    return document


def _int(v, where: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, Integral):
        raise TableError(f"{where}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise TableError(f"{where}: must be >= {minimum}, got {v}")
    return int(v)


def _entries(document):
    doc = _load(document)
    if not isinstance(doc, dict):
        raise TableError("document: expected an object with 'channels' and 'entries'")
    channels = _int(doc.get("channels", 1), "channels", 1)
    raw = doc.get("entries")
    if not isinstance(raw, list):
        raise TableError("entries: expected a list")
    out = []
    for i, e in enumerate(raw):
        where = f"entries[{i}]"
        if not isinstance(e, dict):
            raise TableError(f"{where}: expected an object")
        idx = e.get("index")
        if not isinstance(idx, list):
            raise TableError(f"{where}.index: expected a list of integers")
        n = MultiIndex(tuple(_int(v, f"{where}.index[{j}]") for j, v in enumerate(idx)))
        s = _int(e.get("s", 0), f"{where}.s", 0)
        if s >= channels:
            raise TableError(f"{where}.s: channel {s} outside 0..{channels - 1}")
        v = e.get("value")
        if isinstance(v, bool) or not isinstance(v, Real) or not math.isfinite(v):
            raise TableError(f"{where}.value: expected a finite number, got {v!r}")
        if v < 0:
            raise TableError(f"{where}.value: negative value {v}")
        grade = e.get("grade")
        if grade is not None:
            grade = _int(grade, f"{where}.grade", 0)
            if n.max_support > grade:
                raise TableError(f"{where}.grade: index {list(n.entries)} has support beyond grade {grade}")
        out.append((where, n, s, float(v), grade))
    return channels, out


def parse_multiplier_table(document) -> MultiplierTable:
    channels, rows = _entries(document)
    seen: dict = {}
    for where, n, s, v, _ in rows:
        if (n, s) in seen:
            raise TableError(f"{where}: duplicate key index={list(n.entries)}, s={s} "
                             f"(first at {seen[(n, s)][0]})")
        seen[(n, s)] = (where, v)
    return MultiplierTable(channels, {k: v for k, (_, v) in seen.items()})


def parse_graded_family(document) -> GradedMultiplierFamily:
    channels, rows = _entries(document)
    grades: dict[int, dict] = {}
    firsts: dict = {}
    for where, n, s, v, grade in rows:
        j = n.max_support if grade is None else grade
        key = (j, n, s)
        if key in firsts:
            raise TableError(f"{where}: duplicate key grade={j}, index={list(n.entries)}, s={s} "
                             f"(first at {firsts[key]})")
        firsts[key] = where
        grades.setdefault(j, {})[(n, s)] = v
    return GradedMultiplierFamily(channels, {j: MultiplierTable(channels, e)
                                             for j, e in grades.items()})


def emit_multiplier_table(table: MultiplierTable) -> dict:
    return {"channels": table.channels,
            "entries": [{"index": list(n.entries), "s": s, "value": v}
                        for (n, s), v in table.entries.items()]}


def emit_graded_family(family: GradedMultiplierFamily) -> dict:
    return {"channels": family.channels,
            "entries": [{"index": list(n.entries), "s": s, "value": v, "grade": j}
                        for j, n, s, v in family.support()]}
