"""Report records and their on-disk formats.

A report is written as ``<stem>.json`` (structured) and ``<stem>.csv`` (one
row per result).  The JSON document has a ``body`` that is a pure function
of the config and package version, and a ``meta`` section holding the
wall-clock time and timestamp; ``body_sha256`` hashes the canonical body.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__


def _plain(x: Any) -> Any:
    """Convert numpy scalars/arrays and tuples to JSON-ready values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [_plain(x.real), _plain(x.imag)]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    command: str
    config: dict
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)

    def body(self) -> dict:
        return _plain({
            "command": self.command,
            "version": self.version,
            "config": self.config,
            "summary": self.summary,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                       for c in self.checks],
            "witnesses": self.witnesses,
            "rows": self.rows,
        })

    def body_text(self) -> str:
        return json.dumps(self.body(), indent=2, allow_nan=False)

    def document(self) -> dict:
        body = self.body()
        text = json.dumps(body, indent=2, allow_nan=False)
        return {
            "body": body,
            "body_sha256": hashlib.sha256(text.encode()).hexdigest(),
            "meta": {
                "wall_clock_seconds": self.wall_clock,
                "written_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            },
        }

    def csv_text(self) -> str:
        columns: list[str] = []
        for r in self.rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _cell(v) for k, v in r.items()})
        return buf.getvalue()

    def write(self, out_dir: str | os.PathLike, stem: str | None = None) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or self.command
        jpath, cpath = out / f"{stem}.json", out / f"{stem}.csv"
        atomic_write(jpath, json.dumps(self.document(), indent=2, allow_nan=False) + "\n")
        atomic_write(cpath, self.csv_text())
        return jpath, cpath


def _cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return json.dumps(v)
    return v


def atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_body(path: str | os.PathLike) -> dict:
    with open(path) as fh:
        return json.load(fh)["body"]
