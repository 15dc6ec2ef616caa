"""Experiment reports: measured tables, fitted exponents and criterion verdicts."""

from __future__ import annotations

import csv
import json
import math
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .. import __version__


def build_id() -> str:
    """``git describe`` of the source tree, or the package version outside a checkout."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class Criterion:
    id: str
    description: str
    value: Any
    target: str
    passed: bool
    note: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.id}: {self.description} -> {_fmt(self.value)} (target {self.target})"


@dataclass
class Table:
    header: Sequence[str]
    rows: list[Sequence[Any]] = field(default_factory=list)

    def add(self, *row) -> None:
        if len(row) != len(self.header):
            raise ValueError("row length does not match the header")
        self.rows.append(row)

    def column(self, name: str) -> list:
        i = list(self.header).index(name)
        return [r[i] for r in self.rows]


@dataclass
class Fit:
    slope: float
    stderr: float
    intercept: float


def fit_line(x: Sequence[float], y: Sequence[float]) -> Fit:
    """Least-squares line with the standard error of the slope."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    if dof > 0:
        sigma2 = float(resid @ resid) / dof
        se = math.sqrt(sigma2 / float(((x - x.mean()) ** 2).sum()))
    else:
        se = 0.0
    return Fit(float(coef[0]), se, float(coef[1]))


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    seed: int | None = None
    tables: dict[str, Table] = field(default_factory=dict)
    fits: dict[str, dict] = field(default_factory=dict)
    criteria: list[Criterion] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0
    build: str = field(default_factory=build_id)
    _start: float = field(default_factory=time.perf_counter, repr=False)

    def table(self, name: str, header: Sequence[str]) -> Table:
        self.tables[name] = Table(list(header))
        return self.tables[name]

    def fit(self, name: str, fit: Fit, **extra) -> None:
        self.fits[name] = {"slope": fit.slope, "stderr": fit.stderr,
                           "intercept": fit.intercept, **extra}

    def check(self, cid: str, description: str, value, target: str, passed: bool,
              note: str = "") -> Criterion:
        c = Criterion(cid, description, value, target, bool(passed), note)
        self.criteria.append(c)
        return c

    def finish(self) -> "ExperimentReport":
        self.wall_clock = time.perf_counter() - self._start
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def criterion(self, cid: str) -> list[Criterion]:
        return [c for c in self.criteria if c.id == cid]

    def summary(self) -> dict:
        return {
            "experiment": self.experiment,
            "build": self.build,
            "seed": self.seed,
            "wall_clock_seconds": self.wall_clock,
            "passed": self.passed,
            "criteria": [
                {"id": c.id, "description": c.description, "value": _jsonable(c.value),
                 "target": c.target, "passed": c.passed, "note": c.note}
                for c in self.criteria
            ],
            "fits": _jsonable(self.fits),
            "diagnostics": _jsonable(self.diagnostics),
            "notes": self.notes,
            "config": _jsonable(self.config),
        }

    def write(self, out_dir: str | Path) -> Path:
        """One CSV per table plus ``summary.json`` under ``out_dir/<experiment>``."""
        target = Path(out_dir) / self.experiment
        target.mkdir(parents=True, exist_ok=True)
        for name, tab in self.tables.items():
            with open(target / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(tab.header)
                w.writerows([[_jsonable(v) for v in row] for row in tab.rows])
        with open(target / "summary.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2)
        return target

    def lines(self) -> Iterable[str]:
        for c in self.criteria:
            yield c.line()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v
