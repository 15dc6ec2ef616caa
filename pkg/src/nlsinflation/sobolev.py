"""Sobolev, Lebesgue and space-time norms of grid fields.

Sobolev norms are evaluated on the spectral side,

    ||f||_{H^s}^2 = sum_xi <xi>^{2s} |f_hat(xi)|^2,

and Lebesgue norms by the rectangle rule on the physical grid.  The
``*_coeffs`` variants act on raw arrays whose trailing ``d`` axes are the
grid, so a batch of fields can be handled in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, InsufficientDataError
from .grid import Field, GridSpec, apply_multiplier

STILDE_EXPONENTS = (Fraction(4), Fraction(5), Fraction(30, 7))


def _sum_grid(grid: GridSpec, a: np.ndarray) -> np.ndarray:
    return a.sum(axis=tuple(range(-grid.dim, 0)))


def hs_norm_coeffs(grid: GridSpec, coeffs: np.ndarray, s: float) -> np.ndarray:
    w = np.abs(coeffs) ** 2
    if s != 0:
        w = w * (1.0 + grid.k_squared) ** s
    return np.sqrt(_sum_grid(grid, w))


def hs_dot_norm_coeffs(grid: GridSpec, coeffs: np.ndarray, m: float) -> np.ndarray:
    w = np.abs(coeffs) ** 2
    if m != 0:
        weight = np.zeros(grid.shape)
        nz = grid.k_squared > 0
        weight[nz] = grid.k_squared[nz] ** m
        w = w * weight
    return np.sqrt(_sum_grid(grid, w))


def lp_norm_values(grid: GridSpec, values: np.ndarray, p: float) -> np.ndarray:
    if p < 1:
        raise DomainError(f"Lebesgue exponent must be >= 1, got {p}")
    a = np.abs(values)
    if math.isinf(p):
        return a.max(axis=tuple(range(-grid.dim, 0)))
    if p == 2:
        return np.sqrt(grid.cell_volume * _sum_grid(grid, a * a))
    return (grid.cell_volume * _sum_grid(grid, a**p)) ** (1.0 / p)


def hs_norm(f: Field, s: float) -> float:
    """Inhomogeneous Sobolev norm with weight ``<xi>^s``."""
    return float(hs_norm_coeffs(f.grid, f.spectral().values, s))


def hs_dot_norm(f: Field, m: float) -> float:
    """Homogeneous norm ``|| |xi|^m f_hat ||``; the zero mode contributes nothing."""
    return float(hs_dot_norm_coeffs(f.grid, f.spectral().values, m))


def l2_norm(f: Field) -> float:
    return hs_norm(f, 0.0)


def lp_norm(f: Field, p: float) -> float:
    """Rectangle-rule ``L^p`` norm over the box; ``p = inf`` gives the max modulus."""
    return float(lp_norm_values(f.grid, f.physical().values, float(p)))


@dataclass
class TrajectoryRecord:
    """Time stamps with either stored fields or per-time scalar series.

    In norms-only mode ``snapshots`` is ``None`` and ``scalars`` maps a
    column name to one value per time stamp.
    """

    times: np.ndarray
    snapshots: list[Field] | None = None
    scalars: dict[str, np.ndarray] = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.snapshots is not None:
            if len(self.snapshots) != len(self.times):
                raise ValueError("one snapshot per time stamp is required")
            grids = {f.grid for f in self.snapshots}
            if len(grids) > 1:
                raise ValueError("snapshots live on different grids")
        for key, col in self.scalars.items():
            if len(col) != len(self.times):
                raise ValueError(f"scalar column {key!r} has the wrong length")
        self.scalars = {k: np.asarray(v) for k, v in self.scalars.items()}

    def __len__(self) -> int:
        return len(self.times)

    @property
    def grid(self) -> GridSpec | None:
        return self.snapshots[0].grid if self.snapshots else None

    def map(self, fn) -> "TrajectoryRecord":
        if self.snapshots is None:
            raise InsufficientDataError("trajectory was recorded without snapshots")
        return TrajectoryRecord(self.times, [fn(f) for f in self.snapshots])


def _time_integral(times: np.ndarray, values: np.ndarray, q: float) -> float:
    if len(times) < 2:
        raise InsufficientDataError("a space-time norm needs at least two time stamps")
    if math.isinf(q):
        return float(np.max(values))
    return float(trapezoid(values**q, times) ** (1.0 / q))


def spacetime_norm(tr: TrajectoryRecord, q: float, r: float) -> float:
    """``L^q_t L^r_x`` norm by composite trapezoid in time.

    Uses stored snapshots when present; otherwise a scalar column named
    ``"L{r}"`` holding the spatial norms must exist.
    """
    if len(tr.times) < 2:
        raise InsufficientDataError("a space-time norm needs at least two time stamps")
    q, r = float(q), float(r)
    if tr.snapshots is not None:
        spatial = np.array([lp_norm(f, r) for f in tr.snapshots])
    else:
        key = f"L{r:g}"
        if key not in tr.scalars:
            raise InsufficientDataError(f"no snapshots and no scalar column {key!r}")
        spatial = np.asarray(tr.scalars[key], dtype=float)
    return _time_integral(tr.times, spatial, q)


def spacetime_norm_values(grid: GridSpec, times: np.ndarray, values: np.ndarray,
                          q: float, r: float) -> np.ndarray:
    """Batched space-time norm: ``values`` has shape ``(..., T, *grid.shape)``."""
    if len(times) < 2:
        raise InsufficientDataError("a space-time norm needs at least two time stamps")
    spatial = lp_norm_values(grid, values, float(r))
    if math.isinf(q):
        return spatial.max(axis=-1)
    return trapezoid(spatial**q, times, axis=-1) ** (1.0 / q)


def stilde_norm(tr: TrajectoryRecord, s: float) -> float:
    """Sum of the ``L^q_{t,x}`` norms of ``<grad>^s u`` for ``q`` in 4, 5 and 30/7."""
    if len(tr.times) < 2:
        raise InsufficientDataError("a space-time norm needs at least two time stamps")
    if tr.snapshots is None:
        raise InsufficientDataError("refined norm needs stored snapshots")
    weighted = tr.map(lambda f: apply_multiplier(f.spectral(), f.grid.japanese(s)))
    total = 0.0
    for q in STILDE_EXPONENTS:
        total += spacetime_norm(weighted, float(q), float(q))
    return total


@dataclass(frozen=True)
class InterpolationReport:
    s: float
    h1: float
    hs: float
    h2: float
    ratio: float

    @property
    def holds(self) -> bool:
        return self.ratio <= 1.0 + 1e-9


def interpolation_check(f: Field, s: float) -> InterpolationReport:
    """Ratio ``||f||_{H^1}^{2-s} / (||f||_{H^s} ||f||_{H^2}^{1-s})``, never above 1."""
    if not 0.0 <= s < 1.0:
        raise DomainError(f"interpolation index must lie in [0, 1), got {s}")
    coeffs = f.spectral().values
    h1 = float(hs_norm_coeffs(f.grid, coeffs, 1.0))
    hs = float(hs_norm_coeffs(f.grid, coeffs, s))
    h2 = float(hs_norm_coeffs(f.grid, coeffs, 2.0))
    if hs == 0.0:
        return InterpolationReport(s, h1, hs, h2, 0.0)
    # log form keeps large norms from overflowing
    ratio = math.exp((2 - s) * math.log(h1) - math.log(hs) - (1 - s) * math.log(h2))
    return InterpolationReport(s, h1, hs, h2, ratio)


def norm_series(fields: Sequence[Field], columns: Mapping[str, float]) -> dict[str, np.ndarray]:
    """Evaluate several ``H^s`` norms on a sequence of fields."""
    out = {name: np.empty(len(fields)) for name in columns}
    for i, f in enumerate(fields):
        c = f.spectral().values
        for name, s in columns.items():
            out[name][i] = hs_norm_coeffs(f.grid, c, s)
    return out


__all__ = [
    "STILDE_EXPONENTS", "TrajectoryRecord", "InterpolationReport",
    "hs_norm", "hs_dot_norm", "l2_norm", "lp_norm", "spacetime_norm",
    "spacetime_norm_values", "stilde_norm", "interpolation_check",
    "hs_norm_coeffs", "hs_dot_norm_coeffs", "lp_norm_values", "norm_series",
]
