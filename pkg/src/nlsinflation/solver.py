"""Strang-split pseudospectral integrator for the power-law NLS

    i u_t + Delta u + sigma |u|^{p-1} u = 0.

Both substeps are exact flows: the free part multiplies spectral coefficients
by ``exp(-i |xi|^2 t)`` and the nonlinear part multiplies point values by
``exp(i sigma t |u|^{p-1})``.  A step is

    ode(dt/2) -> dealias -> free(dt) -> ode(dt/2) -> dealias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping

import numpy as np

from .bubbles import ProblemParams, ode_evolve_values
from .errors import RepresentationError, StepSizeError, StiffnessError
from .grid import Field, GridSpec, PHYSICAL, apply_multiplier, forward, inverse
from .sobolev import TrajectoryRecord, hs_norm_coeffs, lp_norm_values

DEALIAS_MODES = ("two_thirds", "off")
STORAGE_MODES = ("norms", "full")


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping controls.

    ``dispersion`` and ``nonlinearity`` scale the Laplacian and the power
    term; setting either to 0 turns the scheme into the exact flow of the
    other.
    """

    dt: float = 1e-3
    t_end: float = 1.0
    snapshots: int = 64
    dealias: str = "two_thirds"
    cfl_guard: float = math.pi / 8
    dispersion: float = 1.0
    nonlinearity: float = 1.0
    storage: str = "norms"
    leakage_tol: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")
        if self.snapshots < 2:
            raise ValueError("at least two snapshots are required")
        if self.dealias not in DEALIAS_MODES:
            raise ValueError(f"dealias must be one of {DEALIAS_MODES}")
        if self.storage not in STORAGE_MODES:
            raise ValueError(f"storage must be one of {STORAGE_MODES}")
        if not self.cfl_guard > 0:
            raise ValueError("cfl_guard must be positive")


def free_propagate(f: Field, t: float, dispersion: float = 1.0) -> Field:
    """Exact linear flow: multiply coefficients by ``exp(-i |xi|^2 t)``."""
    out = apply_multiplier(f.spectral(), np.exp(-1j * (dispersion * t) * f.grid.k_squared))
    return out if not f.is_physical else out.physical()


def ode_propagate(f: Field, t: float, pp: ProblemParams) -> Field:
    """Exact dispersionless flow ``u -> u exp(i sigma t |u|^{p-1})``."""
    if not f.is_physical:
        raise RepresentationError("ode_propagate expects a physical field")
    return Field(f.grid, ode_evolve_values(f.values, t, pp.p, pp.sigma), PHYSICAL)


def mass(f: Field) -> float:
    """``M(u) = 1/2 int |u|^2``."""
    c = f.spectral().values
    return 0.5 * float(np.vdot(c, c).real)


def _energy_from(grid: GridSpec, values: np.ndarray, coeffs: np.ndarray, pp: ProblemParams,
                 nonlinearity: float = 1.0) -> float:
    kinetic = 0.5 * float(np.sum(grid.k_squared * np.abs(coeffs) ** 2))
    potential = grid.cell_volume * float(np.sum(np.abs(values) ** (pp.p + 1)))
    return kinetic - nonlinearity * pp.sigma / (pp.p + 1) * potential


def energy(f: Field, pp: ProblemParams) -> float:
    """``H(u) = 1/2 int |grad u|^2 - sigma/(p+1) int |u|^{p+1}``."""
    return _energy_from(f.grid, f.physical().values, f.spectral().values, pp)


class _Stepper:
    """Raw-array Strang stepper with cached multipliers for one step size."""

    def __init__(self, grid: GridSpec, pp: ProblemParams, cfg: SolverConfig):
        self.grid, self.pp, self.cfg = grid, pp, cfg
        self.mask = grid.two_thirds_mask if cfg.dealias == "two_thirds" else None
        self._dt = None
        self._free = None

    def _prepare(self, dt: float) -> None:
        if dt != self._dt:
            free = np.exp(-1j * (self.cfg.dispersion * dt) * self.grid.k_squared)
            if self.mask is not None:
                free = free * self.mask
            self._free, self._dt = free, dt

    def phase_per_step(self, u: np.ndarray, dt: float) -> float:
        peak = float(np.max(np.abs(u))) if u.size else 0.0
        return abs(dt) * abs(self.cfg.nonlinearity) * peak ** (self.pp.p - 1)

    def step(self, u: np.ndarray, dt: float) -> np.ndarray:
        if self.phase_per_step(u, dt) > self.cfg.cfl_guard:
            raise StepSizeError(
                f"nonlinear phase {self.phase_per_step(u, dt):.3g} per step exceeds "
                f"guard {self.cfg.cfl_guard:.3g}")
        self._prepare(dt)
        g = self.cfg.nonlinearity * 0.5 * dt
        p, sig = self.pp.p, self.pp.sigma
        u = ode_evolve_values(u, g, p, sig)
        u = inverse(self.grid, forward(self.grid, u) * self._free)
        u = ode_evolve_values(u, g, p, sig)
        if self.mask is not None:
            u = inverse(self.grid, forward(self.grid, u) * self.mask)
        return u


def strang_step(f: Field, dt: float, pp: ProblemParams, cfg: SolverConfig | None = None) -> Field:
    """One symmetric splitting step; raises ``StepSizeError`` above the phase guard."""
    if not f.is_physical:
        raise RepresentationError("strang_step expects a physical field")
    cfg = cfg or SolverConfig()
    return Field(f.grid, _Stepper(f.grid, pp, cfg).step(f.values, dt), PHYSICAL)


@dataclass
class ConservationReport:
    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    leakage: np.ndarray
    leakage_tol: float = 1e-6
    min_dt: float = math.nan
    steps: int = 0

    @staticmethod
    def _drift(series: np.ndarray) -> np.ndarray:
        ref = abs(series[0])
        diff = np.abs(series - series[0])
        return diff / ref if ref > 0 else diff

    @property
    def drift_mass(self) -> np.ndarray:
        return self._drift(self.mass)

    @property
    def drift_energy(self) -> np.ndarray:
        return self._drift(self.energy)

    @property
    def max_drift_mass(self) -> float:
        return float(self.drift_mass.max())

    @property
    def max_drift_energy(self) -> float:
        return float(self.drift_energy.max())

    @property
    def max_leakage(self) -> float:
        return float(self.leakage.max())

    @property
    def leaked(self) -> bool:
        return self.max_leakage > self.leakage_tol

    def rows(self):
        """CSV rows ``t, mass, energy, drift_mass, drift_energy, leakage``."""
        dm, de = self.drift_mass, self.drift_energy
        for i, t in enumerate(self.times):
            yield (float(t), float(self.mass[i]), float(self.energy[i]),
                   float(dm[i]), float(de[i]), float(self.leakage[i]))

    CSV_HEADER = ("t", "mass", "energy", "drift_mass", "drift_energy", "leakage")


def leakage_fraction(grid: GridSpec, values: np.ndarray) -> float:
    """Share of the mass sitting outside the ball of radius ``L/2``."""
    dens = np.abs(values) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    return float(dens[grid.radius > 0.5 * grid.half_width].sum() / total)


Observer = Callable[[float, Field], Mapping[str, float]]


def evolve(f0: Field, cfg: SolverConfig, pp: ProblemParams,
           observer: Observer | None = None) -> tuple[TrajectoryRecord, ConservationReport]:
    """Integrate from ``f0`` to ``cfg.t_end`` and record ``cfg.snapshots`` states.

    The step is the largest ``dt' <= cfg.dt`` dividing each snapshot interval;
    whenever the phase guard trips it is halved for the rest of that interval.
    ``observer(t, u)`` may return extra scalars to record at every snapshot.
    """
    grid = f0.grid
    if grid.dim != pp.dim:
        raise ValueError("problem and grid dimensions differ")
    stepper = _Stepper(grid, pp, cfg)
    times = np.linspace(0.0, cfg.t_end, cfg.snapshots)
    if cfg.t_end == 0:
        times = np.arange(cfg.snapshots, dtype=float) * 0.0
    floor = 1e-12 * cfg.t_end

    snaps: list[Field] = []
    scalars: dict[str, list[float]] = {}
    masses, energies, leaks = [], [], []
    state = {"steps": 0, "min_dt": cfg.dt}

    def record(t: float, u: np.ndarray) -> None:
        coeffs = forward(grid, u)
        masses.append(0.5 * float(np.vdot(coeffs, coeffs).real))
        energies.append(_energy_from(grid, u, coeffs, pp, cfg.nonlinearity))
        leaks.append(leakage_fraction(grid, u))
        fld = Field(grid, u, PHYSICAL)
        row = {"hs": float(hs_norm_coeffs(grid, coeffs, pp.s)),
               "Linf": float(lp_norm_values(grid, u, math.inf))}
        if observer is not None:
            row.update(observer(t, fld))
        for key, val in row.items():
            scalars.setdefault(key, []).append(float(val))
        if cfg.storage == "full":
            snaps.append(fld)

    def partial(n_done: int):
        tr = TrajectoryRecord(times[:n_done], snaps if cfg.storage == "full" else None,
                              {k: v[:n_done] for k, v in scalars.items()})
        rep = ConservationReport(times[:n_done], np.array(masses), np.array(energies),
                                 np.array(leaks), cfg.leakage_tol, state["min_dt"],
                                 state["steps"])
        return tr, rep

    u = np.array(f0.physical().values, dtype=complex)
    record(0.0, u)
    if cfg.t_end == 0:
        return partial(1)
    for i in range(1, cfg.snapshots):
        t, t_next = times[i - 1], times[i]
        span = t_next - t
        n_steps = max(1, math.ceil(span / cfg.dt - 1e-9))
        h = span / n_steps
        while t < t_next - 1e-14 * cfg.t_end:
            h = min(h, t_next - t)
            try:
                u_new = stepper.step(u, h)
            except StepSizeError:
                h *= 0.5
                state["min_dt"] = min(state["min_dt"], h)
                if h < floor:
                    tr, rep = partial(i)
                    raise StiffnessError(
                        f"step size fell below {floor:.3g} at t = {t:.6g}", tr, rep) from None
                continue
            u = u_new
            t += h
            state["steps"] += 1
            state["min_dt"] = min(state["min_dt"], h)
        record(t_next, u)
    return partial(cfg.snapshots)


def integrate(f0: Field, t: float, dt: float, pp: ProblemParams,
              cfg: SolverConfig | None = None) -> Field:
    """Fixed-step integration over ``[0, t]``; ``t`` may be negative (backward in time)."""
    cfg = cfg or SolverConfig()
    n_steps = max(1, math.ceil(abs(t) / dt - 1e-9))
    h = t / n_steps
    stepper = _Stepper(f0.grid, pp, cfg)
    u = np.array(f0.physical().values, dtype=complex)
    for _ in range(n_steps):
        u = stepper.step(u, h)
    return Field(f0.grid, u, PHYSICAL)


def convergence_order(f0: Field, t: float, dt: float, pp: ProblemParams,
                      cfg: SolverConfig | None = None) -> tuple[float, list[float]]:
    """Observed order from runs at ``dt, dt/2, dt/4`` (successive differences)."""
    sols = [integrate(f0, t, dt / 2**j, pp, cfg) for j in range(3)]
    d1 = float(np.linalg.norm(sols[0].values - sols[1].values))
    d2 = float(np.linalg.norm(sols[1].values - sols[2].values))
    return math.log2(d1 / d2), [d1, d2]


__all__ = [
    "SolverConfig", "ConservationReport", "free_propagate", "ode_propagate", "strang_step",
    "evolve", "integrate", "convergence_order", "mass", "energy", "leakage_fraction",
]
