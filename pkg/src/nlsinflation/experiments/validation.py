"""Oracle suite gating the other experiments: transforms, splitting scheme, conservation."""

from __future__ import annotations

import time

import numpy as np

from ..bubbles import ode_evolve_values
from ..grid import Field, GridSpec, PHYSICAL, forward, inverse, random_field
from ..sobolev import interpolation_check
from ..solver import SolverConfig, convergence_order, evolve, integrate
from .config import Config, config_to_dict
from .report import ExperimentReport


def transform_errors(grid: GridSpec, fields: int, seed: int) -> tuple[float, float]:
    """Worst relative Parseval and round-trip errors over random fields."""
    rng = np.random.default_rng(seed)
    parseval = roundtrip = 0.0
    for _ in range(fields):
        u = random_field(grid, rng).values
        c = forward(grid, u)
        phys = grid.cell_volume * float(np.vdot(u, u).real)
        parseval = max(parseval, abs(float(np.vdot(c, c).real) - phys) / phys)
        back = inverse(grid, c)
        roundtrip = max(roundtrip, float(np.linalg.norm(back - u) / np.linalg.norm(u)))
    return parseval, roundtrip


def gaussian_datum(grid: GridSpec, amplitude: float) -> Field:
    return Field(grid, amplitude * np.exp(-grid.radius**2).astype(complex), PHYSICAL)


def run_solver_validation(cfg: Config, seed: int | None = None) -> ExperimentReport:
    """Oracle checks of the transforms and the splitting scheme."""
    vc = cfg.validation
    rep = ExperimentReport("validate", config_to_dict(cfg), seed)
    sd = cfg.seed if seed is None else seed
    seconds = rep.diagnostics.setdefault("seconds", {})

    if vc.run_fft_check:
        tab = rep.table("transforms", ["dim", "n", "fields", "parseval", "roundtrip", "seconds"])
        total = 0.0
        worst = 0.0
        for dim, n in vc.fft_grids:
            grid = GridSpec(dim, n)
            t0 = time.perf_counter()
            par, rt = transform_errors(grid, vc.random_fields, sd)
            dt = time.perf_counter() - t0
            total += dt
            worst = max(worst, par, rt)
            tab.add(dim, n, vc.random_fields, par, rt, dt)
        seconds["transforms"] = total
        rep.check("AC1", "worst relative Parseval / round-trip error over random fields", worst,
                  "< 1e-12", worst < 1e-12)
        rep.check("AC1", "transform check wall clock (s)", total,
                  f"< {vc.fft_budget_seconds}", total < vc.fft_budget_seconds)

    start = time.perf_counter()
    prob = cfg.problem(vc.dim)
    pp = prob.params(vc.dim)
    grid = GridSpec(vc.dim, vc.grid_points, vc.half_width)
    f0 = gaussian_datum(grid, vc.amplitude)

    flat = SolverConfig(dt=vc.dt, t_end=vc.t_end, dealias="off", dispersion=0.0)
    u = integrate(f0, vc.t_end, vc.dt, pp, flat).values
    exact = ode_evolve_values(f0.values, vc.t_end, pp.p, pp.sigma)
    match = float(np.max(np.abs(u - exact)) / np.max(np.abs(exact)))
    rep.check("AC2", "dispersionless limit vs exact phase rotation", match, "< 1e-10",
              match < 1e-10)

    scfg = SolverConfig(dt=vc.dt, t_end=vc.t_end, snapshots=33)
    _, cons = evolve(f0, scfg, pp)
    tab = rep.table("conservation", cons.CSV_HEADER)
    for row in cons.rows():
        tab.add(*row)
    rep.check("AC2", "relative mass drift at the default step", cons.max_drift_mass,
              "< 1e-10", cons.max_drift_mass < 1e-10)
    rep.check("AC2", "relative energy drift at the default step", cons.max_drift_energy,
              "< 1e-6", cons.max_drift_energy < 1e-6)

    order, diffs = convergence_order(f0, vc.t_end, vc.order_dt, pp, scfg)
    rep.diagnostics["order_differences"] = diffs
    rep.check("AC2", "observed splitting order (dt, dt/2, dt/4)", order, "in [1.8, 2.2]",
              1.8 <= order <= 2.2)
    seconds["solver"] = time.perf_counter() - start

    rev_cfg = SolverConfig(dt=vc.dt, t_end=vc.t_end, dealias="off")
    there = integrate(f0, vc.t_end, vc.dt, pp, rev_cfg)
    back = integrate(there, -vc.t_end, vc.dt, pp, rev_cfg).values
    rev = float(np.linalg.norm(back - f0.values) / np.linalg.norm(f0.values))
    rep.check("INV-reverse", "forward then backward integration returns the datum", rev,
              "< 1e-10", rev < 1e-10)

    interp = interpolation_check(f0, pp.s)
    rep.check("INV-interp", "H^1 <= H^s H^2 interpolation on the datum", interp.ratio, "<= 1",
              interp.holds)
    return rep.finish()
