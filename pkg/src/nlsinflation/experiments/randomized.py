"""Randomized data: convergence of regularized solutions, Strichartz tails, bilinear gain."""

from __future__ import annotations

import math

import numpy as np

from ..bubbles import Mollifier
from ..errors import InsufficientDataError, StiffnessError
from ..grid import Field, GridSpec, SPECTRAL, forward, plane_wave
from ..randomization import (RandomEnsemble, TailReport, bilinear_check, build_partition,
                             free_spacetime_norms, strichartz_tail, wiener_sample)
from ..sobolev import TrajectoryRecord, hs_norm_coeffs, stilde_norm
from ..solver import SolverConfig, evolve, free_propagate
from .config import Config, config_to_dict
from .report import ExperimentReport, fit_line


def gaussian_base(grid: GridSpec, width: float, rms: float) -> Field:
    """Spectrum ``exp(-|xi|^2 / (2 width^2))`` scaled so randomized samples have mean-square ``rms^2``."""
    coeffs = np.exp(-grid.k_squared / (2 * width**2)).astype(complex)
    coeffs *= rms * math.sqrt(grid.volume / float(np.sum(np.abs(coeffs) ** 2)))
    return Field(grid, coeffs, SPECTRAL)


def _sample_seeds(cfg: Config, seed: int | None) -> list[int]:
    seeds = cfg.randomized.seeds
    return list(seeds) if seed is None else [seed + i for i in range(len(seeds))]


def run_randomized_convergence(cfg: Config, seed: int | None = None) -> ExperimentReport:
    """Cauchy increments of solutions from ``f^omega * rho_eps`` as ``eps`` halves."""
    rc = cfg.randomized
    dim = 3
    prob = cfg.problem(dim)
    pp = prob.params(dim)
    grid = GridSpec(dim, rc.grid_points, rc.half_width)
    rho = Mollifier(dim)
    base = gaussian_base(grid, rc.base_width, rc.base_amplitude)
    partition = build_partition(grid, rc.partition_half_width)
    solver_cfg = SolverConfig(dt=rc.dt, t_end=rc.T, snapshots=rc.snapshots, storage="full")
    eps_ladder = [rc.eps0 * 2.0**-j for j in range(rc.levels)]
    seeds = _sample_seeds(cfg, seed)
    rep = ExperimentReport("randomized-convergence", config_to_dict(cfg), seed)
    tab = rep.table("increments", ["seed", "j", "eps", "data_increment", "data_distance",
                                   "solution_increment", "reference_distance"])
    summary = rep.table("samples", ["seed", "hs_datum", "stilde_free", "final_increment",
                                    "status"])

    for sd in seeds:
        ens = RandomEnsemble(base, partition, seed=sd, samples=1)
        f = wiener_sample(ens, 0)
        f_hat = f.spectral().values
        hs_f = float(hs_norm_coeffs(grid, f_hat, pp.s))

        free = [free_propagate(f, t) for t in np.linspace(0.0, rc.T, rc.snapshots)]
        stilde = stilde_norm(TrajectoryRecord(np.linspace(0.0, rc.T, rc.snapshots), free), pp.s)
        del free

        try:
            ref, _ = evolve(f, solver_cfg, pp)
        except StiffnessError as exc:
            rep.notes.append(f"seed {sd}: reference run failed: {exc}")
            summary.add(sd, hs_f, stilde, math.nan, "stiff")
            continue
        ref_hat = [s.spectral().values for s in ref.snapshots]
        del ref

        prev_hat, prev_data = None, None
        incs, status = [], "completed"
        for j, eps in enumerate(eps_ladder):
            data_hat = f_hat * rho.multiplier(grid, eps)
            data_dist = float(hs_norm_coeffs(grid, data_hat - f_hat, pp.s))
            try:
                tr, _ = evolve(Field(grid, data_hat, SPECTRAL).physical(), solver_cfg, pp)
            except StiffnessError as exc:
                rep.notes.append(f"seed {sd}, eps {eps:g}: {exc}")
                status = "stiff"
                break
            cur = [s.spectral().values for s in tr.snapshots]
            del tr
            ref_dist = max(float(hs_norm_coeffs(grid, a - b, pp.s)) for a, b in zip(cur, ref_hat))
            if prev_hat is None:
                inc = data_inc = math.nan
            else:
                inc = max(float(hs_norm_coeffs(grid, a - b, pp.s)) for a, b in zip(cur, prev_hat))
                data_inc = float(hs_norm_coeffs(grid, data_hat - prev_data, pp.s))
                incs.append(inc)
            tab.add(sd, j, eps, data_inc, data_dist, inc, ref_dist)
            prev_hat, prev_data = cur, data_hat
        del prev_hat, ref_hat

        final = incs[-1] if incs else math.nan
        summary.add(sd, hs_f, stilde, final, status)
        dists = [r[4] for r in tab.rows if r[0] == sd]
        rep.check("INV-data", f"seed {sd}: ||f * rho_eps_j - f||_Hs strictly decreasing in j",
                  dists, "strictly decreasing", all(b < a for a, b in zip(dists, dists[1:])))
        ok = (status == "completed" and len(incs) == rc.levels - 1
              and all(b <= a for a, b in zip(incs, incs[1:]))
              and final < rc.final_fraction * hs_f)
        rep.check("AC8", f"seed {sd}: sup_t solution increments non-increasing, final < "
                  f"{rc.final_fraction} ||f^omega||_Hs", incs,
                  f"non-increasing, final < {rc.final_fraction * hs_f:.4g}", ok)
    if not rep.criterion("AC8"):
        rep.check("AC8", "no sample completed", None, "3 completed samples", False)
    return rep.finish()


def _tail_table(rep: ExperimentReport, name: str, tail: TailReport) -> None:
    tab = rep.table(name, TailReport.CSV_HEADER)
    for row in tail.rows():
        tab.add(*row)


def run_strichartz_tail(cfg: Config, seed: int | None = None) -> ExperimentReport:
    """Sub-Gaussian tail of the windowed Strichartz norm of randomized free waves."""
    sc = cfg.strichartz
    grid = GridSpec(sc.dim, sc.grid_points, sc.half_width)
    partition = build_partition(grid)
    times = np.linspace(0.0, sc.T, sc.n_times)
    sd = sc.seed if seed is None else seed
    rep = ExperimentReport("strichartz-tail", config_to_dict(cfg), seed)

    mode = (float(sc.single_mode),) * sc.dim
    single = plane_wave(grid, mode)
    ens = RandomEnsemble(single, partition, seed=sd, samples=sc.samples, degenerate_tol=1e-12)
    deterministic = float(free_spacetime_norms(grid, single.spectral().values[None], sc.s,
                                               sc.q, sc.r, times)[0])
    lambdas = np.linspace(0.0, 3.0 * deterministic, sc.lambda_points)
    tail = strichartz_tail(ens, sc.s, sc.q, sc.r, sc.T, lambdas, sc.n_times)
    _tail_table(rep, "tail_single_block", tail)
    predicted = -1.0 / deterministic**2
    rel = abs(tail.slope / predicted - 1)
    rep.fits["single_block"] = {"slope": tail.slope, "predicted": predicted,
                                "r_squared": tail.r_squared, "used_points": int(tail.used.sum())}
    rep.check("AC9", "single-block log-survival slope vs closed-form Rayleigh tail", tail.slope,
              f"{predicted:.5g} +- {100 * sc.slope_rel_tolerance:g}%",
              rel <= sc.slope_rel_tolerance)

    coeffs = grid.japanese(-sc.base_decay).astype(complex)
    general = Field(grid, coeffs, SPECTRAL)
    ens = RandomEnsemble(general, partition, seed=sd + 1, samples=sc.samples)
    try:
        tail = strichartz_tail(ens, sc.s, sc.q, sc.r, sc.T, None, sc.n_times)
    except InsufficientDataError as exc:
        rep.check("AC9", "general base: R^2 of log-survival vs lambda^2", str(exc),
                  f">= {sc.min_r_squared}", False)
        return rep.finish()
    _tail_table(rep, "tail_general", tail)
    rep.fits["general"] = {"slope": tail.slope, "intercept": tail.intercept,
                           "r_squared": tail.r_squared, "used_points": int(tail.used.sum()),
                           "hs_base": tail.hs_base}
    rep.check("AC9", "general base: weighted R^2 of log-survival vs lambda^2 on [1e-3, 0.5]",
              tail.r_squared, f">= {sc.min_r_squared}", tail.r_squared >= sc.min_r_squared)
    return rep.finish()


def run_bilinear(cfg: Config, seed: int | None = None) -> ExperimentReport:
    """Ratio of ``||e^{it Delta}u e^{it Delta}v||_{L^2}`` to ``N^{(d-1)/2} M^{-1/2}`` for separated frequencies."""
    bc = cfg.bilinear
    grid = GridSpec(bc.dim, bc.grid_points, bc.half_width)
    sd = bc.seed if seed is None else seed
    rep = ExperimentReport("bilinear", config_to_dict(cfg), seed)
    ratios = rep.table("ratios", ["N", "M", "sample", "ratio"])
    stats = rep.table("summary", ["N", "M", "normalizer", "mean", "max"])
    for q in bc.ratios:
        M = q * bc.N
        out = bilinear_check(grid, bc.N, M, bc.T, bc.samples, seed=sd, width=bc.width)
        for i, r in enumerate(out.ratios):
            ratios.add(bc.N, M, i, float(r))
        stats.add(bc.N, M, out.normalizer, out.mean, out.max)

    maxima = stats.column("max")
    Ms = stats.column("M")
    spread = max(maxima) / min(maxima)
    rep.check("AC10", "spread max/min of the max ratio across M/N", spread,
              f"<= {bc.max_factor}", spread <= bc.max_factor)
    fit = fit_line(np.log(Ms), np.log(maxima))
    rep.fit("max_ratio_vs_M", fit)
    mean_fit = fit_line(np.log(Ms), np.log(stats.column("mean")))
    rep.fit("mean_ratio_vs_M", mean_fit)
    rep.check("AC10", "slope of log max ratio vs log M at fixed N", fit.slope,
              f"<= {bc.max_slope}", fit.slope <= bc.max_slope)
    rep.check("AC10", "slope of log mean ratio vs log M at fixed N", mean_fit.slope,
              f"<= {bc.max_slope}", mean_fit.slope <= bc.max_slope)
    return rep.finish()
