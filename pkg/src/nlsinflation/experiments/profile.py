"""Single-bubble scaling laws and the scale separation of a bubble ladder."""

from __future__ import annotations

import math
import time

import numpy as np

from ..bubbles import (BubbleParams, CutoffProfile, Ladder, Mollifier, bubble_initial,
                       bubble_ode_evolved, mollify, wound_profile_norm)
from ..errors import GeometryError, ResolutionError
from ..grid import GridSpec, forward
from ..sobolev import hs_dot_norm_coeffs, hs_norm_coeffs
from .config import Config, config_to_dict
from .report import ExperimentReport, fit_line


def _spread(values) -> float:
    """``max / min`` of positive values (infinite if any is non-positive)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(v <= 0):
        return math.inf
    return float(v.max() / v.min())


def run_profile_growth(cfg: Config, seed: int | None = None) -> ExperimentReport:
    """Scaling exponents and the lower bound of a single mollified bubble."""
    pg = cfg.profile_growth
    prob = cfg.problem(pg.dim)
    pp = prob.params(pg.dim)
    phi, rho = CutoffProfile(), Mollifier(pg.dim)
    rep = ExperimentReport("profile-growth", config_to_dict(cfg), seed)
    grid = GridSpec(pg.dim, pg.grid_points, pg.half_width)

    growth = rep.table("growth", ["n", "m", "t", "eps", "kappa", "norm"])
    lower = rep.table("lower_bound", ["n", "t_n", "phase_budget", "hs_grid", "hs_formula",
                                      "bound", "ratio"])
    skipped = []
    # wall clock per section; the sweep time covers both the t = 0 and t = t_n rows
    seconds = rep.diagnostics.setdefault("seconds", {})
    start = time.perf_counter()
    for n in pg.n_values:
        bp = BubbleParams.from_n(pp, n, prob.gamma, prob.beta)
        try:
            bubble_initial(pp, bp, phi, grid)
        except (ResolutionError, GeometryError) as exc:
            skipped.append({"n": n, "reason": str(exc)})
            continue
        for eps in (0.0, bp.eps):
            for t in (0.0, bp.t):
                c = forward(grid, bubble_ode_evolved(pp, bp, phi, rho, grid, None, eps, t).values)
                for m in pg.m_values:
                    growth.add(n, m, t, eps, bp.kappa, float(hs_dot_norm_coeffs(grid, c, m)))
                if eps > 0 and t > 0:
                    hs = float(hs_norm_coeffs(grid, c, pp.s))
                    formula = bp.kappa * wound_profile_norm(pp, bp.phase_budget, pp.s,
                                                            eps_n=bp.eps * n, n=n)
                    bound = math.exp(bp.log_lower_bound)
                    lower.add(n, bp.t, bp.phase_budget, hs, formula, bound, hs / bound)
    rep.diagnostics["skipped"] = skipped
    seconds["sweep"] = time.perf_counter() - start

    rows = [r for r in growth.rows if r[2] == 0.0 and r[3] == 0.0]
    for m in pg.m_values:
        sel = [r for r in rows if r[1] == m]
        if len(sel) < 2:
            rep.check("AC3", f"n-slope of |grad|^{m:g} v_n(0) / kappa_n, d={pg.dim}", None,
                      "at least two resolved n", False)
            continue
        fit = fit_line(np.log([r[0] for r in sel]), np.log([r[5] / r[4] for r in sel]))
        target = m - pp.s
        rep.fit(f"n_slope_m{m:g}_d{pg.dim}", fit, target=target)
        rep.check("AC3", f"n-slope of |grad|^{m:g} v_n(0) / kappa_n, d={pg.dim}", fit.slope,
                  f"{target:.4g} +- {pg.slope_tolerance}",
                  abs(fit.slope - target) <= pg.slope_tolerance)

    if pg.run_spot_check:
        start = time.perf_counter()
        _spot_check(cfg, rep)
        seconds["spot_check_3d"] = time.perf_counter() - start

    start = time.perf_counter()
    _mollification_sweep(cfg, rep)
    seconds["mollification"] = time.perf_counter() - start

    ratios = lower.column("ratio")
    spread = _spread(ratios)
    rep.diagnostics["lower_bound_formula_vs_grid"] = [
        abs(a / b - 1) for a, b in zip(lower.column("hs_formula"), lower.column("hs_grid"))]
    rep.check("AC5", "spread max/min of ||v_n^eps_n(t_n)||_Hs / (kappa_n (lambda_n^2 t_n)^s)",
              spread, f"positive and <= {pg.lower_bound_factor}",
              len(ratios) >= 2 and spread <= pg.lower_bound_factor)
    return rep.finish()


def _spot_check(cfg: Config, rep: ExperimentReport) -> None:
    sc = cfg.profile_growth.spot_check
    prob = cfg.problem_3d
    pp = prob.params(3)
    phi = CutoffProfile()
    grid = GridSpec(3, sc.grid_points, sc.half_width)
    tab = rep.table("spot_check_3d", ["n", "m", "kappa", "norm"])
    for n in sc.n_values:
        bp = BubbleParams.from_n(pp, n, prob.gamma, prob.beta)
        c = forward(grid, bubble_initial(pp, bp, phi, grid).values)
        for m in cfg.profile_growth.m_values:
            tab.add(n, m, bp.kappa, float(hs_dot_norm_coeffs(grid, c, m)))
        del c
    for m in cfg.profile_growth.m_values:
        sel = [r for r in tab.rows if r[1] == m]
        fit = fit_line(np.log([r[0] for r in sel]), np.log([r[3] / r[2] for r in sel]))
        target = m - pp.s
        rep.fit(f"n_slope_m{m:g}_d3", fit, target=target)
        rep.check("AC3", f"n-slope of |grad|^{m:g} v_n(0) / kappa_n, d=3 spot check", fit.slope,
                  f"{target:.4g} +- {sc.tolerance}", abs(fit.slope - target) <= sc.tolerance)


def _mollification_sweep(cfg: Config, rep: ExperimentReport) -> None:
    pg = cfg.profile_growth
    prob = cfg.problem(pg.dim)
    pp = prob.params(pg.dim)
    n = pg.mollify_n
    phi, rho = CutoffProfile(), Mollifier(pg.dim)
    # the box scales with the widest mollifier so the sweep never wraps around
    grid = GridSpec(pg.dim, pg.grid_points, pg.mollify_box / n)
    bp = BubbleParams.from_n(pp, n, prob.gamma, prob.beta)
    v0 = bubble_initial(pp, bp, phi, grid)
    tab = rep.table("mollification", ["eps_n", "eps", "m", "norm"])
    for en in pg.eps_n_values:
        c = mollify(v0, rho, en / n).spectral().values
        for m in pg.mollify_m_values:
            tab.add(en, en / n, m, float(hs_dot_norm_coeffs(grid, c, m)))
    for m in pg.mollify_m_values:
        sel = [r for r in tab.rows if r[2] == m]
        fit = fit_line(np.log([r[0] for r in sel]), np.log([r[3] for r in sel]))
        target = -(m + pg.dim / 2)
        rep.fit(f"mollification_slope_m{m:g}", fit, target=target)
        rel = abs(fit.slope / target - 1)
        rep.check("AC4", f"slope of ||grad^{m:g} v_n^eps(0)|| vs eps n, d={pg.dim}", fit.slope,
                  f"{target:.4g} +- {100 * pg.mollify_rel_tolerance:g}%",
                  rel <= pg.mollify_rel_tolerance)


SUM_NAMES = ("low_coarse", "low_fine", "high_coarse", "high_fine")


def scale_separation_bounds(ladder: Ladder, k: int, m_low: float, m_high: float, s: float,
                            dim: int, top: int) -> dict[str, float | None]:
    """Right-hand sides of the four ladder bounds at rung ``k`` (``None`` when the sum is empty)."""
    n = ladder.n
    out: dict[str, float | None] = dict.fromkeys(SUM_NAMES)
    if k > 0:
        out["low_coarse"] = 1.0
        out["high_coarse"] = n(k - 1) ** (m_high - s)
    if k < top:
        sep = (n(k) / n(k + 1)) ** (dim / 2)
        out["low_fine"] = n(k + 1) ** (m_low - s) * sep
        out["high_fine"] = n(k) ** m_high * n(k + 1) ** (-s) * sep
    return out


def run_scale_separation(cfg: Config, seed: int | None = None) -> ExperimentReport:
    """Sums of mollified coarse and fine bubbles at each rung, against their bounds."""
    ss = cfg.scale_separation
    prob = cfg.problem(ss.dim)
    pp = prob.params(ss.dim)
    phi, rho = CutoffProfile(), Mollifier(ss.dim)
    ladder = Ladder("geometric", ss.ladder.n0, ss.ladder.ratio)
    rungs = range(ss.ladder.rungs)
    top = ss.ladder.rungs - 1
    grid = GridSpec(ss.dim, ss.grid_points, ss.half_width)
    rep = ExperimentReport("scale-separation", config_to_dict(cfg), seed)

    bps = [BubbleParams(pp, ladder.log_n(k), prob.gamma, prob.beta) for k in rungs]
    spectra = [forward(grid, bubble_initial(pp, bp, phi, grid).values) for bp in bps]
    pair = rep.table("pairs", ["k", "l", "m", "norm"])
    norms: dict[tuple[int, int, float], float] = {}
    for k in rungs:
        mult = rho.multiplier(grid, bps[k].eps)
        for l in rungs:
            if l == k:
                continue
            c = spectra[l] * mult
            for m in (ss.m_low, ss.m_high):
                val = float(hs_norm_coeffs(grid, c, m))
                norms[k, l, m] = val
                pair.add(k, l, m, val)
    del spectra

    tab = rep.table("sums", ["k", "n_k", "sum", "m", "value", "bound", "constant"])
    constants: dict[str, list[float]] = {name: [] for name in SUM_NAMES}
    for k in rungs:
        bounds = scale_separation_bounds(ladder, k, ss.m_low, ss.m_high, pp.s, ss.dim, top)
        for name in SUM_NAMES:
            m = ss.m_low if name.startswith("low") else ss.m_high
            ls = range(0, k) if name.endswith("coarse") else range(k + 1, top + 1)
            value = sum(norms[k, l, m] for l in ls)
            bound = bounds[name]
            const = value / bound if bound is not None else math.nan
            tab.add(k, ladder.n(k), name, m, value, bound if bound is not None else math.nan,
                    const)
            if bound is not None:
                constants[name].append(const)

    rep.diagnostics["constants"] = constants
    for name in SUM_NAMES:
        vals = constants[name]
        spread = _spread(vals)
        rep.check("AC6", f"implied constant of the {name.replace('_', ' ')} sum across rungs",
                  spread, f"max/min <= {ss.stability_factor}",
                  len(vals) >= 2 and spread <= ss.stability_factor,
                  note=f"constants {['%.4g' % v for v in vals]}")
    return rep.finish()
