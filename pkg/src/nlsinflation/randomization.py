"""Wiener randomization and Monte Carlo checks of randomized Strichartz bounds.

A unit-scale partition ``sum_k psi(xi - k) = 1`` splits a datum into frequency
blocks ``P_k f``; the randomized datum is ``sum_k g_k P_k f`` with independent
standard complex Gaussians ``g_k`` (``E|g|^2 = 1``).  The window is a tensor
product of one-dimensional normalized bumps, so block multipliers are outer
products of per-axis tables and a whole sample is one tensor contraction.
"""

from __future__ import annotations

import math
import string
import warnings
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, InsufficientDataError, ResolutionError
from .grid import Field, GridSpec, PHYSICAL, SPECTRAL, forward, inverse
from .sobolev import lp_norm_values

SURVIVAL_WINDOW = (1e-3, 0.5)
# closer to 1/2 the bump underflows to zero at half-integers and the cover breaks
MIN_HALF_WIDTH = 0.51


def _bump(x: np.ndarray, half_width: float) -> np.ndarray:
    y = np.asarray(x, dtype=float) / half_width
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - y[inside] ** 2))
    return out


def window_1d(eta: np.ndarray, half_width: float = 1.0) -> np.ndarray:
    """One-dimensional ``psi(eta) = b(eta) / sum_j b(eta - j)`` with ``supp b = [-w, w]``."""
    eta = np.asarray(eta, dtype=float)
    reach = int(math.ceil(half_width)) + 1
    denom = np.zeros_like(eta)
    for j in range(-reach - 1, reach + 2):
        denom += _bump(eta - j, half_width)
    num = _bump(eta, half_width)
    out = np.zeros_like(eta)
    live = num > 0
    out[live] = num[live] / denom[live]
    return out


@dataclass(frozen=True, eq=False)
class UnitPartition:
    """Per-axis block tables ``axis_tables[a][i, j] = psi_1(xi_j - blocks[i])``."""

    grid: GridSpec
    half_width: float
    blocks: np.ndarray
    axis_tables: tuple[np.ndarray, ...]

    @property
    def blocks_per_axis(self) -> int:
        return len(self.blocks)

    @property
    def block_shape(self) -> tuple[int, ...]:
        return (len(self.blocks),) * self.grid.dim

    @property
    def n_blocks(self) -> int:
        return len(self.blocks) ** self.grid.dim

    def block_indices(self) -> np.ndarray:
        """Integer block centres, shape ``(n_blocks, d)`` in C order."""
        mesh = np.meshgrid(*([self.blocks] * self.grid.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def _contract(self, g: np.ndarray, tables: Sequence[np.ndarray]) -> np.ndarray:
        # g has shape (..., B, B, ...) with d block axes; result (..., N, N, ...)
        d = self.grid.dim
        blk = string.ascii_lowercase[:d]
        out = string.ascii_lowercase[d:2 * d]
        spec = "..." + blk + "," + ",".join(b + o for b, o in zip(blk, out)) + "->..." + out
        return np.einsum(spec, g, *tables, optimize=True)

    def multiplier(self, g: np.ndarray) -> np.ndarray:
        """``sum_k g_k psi(xi - k)`` on the lattice for coefficients of shape ``(..., *block_shape)``."""
        return self._contract(g, self.axis_tables)

    def block(self, index: Sequence[int]) -> np.ndarray:
        """Multiplier of a single block with integer centre ``index``."""
        pos = [int(np.searchsorted(self.blocks, k)) for k in index]
        m = np.ones(self.grid.shape)
        for a, i in enumerate(pos):
            shp = [1] * self.grid.dim
            shp[a] = self.grid.n
            m = m * self.axis_tables[a][i].reshape(shp)
        return m

    def block_norms(self, f: Field) -> np.ndarray:
        """``||P_k f||_{L^2}`` for every block, shape ``block_shape``."""
        power = np.abs(f.spectral().values) ** 2
        sq = [t * t for t in self.axis_tables]
        d = self.grid.dim
        blk = string.ascii_lowercase[:d]
        out = string.ascii_lowercase[d:2 * d]
        spec = out + "," + ",".join(b + o for b, o in zip(blk, out)) + "->" + blk
        return np.sqrt(np.einsum(spec, power, *sq, optimize=True))

    def reconstruction_error(self) -> float:
        """Max deviation of ``sum_k psi(xi - k)`` from 1 on the lattice."""
        ones = np.ones(self.block_shape)
        return float(np.max(np.abs(self.multiplier(ones) - 1.0)))


def build_partition(grid: GridSpec, half_width: float = 1.0) -> UnitPartition:
    """Unit-scale partition of unity on the wavenumber lattice of ``grid``.

    ``half_width`` sets the support ``[-w, w]`` of the generating bump per
    axis; it must lie in ``[MIN_HALF_WIDTH, 2]`` so that the supports cover
    every half-integer and each window stays inside ``[-2, 2]^d``.
    """
    if not MIN_HALF_WIDTH <= half_width <= 2.0:
        raise DomainError(f"partition half-width must lie in [{MIN_HALF_WIDTH}, 2]")
    xi = grid.axis_wavenumbers
    lo = int(math.floor(xi.min() - half_width)) + 1
    hi = int(math.ceil(xi.max() + half_width)) - 1
    cand = np.arange(lo, hi + 1)
    tables = window_1d(xi[None, :] - cand[:, None], half_width)
    keep = tables.max(axis=1) > 0
    blocks = cand[keep]
    table = tables[keep]
    table.flags.writeable = False
    return UnitPartition(grid, half_width, blocks, (table,) * grid.dim)


def complex_gaussians(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex normals: real and imaginary parts have variance 1/2 each."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


@dataclass(eq=False)
class RandomEnsemble:
    """Base datum plus the recipe for its randomized samples.

    Sample ``i`` draws its coefficients from a generator seeded by
    ``(seed, i)``, so samples are reproducible in any order.
    """

    base: Field
    partition: UnitPartition
    seed: int = 0
    samples: int = 1000
    degenerate_tol: float = 0.0
    _warned: bool = dc_field(default=False, repr=False)

    def __post_init__(self):
        if self.base.grid != self.partition.grid:
            raise ValueError("base datum and partition live on different grids")

    @cached_property
    def base_spectral(self) -> np.ndarray:
        return self.base.spectral().values

    @cached_property
    def block_norms(self) -> np.ndarray:
        return self.partition.block_norms(self.base)

    @cached_property
    def live_blocks(self) -> np.ndarray:
        """Boolean mask of blocks whose share of the base is non-zero."""
        scale = float(np.sqrt((self.block_norms**2).sum()))
        return self.block_norms > self.degenerate_tol * scale

    @property
    def n_live(self) -> int:
        return int(self.live_blocks.sum())

    def rng(self, i: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(int(i),)))

    def coefficients(self, i: int) -> np.ndarray:
        g = complex_gaussians(self.rng(i), self.partition.block_shape)
        dead = ~self.live_blocks
        if dead.any():
            if not self._warned:
                warnings.warn(
                    f"{int(dead.sum())} of {dead.size} blocks carry no part of the base "
                    "datum and are skipped", RuntimeWarning, stacklevel=3)
                self._warned = True
            g[dead] = 0.0
        return g

    def sample_coeffs(self, indices: Sequence[int]) -> np.ndarray:
        """Spectral coefficients of several samples, shape ``(len(indices), *grid.shape)``."""
        g = np.stack([self.coefficients(i) for i in indices])
        return self.partition.multiplier(g) * self.base_spectral

    def expected_l2_squared(self) -> float:
        """``E ||f^omega||^2 = sum_k ||P_k f||^2``."""
        return float((self.block_norms[self.live_blocks] ** 2).sum())


def wiener_sample(ens: RandomEnsemble, i: int, coefficients: np.ndarray | None = None) -> Field:
    """Randomized datum ``sum_k g_k P_k f`` for sample ``i`` (or given coefficients)."""
    g = ens.coefficients(i) if coefficients is None else np.broadcast_to(
        np.asarray(coefficients, dtype=complex), ens.partition.block_shape)
    coeffs = ens.partition.multiplier(g) * ens.base_spectral
    return Field(ens.base.grid, coeffs, SPECTRAL).physical()


def free_spacetime_norms(grid: GridSpec, coeffs: np.ndarray, s: float, q: float, r: float,
                         times: np.ndarray) -> np.ndarray:
    """``|| <grad>^s e^{it Delta} f ||_{L^q_t L^r_x}`` on ``times`` for a batch of spectra."""
    weighted = coeffs * grid.japanese(s)
    prop = np.exp(-1j * np.multiply.outer(times, grid.k_squared))
    spatial = np.empty(coeffs.shape[:1] + times.shape)
    for m in range(len(times)):
        vals = inverse(grid, weighted * prop[m])
        spatial[:, m] = lp_norm_values(grid, vals, r)
    if math.isinf(q):
        return spatial.max(axis=1)
    return trapezoid(spatial**q, times, axis=1) ** (1.0 / q)


@dataclass
class TailReport:
    lambdas: np.ndarray
    survival: np.ndarray
    stderr: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    used: np.ndarray
    dropped: list[float]
    norms: np.ndarray
    hs_base: float

    def rows(self):
        for lam, sv, se in zip(self.lambdas, self.survival, self.stderr):
            yield float(lam), float(sv), float(se)

    CSV_HEADER = ("lambda", "survival", "stderr")


def fit_tail(lambdas: np.ndarray, norms: np.ndarray,
             window: tuple[float, float] = SURVIVAL_WINDOW) -> TailReport:
    """Weighted fit of ``log P(X > lambda)`` against ``lambda^2``.

    Only survival values in ``window`` enter; each point is weighted by the
    inverse variance ``n S / (1 - S)`` of its log-frequency.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    n = len(norms)
    surv = np.array([(norms > lam).mean() for lam in lambdas])
    stderr = np.sqrt(surv * (1 - surv) / n)
    used = (surv >= window[0]) & (surv <= window[1])
    dropped = [float(l) for l in lambdas[~used]]
    if used.sum() < 3:
        raise InsufficientDataError("fewer than three survival values in the fit window")
    x = lambdas[used] ** 2
    y = np.log(surv[used])
    w = n * surv[used] / (1 - surv[used])
    xm, ym = np.average(x, weights=w), np.average(y, weights=w)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / np.sum(w * (x - xm) ** 2))
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum(w * (y - ym) ** 2))
    r2 = 1.0 - float(np.sum(w * resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return TailReport(lambdas, surv, stderr, slope, intercept, r2, used, dropped, np.asarray(norms),
                      math.nan)


def strichartz_tail(ens: RandomEnsemble, s: float, q: float, r: float, T: float,
                    lambda_grid: np.ndarray | None = None, n_times: int = 32,
                    batch: int = 256) -> TailReport:
    """Empirical tail of the windowed Strichartz norm of the randomized free evolution."""
    if not (2 <= q < math.inf and 2 <= r < math.inf):
        raise DomainError("need 2 <= q, r < infinity")
    if not T > 0:
        raise DomainError("time window must be positive")
    if ens.samples < 1000:
        raise InsufficientDataError("tail estimation needs at least 1000 samples")
    grid = ens.base.grid
    times = np.linspace(0.0, T, n_times)
    norms = np.empty(ens.samples)
    for lo in range(0, ens.samples, batch):
        idx = range(lo, min(lo + batch, ens.samples))
        norms[lo:lo + len(idx)] = free_spacetime_norms(grid, ens.sample_coeffs(idx), s, q, r, times)
    if lambda_grid is None:
        lambda_grid = np.linspace(0.0, float(norms.max()), 41)
    rep = fit_tail(lambda_grid, norms)
    rep.hs_base = float(np.sqrt(np.sum(grid.japanese(2 * s) * np.abs(ens.base_spectral) ** 2)))
    return rep


@dataclass
class BilinearReport:
    N: float
    M: float
    ratios: np.ndarray
    normalizer: float

    @property
    def mean(self) -> float:
        return float(self.ratios.mean())

    @property
    def max(self) -> float:
        return float(self.ratios.max())


def _band(grid: GridSpec, lo: float, hi: float) -> np.ndarray:
    k = grid.k_abs
    return (k >= lo) & (k <= hi)


def localized_packet(grid: GridSpec, support: np.ndarray, width: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Random spectrum on ``support`` concentrated near the origin in space.

    Gaussian coefficients are windowed by ``exp(-|x|^2 / (2 width^2))`` and
    projected back onto ``support``; returns spectral coefficients.
    """
    c = complex_gaussians(rng, grid.shape) * support
    x = inverse(grid, c) * np.exp(-grid.radius**2 / (2 * width**2))
    return forward(grid, x) * support


def bilinear_pair_norm(grid: GridSpec, u_hat: np.ndarray, v_hat: np.ndarray, T: float,
                       n_times: int, chunk: int = 64) -> float:
    """``|| (e^{it Delta} u)(e^{it Delta} v) ||_{L^2([0,T] x box)}`` by trapezoid in time."""
    times = np.linspace(0.0, T, n_times)
    dens = np.empty(n_times)
    for lo in range(0, n_times, chunk):
        t = times[lo:lo + chunk]
        prop = np.exp(-1j * np.multiply.outer(t, grid.k_squared))
        u = inverse(grid, u_hat * prop)
        v = inverse(grid, v_hat * prop)
        dens[lo:lo + len(t)] = grid.cell_volume * np.sum(np.abs(u * v) ** 2,
                                                        axis=tuple(range(1, grid.dim + 1)))
    return math.sqrt(trapezoid(dens, times))


def bilinear_check(grid: GridSpec, N: float, M: float, T: float, samples: int,
                   seed: int = 0, width: float = 4.0, n_times: int | None = None) -> BilinearReport:
    """Ratios ``||uv||_{L^2_{t,x}} / (N^{(d-1)/2} M^{-1/2} ||u0|| ||v0||)`` over random packets.

    ``u0`` lives in ``|xi| <= N`` and ``v0`` in ``M/2 <= |xi| <= 2M``; both are
    spatially localized so that over ``[0, T]`` the fast packet crosses the
    slow one once without wrapping around the periodic box.
    """
    if M < 4 * N:
        raise DomainError("bilinear check needs M >= 4N")
    kmax = grid.dk * (grid.n // 2 - 1)
    if 2 * M > kmax:
        raise ResolutionError(f"annulus up to {2 * M} exceeds the resolved band {kmax:.3g}")
    low = _band(grid, 0.0, N)
    high = _band(grid, M / 2, 2 * M)
    if not high.any() or not low.any():
        raise ResolutionError("frequency support is empty on this grid")
    if n_times is None:
        n_times = int(math.ceil(T * (2 * M) ** 2)) + 1
    norm = N ** ((grid.dim - 1) / 2) * M ** -0.5
    ratios = np.empty(samples)
    for i in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        u = localized_packet(grid, low, width, rng)
        v = localized_packet(grid, high, width, rng)
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
        ratios[i] = bilinear_pair_norm(grid, u, v, T, n_times) / (norm * nu * nv)
    return BilinearReport(N, M, ratios, norm)


__all__ = [
    "MIN_HALF_WIDTH", "UnitPartition", "RandomEnsemble", "TailReport", "BilinearReport", "window_1d",
    "build_partition", "complex_gaussians", "wiener_sample", "free_spacetime_norms",
    "fit_tail", "strichartz_tail", "localized_packet", "bilinear_pair_norm", "bilinear_check",
]
