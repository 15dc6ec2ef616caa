"""Concentrated profiles ("bubbles"), their mollification and phase evolution.

A bubble at scale ``n`` is ``kappa_n n^{d/2-s} phi(n (x - c))``.  Under the
dispersionless flow it only winds its phase,

    v(t, x) = v0(x) exp(i sigma t |v0(x)|^{p-1}),

which is what makes its ``H^s`` norm grow.  The superposition of bubbles over a
ladder of scales (plus a smooth background) is built by :func:`tanghuru`.

All schedule quantities are carried in log space so that ladders with
astronomically large ``n`` stay representable for formula-level work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.special import gamma as gamma_fn, j0

from .errors import DomainError, GeometryError, ResolutionError
from .grid import Field, GridSpec, PHYSICAL, SPECTRAL, apply_multiplier, forward, inverse
from .sobolev import hs_dot_norm_coeffs

EPS_FACTOR = 100.0
RESOLUTION_POINTS = 8
# beyond this argument the bump's transform is below 1e-15, under the quadrature noise floor
_HAT_CUTOFF = 1000.0


@dataclass(frozen=True)
class ProblemParams:
    """Equation constants: power ``p``, sign ``sigma`` (+1 focusing), regularity ``s``."""

    p: int = 3
    sigma: int = -1
    s: float = 0.3
    dim: int = 3

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 3 or self.p % 2 == 0:
            raise DomainError(f"p must be an odd integer >= 3, got {self.p}")
        if self.sigma not in (1, -1):
            raise DomainError(f"sigma must be +1 or -1, got {self.sigma}")
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if not 0.0 < self.s < self.s_c:
            raise DomainError(
                f"regularity must satisfy 0 < s < s_c = {self.s_c:.6g}, got {self.s}")

    @property
    def s_c(self) -> float:
        return self.dim / 2.0 - 2.0 / (self.p - 1)


def check_rates(p: int, gamma: float, beta: float) -> None:
    if not 0.0 < gamma < beta < 1.0:
        raise DomainError(f"need 0 < gamma < beta < 1, got gamma={gamma}, beta={beta}")
    if not (p - 1) * beta < 0.5:
        raise DomainError(f"need (p-1) beta < 1/2, got {(p - 1) * beta}")
    if not gamma < beta / 2.0:
        raise DomainError(f"need gamma < beta/2, got gamma={gamma}, beta={beta}")


@dataclass(frozen=True)
class BubbleParams:
    """Per-scale schedule; ``log_n`` is the natural log of the scale ``n``."""

    problem: ProblemParams
    log_n: float
    gamma: float = 0.05
    beta: float = 0.12

    def __post_init__(self):
        if not self.log_n >= 1.0:
            raise DomainError(f"scale must satisfy n >= e, got log n = {self.log_n}")
        check_rates(self.problem.p, self.gamma, self.beta)

    @classmethod
    def from_n(cls, problem: ProblemParams, n: float, gamma: float = 0.05,
               beta: float = 0.12) -> "BubbleParams":
        if n <= 0:
            raise DomainError("scale must be positive")
        return cls(problem, math.log(n), gamma, beta)

    @property
    def n(self) -> float:
        return math.exp(self.log_n)

    @property
    def log_log_n(self) -> float:
        return math.log(self.log_n)

    @property
    def log_kappa(self) -> float:
        return -self.gamma * self.log_log_n

    @property
    def kappa(self) -> float:
        return math.exp(self.log_kappa)

    @property
    def log_amplitude(self) -> float:
        """log of the peak height ``kappa n^{d/2-s}``."""
        pp = self.problem
        return self.log_kappa + (pp.dim / 2.0 - pp.s) * self.log_n

    @property
    def log_lam(self) -> float:
        return 0.5 * (self.problem.p - 1) * self.log_amplitude

    @property
    def lam(self) -> float:
        return math.exp(self.log_lam)

    @property
    def log_eps(self) -> float:
        return -math.log(EPS_FACTOR) - self.log_n

    @property
    def eps(self) -> float:
        return math.exp(self.log_eps)

    @property
    def log_phase_budget(self) -> float:
        """log of ``t_n lambda_n^2 = (log n)^{(beta-gamma)(p-1)}``."""
        return (self.beta - self.gamma) * (self.problem.p - 1) * self.log_log_n

    @property
    def phase_budget(self) -> float:
        return math.exp(self.log_phase_budget)

    @property
    def log_t(self) -> float:
        return self.log_phase_budget - 2.0 * self.log_lam

    @property
    def t(self) -> float:
        return math.exp(self.log_t)

    @property
    def log_lower_bound(self) -> float:
        """log of ``kappa_n (lambda_n^2 t_n)^s``."""
        return self.log_kappa + self.problem.s * self.log_phase_budget


def inflation_rate_exponent(pp: ProblemParams, gamma: float, beta: float) -> float:
    """Exponent of ``log n`` in the growth of the bubble's ``H^s`` norm at ``t_n``."""
    return pp.s * (beta - gamma) * (pp.p - 1) - gamma


@dataclass(frozen=True)
class CutoffProfile:
    """Radial bump ``exp(1 - 1/(1 - r^2))`` on the unit ball, equal to 1 at the origin."""

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1.0
        ri = r[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ri * ri))
        return out

    @property
    def peak(self) -> float:
        return 1.0

    def integral(self, dim: int) -> float:
        return float(_radial_transform(self, dim, np.zeros(1))[0])


@lru_cache(maxsize=None)
def _gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _node_count(kmax: float) -> int:
    return int(np.clip(0.6 * kmax + 96, 128, 2048))


def _radial_transform(profile: CutoffProfile, dim: int, k: np.ndarray,
                      node_scale: float = 1.0, chunk: int = 2048) -> np.ndarray:
    """Continuum transform ``int f(|x|) exp(-i k.x) dx`` of a radial function on the unit ball."""
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape)
    order = np.argsort(k)
    ks = k[order]
    res = np.zeros(ks.shape)
    for lo in range(0, ks.size, chunk):
        kc = ks[lo:lo + chunk]
        live = kc <= _HAT_CUTOFF
        if not live.any():
            continue
        kc = kc[live]
        r, w = _gauss_legendre(int(_node_count(kc[-1]) * node_scale))
        wf = w * profile(r)
        kr = np.outer(kc, r)
        if dim == 1:
            vals = 2.0 * np.cos(kr) @ wf
        elif dim == 2:
            vals = 2.0 * math.pi * (j0(kr) @ (wf * r))
        else:
            vals = 4.0 * math.pi * (np.sinc(kr / math.pi) @ (wf * r * r))
        res[lo:lo + kc.size] = vals
    out[order] = res
    return out


@dataclass(frozen=True)
class Mollifier:
    """Unit-mass bump ``rho = phi / int(phi)`` with its transform ``rho_hat``."""

    dim: int
    profile: CutoffProfile = dc_field(default_factory=CutoffProfile)

    @cached_property
    def mass(self) -> float:
        return self.profile.integral(self.dim)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return self.profile(r) / self.mass

    def hat(self, k: np.ndarray, node_scale: float = 1.0) -> np.ndarray:
        """``rho_hat(k) = int rho(x) exp(-i k.x) dx`` for radial arguments ``k = |xi| >= 0``."""
        return _radial_transform(self.profile, self.dim, k, node_scale) / self.mass

    def multiplier(self, grid: GridSpec, eps: float) -> np.ndarray:
        """``rho_hat(eps |xi|)`` on the lattice of ``grid``."""
        if grid.dim != self.dim:
            raise ValueError("mollifier and grid dimensions differ")
        return _lattice_multiplier(self, grid, float(eps))


@lru_cache(maxsize=16)
def _lattice_multiplier(rho: Mollifier, grid: GridSpec, eps: float) -> np.ndarray:
    # |xi|^2 is dk^2 times an integer, so unique values come from integer index sums
    idx2 = np.zeros(grid.shape, dtype=np.int64)
    for j in grid._sparse(grid.axis_index):
        idx2 = idx2 + j * j
    uniq, inv = np.unique(idx2, return_inverse=True)
    vals = rho.hat(eps * grid.dk * np.sqrt(uniq.astype(float)))
    table = vals[inv].reshape(grid.shape)
    table.flags.writeable = False
    return table


def ode_phase(t, sigma: int):
    """Exact solution ``exp(i sigma t)`` of the unit-amplitude dispersionless ODE."""
    return np.exp(1j * sigma * np.asarray(t, dtype=float)) if np.ndim(t) else complex(
        math.cos(sigma * t), math.sin(sigma * t))


def _check_fit(grid: GridSpec, log_n: float, center: Sequence[float], pad: float = 0.0) -> None:
    n = math.exp(log_n)
    if grid.spacing > 1.0 / (RESOLUTION_POINTS * n) * (1 + 1e-12):
        raise ResolutionError(
            f"grid spacing {grid.spacing:.3g} does not resolve scale 1/n = {1 / n:.3g} "
            f"(need h <= 1/({RESOLUTION_POINTS} n))")
    reach = 1.0 / n + pad
    for c in center:
        if abs(c) + reach > grid.half_width:
            raise GeometryError(
                f"support of radius {reach:.3g} around {tuple(center)} leaves the box "
                f"[-{grid.half_width}, {grid.half_width})")


def _center(grid: GridSpec, center) -> tuple[float, ...]:
    if center is None:
        return (0.0,) * grid.dim
    c = tuple(float(x) for x in np.atleast_1d(center))
    if len(c) != grid.dim:
        raise ValueError(f"center has {len(c)} coordinates, grid has dimension {grid.dim}")
    return c


def _scaled_radius(grid: GridSpec, n: float, center: tuple[float, ...]) -> np.ndarray:
    r2 = np.zeros(grid.shape)
    for x, c in zip(grid.coords, center):
        r2 = r2 + (n * (x - c)) ** 2
    return np.sqrt(r2)


def bubble_initial(pp: ProblemParams, bp: BubbleParams, phi: CutoffProfile,
                   grid: GridSpec, center=None) -> Field:
    """Samples of ``kappa_n n^{d/2-s} phi(n (x - center))``."""
    if grid.dim != pp.dim:
        raise ValueError("problem and grid dimensions differ")
    c = _center(grid, center)
    _check_fit(grid, bp.log_n, c)
    amp = math.exp(bp.log_amplitude)
    return Field(grid, amp * phi(_scaled_radius(grid, bp.n, c)), PHYSICAL)


def mollify(f: Field, rho: Mollifier, eps: float) -> Field:
    """Convolution with ``rho_eps``, done as multiplication by ``rho_hat(eps xi)``.

    The result keeps the representation of the input.
    """
    if eps < 0:
        raise DomainError(f"mollification width must be >= 0, got {eps}")
    if eps == 0:
        return f
    out = apply_multiplier(f.spectral(), rho.multiplier(f.grid, eps))
    return out if f.representation == SPECTRAL else out.physical()


def ode_evolve_values(values: np.ndarray, t: float, p: int, sigma: int) -> np.ndarray:
    mod2 = (values * values.conj()).real
    return values * np.exp((1j * sigma * t) * mod2 ** ((p - 1) // 2))


def bubble_ode_evolved(pp: ProblemParams, bp: BubbleParams, phi: CutoffProfile,
                       rho: Mollifier, grid: GridSpec, center, eps: float, t: float) -> Field:
    """Mollified bubble carried by the dispersionless flow for time ``t``."""
    v0 = mollify(bubble_initial(pp, bp, phi, grid, center), rho, eps).physical()
    return Field(grid, ode_evolve_values(v0.values, t, pp.p, pp.sigma), PHYSICAL)


@dataclass(frozen=True)
class Ladder:
    """Scale ladder: ``geometric`` gives ``n0 r^k``, ``double-exponential`` gives ``exp(a^k)``."""

    kind: str = "geometric"
    n0: float = 8.0
    ratio: float = 4.0
    a: float = 5.0

    def __post_init__(self):
        if self.kind == "geometric":
            if not self.ratio > 1:
                raise DomainError("geometric ladder needs ratio > 1")
            if not self.n0 >= math.e:
                raise DomainError("geometric ladder needs n0 >= e")
        elif self.kind == "double-exponential":
            if not self.a > 4:
                raise DomainError("double-exponential ladder needs a > 4")
        else:
            raise DomainError(f"unknown ladder kind {self.kind!r}")

    def log_n(self, k: int) -> float:
        if self.kind == "geometric":
            return math.log(self.n0) + k * math.log(self.ratio)
        return self.a**k

    def n(self, k: int) -> float:
        return math.exp(self.log_n(k))


@dataclass(frozen=True, eq=False)
class TanghuruSpec:
    """Truncated superposition ``u0 + sum_{k=k0}^{K} v_{0,k}`` of bubbles.

    ``centers`` maps a rung index to its center; missing rungs sit at the origin.
    """

    k0: int
    K: int
    ladder: Ladder = dc_field(default_factory=Ladder)
    centers: Mapping[int, Sequence[float]] = dc_field(default_factory=dict)
    background: Field | None = None
    gamma: float = 0.05
    beta: float = 0.12

    def __post_init__(self):
        if self.K < self.k0:
            raise DomainError("truncation index K must be >= k0")
        if self.ladder.log_n(self.k0) < 1.0:
            raise DomainError("first rung must have n >= e")

    @property
    def rungs(self) -> range:
        return range(self.k0, self.K + 1)

    def bubble(self, pp: ProblemParams, k: int) -> BubbleParams:
        return BubbleParams(pp, self.ladder.log_n(k), self.gamma, self.beta)

    def center(self, grid: GridSpec, k: int) -> tuple[float, ...]:
        return _center(grid, self.centers.get(k))

    def validate(self, pp: ProblemParams, grid: GridSpec) -> None:
        for k in self.rungs:
            bp = self.bubble(pp, k)
            _check_fit(grid, bp.log_n, self.center(grid, k), pad=bp.eps)


def tanghuru_term(pp: ProblemParams, spec: TanghuruSpec, phi: CutoffProfile,
                  grid: GridSpec, k: int) -> Field:
    if k not in spec.rungs:
        raise IndexError(f"rung {k} outside [{spec.k0}, {spec.K}]")
    return bubble_initial(pp, spec.bubble(pp, k), phi, grid, spec.center(grid, k))


def tanghuru(pp: ProblemParams, spec: TanghuruSpec, phi: CutoffProfile, grid: GridSpec) -> Field:
    """Background plus every bubble of the ladder from ``k0`` to ``K``."""
    spec.validate(pp, grid)
    total = np.zeros(grid.shape, dtype=complex)
    if spec.background is not None:
        total += spec.background.physical().values
    for k in spec.rungs:
        total += tanghuru_term(pp, spec, phi, grid, k).values
    return Field(grid, total, PHYSICAL)


def free_multiplier(grid: GridSpec, t: float) -> np.ndarray:
    return np.exp(-1j * t * grid.k_squared)


def linear_correction(pp: ProblemParams, spec: TanghuruSpec, phi: CutoffProfile,
                      rho: Mollifier, grid: GridSpec, k: int, eps: float, t: float) -> Field:
    """Free evolution of the mollified background and of all bubbles coarser than ``k``."""
    if k not in spec.rungs:
        raise IndexError(f"rung {k} outside [{spec.k0}, {spec.K}]")
    acc = np.zeros(grid.shape, dtype=complex)
    if spec.background is not None:
        acc += spec.background.physical().values
    for l in range(spec.k0, k):
        acc += tanghuru_term(pp, spec, phi, grid, l).values
    coeffs = forward(grid, acc)
    if eps > 0:
        coeffs *= rho.multiplier(grid, eps)
    coeffs *= free_multiplier(grid, t)
    return Field(grid, inverse(grid, coeffs), PHYSICAL)


def smooth_background(grid: GridSpec, amplitude: float = 0.1, radius: float | None = None,
                      phi: CutoffProfile | None = None) -> Field:
    """Compactly supported smooth datum ``amplitude * phi(x / radius)`` centred at the origin."""
    phi = phi or CutoffProfile()
    radius = 0.5 * grid.half_width if radius is None else radius
    if radius >= grid.half_width:
        raise GeometryError("background support leaves the box")
    return Field(grid, amplitude * phi(grid.radius / radius), PHYSICAL)


def profile_sobolev_norm(phi: CutoffProfile, dim: int, m: float, homogeneous: bool = True,
                         kmax: float = _HAT_CUTOFF, nodes: int = 20000) -> float:
    """Continuum ``||phi||`` with weight ``|xi|^m`` (or ``<xi>^m``) by radial quadrature."""
    k = np.linspace(0.0, kmax, nodes)
    hat = _radial_transform(phi, dim, k)
    weight = k ** (2 * m) if homogeneous else (1 + k * k) ** m
    shell = 2 * math.pi ** (dim / 2) / gamma_fn(dim / 2)
    integrand = hat**2 * weight * k ** (dim - 1) * shell
    return math.sqrt(simpson(integrand, x=k) / (2 * math.pi) ** dim)


def truncation_tail(pp: ProblemParams, spec: TanghuruSpec, phi: CutoffProfile,
                    extra: int = 50) -> dict[str, float]:
    """Estimated ``H^s`` size of the bubbles dropped beyond ``K``.

    Each dropped bubble has homogeneous norm ``kappa_{n_k} ||phi||_{dot H^s}``;
    the first ``extra`` of them are summed with the triangle inequality.
    """
    base = profile_sobolev_norm(phi, pp.dim, pp.s)
    terms = []
    for k in range(spec.K + 1, spec.K + 1 + extra):
        log_n = spec.ladder.log_n(k)
        terms.append(math.exp(-spec.gamma * math.log(log_n)) * base)
    return {"first_omitted": terms[0], "partial_tail": float(sum(terms)), "terms_summed": extra}




def wound_profile_norm(pp: ProblemParams, theta: float, m: float | None = None,
                       eps_n: float = 1.0 / EPS_FACTOR, half_width: float | None = None,
                       points: int | None = None, n: float | None = None) -> float:
    """``|| g exp(i sigma theta |g|^{p-1}) ||`` in homogeneous ``H^m`` with ``g = phi * rho_{eps_n}``.

    This is the unit-scale shape of a mollified bubble after phase winding
    ``theta = t lambda_n^2``; by scaling,
    ``||v_n^eps(t)||_{dot H^s} = kappa_n * wound_profile_norm(pp, t lambda_n^2)``
    when ``eps n = eps_n``.  Works for huge ``theta`` on a one-dimensional grid:
    in three dimensions the radial function ``f`` is traded for the odd
    function ``r f(r)`` on the line, which satisfies
    ``||f||_{dot H^m(R^3)}^2 = 2 pi ||r f||_{dot H^m(R)}^2``.

    Passing the scale ``n`` switches to the weight ``(n^{-2} + |xi|^2)^m``,
    which gives the inhomogeneous norm ``||v_n^eps(t)||_{H^m} / kappa_n``.

    The periodic sum misses the low-frequency cusp of fractional weights at a
    rate ``dk^{1+2m}``; the line is much worse off than ``r f(r)``, so the
    default box is far wider there.
    """
    if pp.dim not in (1, 3):
        raise DomainError("wound profile norm is available in dimensions 1 and 3")
    m = pp.s if m is None else m
    if half_width is None:
        half_width = 64.0 if pp.dim == 1 else 8.0
    if points is None:
        points = 2**19 if pp.dim == 1 else 2**16
    grid = GridSpec(1, points, half_width)
    r = grid.axis_coords
    phi = CutoffProfile()
    rho = Mollifier(pp.dim)
    base = phi(np.abs(r)) * (r if pp.dim == 3 else 1.0)
    coeffs = forward(grid, base.astype(complex)) * rho.hat(eps_n * np.abs(grid.axis_wavenumbers))
    q = inverse(grid, coeffs).real
    if pp.dim == 3:
        g = np.zeros_like(q)
        nz = r != 0
        g[nz] = q[nz] / r[nz]
    else:
        g = q
    wound = q * np.exp(1j * pp.sigma * theta * np.abs(g) ** (pp.p - 1))
    wound_hat = forward(grid, wound)
    if n is None:
        val = float(hs_dot_norm_coeffs(grid, wound_hat, m))
    else:
        weight = (n**-2.0 + grid.k_squared) ** m
        val = math.sqrt(float(np.sum(weight * np.abs(wound_hat) ** 2)))
    return val * math.sqrt(2 * math.pi) if pp.dim == 3 else val


__all__ = [
    "ProblemParams", "BubbleParams", "CutoffProfile", "Mollifier", "Ladder", "TanghuruSpec",
    "check_rates", "inflation_rate_exponent", "ode_phase", "bubble_initial", "mollify",
    "bubble_ode_evolved", "ode_evolve_values", "tanghuru", "tanghuru_term",
    "linear_correction", "free_multiplier", "smooth_background", "profile_sobolev_norm",
    "truncation_tail", "wound_profile_norm",
]
