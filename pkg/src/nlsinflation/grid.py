"""Periodic spectral grid, unitary Fourier transform and Fourier multipliers.

The box is ``[-L, L)^d`` sampled with ``N`` points per axis.  Spectral
coefficients follow the continuum convention

    f_hat(xi) = (2L)^{-d/2} \\int_box f(x) exp(-i xi.x) dx,

discretised by the rectangle rule, so that ``sum |f_hat|^2`` equals the
quadrature of ``|f|^2`` exactly (Parseval) and a plane wave ``exp(i k.x)``
has the single coefficient ``(2L)^{d/2}`` at ``xi = k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

from .errors import RepresentationError

PHYSICAL = "physical"
SPECTRAL = "spectral"

_workers = 1


def set_threads(n: int) -> None:
    """Number of threads handed to the FFT backend (``-1`` = all cores)."""
    global _workers
    _workers = int(n)


def get_threads() -> int:
    return _workers


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n: int
    half_width: float = math.pi

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 8, got {self.n}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** self.dim

    @property
    def dk(self) -> float:
        """Lattice spacing in wavenumber, pi / L."""
        return math.pi / self.half_width

    @cached_property
    def axis_coords(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n)

    @cached_property
    def axis_index(self) -> np.ndarray:
        """Integer mode index j in FFT order, j in [-N/2, N/2)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        return self.dk * self.axis_index

    def _sparse(self, axis_values: np.ndarray) -> tuple[np.ndarray, ...]:
        out = []
        for a in range(self.dim):
            shp = [1] * self.dim
            shp[a] = self.n
            out.append(axis_values.reshape(shp))
        return tuple(out)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Sparse (broadcastable) coordinate arrays, one per axis."""
        return self._sparse(self.axis_coords)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return self._sparse(self.axis_wavenumbers)

    @cached_property
    def k_squared(self) -> np.ndarray:
        ksq = np.zeros(self.shape)
        for k in self.wavenumbers:
            ksq = ksq + k * k
        return ksq

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k_squared)

    @cached_property
    def radius(self) -> np.ndarray:
        """|x| on the grid."""
        r2 = np.zeros(self.shape)
        for x in self.coords:
            r2 = r2 + x * x
        return np.sqrt(r2)

    @cached_property
    def _phase_sign(self) -> np.ndarray:
        # (-1)^(j_1+...+j_d): moves the origin of the FFT from x = -L to x = 0
        s = np.ones(self.shape)
        for sgn in self._sparse((1 - 2 * (self.axis_index & 1)).astype(float)):
            s = s * sgn
        return s

    @cached_property
    def _scale(self) -> float:
        return self.spacing ** (self.dim / 2.0)

    @cached_property
    def _forward_factor(self) -> np.ndarray:
        return self._phase_sign * self._scale

    @cached_property
    def _inverse_factor(self) -> np.ndarray:
        return self._phase_sign / self._scale

    @cached_property
    def two_thirds_mask(self) -> np.ndarray:
        keep = np.abs(self.axis_index) < self.n / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for m in self._sparse(keep):
            mask = mask & m
        return mask

    def japanese(self, s: float) -> np.ndarray:
        """<xi>^s = (1 + |xi|^2)^(s/2)."""
        return (1.0 + self.k_squared) ** (0.5 * s)


def forward(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Raw unitary transform of a physical array (no Field wrapper)."""
    out = sfft.fftn(values, axes=tuple(range(-grid.dim, 0)), norm="ortho", workers=_workers)
    out *= grid._forward_factor
    return out


def inverse(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    work = coeffs * grid._inverse_factor
    return sfft.ifftn(work, axes=tuple(range(-grid.dim, 0)), norm="ortho",
                      workers=_workers, overwrite_x=True)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a grid, tagged with their representation."""

    grid: GridSpec
    values: np.ndarray = dc_field(repr=False)
    representation: str = PHYSICAL

    def __post_init__(self):
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.representation!r}")
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values of shape {vals.shape} do not match grid {self.grid.shape}")
        if vals is self.values:
            vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def _adopt(cls, grid: GridSpec, values: np.ndarray, representation: str) -> "Field":
        """Wrap a freshly computed array without the defensive copy."""
        obj = object.__new__(cls)
        values.flags.writeable = False
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "values", values)
        object.__setattr__(obj, "representation", representation)
        return obj

    @property
    def is_physical(self) -> bool:
        return self.representation == PHYSICAL

    def physical(self) -> "Field":
        return self if self.is_physical else to_physical(self)

    def spectral(self) -> "Field":
        return self if not self.is_physical else to_spectral(self)

    def __add__(self, other: "Field") -> "Field":
        return _combine(self, other, 1.0)

    def __sub__(self, other: "Field") -> "Field":
        return _combine(self, other, -1.0)

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.values * c, self.representation)

    __rmul__ = __mul__


def _combine(a: Field, b: Field, sign: float) -> Field:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if a.representation != b.representation:
        b = b.physical() if a.is_physical else b.spectral()
    return Field(a.grid, a.values + sign * b.values, a.representation)


def to_spectral(f: Field) -> Field:
    if f.representation != PHYSICAL:
        raise RepresentationError("to_spectral expects a physical field")
    return Field._adopt(f.grid, forward(f.grid, f.values), SPECTRAL)


def to_physical(f: Field) -> Field:
    if f.representation != SPECTRAL:
        raise RepresentationError("to_physical expects a spectral field")
    return Field._adopt(f.grid, inverse(f.grid, f.values), PHYSICAL)


Symbol = Union[np.ndarray, complex, float, Callable[..., np.ndarray]]


def apply_multiplier(f: Field, m: Symbol) -> Field:
    """Multiply spectral coefficients by ``m(xi)``.

    ``m`` is either an array broadcastable to the grid shape (already
    evaluated on the lattice), a scalar, or a callable receiving the sparse
    wavenumber arrays ``xi_1, ..., xi_d``.
    """
    if f.representation != SPECTRAL:
        raise RepresentationError("apply_multiplier expects a spectral field")
    if callable(m):
        m = m(*f.grid.wavenumbers)
    out = np.asarray(f.values * m, dtype=np.complex128)
    if out.shape != f.grid.shape:
        raise ValueError("multiplier does not broadcast to the grid shape")
    return Field._adopt(f.grid, out, SPECTRAL)


def plane_wave(grid: GridSpec, k: tuple[float, ...], amplitude: complex = 1.0) -> Field:
    phase = sum(ki * x for ki, x in zip(k, grid.coords))
    return Field(grid, amplitude * np.exp(1j * phase) * np.ones(grid.shape), PHYSICAL)


def random_field(grid: GridSpec, rng: np.random.Generator) -> Field:
    """Field with independent uniform real and imaginary parts in [0, 1)."""
    vals = rng.random(grid.shape[:-1] + (2 * grid.n,)).view(np.complex128)
    return Field._adopt(grid, vals, PHYSICAL)


def translate(f: Field, steps: tuple[int, ...]) -> Field:
    """Circular shift by whole grid points along each axis (f(x - steps*h))."""
    phys = f.physical()
    return Field(f.grid, np.roll(phys.values, steps, axis=tuple(range(f.grid.dim))), PHYSICAL)
