"""Experiment configuration: nested dataclasses loaded from TOML.

Every section and key is optional; anything present must match a known
field, otherwise :class:`ConfigError` is raised.  Defaults reproduce the
acceptance settings.
"""

from __future__ import annotations

import dataclasses
import math
import sys
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..bubbles import ProblemParams
from ..errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class ProblemSection:
    """Equation constants and schedule rates for one dimension."""

    p: int
    sigma: int
    s: float
    gamma: float
    beta: float

    def params(self, dim: int) -> ProblemParams:
        return ProblemParams(self.p, self.sigma, self.s, dim)


def _problem_1d() -> ProblemSection:
    # lambda_n ~ n^{1.2}, the same growth as the cubic equation in three dimensions
    return ProblemSection(p=9, sigma=-1, s=0.2, gamma=0.025, beta=0.06)


def _problem_3d() -> ProblemSection:
    return ProblemSection(p=3, sigma=-1, s=0.3, gamma=0.05, beta=0.12)


@dataclass
class SpotCheck:
    grid_points: int = 128
    half_width: float = 0.125
    n_values: list[float] = field(default_factory=lambda: [16.0, 64.0])
    tolerance: float = 0.1


@dataclass
class ProfileGrowthConfig:
    dim: int = 1
    n_values: list[float] = field(default_factory=lambda: [8.0, 16.0, 32.0, 64.0])
    m_values: list[float] = field(default_factory=lambda: [0.0, 1.0, 2.0])
    grid_points: int = 4096
    half_width: float = 4.0
    slope_tolerance: float = 0.05
    mollify_n: float = 8.0
    mollify_m_values: list[float] = field(default_factory=lambda: [1.0, 2.0])
    eps_n_values: list[float] = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0, 64.0])
    mollify_box: float = 70.0
    mollify_rel_tolerance: float = 0.10
    lower_bound_factor: float = 2.0
    spot_check: SpotCheck = field(default_factory=SpotCheck)
    run_spot_check: bool = True


@dataclass
class LadderSection:
    n0: float = 8.0
    ratio: float = 32.0
    rungs: int = 4


@dataclass
class ScaleSeparationConfig:
    dim: int = 1
    ladder: LadderSection = field(default_factory=LadderSection)
    m_low: float = 0.0
    m_high: float = 1.0
    grid_points: int = 2**20
    half_width: float = 0.25
    stability_factor: float = 2.0


@dataclass
class FormulaRate:
    """Formula-level check of the growth rate on the double-exponential ladder."""

    a: float = 5.0
    k_values: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    gamma: float = 0.01
    beta: float = 0.24
    rel_tolerance: float = 0.25
    points: int = 2**16


@dataclass
class InflationConfig:
    dim: int = 3
    ladder: LadderSection = field(default_factory=lambda: LadderSection(16.0, 2.0, 3))
    grid_points: int = 128
    half_width: float = 0.125
    background_amplitude: float = 0.1
    background_radius: float = 0.05
    steps_per_rung: int = 256
    snapshots: int = 33
    dealias: str = "two_thirds"
    dispersion: float = 1.0
    abort_on_leakage: bool = True
    data_variation: float = 0.2
    energy_floor: float = 0.1
    final_difference: float = 1.0
    formula: FormulaRate = field(default_factory=FormulaRate)
    run_formula: bool = True


@dataclass
class RandomizedConfig:
    dim: int = 3
    grid_points: int = 64
    half_width: float = math.pi
    base_width: float = 3.0
    base_amplitude: float = 1.0
    eps0: float = 0.25
    levels: int = 6
    T: float = 0.25
    dt: float = 2e-3
    snapshots: int = 17
    seeds: list[int] = field(default_factory=lambda: [11, 12, 13])
    final_fraction: float = 0.05
    partition_half_width: float = 1.0


@dataclass
class StrichartzConfig:
    dim: int = 1
    grid_points: int = 256
    half_width: float = math.pi
    samples: int = 10_000
    s: float = 0.2
    q: float = 6.0
    r: float = 6.0
    T: float = 1.0
    n_times: int = 32
    single_mode: int = 3
    base_decay: float = 1.5
    lambda_points: int = 41
    slope_rel_tolerance: float = 0.05
    min_r_squared: float = 0.9
    seed: int = 2024


@dataclass
class BilinearConfig:
    dim: int = 1
    grid_points: int = 8192
    half_width: float = 80 * math.pi
    N: float = 1.0
    ratios: list[float] = field(default_factory=lambda: [4.0, 8.0, 16.0])
    T: float = 4.0
    samples: int = 8
    width: float = 4.0
    max_factor: float = 2.0
    max_slope: float = 0.1
    seed: int = 7


@dataclass
class ValidationConfig:
    dim: int = 1
    grid_points: int = 256
    half_width: float = math.pi
    amplitude: float = 0.8
    dt: float = 1e-3
    t_end: float = 1.0
    order_dt: float = 1e-2
    random_fields: int = 100
    fft_grids: list[list[int]] = field(default_factory=lambda: [[1, 4096], [3, 128]])
    fft_budget_seconds: float = 10.0
    run_fft_check: bool = True


@dataclass
class Config:
    problem_1d: ProblemSection = field(default_factory=_problem_1d)
    problem_3d: ProblemSection = field(default_factory=_problem_3d)
    profile_growth: ProfileGrowthConfig = field(default_factory=ProfileGrowthConfig)
    scale_separation: ScaleSeparationConfig = field(default_factory=ScaleSeparationConfig)
    inflation: InflationConfig = field(default_factory=InflationConfig)
    randomized: RandomizedConfig = field(default_factory=RandomizedConfig)
    strichartz: StrichartzConfig = field(default_factory=StrichartzConfig)
    bilinear: BilinearConfig = field(default_factory=BilinearConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    seed: int = 0

    def problem(self, dim: int) -> ProblemSection:
        if dim == 1:
            return self.problem_1d
        if dim == 3:
            return self.problem_3d
        raise ConfigError(f"no problem section for dimension {dim}")


def _coerce(tp: Any, value: Any, where: str) -> Any:
    origin = typing.get_origin(tp)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, Mapping):
            raise ConfigError(f"{where}: expected a table")
        return _build(tp, value, where)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        (inner,) = typing.get_args(tp)
        return [_coerce(inner, v, f"{where}[{i}]") for i, v in enumerate(value)]
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    return value


def _build(cls, data: Mapping[str, Any], where: str = ""):
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where or 'root'}]: {', '.join(sorted(unknown))}")
    base = cls() if all(
        f.default is not dataclasses.MISSING or f.default_factory is not dataclasses.MISSING
        for f in dataclasses.fields(cls)) else None
    kwargs = {}
    for f in dataclasses.fields(cls):
        sub = f"{where}.{f.name}" if where else f.name
        if f.name in data:
            tp = hints[f.name]
            current = getattr(base, f.name) if base is not None else None
            if dataclasses.is_dataclass(tp) and current is not None:
                kwargs[f.name] = _merge(current, data[f.name], sub)
            else:
                kwargs[f.name] = _coerce(tp, data[f.name], sub)
        elif base is not None:
            kwargs[f.name] = getattr(base, f.name)
        else:
            raise ConfigError(f"missing key {sub}")
    return cls(**kwargs)


def _merge(current, data: Mapping[str, Any], where: str):
    """Overlay ``data`` on an existing dataclass instance (keeps its defaults)."""
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected a table")
    cls = type(current)
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    updates = {}
    for name, value in data.items():
        tp = hints[name]
        sub = f"{where}.{name}"
        if dataclasses.is_dataclass(tp):
            updates[name] = _merge(getattr(current, name), value, sub)
        else:
            updates[name] = _coerce(tp, value, sub)
    return dataclasses.replace(current, **updates)


def load_config(path: str | Path | None = None, text: str | None = None) -> Config:
    """Read a TOML file (or string) over the default configuration."""
    if path is not None and text is not None:
        raise ValueError("pass either a path or a text, not both")
    if path is None and text is None:
        return Config()
    try:
        data = tomllib.loads(text) if text is not None else tomllib.loads(Path(path).read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    return _merge(Config(), data, "root") if data else Config()


def config_to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)
