"""Experiment runners, their configuration and report plumbing."""

from .config import Config, ConfigError, load_config
from .inflation import run_inflation
from .profile import run_profile_growth, run_scale_separation
from .randomized import run_bilinear, run_randomized_convergence, run_strichartz_tail
from .report import Criterion, ExperimentReport, build_id, fit_line
from .validation import run_solver_validation

EXPERIMENTS = {
    "validate": run_solver_validation,
    "profile-growth": run_profile_growth,
    "scale-separation": run_scale_separation,
    "inflation": run_inflation,
    "randomized-convergence": run_randomized_convergence,
    "strichartz-tail": run_strichartz_tail,
    "bilinear": run_bilinear,
}

__all__ = [
    "Config", "ConfigError", "load_config", "ExperimentReport", "Criterion", "build_id",
    "fit_line", "EXPERIMENTS", "run_solver_validation", "run_profile_growth",
    "run_scale_separation", "run_inflation", "run_randomized_convergence",
    "run_strichartz_tail", "run_bilinear",
]
