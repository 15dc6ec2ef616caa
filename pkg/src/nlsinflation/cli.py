"""Command line entry point: ``nlsinflation <experiment> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import ConfigError
from .experiments import EXPERIMENTS, load_config
from .experiments.config import Config
from .grid import set_threads

# experiments whose dimension can be switched from the command line
_DIM_SECTIONS = {
    "profile-growth": "profile_growth",
    "scale-separation": "scale_separation",
    "inflation": "inflation",
    "strichartz-tail": "strichartz",
    "bilinear": "bilinear",
    "validate": "validation",
}


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlsinflation",
        description="Norm inflation and randomized-data experiments for the power-law NLS.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file overriding the defaults")
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--seed", type=_u64, help="base seed for randomized experiments")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    common.add_argument("--dim", type=int, choices=(1, 3), help="spatial dimension")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, fn in EXPERIMENTS.items():
        doc = (fn.__doc__ or "").strip().splitlines()
        sub.add_parser(name, parents=[common], help=doc[0] if doc else None)
    return parser


def _with_dim(cfg: Config, experiment: str, dim: int | None) -> Config:
    if dim is None:
        return cfg
    section = _DIM_SECTIONS.get(experiment)
    if section is None:
        raise ConfigError(f"{experiment} runs in a fixed dimension")
    return dataclasses.replace(cfg, **{section: dataclasses.replace(getattr(cfg, section), dim=dim)})


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _with_dim(load_config(args.config), args.experiment, args.dim)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    set_threads(args.threads)
    report = EXPERIMENTS[args.experiment](cfg, args.seed)
    target = report.write(args.out)
    for line in report.lines():
        print(line)
    print(f"{args.experiment}: {'PASS' if report.passed else 'FAIL'} "
          f"in {report.wall_clock:.1f} s, report in {target}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
