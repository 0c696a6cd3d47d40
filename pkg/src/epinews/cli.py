"""Command-line entry point: run / sweep / inject / figures."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io, presets
from .harness import (
    ConfigError,
    InjectionSpec,
    ScenarioConfig,
    canonical_field,
    config_from_dict,
    run_scenario,
    run_sweep,
)

_INT_FIELDS = {"dim", "ones", "users", "authorities", "reads", "period",
               "queue_threshold", "steps", "repetitions", "seed"}
_FLOAT_FIELDS = {"p_active", "p_submit", "threshold", "theta", "epsilon",
                 "decay", "noise"}

# (canonical field, CLI flag, value type)
_PARAM_FLAGS = [
    ("dim", "--dim", int),
    ("ones", "--ones", int),
    ("users", "--users", int),
    ("authorities", "--authorities", int),
    ("p_active", "--p-active", float),
    ("p_submit", "--p-submit", float),
    ("reads", "--reads", int),
    ("threshold", "--delta", float),
    ("theta", "--theta", float),
    ("epsilon", "--epsilon", float),
    ("strategy", "--strategy", str),
    ("period", "--period", int),
    ("queue_threshold", "--q", int),
    ("decay", "--lambda", float),
    ("noise", "--noise", float),
    ("recommender", "--recommender", str),
    ("steps", "--steps", int),
    ("repetitions", "--reps", int),
    ("seed", "--seed", int),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON scenario config")
    parser.add_argument("--out", type=Path, default=Path("runs"),
                        help="output directory (default: runs/)")
    parser.add_argument("--name", help="run directory name")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes")
    parser.add_argument("--desk", action="store_true",
                        help="desk-scale population (12 tastes, 4 active)")
    for field, flag, ftype in _PARAM_FLAGS:
        parser.add_argument(flag, dest=field, type=ftype, default=None,
                            help=argparse.SUPPRESS)


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    data: dict = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError([f"config: file not found: {args.config}"])
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: invalid JSON: {exc}"])
    if args.desk:
        data.setdefault("dim", 12)
        data.setdefault("ones", 4)
    for field, _, _ in _PARAM_FLAGS:
        value = getattr(args, field)
        if value is not None:
            data[field] = value
    return config_from_dict(data)


def _parse_axis(spec: str) -> tuple[str, list]:
    name, sep, raw = spec.partition("=")
    if not sep or not raw:
        raise ConfigError([f"axis: expected param=v1,v2,..., got {spec!r}"])
    field = canonical_field(name)
    if field in _INT_FIELDS:
        cast = int
    elif field in _FLOAT_FIELDS:
        cast = float
    else:
        cast = str
    try:
        values = [cast(v) for v in raw.split(",")]
    except ValueError:
        raise ConfigError([f"axis {name}: cannot parse {raw!r} as {cast.__name__}"])
    return name, values


def _print_summary(result) -> None:
    s = result.mean_summary
    frac = s.get("equilibrium_approval_fraction")
    frac_text = f"{frac:.4f}" if frac is not None else "n/a"
    print(f"  approval fraction (trailing): {frac_text}")
    ed = s.get("final_excess_differences")
    if ed is not None:
        print(f"  excess differences (final):   {ed:.4f}")


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    result = run_scenario(config, jobs=args.jobs)
    out = io.write_run(args.out / (args.name or "run"), result)
    print(f"wrote {out}")
    _print_summary(result)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args)
    axes = [_parse_axis(spec) for spec in args.axis]
    sweep = run_sweep(config, axes, jobs=args.jobs)
    out = io.write_sweep(args.out / (args.name or "sweep"), sweep)
    print(f"wrote {out} ({len(sweep.cells)} cells)")
    return 0


def cmd_inject(args: argparse.Namespace) -> int:
    config = _load_config(args)
    spec = InjectionSpec(count=args.count, step=args.at_step,
                         quality=args.quality)
    config = config_from_dict({**config.to_dict(),
                               "injection": spec.__dict__})
    result = run_scenario(config, jobs=args.jobs)
    out = io.write_run(args.out / (args.name or "inject"), result)
    print(f"wrote {out}")
    _print_summary(result)
    return 0


def cmd_figures(args: argparse.Namespace) -> int:
    base, axes = presets.preset(args.preset, scale=args.scale,
                                repetitions=args.repetitions,
                                seed=args.seed or 1, steps=args.steps)
    sweep = run_sweep(base, axes, jobs=args.jobs)
    out = io.write_sweep(args.out / args.preset, sweep)
    print(f"wrote {out} ({len(sweep.cells)} cells)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epinews",
        description="Adaptive news spreading simulator and experiment harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    _add_config_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--axis", action="append", required=True,
                         metavar="PARAM=V1,V2,...",
                         help="sweep axis; repeat for a grid")
    p_sweep.set_defaults(func=cmd_sweep)

    p_inj = sub.add_parser("inject", help="high-quality news injection run")
    _add_config_flags(p_inj)
    p_inj.add_argument("--count", type=int, default=10)
    p_inj.add_argument("--at-step", type=int, default=500)
    p_inj.add_argument("--quality", type=float, default=1.5)
    p_inj.set_defaults(func=cmd_inject)

    p_fig = sub.add_parser("figures", help="emit a reference experiment bundle")
    p_fig.add_argument("preset", choices=presets.PRESET_IDS)
    p_fig.add_argument("--out", type=Path, default=Path("runs"))
    p_fig.add_argument("--scale", choices=("full", "desk"), default="full")
    p_fig.add_argument("--reps", dest="repetitions", type=int, default=None)
    p_fig.add_argument("--steps", type=int, default=None)
    p_fig.add_argument("--seed", type=int, default=None)
    p_fig.add_argument("--jobs", type=int, default=1)
    p_fig.set_defaults(func=cmd_figures)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
