"""Command-line surface: one subcommand per experiment.

Examples
--------
opgeom geom --family bernstein --function e1 --n-list 4,8,16,32 -o geom.csv
opgeom invariants -o invariants.csv     # exits nonzero on any failing row
opgeom iterates --config run.json --n-list 4,8   # flags override the file

Every run writes CSV (UTF-8, LF, '.' decimal separator) plus a JSON
metadata sidecar <output>.meta.json.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import DomainError
from .experiments import (EXPERIMENTS, ExperimentConfig, run_experiment)

_FLAG_KEYS = ("family", "n_list", "rho", "function", "grid_size", "eps",
              "output", "jobs")


def _parse_n_list(text):
    try:
        return tuple(int(part) for part in str(text).split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad n-list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opgeom",
        description="Convergence experiments for positive linear operators "
                    "and their geometric series on the weighted space")
    sub = parser.add_subparsers(dest="experiment", required=True,
                                metavar="|".join(EXPERIMENTS))
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--family", choices=("bernstein", "durrmeyer", "mkz",
                                            "mkz-reflected", "mkz-symmetric"))
        p.add_argument("--n-list", type=_parse_n_list, dest="n_list",
                       help="comma-separated increasing orders, e.g. 4,8,16")
        p.add_argument("--rho", type=float, help="durrmeyer shape parameter")
        p.add_argument("--function", help="registry function name")
        p.add_argument("--grid-size", type=int, dest="grid_size")
        p.add_argument("--eps", type=float,
                       help="series tolerance / truncation budget")
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--output", "-o", help="CSV output path")
        p.add_argument("--jobs", type=int, help="parallel workers over n")
    return parser


def _merge_config(args) -> ExperimentConfig:
    merged = {"experiment": args.experiment}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from exc
        merged.update({k: v for k, v in loaded.items()
                       if k in _FLAG_KEYS or k == "experiment"})
    for key in _FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if "n_list" in merged and merged["n_list"] is not None:
        merged["n_list"] = tuple(merged["n_list"])
    merged.setdefault("family", "bernstein")
    if merged["family"] == "durrmeyer" and merged.get("rho") is None:
        merged["rho"] = 1.0
    return ExperimentConfig(**{k: v for k, v in merged.items() if v is not None})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _merge_config(args)
        report = run_experiment(config)
    except (DomainError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not config.output:
        print(",".join(report.header))
        for row in report.rows:
            print(",".join("true" if v is True else "false" if v is False
                           else repr(v) if isinstance(v, float) else str(v)
                           for v in row))
    else:
        print(f"wrote {config.output} ({len(report.rows)} rows, "
              f"{report.metadata['wall_time_s']:.2f}s)")
    if config.experiment == "invariants":
        failures = report.failures
        for name, measured, threshold, _ in failures:
            print(f"FAIL {name}: measured {measured:.3e} > threshold "
                  f"{threshold:.3e}", file=sys.stderr)
        return 1 if failures else 0
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
