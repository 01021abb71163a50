"""Command-line interface.

Subcommands:
    simulate  integrate positive-P trajectories and write the result CSV
    oracle    exact quantum evolution on the same grid, same CSV schema
    compare   z-score two result CSVs against each other
    preset    print or save a published-figure configuration

Exit codes: 0 success, 2 validation error, 3 divergence breach,
4 comparison failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .runner import (
    DivergenceBreachError,
    ValidationError,
    compare_csv,
    config_to_text,
    load_config,
    preset,
    run,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_COMPARISON = 4


def _add_run_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--preset", help="start from a named preset instead of a config file")
    p.add_argument("--scale", type=int, default=1,
                   help="divide the preset trajectory count (presets only)")
    p.add_argument("--out", help="output CSV path (overrides the config)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--trajectories", type=int, help="override the trajectory count")
    p.add_argument("--workers", type=int, help="compute threads (results do not depend on this)")


def _config_from_args(args, mode: str):
    if bool(args.config) == bool(args.preset):
        raise ValidationError("provide exactly one of --config or --preset")
    cfg = preset(args.preset, args.scale) if args.preset else load_config(args.config)
    overrides = {"mode": mode}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trajectories is not None:
        overrides["trajectories"] = args.trajectories
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="triwell", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the stochastic engine")
    _add_run_arguments(p_sim)

    p_orc = sub.add_parser("oracle", help="run the exact quantum oracle")
    _add_run_arguments(p_orc)

    p_cmp = sub.add_parser("compare", help="z-score two result CSVs")
    p_cmp.add_argument("csv_a")
    p_cmp.add_argument("csv_b")
    p_cmp.add_argument("--z-max", type=float, default=4.0)
    p_cmp.add_argument("--out", help="write the JSON report here")

    p_pre = sub.add_parser("preset", help="emit a preset configuration")
    p_pre.add_argument("name")
    p_pre.add_argument("--scale", type=int, default=1)
    p_pre.add_argument("--out", help="write the config here instead of stdout")

    args = parser.parse_args(argv)
    try:
        if args.command in ("simulate", "oracle"):
            mode = "positive_p" if args.command == "simulate" else "oracle"
            cfg = _config_from_args(args, mode)
            out = run(cfg, workers=args.workers, out_path=args.out)
            print(f"{out.csv_path}: {len(out.result.times)} sample times, "
                  f"{out.n_diverged} divergent trajectories, {out.wall_time_s:.1f}s")
            return EXIT_OK
        if args.command == "compare":
            report = compare_csv(args.csv_a, args.csv_b, z_max=args.z_max)
            text = report.to_json()
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text + "\n")
            print(text)
            if not report.passed:
                worst = max(report.observables.items(), key=lambda kv: kv[1]["max_z"])
                print(f"comparison FAILED: {worst[0]} max |z| = {worst[1]['max_z']:.2f}",
                      file=sys.stderr)
                return EXIT_COMPARISON
            return EXIT_OK
        if args.command == "preset":
            cfg = preset(args.name, args.scale)
            text = config_to_text(cfg)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                print(text, end="")
            return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergenceBreachError as exc:
        print(f"divergence breach: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
