"""Command-line entry point: run experiments, build references, probe games."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .harness import (
    PRESETS,
    build_reference,
    load_config,
    preset,
    resolve_out_dir,
    run_experiment,
    save_reference,
)
from .metrics import monotonicity_probe


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to an experiment config (JSON)")


def _load(args):
    if getattr(args, "preset", None):
        return preset(args.preset)
    if args.config:
        return load_config(args.config)
    raise SystemExit("provide --config PATH or --preset NAME")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gmfg")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment over its seed list")
    _add_config_arg(run_p)
    run_p.add_argument("--preset", choices=sorted(PRESETS), help="built-in config")
    run_p.add_argument("--jobs", type=int, default=None, help="parallel seed runs")
    run_p.add_argument("--out-dir", default=None, help="output directory override")

    ref_p = sub.add_parser("reference", help="build and store a reference solution")
    _add_config_arg(ref_p)
    ref_p.add_argument("--out", required=True, help="where to write the artifact")

    probe_p = sub.add_parser(
        "probe-monotone", help="sample occupancy pairs and report the probe"
    )
    _add_config_arg(probe_p)
    probe_p.add_argument("--pairs", type=int, default=1000)
    probe_p.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = _load(args)
            manifest = run_experiment(config, jobs=args.jobs, out_dir=args.out_dir)
            target = resolve_out_dir(args.out_dir, config)
            print(f"wrote {len(manifest['runs'])} run(s) to {target}")
            return 0
        if args.command == "reference":
            config = load_config(args.config)
            reference = build_reference(config)
            save_reference(reference, args.out)
            print(f"wrote reference to {args.out}")
            return 0
        if args.command == "probe-monotone":
            config = load_config(args.config)
            from .harness import _build_model

            model, _ = _build_model(config.environment)
            rng = np.random.default_rng(args.seed)
            shape = (model.block_count, model.horizon)
            values = []
            for _ in range(args.pairs):
                rho = rng.dirichlet(
                    np.ones(model.n_states * model.n_actions), size=shape
                ).reshape(*shape, model.n_states, model.n_actions)
                rho_tilde = rng.dirichlet(
                    np.ones(model.n_states * model.n_actions), size=shape
                ).reshape(*shape, model.n_states, model.n_actions)
                values.append(monotonicity_probe(model, rho, rho_tilde))
            values = np.asarray(values)
            frac = float((values >= 0.0).mean())
            print(
                f"pairs={args.pairs} min={values.min():.6g} "
                f"mean={values.mean():.6g} frac_nonnegative={frac:.4f}"
            )
            return 0
    except Exception as exc:  # surface a clean message, nonzero status
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
