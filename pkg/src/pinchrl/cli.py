"""Command line: ``pinchrl {train,sweep,trace,oracle,eval}``.

Exit status is 0 on success, 1 for configuration errors and 2 for failures
while running.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .ddpg import CheckpointError
from . import experiments as ex

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinchrl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_ckpt, help_ in [
        ("train", None, "train an agent and write training.csv plus a checkpoint"),
        ("sweep", False, "mean rate versus BS power and blockage density"),
        ("trace", True, "one evaluation episode per QoS threshold, with map plots"),
        ("oracle", False, "per-step grid-search oracle against baseline and learned policy"),
        ("eval", False, "Monte-Carlo metrics at the configured operating point"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="YAML config (defaults when omitted)")
        p.add_argument("--seed", type=int, help="master seed, overrides the config")
        p.add_argument("--out", type=Path, help="output directory, overrides the config")
        p.add_argument("-v", "--verbose", action="store_true")
        if needs_ckpt is not None:
            p.add_argument("--checkpoint", type=Path, required=needs_ckpt)
    return parser


def resolve(args) -> ExperimentConfig:
    exp = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(["--seed must be non-negative"])
        exp = exp.with_seed(args.seed)
    return exp


def run(args) -> None:
    exp = resolve(args)
    out = args.out or Path(exp.out or ".")
    ckpt = getattr(args, "checkpoint", None)
    if args.command == "train":
        result = ex.cmd_train(exp, out)
        from .plotting import plot_training

        plot_training(out / "training.csv", out / "training.png")
        print(f"trained {len(result.log)} episodes -> {out / 'checkpoint.npz'}")
    elif args.command == "sweep":
        ex.cmd_sweep(exp, ckpt, out)
        from .plotting import plot_sweep

        plot_sweep(out / "sweep.csv", out / "sweep.png")
        print(f"wrote {out / 'sweep.csv'}")
    elif args.command == "trace":
        for s in ex.cmd_trace(exp, ckpt, out):
            print(f"r_th={s.r_th:g}: corr={s.correlation:.3f} spread={s.mean_spread:.3f} m rate={s.mean_rate:.3f}")
    elif args.command == "oracle":
        rows = ex.cmd_oracle(exp, ckpt, out)
        print(f"wrote {len(rows)} rows to {out / 'oracle.csv'}")
    elif args.command == "eval":
        for row in ex.cmd_eval(exp, ckpt, out):
            print(f"{row[0]}: mean rate {row[4]:.4f} +- {row[5]:.4f}, QoS violations {row[6]:.3f}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        run(args)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CheckpointError, OSError, ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
