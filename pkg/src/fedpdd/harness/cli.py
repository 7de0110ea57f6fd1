"""Command line entry point: ``fedpdd {run,sweep,calibrate,baseline}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from ..errors import FedPDDError
from ..privacy import PrivacySpec, calibrate, classical_sigma
from .config import AXES, load_config
from .experiment import run_baseline, run_experiment


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _print_summary(report) -> None:
    rows = report.summary()
    head = f"{'value':>10}  {'method':<9} {'seeds':>5}  {'local A':>15}  {'local B':>15}  {'joint':>15}"
    print(head)
    for r in rows:
        value = "-" if r["value"] is None and not r["axis"] else str(r["value"])
        cells = [f"{_fmt(r[m + '_mean'])} ± {_fmt(r[m + '_std'])}" for m in ("local_a", "local_b", "joint")]
        print(f"{value:>10}  {r['method']:<9} {r['seeds']:>5}  " + "  ".join(f"{c:>15}" for c in cells))


def _load(args):
    cfg = load_config(args.config)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    if args.seeds:
        cfg = replace(cfg, seeds=tuple(args.seeds))
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    report = run_experiment(cfg, axis=None, with_baseline=not args.no_baseline)
    _print_summary(report)
    print(f"outputs in {cfg.output_dir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    report = run_experiment(cfg, axis=args.axis, with_baseline=not args.no_baseline)
    _print_summary(report)
    print(f"outputs in {cfg.output_dir}")
    return 0


def cmd_baseline(args) -> int:
    cfg = _load(args)
    report = run_baseline(cfg)
    _print_summary(report)
    print(f"outputs in {cfg.output_dir}")
    return 0


def cmd_calibrate(args) -> int:
    spec = PrivacySpec(args.epsilon, args.delta, args.sensitivity)
    sigma = calibrate(spec).sigma
    print(repr(sigma))
    if args.verbose:
        print(f"classical bound {classical_sigma(spec)!r}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedpdd", description="Two-party FedPDD simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_args(p):
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--out", help="override output_dir")
        p.add_argument("--seeds", type=int, nargs="+", help="override the seed list")

    p = sub.add_parser("run", help="FedPDD and baseline at the configured point")
    experiment_args(p)
    p.add_argument("--no-baseline", action="store_true", help="skip the local-only baseline")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat the run over one sweep axis")
    experiment_args(p)
    p.add_argument("--axis", required=True, choices=AXES)
    p.add_argument("--no-baseline", action="store_true", help="skip the local-only baseline")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("baseline", help="local-only training for every seed")
    experiment_args(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("calibrate", help="print the analytic Gaussian noise scale")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--sensitivity", type=float, required=True)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except FedPDDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
