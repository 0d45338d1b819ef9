"""Command line entry point: ``bdspde {simulate,ensemble,thresholds,validate}``."""

import argparse
import logging
import sys

from .config import load_config
from .errors import BDSPDEError, BlowUpError, ConfigError, PositivityError
from .experiment import run_ensemble, run_single, threshold_report
from .validation import DEFAULT_ENSEMBLE, run_validation

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_VALIDATION = 3


def _parser():
    parser = argparse.ArgumentParser(
        prog="bdspde",
        description="Stochastic Beddington-DeAngelis predator-prey SPDE toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, metavar="PATH")
        p.add_argument("--seed", type=int, metavar="INT")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--traj", type=int, metavar="INT", help="ensemble size override")
        p.add_argument("--threads", type=int, default=1, metavar="INT")

    common(sub.add_parser("simulate", help="simulate one trajectory"))
    common(sub.add_parser("ensemble", help="simulate and reduce an ensemble"))
    common(sub.add_parser("thresholds", help="report extinction/permanence thresholds"))
    common(sub.add_parser("validate", help="run the invariant suite"), config_required=False)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "validate":
        ok, _ = run_validation(args.traj if args.traj else DEFAULT_ENSEMBLE)
        return EXIT_OK if ok else EXIT_VALIDATION

    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(seed=args.seed, ensemble=args.traj)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be nonnegative", "seed")
        if args.traj is not None and args.traj < 1:
            raise ConfigError("ensemble size must be >= 1", "traj")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "thresholds":
            report = threshold_report(cfg)
            lines = [f"{k}={v}" for k, v in report.as_items()]
            print("\n".join(lines))
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write("\n".join(lines) + "\n")
        elif args.command == "simulate":
            run_single(cfg, trajectory_id=0, out=args.out or cfg.output)
        else:
            stats, report, records = run_ensemble(cfg, threads=max(args.threads, 1),
                                                  out=args.out or cfg.output)
            print(f"n_traj={stats.n_traj} verdict={report.verdict} "
                  f"({report.fired_condition})")
    except (BlowUpError, PositivityError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except BDSPDEError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
