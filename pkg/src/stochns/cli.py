"""Command line front end: ``run``, ``list`` and ``validate``.

The worker count for Monte Carlo batches comes from ``STOCHNS_WORKERS``.
"""

import argparse
import logging
import sys

from .harness import EXIT_CONFIG, EXIT_OK, ConfigError, list_experiments, load_config, \
    run_experiment
from .parallel import WORKERS_ENV


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="stochns",
        description="Spectral Galerkin diagnostics for stochastic 2D Navier-Stokes.",
        epilog=f"Set {WORKERS_ENV} to fan Monte Carlo batches over worker processes.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config")
    run.add_argument("--out", help="override the configured output directory")
    sub.add_parser("list", help="list registered experiments")
    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("config")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list":
        for name, anchor, runtime in list_experiments():
            print(f"{name:22s} {runtime:8s} {anchor}")
        return EXIT_OK
    if args.command == "validate":
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}")
            return EXIT_CONFIG
        print(f"ok: {cfg.name} (config hash {cfg.hash()})")
        return EXIT_OK
    return run_experiment(args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
