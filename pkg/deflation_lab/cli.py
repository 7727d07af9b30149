"""Command-line front end.

    deflation-lab run <experiment-id> [--config cfg.json] [--out DIR] [--seed N]
    deflation-lab spectrum --matrix A.mtx --precond {pd,pc,pa,none} [--coarse Z.csv]
    deflation-lab list
    deflation-lab show-config <experiment-id> [--config cfg.json] [--seed N]

Errors from the library are printed as ``error: <message>`` with exit status
2, unless ``DEFLATION_LAB_VERBOSE_ERRORS`` is set, in which case the traceback
is shown.
"""

import argparse
import json
import logging
import sys

import numpy as np
from tabulate import tabulate

from deflation_lab import __version__, config
from deflation_lab.errors import DeflationLabError
from deflation_lab.utils import warnings as dl_warnings
from deflation_lab.utils.logging import get_logger

logger = logging.getLogger(__name__)

PRECOND_CHOICES = {"pd": "PD", "pc": "PC", "pa": "PA", "none": "none"}
NEAR_TOL = 1e-3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="deflation-lab",
        description="Deflation, coarse correction and adapted deflation preconditioners: "
        "spectral bounds and GMRES experiments.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    parser.add_argument("--debug", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", help="experiment id (see 'list')")
    run.add_argument("--config", help="JSON or YAML file overriding the template")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int, help="seed of every random draw")
    run.add_argument("--threads", type=int, help="parallel experiment cells")
    run.add_argument("--no-progress", action="store_true", help="hide the progress bar")

    spec = sub.add_parser("spectrum", help="dense spectrum of a preconditioned matrix")
    spec.add_argument("--matrix", required=True, help="Matrix Market file")
    spec.add_argument("--precond", choices=sorted(PRECOND_CHOICES), default="none")
    spec.add_argument("--coarse", help="coarse space CSV (with optional JSON sidecar)")
    spec.add_argument("--side", choices=["left", "right"], default="left")
    spec.add_argument("--out", help="write the spectrum to this CSV")

    sub.add_parser("list", help="list experiment ids")

    show = sub.add_parser("show-config", help="print the merged, validated config")
    show.add_argument("experiment")
    show.add_argument("--config")
    show.add_argument("--seed", type=int)
    return parser


def cmd_run(args):
    from deflation_lab.experiments import get_experiment
    from deflation_lab.utils.config import load_experiment_config

    cfg = load_experiment_config(args.experiment, args.config, {"seed": args.seed, "out": args.out})
    experiment = get_experiment(cfg["experiment"])(
        cfg, max_workers=args.threads, progress=not args.no_progress, debug=args.debug
    )
    logger.info("running %s, output in %s", experiment.name, experiment.directory)
    summary = experiment.run()
    if summary.rows:
        print(tabulate(summary.rows, headers="keys", floatfmt=".3e"))
    logger.info("%d files written to %s", len(summary.files), experiment.directory)
    return summary.exit_code


def cmd_spectrum(args):
    from deflation_lab.analysis import spectrum_of
    from deflation_lab.precond import PreconditionedOperator, build_projection
    from deflation_lab.xio import read_coarse_space, read_matrix_market, write_spectrum

    A = read_matrix_market(args.matrix)
    kind = PRECOND_CHOICES[args.precond]
    p = None
    if kind != "none":
        if not args.coarse:
            raise DeflationLabError("--precond %s needs --coarse" % args.precond)
        p = build_projection(A, read_coarse_space(args.coarse).Z)
    spec = spectrum_of(PreconditionedOperator(A, kind, p, side=args.side))
    if args.out:
        write_spectrum(args.out, spec, label=kind)
    values = spec.values
    row = {
        "n": values.size,
        "min": values[0],
        "max": values[-1],
        "max_imag": spec.max_imag,
        "near_zero": int(np.sum(np.abs(values) < NEAR_TOL)),
        "near_one": int(np.sum(np.abs(values - 1.0) < NEAR_TOL)),
    }
    print(tabulate([row], headers="keys", floatfmt=".6e"))
    return 0


def cmd_list(args):
    from deflation_lab.experiments import EXPERIMENTS
    from deflation_lab.utils.config import list_presets

    presets = set(list_presets())
    rows = [
        {"experiment": name, "template": "yes" if name in presets else "no", "description": (cls.__doc__ or "").strip().split("\n")[0]}
        for name, cls in sorted(EXPERIMENTS.items())
    ]
    print(tabulate(rows, headers="keys"))
    return 0


def cmd_show_config(args):
    from deflation_lab.utils.config import load_experiment_config

    cfg = load_experiment_config(args.experiment, args.config, {"seed": args.seed})
    print(json.dumps(cfg, indent=2, sort_keys=True))
    return 0


COMMANDS = {
    "run": cmd_run,
    "spectrum": cmd_spectrum,
    "list": cmd_list,
    "show-config": cmd_show_config,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    get_logger(level=logging.DEBUG if args.debug else logging.INFO)
    dl_warnings.apply_custom_format()
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (DeflationLabError, FileNotFoundError, ValueError) as e:
        if config.VERBOSE_ERRORS:
            raise
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
