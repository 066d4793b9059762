"""Command-line interface: validate, infer, eval, compare, costs, synth.

Exit codes are a stable contract: 0 on success, 2 for input or usage
problems, 3 for shape or semantic mismatches between otherwise valid inputs.
Output files are byte-identical across repeated runs; to keep that true
regardless of the host's BLAS threading configuration, the entry point pins
numerical libraries to one thread before numpy is first imported.
"""

from __future__ import annotations

import argparse
import os
import sys

_THREAD_VARS = (
    "OPENBLAS_NUM_THREADS",
    "OMP_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "BLIS_NUM_THREADS",
)


def _pin_single_threaded_math() -> None:
    # Only effective if numpy has not been imported yet; library users who
    # import the package normally are unaffected.
    if "numpy" in sys.modules:
        return
    for var in _THREAD_VARS:
        os.environ[var] = "1"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hieval",
        description=(
            "Combine fine- and coarse-grained classifier scores over a label "
            "hierarchy and evaluate hierarchy-aware metrics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, labels=False, ks=False, method=False, outfile=False):
        p.add_argument("--hierarchy", required=True, help="hierarchy JSON file")
        p.add_argument("--fine", help="fine-level score file")
        p.add_argument("--coarse", help="coarse-level score file")
        p.add_argument(
            "--level",
            action="append",
            metavar="DEPTH=PATH",
            help="upper-level score file for cascading; repeatable",
        )
        p.add_argument("--kind", choices=["logits", "probs"], help="how to read score values")
        if labels:
            p.add_argument("--labels", required=True, help="ground-truth leaf names, one per line")
        if ks:
            p.add_argument("--k", default="1,5,20", help="comma list of k values")
        if method:
            p.add_argument("--method", choices=["argmax", "hie", "hie-self", "crm", "hie-crm", "cascade"])
        if outfile:
            p.add_argument("--out", help="output file path")

    p = sub.add_parser("validate", help="check a hierarchy file and print its shape")
    p.add_argument("--hierarchy", required=True)

    p = sub.add_parser("infer", help="apply a decision rule and write scores plus predictions")
    add_common(p, method=True, outfile=True)
    p.add_argument("--preds-out", help="predictions path (default: OUT.preds.txt)")
    p.set_defaults(method="argmax")

    p = sub.add_parser("eval", help="evaluate one method against labels")
    add_common(p, labels=True, ks=True, method=True, outfile=True)
    p.add_argument("--preds", help="evaluate an existing predictions file instead of scores")

    p = sub.add_parser("compare", help="evaluate several methods into one table")
    add_common(p, labels=True, ks=True, outfile=True)
    p.add_argument("--methods", required=True, help="comma list of methods")

    p = sub.add_parser("costs", help="write the leaf-by-leaf LCA-height cost matrix")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic instance on disk")
    p.add_argument("--branching", required=True, help="comma list, e.g. 8,8")
    p.add_argument("--noise", required=True, help="comma list of per-level noise scales")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    return parser


def run(argv=None) -> int:
    _pin_single_threaded_math()
    args = build_parser().parse_args(argv)

    from . import commands
    from .errors import DataError, InputError

    handlers = {
        "validate": commands.cmd_validate,
        "infer": commands.cmd_infer,
        "eval": commands.cmd_eval,
        "compare": commands.cmd_compare,
        "costs": commands.cmd_costs,
        "synth": commands.cmd_synth,
    }
    try:
        # infer requires --out even though other commands treat it as optional
        if args.command == "infer" and not args.out:
            raise InputError("infer requires --out")
        return handlers[args.command](args, sys.stdout)
    except InputError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    return run(argv)
