"""Command-line front end: run, refmin, compare, svm."""

from __future__ import annotations

import argparse
import os
import sys

from . import harness
from .errors import (
    BudgetExhaustedError,
    ComparabilityError,
    DivergenceError,
    InvalidDataError,
    LabelError,
    ParameterError,
    ParseError,
)

_HANDLED = (
    ParseError,
    ParameterError,
    InvalidDataError,
    LabelError,
    ComparabilityError,
    DivergenceError,
    BudgetExhaustedError,
    OSError,
)


def _load_spec(path: str) -> harness.ExperimentSpec:
    if not os.path.exists(path):
        raise ParameterError(f"spec file not found: {path}")
    return harness.parse_spec(path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fsvrg",
        description="Benchmark variance-reduced stochastic solvers on regularized ERM problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every (solver, seed) in a spec; one trace CSV per run")
    p.add_argument("spec", help="experiment spec file (INI)")

    p = sub.add_parser("refmin", help="compute the reference minimum for a spec's objective")
    p.add_argument("spec", help="experiment spec file (INI)")

    p = sub.add_parser("compare", help="summarize traces in a run directory against its refmin")
    p.add_argument("dir", help="output directory produced by `run` and `refmin`")

    p = sub.add_parser("svm", help="hinge-loss train/test pipeline with accuracy traces")
    p.add_argument("spec", help="experiment spec file with an [svm] section")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            for path in harness.run_experiment(_load_spec(args.spec)):
                print(path)
        elif args.command == "refmin":
            ref = harness.compute_refmin(_load_spec(args.spec))
            print(f"refmin {ref.value!r} ({ref.method})")
        elif args.command == "compare":
            summary = harness.compare_traces(args.dir)
            for solver in sorted(summary):
                for tol, med in summary[solver].items():
                    med_txt = "unreached" if med is None else f"{med:.3f}"
                    print(f"{solver}  gap<={tol:g}: {med_txt} passes")
        elif args.command == "svm":
            for path in harness.run_svm_experiment(_load_spec(args.spec)):
                print(path)
    except _HANDLED as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
