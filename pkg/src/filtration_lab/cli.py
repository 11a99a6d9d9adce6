"""Command line entry point: ``filtration-lab verify`` and ``filtration-lab generate``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import CapExceeded, FiltrationLabError, ParseError, ValidationError
from .scenario import TASKS, dumps_scenario, dumps_structured, dumps_text, generate, load_scenario, run

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="filtration-lab", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the tasks of a scenario file")
    v.add_argument("file")
    v.add_argument("--task", action="append", choices=TASKS, help="task to run (repeatable); defaults to the file's list")
    v.add_argument("--tol", type=float, default=None, help="absolute tolerance (default: 0 for rationals, 1e-9 otherwise)")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--format", choices=("text", "structured"), default="text")
    v.add_argument("-o", "--output", help="write the report here instead of stdout")

    g = sub.add_parser("generate", help="write a random scenario satisfying the hypotheses by construction")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--steps", type=int, default=1)
    g.add_argument("--branching", type=int, default=2)
    g.add_argument("--drift-scale", default="0")
    g.add_argument("--default", action="store_true", help="add a default time to a market")
    g.add_argument("--staggered", action="store_true", help="alternate market moves and default dates")
    g.add_argument("-o", "--output", required=True)
    return p


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "generate":
        try:
            doc = generate(args.seed, args.d, args.steps, branching=args.branching, drift_scale=args.drift_scale,
                           default=args.default, staggered=args.staggered)
        except (CapExceeded, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        _emit(dumps_scenario(doc), args.output)
        return EXIT_PASS
    try:
        scn = load_scenario(args.file, tol=args.tol)
    except (ParseError, ValidationError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FiltrationLabError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = run(scn, args.task, tol=args.tol, seed=args.seed)
    _emit(dumps_structured(report) if args.format == "structured" else dumps_text(report), args.output)
    return report["exit_status"]


if __name__ == "__main__":
    sys.exit(main())
