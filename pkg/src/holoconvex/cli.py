"""Command-line entry point: `holoconvex check` and `holoconvex selftest`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import HoloconvexError
from .pipeline import load_problem, run_check, summary_lines
from .selftest import FAULTS, run_selftest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holoconvex",
        description="Strong P-convexity certificates at strictly pseudoconvex boundary points.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="classify a boundary point and certify the verdict")
    check.add_argument("problem", type=Path, help="JSON problem file")
    check.add_argument("--order", type=int, default=None, help="truncation order N (overrides the file)")
    check.add_argument("--tol", type=float, default=None, help="tolerance (overrides the file)")
    check.add_argument("--seed", type=int, default=None, help="sampling seed (overrides the file)")
    check.add_argument("--json", dest="json_out", type=Path, default=None, help="write the report here")
    check.add_argument("--original-coords", action="store_true",
                       help="also express the surface in the original coordinates")
    check.add_argument("--timing", action="store_true",
                       help="record wall-clock timings (makes the report non-reproducible)")

    st = sub.add_parser("selftest", help="run the bundled invariant suites")
    st.add_argument("--order", type=int, default=8)
    st.add_argument("--inject-fault", choices=FAULTS, default=None, help="negative control")
    return parser


def cmd_check(args) -> int:
    problem = load_problem(args.problem, order=args.order, tol=args.tol, seed=args.seed)
    report = run_check(problem, original_coords=args.original_coords, timing=args.timing)
    for line in summary_lines(report):
        print(line)
    if args.json_out is not None:
        args.json_out.write_text(report.dumps())
    return report.exit_status


def cmd_selftest(args) -> int:
    if args.order < 3:
        print("selftest needs --order >= 3", file=sys.stderr)
        return 2
    rows = run_selftest(args.order, args.inject_fault)
    width = max(len(name) for name, _, _ in rows)
    for name, ok, detail in rows:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    failed = sum(not ok for _, ok, _ in rows)
    print(f"{len(rows) - failed}/{len(rows)} suites passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args)
        return cmd_selftest(args)
    except HoloconvexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
