"""Command line front-end: ``weightcalc analyze`` and ``weightcalc export``."""

from __future__ import annotations

import argparse
import logging
import sys

from .analysis import (AnalysisRequest, InputError, check_writable, export_curve, parse_suites, run,
                       write_output)
from .report import dumps, text_table
from .sequences import DEFAULT_P

EXIT_OK = 0
EXIT_INPUT = 2


def _subject_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--family", help="omega0 | power:<a> | log^<a> | gevrey:<s> | table:<path>")
    g.add_argument("--sequence", help="gevreyseq:<s> | file:<path>")
    p.add_argument("--tmin", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=1e8)
    p.add_argument("--grid-n", type=int, default=512)
    p.add_argument("--jmax", type=int, default=8)
    p.add_argument("--kmax", type=int, default=10 ** 6)
    p.add_argument("--P", dest="P", type=int, default=DEFAULT_P, help="truncation order of derived sequences")
    p.add_argument("--smax", type=float, default=64.0, help="largest slope of the conjugate table")
    p.add_argument("--slope-n", type=int, default=4096)
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weightcalc",
                                     description="Weight sequences, weight functions and Koethe nuclearity checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="run condition suites and emit a report")
    _subject_args(a)
    a.add_argument("--suite", default="all", help="comma list of axioms,bmm,cond4,conjugate,bridge,nuclearity,all")
    a.add_argument("--format", choices=("json", "csv", "text"), default="json")
    e = sub.add_parser("export", help="write a two-column CSV curve")
    _subject_args(e)
    e.add_argument("--what", required=True, help="omega | M | phistar | summand:<j>,<m>")
    e.add_argument("--format", choices=("csv",), default="csv")
    return parser


def _request(args, suites=("axioms",)) -> AnalysisRequest:
    kind, subject = ("weight", args.family) if args.family is not None else ("sequence", args.sequence)
    return AnalysisRequest(subject, kind, suites, args.tmin, args.tmax, args.grid_n, args.jmax, args.kmax,
                           args.P, args.smax, args.slope_n)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        check_writable(args.out)
        if args.command == "analyze":
            if args.format == "csv":
                raise InputError("analyze emits json or text; use 'weightcalc export' for CSV curves")
            req = _request(args, parse_suites(args.suite))
            report = run(req)
            text = dumps(report) if args.format == "json" else text_table(report)
        else:
            text = export_curve(_request(args), args.what)
        write_output(text, args.out)
    except InputError as exc:
        print(f"weightcalc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
