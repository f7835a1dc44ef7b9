"""Command-line interface, a thin client over the operations layer.

Exit codes: 0 success (including truncated enumerations), 1 a verification
ran and failed, 2 bad input (arguments, parse failures, infeasible
parameters, unknown identifiers).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Optional

from .core import RegenBoundsError
from .formats import atomic_write
from .generators import EnumerationLimits
from .ops import (
    EXIT_ERROR,
    EXIT_OK,
    RunConfig,
    cmd_bounds,
    cmd_certify,
    cmd_construct,
    cmd_envelope,
    cmd_tradeoff,
    cmd_verify,
    thread_count_from_env,
)


def _fraction_arg(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad rational {text!r}") from exc
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _caps_arg(text: str) -> EnumerationLimits:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            "expected three comma-separated integers: chain,rects,refinements"
        )
    try:
        chain, rects, refinements = (int(p) for p in parts)
        return EnumerationLimits(chain, rects, refinements)
    except (ValueError, RegenBoundsError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_generation_args(parser: argparse.ArgumentParser, fmt_default: str):
    parser.add_argument("-k", type=int, required=True,
                        help="number of nodes that determine the file")
    parser.add_argument("-d", type=int, required=True,
                        help="number of helpers contacted for a repair")
    parser.add_argument("--alpha", type=_fraction_arg, default=None,
                        metavar="P/Q", help="per-node storage (rational)")
    parser.add_argument("--beta", type=_fraction_arg, default=None,
                        metavar="P/Q", help="per-helper repair traffic (rational)")
    parser.add_argument("--caps", type=_caps_arg, default=None,
                        metavar="A,B,C",
                        help="max chain steps, rectangles, refinements")
    parser.add_argument("--mode", choices=("as-stated", "derived"),
                        default=None,
                        help="force one replacement-term formula")
    parser.add_argument("--format", dest="output_format",
                        choices=("json", "csv"), default=fmt_default,
                        help=f"output format (default {fmt_default})")
    parser.add_argument("-o", "--output", default=None, metavar="FILE",
                        help="write to FILE (atomic) instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regenbounds",
        description=(
            "Generate, check, and apply storage/repair bounds for "
            "exact-repair systems, and build concrete binary codes."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bounds = sub.add_parser("bounds", help="enumerate bounds with certificates")
    _add_generation_args(bounds, "json")

    envelope = sub.add_parser("envelope", help="piecewise-linear lower envelope")
    _add_generation_args(envelope, "csv")

    tradeoff = sub.add_parser("tradeoff", help="per-file-bit tradeoff curves")
    _add_generation_args(tradeoff, "csv")

    certify = sub.add_parser("certify", help="re-verify one generated bound")
    _add_generation_args(certify, "json")
    certify.add_argument("bound_id", help="identifier from the bounds artifact")

    construct = sub.add_parser("construct", help="emit a concrete code spec")
    construct.add_argument("--family", choices=("congruence",), default=None)
    construct.add_argument("--builtin", choices=("423", "433"), default=None)
    construct.add_argument("-d", type=int, default=None,
                           help="helper count for --family congruence")
    construct.add_argument("-o", "--output", default=None, metavar="FILE")

    verify = sub.add_parser("verify", help="check a code spec or bound file")
    verify.add_argument("file", nargs="?", default=None,
                        help="JSON file ('-' or omitted: stdin)")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    return parser


def _deliver(code: int, text: str, output_path: Optional[str]) -> int:
    if code == EXIT_ERROR:
        sys.stderr.write(text)
        return code
    if output_path:
        atomic_write(output_path, text)
    else:
        sys.stdout.write(text)
    return code


def _run(args: argparse.Namespace, threads: int) -> int:
    command = args.command

    if command in ("bounds", "envelope", "tradeoff", "certify"):
        config = RunConfig(
            command=command,
            k=args.k,
            d=args.d,
            alpha=args.alpha,
            beta=args.beta,
            caps=args.caps if args.caps is not None else EnumerationLimits(),
            mode=args.mode,
            output_format=args.output_format,
            output_path=args.output,
            threads=threads,
        )
        if command == "bounds":
            code, text = cmd_bounds(config)
        elif command == "envelope":
            code, text = cmd_envelope(config)
        elif command == "tradeoff":
            code, text = cmd_tradeoff(config)
        else:
            code, text = cmd_certify(config, args.bound_id)
        return _deliver(code, text, args.output)

    if command == "construct":
        if args.builtin is not None:
            k, d = (2, 3) if args.builtin == "423" else (3, 3)
        elif args.family == "congruence":
            if args.d is None:
                sys.stderr.write("construct --family congruence needs -d\n")
                return EXIT_ERROR
            k, d = args.d, args.d
        else:
            sys.stderr.write("construct needs --family or --builtin\n")
            return EXIT_ERROR
        config = RunConfig(
            command="construct", k=k, d=d,
            family=args.family, builtin=args.builtin,
            output_path=args.output, threads=threads,
        )
        code, text = cmd_construct(config)
        return _deliver(code, text, args.output)

    if command == "verify":
        if args.file in (None, "-"):
            text_in = sys.stdin.read()
        else:
            try:
                with open(args.file, "r") as fh:
                    text_in = fh.read()
            except OSError as exc:
                sys.stderr.write(f"cannot read {args.file}: {exc}\n")
                return EXIT_ERROR
        config = RunConfig(command="verify", k=1, d=1, threads=threads)
        code, out = cmd_verify(config, text_in)
        return _deliver(code, out, None)

    if command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    sys.stderr.write(f"unknown command {command!r}\n")
    return EXIT_ERROR


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        threads = thread_count_from_env()
        return _run(args, threads)
    except RegenBoundsError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
