"""Command-line front end: ``fairccp run PROGRAM [options]``.

Exit codes: 0 success, 1 fail, 2 deadlock, 3 step limit, 64 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .engine import EngineError, RunOptions, format_trace, run
from .lang.parser import ParseError, parse

EX_USAGE = 64
SEPARATOR = "---"


def bundled_programs() -> dict[str, str]:
    """Names of the example programs shipped with the package."""
    root = resources.files("fairccp") / "programs"
    return {p.name: str(p) for p in root.iterdir() if p.name.endswith(".fcc")}


def resolve_program(path: str) -> Path:
    """A filesystem path, falling back to a bundled program of the same name."""
    p = Path(path)
    if p.is_file():
        return p
    bundled = bundled_programs()
    name = p.name if p.name.endswith(".fcc") else p.name + ".fcc"
    if name in bundled:
        return Path(bundled[name])
    raise FileNotFoundError(path)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fairccp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a program and print its trace")
    r.add_argument("program", help="program file, or the name of a bundled example")
    r.add_argument("--mode", choices=["cc", "scc"], default="scc")
    r.add_argument("--fair", choices=["none", "crisp", "soft"], default="none")
    r.add_argument("--soft-select", choices=["min", "max"], default="min")
    r.add_argument("--choice", choices=["leftmost", "seeded"], default="leftmost")
    r.add_argument("--seed", type=int)
    r.add_argument("--max-steps", type=int, default=10_000)
    r.add_argument("--trace", choices=["json", "pretty", "off"], default="json")
    r.add_argument("--report", action="store_true", help="print the fairness report")
    r.add_argument("--report-file", help="write the fairness report JSON here instead")
    r.add_argument("--check-invariants", action="store_true")

    sub.add_parser("examples", help="list the bundled example programs")
    return ap


def _usage(msg: str) -> int:
    print(f"fairccp: {msg}", file=sys.stderr)
    return EX_USAGE


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else EX_USAGE

    if args.command == "examples":
        for name in sorted(bundled_programs()):
            print(name)
        return 0

    if args.soft_select != "min" and args.fair != "soft":
        return _usage("--soft-select only applies with --fair soft")
    if (args.choice == "seeded") != (args.seed is not None):
        return _usage("--seed is required exactly when --choice seeded")
    try:
        path = resolve_program(args.program)
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        return _usage(f"cannot read {args.program}: {exc}")
    try:
        program = parse(text)
    except ParseError as exc:
        sep = ":" if exc.line else ": "
        return _usage(f"{path}{sep}{exc}")

    try:
        options = RunOptions(
            mode=args.mode, fair=args.fair, soft_select=args.soft_select,
            choice=args.choice, seed=args.seed, max_steps=args.max_steps,
            check_invariants=args.check_invariants,
        )
        result = run(program, options)
    except (ValueError, EngineError) as exc:
        return _usage(str(exc))

    out = sys.stdout
    if args.trace != "off":
        out.write(format_trace(result.trace, args.trace))
    if args.trace == "pretty":
        out.write(f"outcome: {result.outcome}\n")
    if args.report_file:
        Path(args.report_file).write_text(result.report.to_json(indent=2) + "\n")
    elif args.report:
        if args.trace != "off":
            out.write(SEPARATOR + "\n")
        out.write(result.report.to_json(indent=2) + "\n")
    if result.outcome.kind == "deadlock":
        print(f"deadlock: suspended agents {', '.join(result.outcome.suspended)}", file=sys.stderr)
    elif result.outcome.kind == "fail":
        print(f"failed: {result.outcome}", file=sys.stderr)
    return result.outcome.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
