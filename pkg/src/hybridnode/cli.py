"""Command line entry point: ``hybridnode run <scenario-file|builtin>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import FORMATS, export, export_trace, run_scenario
from .scenario import BUILTINS, ScenarioError, load_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_INVALID = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridnode", description="Hybrid-node scenario harness")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and report metrics")
    run.add_argument("scenario", help=f"scenario file or built-in name ({', '.join(BUILTINS)})")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--t-end", type=float, default=None, metavar="MS")
    run.add_argument("--out", type=Path, default=None, metavar="FILE",
                     help="write the metrics report here instead of stdout")
    run.add_argument("--trace", type=Path, default=None, metavar="FILE",
                     help="write the newline-delimited event trace here")
    run.add_argument("--format", choices=FORMATS, default="json")
    show = sub.add_parser("show", help="print a built-in scenario document")
    show.add_argument("name", choices=sorted(BUILTINS))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "show":
        sys.stdout.write(BUILTINS[args.name])
        return EXIT_OK

    if args.scenario in BUILTINS:
        text = BUILTINS[args.scenario]
    else:
        try:
            text = Path(args.scenario).read_text()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
    try:
        spec = load_scenario(text).with_overrides(seed=args.seed, t_end=args.t_end)
    except ScenarioError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    if any(d.at >= spec.t_end for d in spec.timeline):
        print("error: timeline directive at or after --t-end", file=sys.stderr)
        return EXIT_INVALID

    result = run_scenario(spec, record_trace=args.trace is not None)
    body = export(result.report, args.format)
    if args.out is None:
        sys.stdout.buffer.write(body)
    else:
        args.out.write_bytes(body)
    if args.trace is not None:
        args.trace.write_bytes(export_trace(result.trace))
    if result.exit_status:
        r = result.report
        bad = ", ".join(f"{k}={v}" for k, v in r.violations.items() if v)
        print(f"invariant violations: {bad}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
