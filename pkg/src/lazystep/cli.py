"""``lazystep``: run, view and check lazy programs from the shell."""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import checks, traceio, viewer
from .errors import LazystepError, ParseError, StageError, TraceFormatError
from .lazy_core import DEFAULT_BUDGET
from .need_calculus import check_confluence
from .pipeline import Divergence, Trace, compare_traces, run_instrumented, run_reference
from .syntax import parse

EXIT_OK, EXIT_INPUT, EXIT_STUCK, EXIT_TIMEOUT, EXIT_DIVERGED = 0, 1, 2, 3, 4
VERDICT_EXIT = {"value": EXIT_OK, "error": EXIT_STUCK, "timeout": EXIT_TIMEOUT}


def default_budget() -> int:
    raw = os.environ.get("LAZYSTEP_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise SystemExit(f"lazystep: LAZYSTEP_BUDGET must be an integer, got {raw!r}")
    if value < 0:
        raise SystemExit("lazystep: LAZYSTEP_BUDGET must not be negative")
    return value


def _nonneg(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def use_color(args, stream) -> bool:
    return not getattr(args, "no_color", False) and hasattr(stream, "isatty") and stream.isatty()


def _print_trace(trace: Trace, color: bool, out) -> None:
    for step in trace.steps:
        out.write(viewer.format_step(step, len(trace.steps), color) + "\n\n")


def _outcome(trace: Trace) -> str:
    last = trace.steps[-1].after.text.rsplit("\n", 1)[-1] if trace.steps else ""
    if trace.verdict == "value":
        return f"value: {last}"
    if trace.verdict == "error":
        return f"stuck: {last}  ({trace.meta.get('reason', 'no rule applies')})"
    return f"timeout after {trace.meta.get('budget')} steps"


def cmd_run(args, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        source = Path(args.file).read_text(encoding="utf-8")
        program = parse(source)
    except OSError as e:
        err.write(f"lazystep: cannot read {args.file}: {e.strerror or e}\n")
        return EXIT_INPUT
    except ParseError as e:
        err.write(f"lazystep: {args.file}: {e}\n")
        return EXIT_INPUT
    program = type(program)(program.defs, program.main, source=source)
    budget = args.budget if args.budget is not None else default_budget()
    color = use_color(args, out)

    live = None
    if args.trace and traceio.is_live(args.trace):
        live = traceio.LiveWriter(args.trace, source, {"mode": args.mode, "budget": budget})
    try:
        if args.mode == "instrumented":
            trace = run_instrumented(program, budget)
            if live:
                for s in trace.steps:
                    live.step(s)
        else:
            trace = run_reference(program, budget, on_step=live.step if live else None)
        other = run_instrumented(program, budget) if args.mode == "both" else None
    except StageError as e:
        err.write(f"lazystep: instrumented path failed in stage {e.stage}: {e.cause}\n")
        return EXIT_INPUT
    except RecursionError:
        err.write("lazystep: term too deep to process\n")
        return EXIT_INPUT

    if live:
        live.finish(trace.verdict, trace.meta)
    elif args.trace:
        try:
            traceio.save(trace, args.trace)
        except OSError as e:
            err.write(f"lazystep: cannot write {args.trace}: {e.strerror or e}\n")
            return EXIT_INPUT

    if args.text:
        _print_trace(trace, color, out)
    out.write(f"{_outcome(trace)}\n{len(trace.steps)} steps ({args.mode})\n")
    if other is not None:
        verdict = compare_traces(trace, other)
        if isinstance(verdict, Divergence):
            out.write(f"{verdict}\n")
            return EXIT_DIVERGED
        out.write(f"both paths agree on {verdict.steps} steps\n")
    return VERDICT_EXIT[trace.verdict]


def cmd_view(args, inp=None, out=None, err=None) -> int:
    inp, out, err = inp or sys.stdin, out or sys.stdout, err or sys.stderr
    color = use_color(args, out)
    try:
        if traceio.is_live(args.trace):
            reader = traceio.LiveReader(args.trace)
            reader.poll()
            if reader.source is None:
                raise TraceFormatError("live trace lacks its header")

            def refresh():
                return reader.poll(), reader.finished

            viewer.view(reader.trace(), inp, out, color, refresh, reader.finished, args.layout)
        else:
            viewer.view(traceio.load(args.trace), inp, out, color, layout=args.layout)
    except TraceFormatError as e:
        err.write(f"lazystep: {args.trace}: {e}\n")
        return EXIT_INPUT
    return EXIT_OK


def cmd_check(args, out=None, err=None) -> int:
    out = out or sys.stdout
    status = EXIT_OK
    budget = args.budget if args.budget is not None else min(default_budget(), 10_000)
    if args.fuzz:
        report = checks.campaign(args.fuzz, args.seed, args.max_size, budget)
        out.write(report.summary() + "\n")
        status = EXIT_OK if report.ok else EXIT_INPUT
    elif not args.bench:
        out.write("programs: 0\nfailures: 0\n")
    if args.bench:
        for b in checks.fib_bench(args.bench_n):
            out.write(b.line() + "\n")
    return status


def cmd_calc(args, out=None, err=None) -> int:
    out = out or sys.stdout
    t0 = time.perf_counter()
    report = check_confluence(args.max_size, args.max_depth)
    out.write(report.summary() + f"\ntime: {time.perf_counter() - t0:.2f}s\n")
    return EXIT_OK if report.ok() else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lazystep", description="Algebraic stepper for a small lazy language.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a program and report its steps")
    run.add_argument("file")
    run.add_argument("--mode", choices=("reference", "instrumented", "both"), default="reference")
    run.add_argument("--budget", type=_nonneg, help=f"step budget (default {DEFAULT_BUDGET} or $LAZYSTEP_BUDGET)")
    run.add_argument("--trace", metavar="OUT", help="write the trace (.json, or .ndjson for a live file)")
    run.add_argument("--text", action="store_true", help="print every step with highlights")
    run.add_argument("--no-color", action="store_true", help="plain «» and ‹› markers instead of colors")
    run.set_defaults(func=cmd_run)

    view = sub.add_parser("view", help="browse a trace file (n, p, g, G, /N, q)")
    view.add_argument("trace")
    view.add_argument("--no-color", action="store_true")
    view.add_argument("--layout", choices=("stacked", "side"), default="side")
    view.set_defaults(func=cmd_view)

    check = sub.add_parser("check", help="run the property campaigns and benchmarks")
    check.add_argument("--fuzz", type=_nonneg, default=0, metavar="N")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--max-size", type=_nonneg, default=30)
    check.add_argument("--budget", type=_nonneg)
    check.add_argument("--bench", action="store_true")
    check.add_argument("--bench-n", type=_nonneg, nargs="+", default=[5, 8], metavar="N")
    check.set_defaults(func=cmd_check)

    calc = sub.add_parser("calc", help="confluence report for the call-by-need calculus")
    calc.add_argument("--max-size", type=_nonneg, default=7)
    calc.add_argument("--max-depth", type=_nonneg, default=8)
    calc.set_defaults(func=cmd_calc)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LazystepError as e:
        sys.stderr.write(f"lazystep: {e}\n")
        return EXIT_INPUT
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
