"""Command line interface: ``shiftqr solve|trace|bench|gen``.

Exit codes: 0 success, 2 no exceptional shift succeeded even after B
escalation, 3 unreadable input.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import STRATEGIES, run_bench, write_csv
from .driver import JsonlSink, schur
from .hessenberg import NonFiniteError, StrategyConfig
from .io import MatrixFormatError, read_matrix, to_json_obj, write_matrix
from .oracle import SUITE_KINDS, gen_suite
from .strategy import NoCandidateSucceeded

EXIT_OK = 0
EXIT_NO_CANDIDATE = 2
EXIT_PARSE = 3


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_strategy_args(p: argparse.ArgumentParser, k: int = 4, B: float = 1.0, delta: float = 1e-10):
    p.add_argument("--k", type=int, default=k, help="shift degree, a power of two >= 2")
    p.add_argument("--B", type=float, default=B, help="eigenvector condition bound")
    p.add_argument("--delta", type=float, default=delta, help="decoupling threshold")
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--theta", type=float, default=2.0)


def _config(args) -> StrategyConfig:
    return StrategyConfig(k=args.k, B=args.B, gamma=args.gamma, theta=args.theta, delta=args.delta)


class _Parser(argparse.ArgumentParser):
    # usage errors share the parse-error code so that 2 stays unambiguous
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shiftqr", description="Shifted QR Schur solver")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in ("solve", "trace"):
        p = sub.add_parser(name, help="compute a Schur form" if name == "solve"
                           else "compute a Schur form and print the iteration trace")
        p.add_argument("--input", required=True, help=".mtx or .json matrix file")
        _add_strategy_args(p)
        p.add_argument("--perturb", type=float, default=0.0, metavar="SIGMA")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="result file (.json: full result, .mtx: T only)")
        p.add_argument("--trace", help="JSON lines trace file")
        p.add_argument("--accumulate-q", type=_bool, default=True, metavar="BOOL")

    p = sub.add_parser("bench", help="compare shift strategies")
    p.add_argument("--strategies", type=_csv_list, default=["sh", "wilkinson", "francis_k"],
                   help=f"comma list from {','.join(STRATEGIES)}")
    p.add_argument("--suite", type=_csv_list, default=["near_normal_4x4_stall"],
                   help="comma list of KIND or KIND:N")
    p.add_argument("--n", type=int, default=16, help="size for suite entries without :N")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds per suite entry")
    _add_strategy_args(p, k=2, B=2.0, delta=1e-8)
    p.add_argument("--max-iter", type=int, default=None,
                   help="per-block iteration cap (default ceil(4 log2(1/delta)))")
    p.add_argument("--out", help="CSV output (default stdout)")

    p = sub.add_parser("gen", help="write a test matrix")
    p.add_argument("--kind", required=True, choices=SUITE_KINDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help=".mtx or .json")
    return parser


def _result_json(res, report) -> dict:
    return {
        "n": int(res.t.shape[0]),
        "t": to_json_obj(res.t)["entries"],
        "q": None if res.q is None else to_json_obj(res.q)["entries"],
        "eigenvalues": [[float(z.real), float(z.imag)] for z in res.eigenvalues],
        "backward_error": None if np.isnan(res.backward_error) else res.backward_error,
        "iterations_total": res.iterations_total,
        "per_block_iterations": [list(b) for b in res.per_block_iterations],
        "decoupling_events": [list(e) for e in res.decoupling_events],
        "perturbation_norm": res.perturbation_norm,
        "escalations": report.escalations,
    }


def _solve(args, echo_trace: bool) -> int:
    try:
        a = read_matrix(args.input)
    except (MatrixFormatError, NonFiniteError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    try:
        cfg = _config(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    trace_fh = open(args.trace, "w") if args.trace else None
    sink = JsonlSink(trace_fh if trace_fh else sys.stdout) if (trace_fh or echo_trace) else None
    try:
        res, report = schur(a, cfg, perturb_sigma=args.perturb, seed=args.seed,
                            accumulate_q=args.accumulate_q, trace_sink=sink)
    except NoCandidateSucceeded as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NO_CANDIDATE
    finally:
        if trace_fh:
            trace_fh.close()
    if echo_trace and trace_fh:
        sys.stdout.write(Path(args.trace).read_text())
    if args.out:
        if args.out.lower().endswith(".mtx"):
            write_matrix(args.out, res.t)
        else:
            Path(args.out).write_text(json.dumps(_result_json(res, report)) + "\n")
    summary = {"n": int(res.t.shape[0]), "iterations_total": res.iterations_total,
               "backward_error": None if np.isnan(res.backward_error) else res.backward_error,
               "escalations": report.escalations}
    print(json.dumps(summary), file=sys.stderr if echo_trace else sys.stdout)
    return EXIT_OK


def _bench(args) -> int:
    bad = [s for s in args.strategies if s not in STRATEGIES]
    if bad:
        print(f"error: unknown strategies {bad}", file=sys.stderr)
        return EXIT_PARSE
    suite = []
    for item in args.suite:
        kind, _, n = item.partition(":")
        if kind not in SUITE_KINDS:
            print(f"error: unknown suite kind {kind!r}", file=sys.stderr)
            return EXIT_PARSE
        size = int(n) if n else (4 if kind == "near_normal_4x4_stall" else args.n)
        suite.append((kind, size))
    cfg = _config(args)
    rows = run_bench(args.strategies, suite, range(args.seeds), cfg, args.max_iter)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return EXIT_OK


def _gen(args) -> int:
    a = gen_suite(args.kind, args.n, args.seed)
    try:
        write_matrix(args.out, a)
    except MatrixFormatError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return _solve(args, echo_trace=False)
    if args.command == "trace":
        return _solve(args, echo_trace=True)
    if args.command == "bench":
        return _bench(args)
    return _gen(args)


if __name__ == "__main__":
    sys.exit(main())
