"""Compare Sh_{k,B} against classical shift rules on generated matrices."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .driver import DecouplingTimeout, ListSink, schur
from .hessenberg import StrategyConfig
from .oracle import BASELINES, baseline_shift, gen_suite
from .strategy import NoCandidateSucceeded

__all__ = ["BenchRow", "CSV_COLUMNS", "STRATEGIES", "decoupling_budget", "run_case", "run_bench", "write_csv"]

STRATEGIES = ("sh",) + BASELINES

CSV_COLUMNS = ("kind", "n", "seed", "strategy", "iterations_to_decouple",
               "final_backward_error", "psi_ratio_20")

PSI_WINDOW = 20


def decoupling_budget(delta: float) -> int:
    """``ceil(4 log2(1/delta))`` iterations."""
    return math.ceil(4 * math.log2(1 / delta))


@dataclass
class BenchRow:
    kind: str
    n: int
    seed: int
    strategy: str
    iterations_to_decouple: int | str
    final_backward_error: float
    psi_ratio_20: float

    def as_csv(self) -> list:
        return [self.kind, self.n, self.seed, self.strategy, self.iterations_to_decouple,
                f"{self.final_backward_error:.6e}",
                "" if math.isnan(self.psi_ratio_20) else f"{self.psi_ratio_20:.6f}"]


def _first_block(trace, n: int) -> list:
    return [r for r in trace if r.block_offset == 0 and r.block_size == n]


def _psi_ratio(records) -> float:
    """Potential after the first 20 iterations over the starting potential."""
    if not records:
        return math.nan
    window = [r for r in records if r.iter <= PSI_WINDOW]
    if records[0].psi == 0:
        return 0.0
    return window[-1].psi_after / records[0].psi


def run_case(a: np.ndarray, strategy: str, cfg: StrategyConfig, max_iter: int | None = None
             ) -> tuple[int | str, float, float]:
    """Solve ``a`` with one strategy.

    Returns ``(iterations_to_decouple, backward_error, psi_ratio_20)`` where the
    iteration count is the number of iterations before the Hessenberg form
    of ``a`` first decouples, or ``"TIMEOUT"`` if it never does within
    ``max_iter``.  After a timeout the backward error measures how far the
    unfinished iterate is from triangular.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if max_iter is None:
        max_iter = decoupling_budget(cfg.delta)
    n = a.shape[0]
    sink = ListSink()
    rule = None
    if strategy != "sh":
        def rule(h, k, it, _name=strategy):
            return baseline_shift(h, _name, k, it)
    anorm = float(np.linalg.norm(a)) or 1.0
    try:
        res, _ = schur(a, cfg, trace_sink=sink, strategy=rule, strategy_name=strategy,
                       max_iter=max_iter)
        err = res.backward_error
        timed_out = False
    except DecouplingTimeout as exc:
        err = float(np.linalg.norm(a - exc.q @ np.triu(exc.t) @ exc.q.conj().T)) / anorm
        timed_out = exc.offset == 0 and exc.size == n
    except NoCandidateSucceeded:
        return "FAILED", math.nan, _psi_ratio(_first_block(sink, n))
    first = _first_block(sink, n)
    iters: int | str = "TIMEOUT" if timed_out else (first[-1].iter if first else 0)
    return iters, err, _psi_ratio(first)


def run_bench(strategies: Sequence[str], suite: Iterable[tuple[str, int]], seeds: Sequence[int],
              cfg: StrategyConfig, max_iter: int | None = None) -> list[BenchRow]:
    rows = []
    for kind, n in suite:
        for seed in seeds:
            a = gen_suite(kind, n, seed)
            for strategy in strategies:
                its, err, ratio = run_case(a, strategy, cfg, max_iter)
                rows.append(BenchRow(kind, n, seed, strategy, its, err, ratio))
    return rows


def write_csv(rows: Iterable[BenchRow], fh) -> None:
    w = csv.writer(fh)
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_csv())
