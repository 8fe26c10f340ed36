"""Schur decomposition driver: deflation worklist around the shift strategy."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

import numpy as np

from .hessenberg import (
    HessenbergMatrix,
    ShiftPolynomial,
    StrategyConfig,
    decoupling_check,
    hessenberg_reduce,
    potential,
)
from .iqr import FlopCounter, iqr_step
from .ritz import eig2
from .strategy import MAX_CANDIDATES, NoCandidateSucceeded, ShiftKind, sh_step

__all__ = [
    "IterationTrace",
    "TraceSink",
    "ListSink",
    "JsonlSink",
    "BlockRecord",
    "SchurResult",
    "SolveReport",
    "DecouplingTimeout",
    "perturb",
    "deflate",
    "solve_block",
    "schur",
    "effective_degree",
    "ESCALATION_CAP",
]

#: B may be doubled until it exceeds this multiple of its configured value
ESCALATION_CAP = 2 ** 10

#: baseline strategy signature: (block, degree, iteration) -> shift polynomial
BaselineStrategy = Callable[[HessenbergMatrix, int, int], ShiftPolynomial]


@dataclass(frozen=True)
class IterationTrace:
    """One strategy iteration.  ``psi`` is the potential the step started from;
    ``min_subdiag`` is measured on the resulting block."""

    block_offset: int
    block_size: int
    iter: int
    psi: float
    shift_kind: str
    shift_root: complex
    net_index: int | None
    candidates_tried: int
    tau: float
    min_subdiag: float
    psi_after: float = math.nan
    k: int = 0
    B: float = math.nan

    def to_json(self) -> dict:
        return {
            "block_offset": self.block_offset,
            "block_size": self.block_size,
            "iter": self.iter,
            "psi": self.psi,
            "shift_kind": self.shift_kind,
            "shift_root": [self.shift_root.real, self.shift_root.imag],
            "net_index": self.net_index,
            "candidates_tried": self.candidates_tried,
            "tau": self.tau,
            "min_subdiag": self.min_subdiag,
        }


class TraceSink(Protocol):
    def append(self, record: IterationTrace) -> None: ...


class ListSink(list):
    """Thread-safe list of trace records."""

    def __init__(self):
        super().__init__()
        self._lock = threading.Lock()

    def append(self, record):
        with self._lock:
            super().append(record)


class JsonlSink:
    """Writes one JSON object per line; each record is written atomically."""

    def __init__(self, fh):
        import json

        self._json = json
        self._fh = fh
        self._lock = threading.Lock()
        self.records: list[IterationTrace] = []

    def append(self, record: IterationTrace) -> None:
        line = self._json.dumps(record.to_json()) + "\n"
        with self._lock:
            self._fh.write(line)
            self.records.append(record)


@dataclass
class BlockRecord:
    offset: int
    size: int
    iterations: int
    k: int
    B: float
    entry: HessenbergMatrix | None = field(default=None, repr=False)


@dataclass
class SchurResult:
    t: np.ndarray
    q: np.ndarray | None
    backward_error: float
    iterations_total: int
    per_block_iterations: list = field(default_factory=list)
    decoupling_events: list = field(default_factory=list)
    deflation_error: float = 0.0
    perturbation_norm: float = 0.0

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.diagonal(self.t).copy()


@dataclass
class SolveReport:
    config: StrategyConfig
    trace: list = field(default_factory=list)
    dec_counts: dict = field(default_factory=dict)
    blocks: list = field(default_factory=list)
    escalations: int = 0


class DecouplingTimeout(RuntimeError):
    """A block did not decouple within ``max_iter`` iterations."""

    def __init__(self, iterations: int, t=None, q=None, offset: int = 0, size: int = 0):
        self.iterations = iterations
        self.t = t
        self.q = q
        self.offset = offset
        self.size = size
        super().__init__(f"block at offset {offset} (size {size}) did not decouple "
                         f"in {iterations} iterations")


def perturb(a, sigma: float, seed: int = 0) -> np.ndarray:
    """Add i.i.d. complex Gaussian noise of total expected size ``sigma ||a||_F``.

    Each entry receives ``g = (x + iy) sigma ||a||_F / (n sqrt 2)`` with
    ``x, y`` standard normal, so ``E|g|^2 = sigma^2 ||a||_F^2 / n^2`` and
    ``E ||G||_F^2 = sigma^2 ||a||_F^2``.  Draws come from
    ``numpy.random.default_rng(seed)`` (PCG64), real parts first.
    """
    a = np.asarray(a)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return a.copy()
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    norm = float(np.linalg.norm(a)) or 1.0
    std = sigma * norm / (n * math.sqrt(2.0))
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a.astype(complex) + std * g


def _split(a: np.ndarray, thresh: float) -> tuple[list[tuple[int, int]], list[tuple[int, float]]]:
    """Zero subdiagonals ``<= thresh`` in place; return blocks and zeroed entries."""
    n = a.shape[0]
    zeroed = []
    cuts = [0]
    for j in range(n - 1):
        v = a[j + 1, j]
        if abs(v) <= thresh:
            if v != 0:
                zeroed.append((j + 1, abs(v)))
            a[j + 1, j] = 0
            cuts.append(j + 1)
    cuts.append(n)
    blocks = [(cuts[i], cuts[i + 1] - cuts[i]) for i in range(len(cuts) - 1)]
    return blocks, zeroed


def deflate(h: HessenbergMatrix, delta: float) -> list[tuple[HessenbergMatrix, int]]:
    """Zero every subdiagonal ``<= delta * scale`` and split into irreducible blocks.

    Returns ``(block, offset)`` pairs in order; blocks inherit ``h.scale``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    a = h.copy_entries()
    blocks, _ = _split(a, delta * h.scale)
    return [(HessenbergMatrix(a[o:o + m, o:o + m], h.scale), o) for o, m in blocks]


def effective_degree(k: int, m: int) -> int:
    """``min(k, largest power of two <= m - 1)``."""
    return min(k, 1 << (max(m - 1, 1).bit_length() - 1))


def _solve_2x2(h: HessenbergMatrix) -> tuple[HessenbergMatrix, np.ndarray]:
    (a, b), (c, d) = h.entries
    lam = min(eig2(a, b, c, d), key=lambda z: abs(z - d))
    x1 = np.array([b, lam - a])
    x2 = np.array([lam - d, c])
    x = x1 if np.linalg.norm(x1) >= np.linalg.norm(x2) else x2
    nrm = np.linalg.norm(x)
    if nrm == 0:
        return h, np.eye(2, dtype=complex)
    x = x / nrm
    u = np.array([[x[0], -np.conj(x[1])], [x[1], np.conj(x[0])]])
    t = u.conj().T @ h.entries @ u
    t[1, 0] = 0
    return h.with_entries(t), u


def _emit(sink, record):
    if sink is None:
        return
    if callable(getattr(sink, "append", None)):
        sink.append(record)
    else:
        sink(record)


def solve_block(h: HessenbergMatrix, cfg: StrategyConfig, trace_sink=None, *,
                offset: int = 0, strategy: BaselineStrategy | None = None,
                strategy_name: str = "baseline", max_iter: int | None = None,
                counter: FlopCounter | None = None, escalation_cap: float = ESCALATION_CAP,
                max_candidates: int = MAX_CANDIDATES,
                stats: dict | None = None) -> tuple[HessenbergMatrix, np.ndarray, int]:
    """Iterate on an irreducible block until some subdiagonal is ``<= delta * scale``.

    Parameters
    ----------
    h : HessenbergMatrix
        Irreducible block of size ``m >= 2``.
    cfg : StrategyConfig
        The strategy runs with degree ``effective_degree(cfg.k, m)``.
    trace_sink : object with ``append``, or callable, optional
        Receives one :class:`IterationTrace` per iteration.
    strategy : callable, optional
        Baseline shift rule ``(block, degree, iteration) -> ShiftPolynomial``
        used instead of Sh_{k,B}.
    max_iter : int, optional
        Raise :class:`DecouplingTimeout` after this many iterations.

    Returns
    -------
    (h_decoupled, q_local, iterations)
        ``h_decoupled = q_local^* h q_local``.  Size-2 blocks are solved in
        closed form with zero iterations.

    Raises
    ------
    NoCandidateSucceeded
        When B has been doubled past ``escalation_cap * cfg.B`` without an
        exceptional shift succeeding.
    """
    m = h.n
    if m < 2:
        raise ValueError("solve_block needs a block of size >= 2")
    q = np.eye(m, dtype=complex)
    if decoupling_check(h, cfg.delta) is not None:
        return h, q, 0
    if m == 2 and strategy is None:
        t, u = _solve_2x2(h)
        return t, u, 0
    k_eff = effective_degree(cfg.k, m)
    b_cur = float(cfg.B)
    block_cfg = cfg.replace(k=max(k_eff, 2), B=b_cur) if k_eff >= 2 else cfg
    it = 0
    escalations = 0
    while decoupling_check(h, cfg.delta) is None:
        if max_iter is not None and it >= max_iter:
            raise DecouplingTimeout(it, offset=offset, size=m)
        if strategy is not None:
            p = strategy(h, k_eff, it)
            psi0 = potential(h, min(k_eff, m - 1))
            step = iqr_step(h, p, want_q=True, counter=counter)
            h_next = step.h_next
            kind, root, net_index, tried, t_val = strategy_name, p.roots[0], None, 1, step.tau
            q_step = step.q_accum
        else:
            try:
                h_next, dec = sh_step(h, block_cfg, want_q=True, counter=counter,
                                      max_candidates=max_candidates)
            except NoCandidateSucceeded:
                b_cur *= 2.0
                escalations += 1
                if b_cur > escalation_cap * cfg.B:
                    raise
                block_cfg = block_cfg.replace(B=b_cur)
                continue
            psi0 = dec.psi_before
            kind = dec.kind.value
            root, net_index, tried, t_val = dec.root, dec.net_index, dec.candidates_tried, dec.tau
            q_step = dec.step.q_accum
        q = q @ q_step
        h = h_next
        it += 1
        sub = np.abs(h.subdiagonal())
        _emit(trace_sink, IterationTrace(
            block_offset=offset, block_size=m, iter=it, psi=psi0, shift_kind=kind,
            shift_root=complex(root), net_index=net_index, candidates_tried=tried,
            tau=float(t_val), min_subdiag=float(sub.min()),
            psi_after=potential(h, min(block_cfg.k, m - 1)), k=block_cfg.k, B=b_cur))
    if stats is not None:
        stats["k"] = block_cfg.k
        stats["B"] = b_cur
        stats["escalations"] = escalations
    return h, q, it


def schur(a, cfg: StrategyConfig, *, perturb_sigma: float = 0.0, seed: int = 0,
          accumulate_q: bool = True, trace_sink=None, strategy: BaselineStrategy | None = None,
          strategy_name: str = "baseline", max_iter: int | None = None,
          keep_blocks: bool = False, counter: FlopCounter | None = None,
          max_candidates: int = MAX_CANDIDATES) -> tuple[SchurResult, SolveReport]:
    """Complex Schur form ``A = Q T Q^*``.

    ``A`` is optionally perturbed first (see :func:`perturb`); the reported
    backward error is relative to the matrix actually factored, and the
    size of the perturbation is reported separately.

    Raises
    ------
    NoCandidateSucceeded
        Propagated from :func:`solve_block` after B escalation.
    DecouplingTimeout
        Only with ``max_iter``; carries the partial ``t`` and ``q``.
    """
    a0 = np.asarray(a, dtype=complex)
    work = perturb(a0, perturb_sigma, seed) if perturb_sigma > 0 else a0.copy()
    pert = float(np.linalg.norm(work - a0)) if perturb_sigma > 0 else 0.0
    h0, q_red = hessenberg_reduce(work)
    n = h0.n
    scale = h0.scale
    thresh = cfg.delta * scale
    t = h0.copy_entries()
    q = q_red if accumulate_q else None
    report = SolveReport(config=cfg)
    result = SchurResult(t=t, q=q, backward_error=math.nan, iterations_total=0,
                         perturbation_norm=pert)
    zeroed_sq = 0.0

    blocks, zeroed = _split(t, thresh)
    zeroed_sq += sum(v * v for _, v in zeroed)
    work_list = [(o, m) for o, m in reversed(blocks) if m >= 2]
    while work_list:
        o, m = work_list.pop()
        blk = HessenbergMatrix(t[o:o + m, o:o + m], scale)
        stats: dict = {}
        try:
            blk2, ql, its = solve_block(
                blk, cfg, trace_sink, offset=o, strategy=strategy, strategy_name=strategy_name,
                max_iter=max_iter, counter=counter, max_candidates=max_candidates, stats=stats)
        except DecouplingTimeout as err:
            err.t, err.q = t, q
            raise
        t[o:o + m, o:o + m] = blk2.entries
        t[o:o + m, o + m:] = ql.conj().T @ t[o:o + m, o + m:]
        t[:o, o:o + m] = t[:o, o:o + m] @ ql
        if q is not None:
            q[:, o:o + m] = q[:, o:o + m] @ ql
        result.iterations_total += its
        result.per_block_iterations.append((o, m, its))
        report.dec_counts.setdefault(m, []).append(its)
        report.escalations += stats.get("escalations", 0)
        report.blocks.append(BlockRecord(o, m, its, stats.get("k", effective_degree(cfg.k, m)),
                                         stats.get("B", cfg.B), blk if keep_blocks else None))
        sub = t[o:o + m, o:o + m]
        sub_blocks, zeroed = _split(sub, thresh)
        zeroed_sq += sum(v * v for _, v in zeroed)
        for j, _ in zeroed:
            result.decoupling_events.append((o, o + j, its))
        if not zeroed:
            # an exact zero from a singular shift
            for so, _ in sub_blocks[1:]:
                result.decoupling_events.append((o, o + so, its))
        work_list.extend((o + so, sm) for so, sm in reversed(sub_blocks) if sm >= 2)

    t[np.tril_indices(n, -1)] = 0
    result.deflation_error = math.sqrt(zeroed_sq)
    if q is not None:
        anorm = float(np.linalg.norm(work)) or 1.0
        result.backward_error = float(np.linalg.norm(work - q @ t @ q.conj().T)) / anorm
    if isinstance(trace_sink, list):
        report.trace = trace_sink
    elif hasattr(trace_sink, "records"):
        report.trace = trace_sink.records
    return result, report
