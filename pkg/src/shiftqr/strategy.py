"""The Sh_{k,B} shifting strategy.

One call to :func:`sh_step` either applies ``(z - r)^k`` for a promising
Ritz value ``r`` or, if that fails to shrink the potential by ``gamma``,
scans a triangular-lattice net around ``r`` until some ``(z - s)^k`` does.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from .hessenberg import HessenbergMatrix, ShiftPolynomial, StrategyConfig, potential
from .iqr import FlopCounter, QrStepResult, iqr_step, log_inverse_row_norm
from .ritz import RitzCertificationError, RitzSet, opt_ritz

__all__ = [
    "ShiftKind",
    "ShiftDecision",
    "ExceptionalNet",
    "NoCandidateSucceeded",
    "find_promising",
    "exceptional_radius",
    "exceptional_eps",
    "exceptional_net",
    "net_size_bound",
    "sh_step",
]

_SQRT3 = math.sqrt(3.0)
#: coarse stages use a sublattice whose step is at most radius / _STAGE_RESOLUTION
_STAGE_RESOLUTION = 3.0
#: upper bound on points materialized at once while enumerating an annulus
_CHUNK = 1 << 16
#: lattice indices are kept below 2**_INDEX_BITS so int64 and float arithmetic stay exact
_INDEX_BITS = 40
MAX_CANDIDATES = 4096


class ShiftKind(str, Enum):
    PROMISING = "promising"
    EXCEPTIONAL = "exceptional"


class NoCandidateSucceeded(RuntimeError):
    """No exceptional shift reduced the potential.

    Only possible when the trust precondition ``kappa_V(H) <= B`` is
    violated (or the candidate budget ran out first).
    """

    def __init__(self, psi_before: float, best_psi: float, candidates_tried: int,
                 net: "ExceptionalNet", root: complex, budget_exhausted: bool):
        self.psi_before = psi_before
        self.best_psi = best_psi
        self.candidates_tried = candidates_tried
        self.net = net
        self.root = root
        self.budget_exhausted = budget_exhausted
        super().__init__(
            f"no exceptional shift achieved reduction: psi={psi_before:.6g}, "
            f"best={best_psi:.6g} after {candidates_tried} candidates"
            + (" (budget exhausted)" if budget_exhausted else ""))


@dataclass(frozen=True, eq=False)
class ShiftDecision:
    kind: ShiftKind
    root: complex
    net_index: int | None
    candidates_tried: int
    psi_before: float
    psi_after: float
    tau: float
    step: QrStepResult = field(repr=False)
    ritz: RitzSet | None = field(default=None, repr=False)
    ritz_certified: bool = True
    net: "ExceptionalNet | None" = field(default=None, repr=False)

    @property
    def h_next(self) -> HessenbergMatrix:
        return self.step.h_next


# --------------------------------------------------------------------- Find

def _log_inv(h, roots, power, counter):
    return log_inverse_row_norm(h, ShiftPolynomial(tuple(roots)), power, counter)


def find_promising(h: HessenbergMatrix, ritz: RitzSet | tuple, cfg: StrategyConfig | None = None,
                   counter: FlopCounter | None = None) -> complex:
    """Pick one Ritz value by repeated halving.

    Round ``j`` (1-based) splits the surviving values into their first and
    second halves ``R_0, R_1`` and keeps the half maximizing
    ``||e_n^* p_{j,b}(H)^{-2^(j-1)}||`` with ``p_{j,b} = prod_{r in R_b} (z - r)``.
    A singular factor counts as an infinite norm and wins.  ``cfg`` is
    accepted for signature symmetry; the procedure needs none of its
    constants.
    """
    values = list(ritz.values if isinstance(ritz, RitzSet) else ritz)
    k = len(values)
    if k < 1 or k & (k - 1):
        raise ValueError(f"number of Ritz values must be a power of two, got {k}")
    j = 1
    while len(values) > 1:
        half = len(values) // 2
        parts = (values[:half], values[half:])
        scores = [_log_inv(h, part, 2 ** (j - 1), counter) for part in parts]
        values = parts[0] if scores[0] >= scores[1] else parts[1]
        if counter is not None:
            counter.add(1)
        j += 1
    return complex(values[0])


# ---------------------------------------------------------------------- Exc

def exceptional_radius(psi: float, cfg: StrategyConfig) -> float:
    """``R = 2^(1/k) theta alpha B^(1/k) psi``."""
    k = cfg.k
    return 2.0 ** (1.0 / k) * cfg.theta * cfg.alpha * cfg.B ** (1.0 / k) * psi


def exceptional_eps(cfg: StrategyConfig) -> float:
    """``(gamma^2 / ((12 B^4)^(1/k) alpha^2 theta^2))^(k/(k-1))``."""
    k = cfg.k
    base = cfg.gamma ** 2 / ((12.0 * cfg.B ** 4) ** (1.0 / k) * cfg.alpha ** 2 * cfg.theta ** 2)
    return base ** (k / (k - 1.0))


def net_size_bound(eps: float) -> float:
    """Point-count bound for the triangular-lattice ``eps``-net of a unit disk."""
    t = 1.0 + 1.0 / eps
    return 2.0 * math.pi / (3.0 * _SQRT3) * t * t + 4.0 * math.sqrt(2.0) / _SQRT3 * t + 1.0


def _v2(x: np.ndarray) -> np.ndarray:
    """2-adic valuation of int64 entries; a large sentinel for 0."""
    x = np.abs(x.astype(np.int64))
    out = np.full(x.shape, 127, dtype=np.int64)
    nz = x != 0
    low = x[nz] & -x[nz]
    out[nz] = np.round(np.log2(low.astype(float))).astype(np.int64)
    return out


@dataclass(frozen=True, eq=False)
class ExceptionalNet:
    """Triangular lattice around ``center`` restricted to ``D(center, (1+eps) R)``.

    The lattice step is ``sqrt(3) * spacing`` with ``spacing = eps * R``, so
    every point of ``D(center, R)`` lies within ``spacing`` of a net point.
    One lattice axis points along the positive real direction and the
    origin sits at ``center``.

    Points are produced lazily by :meth:`scan`.  The order is multi-scale:
    first a sequence of doubling disks around the center, each explored on
    the coarsest sublattice whose step is at most a third of the disk
    radius, then the remaining points level by level down to the full
    lattice.  Within each stage points come nearest-first with ties broken
    by angle in ``[0, 2 pi)``.  Every net point is produced exactly once.

    Nets with more than about ``4**_INDEX_BITS`` points (far beyond any
    candidate budget) are scanned on the sublattice of stride
    ``2**stride_log2``; the order is unchanged on the points it contains.
    """

    center: complex
    radius: float
    eps: float
    psi: float
    stride_log2: int = field(default=0, repr=False)

    @property
    def spacing(self) -> float:
        return self.eps * self.radius

    @property
    def step(self) -> float:
        return _SQRT3 * self.spacing

    @property
    def outer_radius(self) -> float:
        return (1.0 + self.eps) * self.radius

    def size_bound(self) -> float:
        return net_size_bound(self.eps)

    @property
    def lattice_step(self) -> float:
        """Step of the lattice actually enumerated by :meth:`scan`."""
        return self.step * 2.0 ** self.stride_log2

    def to_complex(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        a = self.lattice_step
        return self.center + a * (i + 0.5 * j) + 1j * (a * 0.5 * _SQRT3) * j

    def _q(self, i, j):
        i = i.astype(float)
        j = j.astype(float)
        return i * i + i * j + j * j

    def _qmax(self, rho: float, step: float | None = None) -> float:
        return (rho / (step or self.lattice_step)) ** 2

    def count(self, max_rows: int = 10 ** 7) -> int:
        """Exact number of net points, counted row by row."""
        if self.radius == 0:
            return 1
        qmax = self._qmax(self.outer_radius, self.step)
        jmax = int(math.floor(math.sqrt(qmax) / (0.5 * _SQRT3))) + 1
        if 2 * jmax + 1 > max_rows:
            raise ValueError(f"net too large to count exactly ({2 * jmax + 1} rows)")
        total = 0
        for start in range(-jmax, jmax + 1, _CHUNK):
            j = np.arange(start, min(start + _CHUNK, jmax + 1), dtype=np.int64)
            lo, hi = self._row_range(j, qmax)
            total += int(np.maximum(hi - lo + 1, 0).sum())
        return total

    def _row_range(self, j: np.ndarray, qmax: float) -> tuple[np.ndarray, np.ndarray]:
        """Per row ``j``, the integer range of ``i`` with ``q(i, j) <= qmax``.

        Empty rows come back with ``lo > hi``.
        """
        jf = j.astype(float)
        half = np.sqrt(np.maximum(qmax - 0.75 * jf * jf, 0.0))
        lo = np.floor(-half - 0.5 * jf).astype(np.int64) - 1
        hi = np.ceil(half - 0.5 * jf).astype(np.int64) + 1
        for _ in range(4):
            lo = lo + ((self._q(lo, j) > qmax) & (lo <= hi))
            hi = hi - ((self._q(hi, j) > qmax) & (lo <= hi))
        return lo, hi

    def _annulus(self, level: int, rin2: float, rout2: float):
        """Level-0 coordinates of sublattice points with ``rin2 < q <= rout2``.

        ``q = i^2 + ij + j^2`` is the squared distance in lattice steps;
        a negative ``rin2`` includes the center.
        """
        b = 1 << level
        tq = rout2 / float(b * b)
        tin = rin2 / float(b * b)
        jmax = int(math.floor(math.sqrt(tq) / (0.5 * _SQRT3))) + 1
        js = np.arange(-jmax, jmax + 1, dtype=np.int64)
        lo, hi = self._row_range(js, tq)
        if tin >= 0:
            ilo, ihi = self._row_range(js, tin)
        else:
            ilo = np.ones_like(js)
            ihi = np.zeros_like(js)
        pieces_i, pieces_j = [], []
        for r in np.flatnonzero(lo <= hi):
            if ilo[r] <= ihi[r]:
                ranges = ((lo[r], ilo[r] - 1), (ihi[r] + 1, hi[r]))
            else:
                ranges = ((lo[r], hi[r]),)
            for s, e in ranges:
                if e >= s:
                    seg = np.arange(s, e + 1, dtype=np.int64)
                    pieces_i.append(seg)
                    pieces_j.append(np.full(seg.shape, js[r], dtype=np.int64))
        if not pieces_i:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        i = np.concatenate(pieces_i) * b
        j = np.concatenate(pieces_j) * b
        q = self._q(i, j)
        keep = (q <= rout2) & (q > rin2)
        return i[keep], j[keep]

    def _sorted(self, i, j):
        q = self._q(i, j)
        z = self.to_complex(i, j) - self.center
        ang = np.mod(np.angle(z), 2 * math.pi)
        ang[(i == 0) & (j == 0)] = 0.0
        order = np.lexsort((ang, q))
        return i[order], j[order]

    def _chunks(self, level: int, rin2: float, rout2: float):
        """Annulus split into pieces of bounded size, in increasing radius."""
        b2 = float(1 << level) ** 2
        est = 3.7 * (rout2 - max(rin2, 0.0)) / b2 + 8
        pieces = max(1, int(math.ceil(est / _CHUNK)))
        lo2 = rin2
        span = rout2 - max(rin2, 0.0)
        for p in range(1, pieces + 1):
            hi2 = rout2 if p == pieces else max(rin2, 0.0) + span * p / pieces
            yield lo2, hi2
            lo2 = hi2

    def _stage_radii(self) -> list[float]:
        rout = self.outer_radius
        base = min(self.psi, rout) if self.psi > 0 else rout
        m = max(0, int(math.ceil(math.log2(rout / base)))) if base > 0 else 0
        return [rout / 2.0 ** (m - s) for s in range(m + 1)]

    def _stage_level(self, rho: float) -> int:
        ratio = rho / (_STAGE_RESOLUTION * self.lattice_step)
        if ratio < 2:
            return 0
        return min(int(math.floor(math.log2(ratio))), 62)

    def scan(self) -> Iterator[complex]:
        """Yield net points in scan order."""
        if self.radius == 0:
            yield complex(self.center)
            return
        if self.stride_log2 == 0:
            extent = self.outer_radius / self.step
            floor = max(0, int(math.ceil(math.log2(extent))) - _INDEX_BITS) if extent > 1 else 0
            if floor > 0:
                yield from dataclasses.replace(self, stride_log2=floor).scan()
                return
        rout2_total = self._qmax(self.outer_radius)
        radii = self._stage_radii()
        levels = [self._stage_level(r) for r in radii]
        r2s = [min(self._qmax(r), rout2_total) for r in radii]
        r2s[-1] = rout2_total
        prev = -1.0
        for r2, lev in zip(r2s, levels):
            for lo2, hi2 in self._chunks(lev, prev, r2):
                i, j = self._sorted(*self._annulus(lev, lo2, hi2))
                yield from self.to_complex(i, j).tolist()
            prev = r2
        bounds = np.array(r2s)
        lev_arr = np.array(levels)
        for lev in range(levels[-1] - 1, -1, -1):
            for lo2, hi2 in self._chunks(lev, -1.0, rout2_total):
                i, j = self._annulus(lev, lo2, hi2)
                if i.size == 0:
                    continue
                v = np.minimum(_v2(i), _v2(j))
                stage = np.searchsorted(bounds, self._q(i, j), side="left")
                stage = np.minimum(stage, len(levels) - 1)
                keep = (v == lev) & (lev_arr[stage] > lev)
                i, j = self._sorted(i[keep], j[keep])
                yield from self.to_complex(i, j).tolist()

    @property
    def points(self) -> list[complex]:
        """All net points in scan order (refuses nets above a million points)."""
        if self.size_bound() > 2 * 10 ** 6 or self.count() > 10 ** 6:
            raise ValueError("net too large to materialize; iterate scan() instead")
        return list(self.scan())

    def __len__(self):
        return self.count()


def exceptional_net(h: HessenbergMatrix, r: complex, cfg: StrategyConfig,
                    psi: float | None = None) -> ExceptionalNet:
    """Net of exceptional shifts around the promising value ``r``."""
    if psi is None:
        psi = potential(h, cfg.k)
    if not psi > 0:
        raise ValueError("exceptional net needs psi_k(H) > 0")
    return ExceptionalNet(complex(r), exceptional_radius(psi, cfg), exceptional_eps(cfg), psi)


# ---------------------------------------------------------------- Sh_{k,B}

def sh_step(h: HessenbergMatrix, cfg: StrategyConfig, want_q: bool = False,
            counter: FlopCounter | None = None,
            max_candidates: int = MAX_CANDIDATES) -> tuple[HessenbergMatrix, ShiftDecision]:
    """One iteration of Sh_{k,B}.

    Returns ``(h_next, decision)`` with ``psi_k(h_next) <= gamma psi_k(h)``.
    ``decision.step`` carries the accumulated unitary when ``want_q``.

    Raises
    ------
    NoCandidateSucceeded
        If no net point within ``max_candidates`` achieves the reduction.
    """
    k = cfg.k
    psi0 = potential(h, k)
    if not psi0 > 0:
        raise ValueError("sh_step requires psi_k(H) > 0; deflate first")
    target = cfg.gamma * psi0
    certified = True
    try:
        ritz = opt_ritz(h, k, cfg.theta)
    except RitzCertificationError as err:
        # uncertified values still make a reasonable net center
        ritz = RitzSet(err.values, err.theta_achieved)
        certified = False
    r = find_promising(h, ritz, cfg, counter)

    step = iqr_step(h, ShiftPolynomial.power_of(r, k), want_q=want_q, counter=counter)
    psi1 = potential(step.h_next, k)
    if psi1 <= target:
        return step.h_next, ShiftDecision(ShiftKind.PROMISING, r, None, 1, psi0, psi1,
                                          step.tau, step, ritz, certified)

    net = exceptional_net(h, r, cfg, psi0)
    best = psi1
    tried = 1
    for idx, s in enumerate(net.scan()):
        if tried >= max_candidates:
            raise NoCandidateSucceeded(psi0, best, tried, net, r, budget_exhausted=True)
        tried += 1
        cand = iqr_step(h, ShiftPolynomial.power_of(s, k), want_q=False, counter=counter)
        psi_c = potential(cand.h_next, k)
        best = min(best, psi_c)
        if psi_c <= target:
            if want_q:
                cand = iqr_step(h, ShiftPolynomial.power_of(s, k), want_q=True, counter=counter)
            return cand.h_next, ShiftDecision(ShiftKind.EXCEPTIONAL, complex(s), idx, tried,
                                              psi0, psi_c, cand.tau, cand, ritz, certified, net)
    raise NoCandidateSucceeded(psi0, best, tried, net, r, budget_exhausted=False)
