"""Shifted QR steps on Hessenberg matrices and the tau functional.

A degree-k step is carried out as k consecutive single-shift steps, each
computed with Givens rotations: ``H - s = Q R`` then ``H' = R Q + s``.  The
two formulations give the same iterate (up to a unitary diagonal
similarity) as QR-factorizing ``p(H)`` directly.

Flop accounting
---------------
Costs are counted in *rotation-equivalent operations*: one application of
a 2x2 rotation to a pair of scalars, or one multiply-add in a triangular
solve.  A single-shift step without ``Q`` costs about ``n^2`` such
operations, with ``Q`` about ``2 n^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .hessenberg import EPS, HessenbergMatrix, ShiftPolynomial, frobenius

__all__ = [
    "SINGULAR_FACTOR",
    "FlopCounter",
    "QrStepResult",
    "givens",
    "single_shift_step",
    "iqr_step",
    "inverse_row_norm",
    "log_inverse_row_norm",
    "tau",
]

#: shift factor ``H - s`` is treated as singular when ``|R[n-1, n-1]|`` is
#: at most this multiple of ``u * scale``
SINGULAR_FACTOR = 16.0


class FlopCounter:
    """Mutable tally of rotation-equivalent operations."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, ops: int) -> None:
        self.count += int(ops)

    def __repr__(self):
        return f"FlopCounter({self.count})"


@dataclass(frozen=True)
class QrStepResult:
    h_next: HessenbergMatrix
    q_accum: np.ndarray | None
    tau: float
    singular_shift: bool
    flops: int = 0
    r_diag_product_log: float = math.nan


def givens(a: complex, b: complex) -> tuple[float, complex, complex]:
    """Return ``(c, s, r)`` so that ``[[c, s], [-conj(s), c]] @ [a, b] = [r, 0]``.

    ``c`` is real and nonnegative.
    """
    if b == 0:
        return 1.0, 0j, complex(a)
    if a == 0:
        return 0.0, 1 + 0j, complex(b)
    absa = abs(a)
    nu = math.hypot(absa, abs(b))
    phase = a / absa
    return absa / nu, phase * b.conjugate() / nu, phase * nu


def _rot(c: float, s: complex) -> np.ndarray:
    return np.array([[c, s], [-s.conjugate(), c]], dtype=complex)


def _qr_factor(a: np.ndarray, counter: FlopCounter | None) -> list[np.ndarray]:
    """In-place Givens QR of a Hessenberg array; returns the rotations.

    On return ``a`` holds ``R`` and ``Q = G_0^* G_1^* ... G_{n-2}^*``.
    """
    n = a.shape[0]
    rots = []
    ops = 0
    for i in range(n - 1):
        c, s, r = givens(a[i, i], a[i + 1, i])
        g = _rot(c, s)
        a[i:i + 2, i + 1:] = g @ a[i:i + 2, i + 1:]
        a[i, i] = r
        a[i + 1, i] = 0
        rots.append(g)
        ops += n - i
    if counter is not None:
        counter.add(ops)
    return rots


def _rq_apply(a: np.ndarray, rots: Sequence[np.ndarray], q: np.ndarray | None,
              counter: FlopCounter | None) -> None:
    """In place ``a <- a Q`` (and ``q <- q Q``) for ``Q`` from :func:`_qr_factor`."""
    n = a.shape[0]
    ops = 0
    for i, g in enumerate(rots):
        gh = g.conj().T
        top = min(i + 2, n)
        a[:top, i:i + 2] = a[:top, i:i + 2] @ gh
        ops += top
        if q is not None:
            q[:, i:i + 2] = q[:, i:i + 2] @ gh
            ops += q.shape[0]
    if counter is not None:
        counter.add(ops)


def _sweep(a: np.ndarray, shift: complex, q: np.ndarray | None, threshold: float,
           counter: FlopCounter | None) -> tuple[bool, float]:
    """One explicit single-shift QR step on a raw Hessenberg array, in place.

    Returns ``(singular, |R[n-1, n-1]|)``.  A singular factor writes an
    exact zero into the last subdiagonal entry.
    """
    n = a.shape[0]
    idx = np.arange(n)
    a[idx, idx] -= shift
    rots = _qr_factor(a, counter)
    rnn = abs(a[n - 1, n - 1])
    _rq_apply(a, rots, q, counter)
    a[idx, idx] += shift
    singular = rnn <= threshold
    if singular and n >= 2:
        a[n - 1, n - 2] = 0
    if counter is not None:
        counter.add(2 * n)
    return singular, rnn


def _threshold(h: HessenbergMatrix) -> float:
    return SINGULAR_FACTOR * EPS * h.scale


def single_shift_step(h: HessenbergMatrix, s: complex, want_q: bool = False,
                      counter: FlopCounter | None = None) -> QrStepResult:
    """Degree-one shifted QR step ``Q^* H Q`` with ``H - s = QR``.

    The ``tau`` field is ``||e_n^* (H - s)^{-1}||^{-1} = |R[n-1, n-1]|`` for
    this factorization, and ``0`` for a singular shift.
    """
    local = FlopCounter()
    a = h.copy_entries()
    q = np.eye(h.n, dtype=complex) if want_q else None
    singular, rnn = _sweep(a, complex(s), q, _threshold(h), local)
    if counter is not None:
        counter.add(local.count)
    return QrStepResult(
        h_next=h.with_entries(a),
        q_accum=q,
        tau=0.0 if singular else float(rnn),
        singular_shift=bool(singular),
        flops=local.count,
        r_diag_product_log=math.log(rnn) if rnn > 0 else -math.inf,
    )


def iqr_step(h: HessenbergMatrix, p: ShiftPolynomial, want_q: bool = False,
             counter: FlopCounter | None = None) -> QrStepResult:
    """Degree-k QR step ``Q^* H Q`` where ``p(H) = QR``.

    Performed as ``k`` single-shift sweeps with the roots of ``p`` in the
    order given.  ``tau = ||e_n^* p(H)^{-1}||^{-1/k}`` is computed on the
    input matrix by :func:`log_inverse_row_norm`.

    ``r_diag_product_log`` holds ``sum_i log |R_i[n-1, n-1]|`` over the
    sweeps; in exact arithmetic it equals ``k log tau``, which makes it a
    free consistency check.
    """
    k = p.degree
    if not 1 <= k <= h.n - 1:
        raise ValueError(f"shift degree must satisfy 1 <= k <= n-1 = {h.n - 1}, got {k}")
    local = FlopCounter()
    log_inv = log_inverse_row_norm(h, p, 1, counter=local)
    a = h.copy_entries()
    q = np.eye(h.n, dtype=complex) if want_q else None
    thresh = _threshold(h)
    singular = False
    log_r = 0.0
    for s in p.roots:
        sing_i, rnn = _sweep(a, s, q, thresh, local)
        singular |= sing_i
        log_r += math.log(rnn) if rnn > 0 else -math.inf
    if math.isinf(log_inv):
        singular = True
    t = 0.0 if singular else math.exp(-log_inv / k)
    if counter is not None:
        counter.add(local.count)
    return QrStepResult(
        h_next=h.with_entries(a),
        q_accum=q,
        tau=t,
        singular_shift=bool(singular),
        flops=local.count,
        r_diag_product_log=log_r,
    )


def log_inverse_row_norm(h: HessenbergMatrix, p: ShiftPolynomial, power: int = 1,
                         counter: FlopCounter | None = None) -> float:
    """Natural log of ``||e_n^* p(H)^{-power}||``; ``+inf`` if singular.

    Each distinct root ``s`` is factored once as ``H - s = QR`` with Givens
    rotations; the row vector is then pushed through ``(H - s)^{-1} =
    R^{-1} Q^*`` as many times as the root occurs (times ``power``).  The
    vector is renormalized after every solve and the scale kept as a log.
    """
    if power < 1:
        raise ValueError("power must be a positive integer")
    n = h.n
    thresh = _threshold(h)
    mult: dict[complex, int] = {}
    for r in p.roots:
        mult[r] = mult.get(r, 0) + 1
    w = np.zeros(n, dtype=complex)
    w[n - 1] = 1.0
    log_norm = 0.0
    idx = np.arange(n)
    for s, m in mult.items():
        a = h.copy_entries()
        a[idx, idx] -= s
        rots = _qr_factor(a, counter)
        if np.min(np.abs(a[idx, idx])) <= thresh:
            return math.inf
        for _ in range(m * power):
            # w <- w R^{-1}  (row vector, so solve R^T y = w)
            w = solve_triangular(a, w, trans="T", lower=False, check_finite=False)
            # w <- w Q^* = w G_{n-2} ... G_0
            for i in range(n - 2, -1, -1):
                w[i:i + 2] = w[i:i + 2] @ rots[i]
            nrm = frobenius(w)
            if not math.isfinite(nrm) or nrm == 0:
                return math.inf
            w /= nrm
            log_norm += math.log(nrm)
            if counter is not None:
                counter.add(n * (n + 1) // 2 + (n - 1))
    return log_norm


def inverse_row_norm(h: HessenbergMatrix, p: ShiftPolynomial, power: int = 1,
                     counter: FlopCounter | None = None) -> float:
    """``||e_n^* p(H)^{-power}||``.  Returns ``math.inf`` when a factor is singular."""
    val = log_inverse_row_norm(h, p, power, counter)
    if val == math.inf:
        return math.inf
    with np.errstate(over="ignore"):
        return float(np.exp(val))


def tau(h: HessenbergMatrix, p: ShiftPolynomial) -> float:
    """``||e_n^* p(H)^{-1}||^{-1/k}``, or ``0`` when ``p(H)`` is singular."""
    val = log_inverse_row_norm(h, p, 1)
    if val == math.inf:
        return 0.0
    return math.exp(-val / p.degree)
