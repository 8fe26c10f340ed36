"""Certified theta-optimal Ritz values from the trailing corner."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hessenberg import EPS, HessenbergMatrix, corner, hessenberg_reduce, last_row_log_norm, log_potential
from .iqr import _sweep

__all__ = [
    "RitzCertificationError",
    "RitzSet",
    "small_eig",
    "eig2",
    "opt_ritz",
    "certificate",
]

#: golden-angle sequence for the deterministic exceptional fallback shifts
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class RitzCertificationError(RuntimeError):
    """The corner eigenvalues did not certify as theta-optimal."""

    def __init__(self, values, theta_achieved: float, theta: float):
        self.values = tuple(values)
        self.theta_achieved = theta_achieved
        self.theta = theta
        super().__init__(
            f"Ritz values certify only at theta={theta_achieved:.6g} > {theta:.6g}")


def eig2(a: complex, b: complex, c: complex, d: complex) -> tuple[complex, complex]:
    """Eigenvalues of ``[[a, b], [c, d]]``, larger modulus first."""
    m = 0.5 * (a + d)
    disc = cmath.sqrt(0.25 * (a - d) ** 2 + b * c)
    big = m + disc if abs(m + disc) >= abs(m - disc) else m - disc
    if big == 0:
        return 0j, 0j
    return big, (a * d - b * c) / big


def small_eig(m, tol: float = 1e-14, max_fallbacks: int = 3) -> tuple[np.ndarray, bool]:
    """Eigenvalues of a small dense matrix by Wilkinson-shifted QR.

    Parameters
    ----------
    m : array_like, shape (k, k)
    tol : float
        A subdiagonal entry is deflated once it is below
        ``tol * ||m||_F`` (or below the usual relative test
        ``u * (|h_ii| + |h_i+1,i+1|)``).
    max_fallbacks : int
        Number of exceptional restarts allowed when the per-round budget of
        ``30 * k`` sweeps runs out.

    Returns
    -------
    values : ndarray of complex
    converged : bool
        ``False`` when the budget was exhausted even after the fallbacks;
        the values are then a best effort (the diagonal of the last iterate
        for the unconverged part).
    """
    m = np.asarray(m, dtype=complex)
    k = m.shape[0]
    if k == 1:
        return np.array([m[0, 0]]), True
    h, _ = hessenberg_reduce(m)
    a = h.copy_entries()
    normf = float(np.linalg.norm(a))
    if normf == 0:
        return np.zeros(k, dtype=complex), True
    values = np.zeros(k, dtype=complex)
    hi = k - 1
    budget = 30 * k
    steps = 0
    fallbacks = 0
    while hi >= 0:
        # locate the active block a[lo:hi+1, lo:hi+1]
        lo = hi
        while lo > 0:
            sub = abs(a[lo, lo - 1])
            if sub <= max(tol * normf, EPS * (abs(a[lo, lo]) + abs(a[lo - 1, lo - 1]))):
                a[lo, lo - 1] = 0
                break
            lo -= 1
        size = hi - lo + 1
        if size == 1:
            values[hi] = a[hi, hi]
            hi -= 1
            continue
        if size == 2:
            values[hi - 1], values[hi] = eig2(a[lo, lo], a[lo, hi], a[hi, lo], a[hi, hi])
            hi -= 2
            continue
        blk = a[lo:hi + 1, lo:hi + 1]
        if steps >= budget:
            if fallbacks >= max_fallbacks:
                values[: hi + 1] = np.diagonal(a)[: hi + 1]
                return values, False
            fallbacks += 1
            steps = 0
            shift = normf * cmath.exp(1j * fallbacks * _GOLDEN_ANGLE)
        else:
            r1, r2 = eig2(blk[-2, -2], blk[-2, -1], blk[-1, -2], blk[-1, -1])
            shift = r1 if abs(r1 - blk[-1, -1]) <= abs(r2 - blk[-1, -1]) else r2
        _sweep(blk, shift, None, 0.0, None)
        a[lo:hi + 1, lo:hi + 1] = blk
        steps += 1
    return values, True


def certificate(h: HessenbergMatrix, values: Sequence[complex]) -> float:
    """Smallest theta with ``||e_n^* prod(H - r_i)||^(1/k) <= theta psi_k(H)``."""
    k = len(values)
    lp = log_potential(h, k)
    if lp == -math.inf:
        return math.inf
    return math.exp(last_row_log_norm(h, values) / k - lp)


@dataclass(frozen=True)
class RitzSet:
    """k approximate Ritz values with their certified optimality factor."""

    values: tuple
    theta_certified: float

    @classmethod
    def certify(cls, h: HessenbergMatrix, values: Sequence[complex]) -> "RitzSet":
        values = tuple(complex(v) for v in values)
        return cls(values, certificate(h, values))

    @property
    def k(self) -> int:
        return len(self.values)


def opt_ritz(h: HessenbergMatrix, k: int, theta: float = 2.0, tol: float = 1e-14,
             retries: int = 3) -> RitzSet:
    """Theta-optimal Ritz values of order ``k``.

    Computes the eigenvalues of the trailing ``k x k`` corner with
    :func:`small_eig` and certifies them against ``psi_k(H)``.  On failure
    the corner is re-solved with a tolerance ten times tighter, at most
    ``retries`` times, before raising :class:`RitzCertificationError`.
    """
    if not 1 <= k <= h.n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= n-1 = {h.n - 1}, got {k}")
    c = corner(h, k)
    best = None
    for attempt in range(retries + 1):
        values, _ = small_eig(c, tol=tol / 10 ** attempt)
        rs = RitzSet.certify(h, values)
        if rs.theta_certified <= theta:
            return rs
        if best is None or rs.theta_certified < best.theta_certified:
            best = rs
    raise RitzCertificationError(best.values, best.theta_certified, theta)
