"""Hessenberg matrices, shift polynomials, and the potential function.

Indices in this module are 0-based numpy indices unless a docstring says
otherwise.  The subdiagonal entry ``H[j + 1, j]`` is called the j-th
subdiagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "EPS",
    "NonFiniteError",
    "HessenbergMatrix",
    "ShiftPolynomial",
    "StrategyConfig",
    "hessenberg_reduce",
    "potential",
    "log_potential",
    "corner",
    "last_row_poly_apply",
    "last_row_log_norm",
    "decoupling_check",
    "subdiagonal",
    "frobenius",
]

#: unit roundoff of IEEE double precision
EPS = np.finfo(float).eps / 2


class NonFiniteError(ValueError):
    """Raised when a matrix contains NaN or infinite entries."""


def frobenius(a: np.ndarray) -> float:
    """Frobenius norm, safe against overflow of the squared entries."""
    m = float(np.max(np.abs(a))) if a.size else 0.0
    if m == 0 or not math.isfinite(m):
        return m
    return m * float(np.linalg.norm(a / m))


def _check_finite(a: np.ndarray, what: str = "matrix") -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{what} has non-finite entries")


@dataclass(frozen=True, eq=False)
class HessenbergMatrix:
    """Immutable complex upper Hessenberg matrix with a frozen scale.

    ``scale`` is the Frobenius norm of the matrix the iteration started
    from.  It is never recomputed: every QR step and every deflated block
    carries the parent's value forward, so the decoupling threshold
    ``delta * scale`` stays fixed over a whole solve.
    """

    entries: np.ndarray
    scale: float = field(default=-1.0)

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        _check_finite(a)
        if np.any(np.tril(a, -2) != 0):
            raise ValueError("entries below the first subdiagonal must be exactly zero")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        scale = float(self.scale)
        if scale < 0:
            scale = frobenius(a)
        if not math.isfinite(scale):
            raise NonFiniteError("scale is not finite")
        object.__setattr__(self, "scale", scale)

    @classmethod
    def from_array(cls, a, scale: float | None = None) -> "HessenbergMatrix":
        """Wrap ``a`` after writing exact zeros below the first subdiagonal."""
        a = np.array(a, dtype=complex, copy=True)
        a[np.tril_indices(a.shape[0], -2)] = 0
        return cls(a, -1.0 if scale is None else scale)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def subdiagonal(self) -> np.ndarray:
        return subdiagonal(self.entries)

    def copy_entries(self) -> np.ndarray:
        """Writable copy of the entries."""
        return np.array(self.entries, copy=True)

    def with_entries(self, a: np.ndarray) -> "HessenbergMatrix":
        """New matrix with the same frozen scale."""
        return HessenbergMatrix(a, self.scale)

    def __repr__(self):
        return f"HessenbergMatrix(n={self.n}, scale={self.scale:.6g})"


def subdiagonal(a: np.ndarray) -> np.ndarray:
    return np.diagonal(a, -1)


@dataclass(frozen=True)
class ShiftPolynomial:
    """Monic polynomial ``prod_i (z - roots[i])``."""

    roots: tuple

    def __post_init__(self):
        roots = tuple(complex(r) for r in np.atleast_1d(np.asarray(self.roots, dtype=complex)))
        if len(roots) < 1:
            raise ValueError("a shift polynomial needs at least one root")
        if not all(math.isfinite(r.real) and math.isfinite(r.imag) for r in roots):
            raise NonFiniteError("shift polynomial roots must be finite")
        object.__setattr__(self, "roots", roots)

    @classmethod
    def power_of(cls, root: complex, k: int) -> "ShiftPolynomial":
        """``(z - root)**k``."""
        return cls((complex(root),) * k)

    @property
    def degree(self) -> int:
        return len(self.roots)

    def coefficients(self) -> np.ndarray:
        """Coefficients, highest degree first (leading coefficient 1)."""
        return np.poly(np.array(self.roots))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for r in self.roots:
            out = out * (z - r)
        return out

    def __mul__(self, other: "ShiftPolynomial") -> "ShiftPolynomial":
        return ShiftPolynomial(self.roots + other.roots)


def _is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class StrategyConfig:
    """Constants of the Sh_{k,B} strategy.

    ``alpha`` is derived from ``k`` and ``B`` and cannot be set.
    """

    k: int = 4
    B: float = 1.0
    gamma: float = 0.8
    theta: float = 2.0
    delta: float = 1e-10

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 2 or not _is_power_of_two(int(self.k)):
            raise ValueError(f"k must be a power of two >= 2, got {self.k!r}")
        if not self.B >= 1:
            raise ValueError(f"B must be >= 1, got {self.B!r}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        if not self.theta >= 1:
            raise ValueError(f"theta must be >= 1, got {self.theta!r}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def alpha(self) -> float:
        return float(self.B) ** (4.0 * math.log2(self.k) / self.k)

    def replace(self, **changes) -> "StrategyConfig":
        return replace(self, **changes)


def hessenberg_reduce(a) -> tuple[HessenbergMatrix, np.ndarray]:
    """Unitary reduction of a dense matrix to upper Hessenberg form.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Finite complex (or real) matrix.

    Returns
    -------
    h : HessenbergMatrix
        Hessenberg form with exact zeros below the subdiagonal and
        ``scale = ||a||_F``.
    q : ndarray, shape (n, n)
        Unitary matrix with ``a = q @ h @ q^*``.

    Notes
    -----
    Column-wise Householder reflectors.  Columns whose part below the
    subdiagonal is already zero are skipped, so Hessenberg input comes back
    unchanged with ``q = I``.
    """
    a = np.array(a, dtype=complex, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    _check_finite(a, "input")
    n = a.shape[0]
    scale = frobenius(a)
    q = np.eye(n, dtype=complex)
    for j in range(n - 2):
        x = a[j + 1:, j]
        if not np.any(x[1:]):
            continue
        alpha = np.linalg.norm(x)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # P = I - 2 v v^*, applied as a similarity
        a[j + 1:, j:] -= 2.0 * np.outer(v, v.conj() @ a[j + 1:, j:])
        a[:, j + 1:] -= 2.0 * np.outer(a[:, j + 1:] @ v, v.conj())
        q[:, j + 1:] -= 2.0 * np.outer(q[:, j + 1:] @ v, v.conj())
        a[j + 2:, j] = 0
    a[np.tril_indices(n, -2)] = 0
    return HessenbergMatrix(a, scale), q


def log_potential(h: HessenbergMatrix, k: int) -> float:
    """Natural log of ``potential(h, k)``; ``-inf`` when it vanishes."""
    n = h.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= n-1 = {n - 1}, got {k}")
    mags = np.abs(subdiagonal(h.entries)[n - 1 - k:])
    if np.any(mags == 0):
        return -math.inf
    return float(np.mean(np.log(mags)))


def potential(h: HessenbergMatrix, k: int) -> float:
    """Geometric mean of the magnitudes of the last ``k`` subdiagonal entries.

    Equals ``min_p ||e_n^* p(H)||^(1/k)`` over monic ``p`` of degree ``k``.
    Uses the k factors ``h[n-k, n-k-1] ... h[n-1, n-2]``.
    """
    return math.exp(log_potential(h, k))


def corner(h: HessenbergMatrix | np.ndarray, k: int) -> np.ndarray:
    """Trailing principal ``k x k`` submatrix."""
    a = h.entries if isinstance(h, HessenbergMatrix) else np.asarray(h)
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n = {n}, got {k}")
    return np.array(a[n - k:, n - k:], copy=True)


def _last_row_scaled(h: HessenbergMatrix, roots: Sequence[complex]) -> tuple[np.ndarray, float]:
    """Return ``(w, log_scale)`` with ``e_n^* p(H) = exp(log_scale) * w``."""
    a = h.entries
    n = h.n
    row = np.zeros(n, dtype=complex)
    row[n - 1] = 1.0
    log_scale = 0.0
    for step, r in enumerate(roots, start=1):
        # before this factor the row is supported on the last `step` columns
        support = slice(max(n - step, 0), n)
        row = row[support] @ a[support, :] - r * row
        nrm = frobenius(row)
        if nrm == 0:
            return row, -math.inf
        row /= nrm
        log_scale += math.log(nrm)
    return row, log_scale


def last_row_poly_apply(h: HessenbergMatrix, p: ShiftPolynomial | Sequence[complex]) -> tuple[np.ndarray, float]:
    """``e_n^* p(H)`` by successive row-times-Hessenberg products.

    Returns the row vector and its Euclidean norm.  Cost is
    ``O(deg(p) * n^2)``; ``p(H)`` itself is never formed.
    """
    roots = p.roots if isinstance(p, ShiftPolynomial) else tuple(p)
    row, log_scale = _last_row_scaled(h, roots)
    if log_scale == -math.inf:
        return np.zeros(h.n, dtype=complex), 0.0
    factor = math.exp(log_scale)
    return row * factor, factor


def last_row_log_norm(h: HessenbergMatrix, p: ShiftPolynomial | Sequence[complex]) -> float:
    """Natural log of ``||e_n^* p(H)||`` without over- or underflow."""
    roots = p.roots if isinstance(p, ShiftPolynomial) else tuple(p)
    return _last_row_scaled(h, roots)[1]


def decoupling_check(h: HessenbergMatrix, delta: float) -> int | None:
    """Smallest split position ``i`` with ``|H[i, i-1]| <= delta * scale``.

    In 1-based notation this is the smallest ``i`` with
    ``|h_{i+1,i}| <= delta ||H||``; it is also the size of the leading block
    ``H[:i, :i]`` that splits off.  Returns ``None`` if no subdiagonal entry
    is small enough.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    sub = np.abs(subdiagonal(h.entries))
    hits = np.flatnonzero(sub <= delta * h.scale)
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


def _as_roots(values: Iterable[complex]) -> tuple[complex, ...]:
    return tuple(complex(v) for v in values)
