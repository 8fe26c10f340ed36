"""Brute-force ground truth for tests and benchmarks.

The spectral quantities are computed from a dense LAPACK diagonalization
(``numpy.linalg.eig``), which shares no code with the QR iteration in this
package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .hessenberg import EPS, HessenbergMatrix, ShiftPolynomial, corner, potential
from .iqr import iqr_step
from .ritz import eig2, small_eig

__all__ = [
    "DefectiveMatrixError",
    "SpectralMeasure",
    "spectral_measure",
    "kappa_v_upper",
    "moment",
    "log_abs_moment",
    "gen_cyclic_beta",
    "gen_suite",
    "SUITE_KINDS",
    "baseline_shift",
    "BASELINES",
]

#: eigenvector matrices with a larger condition number are treated as defective
DEFECTIVE_COND = 1e13

ORACLE_MAX_N = 64

SUITE_KINDS = (
    "random_ginibre",
    "hermitian",
    "unitary_hessenberg",
    "jordan_block",
    "near_normal_4x4_stall",
    "clustered_spectrum",
)

BASELINES = ("rayleigh", "wilkinson", "francis_k", "unshifted", "exceptional_unit")

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class DefectiveMatrixError(ValueError):
    """The matrix is defective to working precision."""


def _dense(h) -> np.ndarray:
    return h.entries if isinstance(h, HessenbergMatrix) else np.asarray(h, dtype=complex)


@dataclass(frozen=True)
class SpectralMeasure:
    """Law of ``Z_H``: eigenvalue ``values[i]`` carries probability ``weights[i]``."""

    values: np.ndarray
    weights: np.ndarray
    kappa_v_upper: float
    reconstruction_error: float = 0.0

    @property
    def atoms(self) -> list[tuple[complex, float]]:
        return [(complex(v), float(w)) for v, w in zip(self.values, self.weights)]

    def mass_within(self, center: complex, radius: float) -> float:
        """``P[|Z - center| <= radius]``."""
        return float(self.weights[np.abs(self.values - center) <= radius].sum())


def _eig_unit(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eig(a)
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    return vals, vecs


def spectral_measure(h, check: bool = True) -> SpectralMeasure:
    """Spectral measure of the last standard basis vector.

    With ``H = V D V^{-1}`` and unit-norm eigenvector columns, atom ``i``
    has weight ``|V[n-1, i]|^2 / ||V[n-1, :]||^2``.  The same ``V`` gives
    ``kappa_v_upper = ||V||_2 ||V^{-1}||_2``.

    Raises
    ------
    DefectiveMatrixError
        When ``cond(V)`` exceeds ``1e13`` or is not finite.
    """
    a = _dense(h)
    n = a.shape[0]
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle is limited to n <= {ORACLE_MAX_N}")
    vals, v = _eig_unit(a)
    kappa = float(np.linalg.cond(v))
    if not math.isfinite(kappa) or kappa > DEFECTIVE_COND:
        raise DefectiveMatrixError(f"eigenvector matrix condition {kappa:.3g}")
    kappa = max(kappa, 1.0)
    row = np.abs(v[n - 1, :]) ** 2
    weights = row / row.sum()
    recon = np.linalg.norm(v @ np.diag(vals) @ np.linalg.inv(v) - a)
    scale = np.linalg.norm(a) or 1.0
    if check and recon > 1e-9 * scale * max(kappa, 1.0):
        raise DefectiveMatrixError(f"diagonalization does not reconstruct (error {recon:.3g})")
    return SpectralMeasure(vals, weights, kappa, float(recon / scale))


def kappa_v_upper(a) -> float:
    """``||V|| ||V^{-1}||`` for unit-norm eigenvectors; ``inf`` if defective."""
    a = _dense(a)
    try:
        _, v = _eig_unit(a)
        c = float(np.linalg.cond(v))
    except np.linalg.LinAlgError:
        return math.inf
    if not math.isfinite(c) or c > 1.0 / EPS:
        return math.inf
    return max(c, 1.0)


def moment(mu: SpectralMeasure, f: Callable) -> float:
    """``E[|f(Z)|^2]^(1/2)``; ``inf`` when ``f`` blows up on a charged atom."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.asarray(f(mu.values), dtype=complex)
        mags = np.abs(vals)
    charged = mu.weights > 0
    if not np.all(np.isfinite(mags[charged])):
        return math.inf
    with np.errstate(divide="ignore"):
        logs = 2 * np.log(mags[charged]) + np.log(mu.weights[charged])
    return float(np.exp(0.5 * logsumexp(logs)))


def log_abs_moment(mu: SpectralMeasure, roots: Sequence[complex], exponent: float) -> float:
    """``log E |prod_i (Z - roots[i])|^exponent``, evaluated in log-space.

    Returns ``+inf`` for a negative exponent when a root sits on a charged atom.
    """
    charged = mu.weights > 0
    z = mu.values[charged]
    with np.errstate(divide="ignore"):
        logp = np.zeros(z.shape)
        for r in roots:
            logp = logp + np.log(np.abs(z - r))
        terms = exponent * logp + np.log(mu.weights[charged])
    if exponent < 0 and np.any(np.isneginf(logp)):
        return math.inf
    return float(logsumexp(terms))


def gen_cyclic_beta(n: int, betas: Sequence[complex]) -> HessenbergMatrix:
    """Weighted cyclic shift: ``M[0, n-1] = betas[n-1]``, ``M[i+1, i] = betas[i]``."""
    betas = np.asarray(betas, dtype=complex)
    if n < 2 or betas.shape != (n,):
        raise ValueError("need n >= 2 and exactly n betas")
    m = np.zeros((n, n), dtype=complex)
    m[np.arange(1, n), np.arange(n - 1)] = betas[: n - 1]
    m[0, n - 1] = betas[n - 1]
    return HessenbergMatrix(m)


def _ginibre(rng, n: int) -> np.ndarray:
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2 * n)


def _haar_unitary(rng, n: int) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(rng, n))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _stall_fixture(seed: int, max_tries: int = 10_000) -> np.ndarray:
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        betas = rng.uniform(0.75, 1.0, 4)
        phases = np.exp(2j * np.pi * rng.uniform(size=4))
        m = gen_cyclic_beta(4, betas).entries
        # diagonal unitary similarity keeps the pattern and the zero corner shifts
        m = (phases[:, None] * m) * phases.conj()[None, :]
        if kappa_v_upper(m) > 2.0:
            continue
        if _francis_stalls(m):
            return m
    raise RuntimeError("no stall fixture found")


def _francis_stalls(m: np.ndarray, iterations: int = 20) -> bool:
    h = HessenbergMatrix(m)
    psi0 = potential(h, 2)
    for it in range(iterations):
        h = iqr_step(h, baseline_shift(h, "francis_k", 2, it)).h_next
    return potential(h, 2) >= 0.99 * psi0


def gen_suite(kind: str, n: int, seed: int) -> np.ndarray:
    """Deterministic test matrices.

    ``random_ginibre``
        i.i.d. complex Gaussian entries of variance ``1/n``.
    ``hermitian``
        Exactly Hermitian (``A == A^*`` bitwise).
    ``unitary_hessenberg``
        Product of ``n - 1`` adjacent Givens rotations and a diagonal of phases.
    ``jordan_block``
        ``U J_n(0) U^*`` with ``U`` Haar unitary.
    ``near_normal_4x4_stall``
        4x4 weighted cyclic shift with ``kappa_v_upper <= 2`` on which the
        Wilkinson and 2-Francis shifts are exactly zero, so those baselines
        make no progress.  ``n`` must be 4.
    ``clustered_spectrum``
        ``U T U^*`` with ``T`` triangular, eigenvalues in three tight clusters.
    """
    if kind not in SUITE_KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {SUITE_KINDS}")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    if kind == "random_ginibre":
        return _ginibre(rng, n)
    if kind == "hermitian":
        g = _ginibre(rng, n)
        a = np.triu(g, 1)
        a = a + a.conj().T
        a[np.diag_indices(n)] = rng.standard_normal(n) / math.sqrt(n)
        return a
    if kind == "unitary_hessenberg":
        u = np.diag(np.exp(2j * np.pi * rng.uniform(size=n)))
        for i in range(n - 2, -1, -1):
            t = rng.uniform(0.1, 0.5 * np.pi)
            ph = np.exp(2j * np.pi * rng.uniform())
            g = np.eye(n, dtype=complex)
            g[i:i + 2, i:i + 2] = [[math.cos(t), ph * math.sin(t)], [-ph.conjugate() * math.sin(t), math.cos(t)]]
            u = g @ u
        return u
    if kind == "jordan_block":
        j = np.diag(np.ones(n - 1), 1).astype(complex)
        u = _haar_unitary(rng, n)
        return u @ j @ u.conj().T
    if kind == "near_normal_4x4_stall":
        if n != 4:
            raise ValueError("near_normal_4x4_stall is defined for n = 4 only")
        return _stall_fixture(seed)
    # clustered_spectrum
    centers = np.exp(2j * np.pi * rng.uniform(size=3))
    lam = centers[rng.integers(0, 3, n)] + 1e-3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    t = np.diag(lam) + 0.1 * np.triu(_ginibre(rng, n), 1)
    u = _haar_unitary(rng, n)
    return u @ t @ u.conj().T


def _sort_roots(values) -> list[complex]:
    return sorted((complex(v) for v in values), key=lambda z: (abs(z), math.atan2(z.imag, z.real)))


def baseline_shift(h: HessenbergMatrix, kind: str, k: int = 2, step: int = 0) -> ShiftPolynomial:
    """Classical shift rules, for comparison runs.

    ``rayleigh``: ``z - h[n-1, n-1]``.  ``wilkinson``: root of the trailing
    2x2 characteristic polynomial closer to ``h[n-1, n-1]`` (ties go to the
    smaller argument).  ``francis_k``: all ``k`` trailing Ritz values sorted
    by modulus.  ``unshifted``: ``z``.  ``exceptional_unit``: ``z - x`` with
    ``|x| = scale`` and argument ``(step + 1)`` times the golden angle.
    """
    a = h.entries
    n = h.n
    if kind == "rayleigh":
        return ShiftPolynomial((a[n - 1, n - 1],))
    if kind == "wilkinson":
        if n < 2:
            return ShiftPolynomial((a[0, 0],))
        r1, r2 = eig2(a[n - 2, n - 2], a[n - 2, n - 1], a[n - 1, n - 2], a[n - 1, n - 1])
        d1, d2 = abs(r1 - a[n - 1, n - 1]), abs(r2 - a[n - 1, n - 1])
        if d1 == d2:
            r = min((r1, r2), key=lambda z: np.angle(z))
        else:
            r = r1 if d1 < d2 else r2
        return ShiftPolynomial((r,))
    if kind == "francis_k":
        k = min(k, n - 1)
        values, _ = small_eig(corner(h, k))
        return ShiftPolynomial(tuple(_sort_roots(values)))
    if kind == "unshifted":
        return ShiftPolynomial((0j,))
    if kind == "exceptional_unit":
        return ShiftPolynomial((h.scale * complex(math.cos((step + 1) * _GOLDEN_ANGLE),
                                                  math.sin((step + 1) * _GOLDEN_ANGLE)),))
    raise ValueError(f"unknown baseline {kind!r}; expected one of {BASELINES}")
