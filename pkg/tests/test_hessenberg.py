import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import match_error, random_hessenberg
from shiftqr import (
    HessenbergMatrix,
    NonFiniteError,
    ShiftPolynomial,
    StrategyConfig,
    corner,
    decoupling_check,
    hessenberg_reduce,
    last_row_poly_apply,
    potential,
)
from shiftqr.hessenberg import EPS, last_row_log_norm, log_potential


def ones_subdiag(n, diag=0.0):
    a = np.diag(np.full(n - 1, 1.0 + 0j), -1) + diag * np.eye(n)
    return HessenbergMatrix(a)


class TestHessenbergMatrix:
    def test_rejects_entries_below_subdiagonal(self):
        a = np.zeros((3, 3))
        a[2, 0] = 1e-300
        with pytest.raises(ValueError):
            HessenbergMatrix(a)

    def test_rejects_nonfinite(self):
        a = np.zeros((2, 2), dtype=complex)
        a[0, 1] = np.nan
        with pytest.raises(NonFiniteError):
            HessenbergMatrix(a)

    def test_scale_defaults_to_frobenius_and_is_kept(self):
        h = ones_subdiag(4)
        assert h.scale == pytest.approx(math.sqrt(3))
        h2 = h.with_entries(2 * h.entries)
        assert h2.scale == h.scale

    def test_zero_matrix_has_zero_scale(self):
        assert HessenbergMatrix(np.zeros((3, 3))).scale == 0.0

    def test_immutable(self):
        h = ones_subdiag(3)
        with pytest.raises(ValueError):
            h.entries[0, 0] = 1.0

    def test_from_array_zeroes_lower_band(self, rng):
        h = HessenbergMatrix.from_array(rng.standard_normal((5, 5)))
        assert np.all(np.tril(h.entries, -2) == 0)


class TestStrategyConfig:
    def test_defaults(self):
        cfg = StrategyConfig()
        assert (cfg.gamma, cfg.theta) == (0.8, 2.0)

    @pytest.mark.parametrize("k,B", [(2, 2.0), (4, 100.0), (8, 3.0), (16, 1.0)])
    def test_alpha_is_derived(self, k, B):
        cfg = StrategyConfig(k=k, B=B)
        assert cfg.alpha == pytest.approx(B ** (4 * math.log2(k) / k), rel=1e-15)

    @pytest.mark.parametrize("bad", [dict(k=3), dict(k=1), dict(B=0.5), dict(gamma=1.0),
                                     dict(theta=0.9), dict(delta=0.0), dict(delta=1.0)])
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            StrategyConfig(**bad)

    def test_alpha_cannot_be_set(self):
        with pytest.raises(TypeError):
            StrategyConfig(alpha=2.0)


class TestShiftPolynomial:
    def test_degree_and_evaluation(self):
        p = ShiftPolynomial((1, 2j))
        assert p.degree == 2
        assert p(3.0) == pytest.approx((3 - 1) * (3 - 2j))
        np.testing.assert_allclose(p.coefficients(), [1, -(1 + 2j), 2j])

    def test_power_of(self):
        assert ShiftPolynomial.power_of(0.5, 3).roots == (0.5, 0.5, 0.5)

    def test_needs_a_root(self):
        with pytest.raises(ValueError):
            ShiftPolynomial(())


class TestReduce:
    def test_reconstruction(self, rng):
        for n in (1, 2, 5, 16, 33):
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            h, q = hessenberg_reduce(a)
            assert np.all(np.tril(h.entries, -2) == 0)
            assert h.scale == pytest.approx(np.linalg.norm(a))
            err = np.linalg.norm(a - q @ h.entries @ q.conj().T)
            assert err <= 4 * EPS * n ** 1.5 * np.linalg.norm(a)
            assert np.linalg.norm(q.conj().T @ q - np.eye(n)) <= 1e-13 * n

    def test_hessenberg_input(self, rng):
        h0 = random_hessenberg(rng, 7)
        h, q = hessenberg_reduce(h0.entries)
        # already Hessenberg: q is diagonal unitary, h = q^* h0 q
        assert np.allclose(q, np.diag(np.diagonal(q)))
        assert np.allclose(np.abs(np.diagonal(q)), 1)
        np.testing.assert_allclose(np.abs(h.entries), np.abs(h0.entries), atol=1e-15)

    def test_hermitian_becomes_tridiagonal(self, rng):
        g = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        a = g + g.conj().T
        h, _ = hessenberg_reduce(a)
        assert np.abs(np.triu(h.entries, 2)).max() <= 1e-13 * h.scale

    def test_eigenvalues_preserved(self, rng):
        for n in (8, 12, 16):
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            h, _ = hessenberg_reduce(a)
            ev = np.linalg.eigvals(a)
            assert match_error(ev, np.linalg.eigvals(h.entries)) <= 1e-10 * np.abs(ev).max()

    def test_rejects_nonfinite(self):
        with pytest.raises(NonFiniteError):
            hessenberg_reduce(np.array([[1.0, np.inf], [0, 1]]))


class TestPotential:
    def test_unit_subdiagonal(self):
        assert potential(ones_subdiag(6), 3) == pytest.approx(1.0)

    def test_geometric_mean(self):
        a = np.zeros((4, 4), dtype=complex)
        a[1, 0], a[2, 1], a[3, 2] = 7.0, 0.5, 2.0
        assert potential(HessenbergMatrix(a), 2) == pytest.approx(1.0)

    def test_range(self):
        h = ones_subdiag(4)
        for k in (0, 4):
            with pytest.raises(ValueError):
                potential(h, k)

    def test_zero_subdiagonal(self):
        a = np.diag(np.array([1.0, 0.0, 1.0]), -1)
        assert potential(HessenbergMatrix(a), 2) == 0.0

    def test_log_space_avoids_underflow(self):
        a = np.diag(np.full(40, 1e-300), -1)
        h = HessenbergMatrix(a)
        assert log_potential(h, 32) == pytest.approx(math.log(1e-300))
        assert potential(h, 32) == pytest.approx(1e-300)

    def test_equals_last_row_norm_at_corner_charpoly(self, rng):
        for _ in range(10):
            h = random_hessenberg(rng, 10)
            roots = np.linalg.eigvals(corner(h, 4))
            _, norm = last_row_poly_apply(h, ShiftPolynomial(roots))
            assert norm ** 0.25 == pytest.approx(potential(h, 4), rel=1e-12)

    def test_bounded_by_scale(self, rng):
        for _ in range(20):
            h = random_hessenberg(rng, 9)
            k = int(rng.integers(1, 9))
            sub = np.abs(h.subdiagonal())
            assert potential(h, k) <= sub.max() * (1 + 1e-15) <= h.scale * (1 + 1e-15)


class TestCorner:
    def test_full_and_single(self, rng):
        h = random_hessenberg(rng, 5)
        np.testing.assert_array_equal(corner(h, 5), h.entries)
        np.testing.assert_array_equal(corner(h, 1), [[h.entries[4, 4]]])

    def test_two_by_two(self):
        a = np.triu(np.arange(16.0).reshape(4, 4), -1)
        np.testing.assert_array_equal(corner(HessenbergMatrix(a), 2), [[10, 11], [14, 15]])

    def test_range(self):
        with pytest.raises(ValueError):
            corner(ones_subdiag(3), 4)


class TestLastRow:
    def test_degree_one_cancels_last_entry(self, rng):
        h = random_hessenberg(rng, 6)
        row, norm = last_row_poly_apply(h, ShiftPolynomial((h.entries[5, 5],)))
        assert row[5] == 0
        assert norm == pytest.approx(np.linalg.norm(row))

    def test_matches_dense_evaluation(self, rng):
        h = random_hessenberg(rng, 8)
        roots = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        dense = np.eye(8, dtype=complex)
        for r in roots:
            dense = dense @ (h.entries - r * np.eye(8))
        row, norm = last_row_poly_apply(h, ShiftPolynomial(roots))
        np.testing.assert_allclose(row, dense[-1], rtol=1e-12, atol=1e-14)

    def test_corner_charpoly_zeros_tail(self, rng):
        h = random_hessenberg(rng, 10)
        k = 4
        row, norm = last_row_poly_apply(h, ShiftPolynomial(np.linalg.eigvals(corner(h, k))))
        assert np.abs(row[-k:]).max() <= 1e-12 * norm + 1e-14
        assert norm ** (1 / k) == pytest.approx(potential(h, k), rel=1e-10)

    def test_random_monic_never_beats_potential(self, rng):
        h = random_hessenberg(rng, 10)
        k = 4
        psik = potential(h, k) ** k
        for _ in range(100):
            roots = 2 * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
            _, norm = last_row_poly_apply(h, ShiftPolynomial(roots))
            assert norm >= psik * (1 - 1e-12)

    def test_log_norm_handles_huge_powers(self):
        h = HessenbergMatrix(np.diag(np.full(11, 1e200), -1) + 1e200 * np.eye(12))
        lg = last_row_log_norm(h, [0.0] * 10)
        assert math.isfinite(lg) and lg > 10 * math.log(1e200)


class TestDecoupling:
    def test_exact_zero(self):
        a = np.diag(np.array([1.0, 0.0, 1.0]), -1) + np.eye(4)
        assert decoupling_check(HessenbergMatrix(a), 1e-300) == 2

    def test_none_when_large(self):
        h = ones_subdiag(5)
        a = np.diag(np.full(4, h.scale), -1)
        h = HessenbergMatrix(a, h.scale)
        assert decoupling_check(h, 0.999) is None

    def test_threshold(self):
        a = np.diag(np.array([1.0, 1.0, 1.0, 1.0]), -1)
        h0 = HessenbergMatrix(a)
        a[3, 2] = 1e-10 * h0.scale
        h = HessenbergMatrix(a, h0.scale)
        assert decoupling_check(h, 1e-8) == 3
        assert decoupling_check(h, 1e-11) is None

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            decoupling_check(ones_subdiag(3), 0.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(3, 12), k=st.sampled_from([2, 4]))
def test_variational_identity(seed, n, k):
    if k >= n:
        k = n - 1
    rng = np.random.default_rng(seed)
    h = random_hessenberg(rng, n)
    psik = potential(h, k)
    best = math.inf
    for _ in range(1000 // 50):
        roots = rng.standard_normal((50, k)) + 1j * rng.standard_normal((50, k))
        for r in roots:
            best = min(best, math.exp(last_row_log_norm(h, r) / k))
    assert best >= psik - 1e-12
    opt = math.exp(last_row_log_norm(h, np.linalg.eigvals(corner(h, k))) / k)
    assert opt == pytest.approx(psik, rel=1e-10)
