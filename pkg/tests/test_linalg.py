import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from locsketch.errors import ConvergenceError, NotPositiveDefiniteError, ValidationError
from locsketch.linalg import (
    PartitionedMatrix,
    as_matrix,
    frobenius_norm,
    gaussian_matrix,
    matmul,
    qr_thin,
    singular_values,
    solve_spd,
    spectral_norm,
)
from locsketch.rng import RandomSource

from oracles import jacobi_eigvals, matmul_loops

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def rand(shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


class TestMatmul:
    def test_identity(self):
        b = rand((3, 4))
        np.testing.assert_array_equal(matmul(np.eye(3), b), b)

    def test_hand_arithmetic(self):
        np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3], [7]])

    def test_matches_triple_loop(self):
        a, b = rand((5, 4), 1), rand((4, 3), 2)
        np.testing.assert_allclose(matmul(a, b), matmul_loops(a, b), rtol=0, atol=1e-12)

    def test_mismatch_reports_both_shapes(self):
        with pytest.raises(ValidationError, match=r"\(2, 3\).*\(2, 3\)"):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (4, 3), elements=finite), arrays(np.float64, (3, 5), elements=finite),
           arrays(np.float64, (5, 2), elements=finite))
    def test_associative(self, a, b, c):
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        scale = max(1.0, np.linalg.norm(np.abs(a) @ np.abs(b) @ np.abs(c)))
        assert np.linalg.norm(left - right) <= 1e-10 * scale


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(6)) == pytest.approx(1.0, rel=1e-12)

    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 1.0, 0.5])) == pytest.approx(3.0, rel=1e-10)

    def test_matches_svd(self):
        a = rand((20, 8), 3)
        ref = np.linalg.svd(a, compute_uv=False)[0]
        assert spectral_norm(a) == pytest.approx(ref, rel=1e-8)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((3, 2))) == 0.0

    def test_wide_matrix(self):
        a = rand((4, 30), 4)
        assert spectral_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False)[0], rel=1e-8)

    def test_no_fallback_raises_with_gap(self):
        # Two nearly tied top singular values make power iteration crawl.
        a = np.diag([1.0, 1.0 - 1e-9, 0.1])
        q = np.linalg.qr(rand((3, 3), 5))[0]
        with pytest.raises(ConvergenceError) as info:
            spectral_norm(q @ a, tol=1e-15, max_iters=5, fallback=False)
        assert info.value.gap > 0

    def test_fallback_uses_svd(self):
        a = rand((10, 10), 6)
        got = spectral_norm(a, tol=1e-15, max_iters=2)
        assert got == pytest.approx(np.linalg.svd(a, compute_uv=False)[0], rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=finite))
    def test_norm_sandwich(self, a):
        spec = spectral_norm(a)
        fro = frobenius_norm(a)
        rank = np.linalg.matrix_rank(a)
        assert spec <= fro * (1 + 1e-9) + 1e-12
        assert fro <= np.sqrt(max(rank, 1)) * spec * (1 + 1e-7) + 1e-12


class TestQR:
    def test_orthonormal_input(self):
        q0 = np.linalg.qr(rand((10, 4), 7))[0]
        q, r = qr_thin(q0)
        signs = np.sign(np.diag(r))
        np.testing.assert_allclose(np.abs(r), np.eye(4), atol=1e-12)
        np.testing.assert_allclose(q * signs, q0, atol=1e-12)

    def test_column_orthogonal(self):
        a = np.array([[2.0, 0.0], [0.0, 0.0], [0.0, 3.0]])
        q, r = qr_thin(a)
        np.testing.assert_allclose(r, np.diag([2.0, 3.0]), atol=1e-14)

    def test_residuals(self):
        a = rand((30, 5), 8)
        q, r = qr_thin(a)
        assert np.linalg.norm(a - q @ r) <= 1e-10 * np.linalg.norm(a)
        assert np.linalg.norm(q.T @ q - np.eye(5)) <= 1e-10 * np.sqrt(5)
        np.testing.assert_array_equal(r, np.triu(r))
        assert np.all(np.diag(r) >= 0)

    def test_rank_deficient_allowed(self):
        a = rand((12, 3), 9)
        a[:, 2] = a[:, 0] + a[:, 1]
        q, r = qr_thin(a)
        assert abs(r[2, 2]) < 1e-12
        assert np.linalg.norm(a - q @ r) <= 1e-10 * np.linalg.norm(a)

    def test_wide_rejected(self):
        with pytest.raises(ValidationError):
            qr_thin(np.ones((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 10_000))
    def test_property(self, d, extra, seed):
        a = rand((d + extra, d), seed)
        q, r = qr_thin(a)
        assert np.linalg.norm(a - q @ r) <= 1e-10 * np.linalg.norm(a)
        assert np.linalg.norm(q.T @ q - np.eye(d)) <= 1e-10 * np.sqrt(d)


class TestSingularValues:
    def test_diagonal(self):
        np.testing.assert_allclose(singular_values(np.diag([5.0, 2.0, 1.0])), [5, 2, 1])

    def test_rank_one(self):
        u, v = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
        s = singular_values(np.outer(u, v))
        np.testing.assert_allclose(s, [15.0, 0.0], atol=1e-12)

    def test_matches_jacobi(self):
        a = rand((12, 7), 10)
        s = singular_values(a)
        np.testing.assert_allclose(s**2, jacobi_eigvals(a.T @ a), rtol=1e-8)

    def test_transpose_invariant(self):
        a = rand((9, 4), 11)
        np.testing.assert_allclose(singular_values(a), singular_values(a.T), atol=1e-10)

    def test_rejects_nan(self):
        with pytest.raises(ValidationError, match="NaN"):
            singular_values(np.array([[1.0, np.nan]]))


class TestSolveSPD:
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(solve_spd(np.eye(3), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(solve_spd(np.diag([4.0, 9.0]), [8.0, 27.0]), [2.0, 3.0])

    def test_residual(self):
        a = rand((40, 10), 12)
        m = a.T @ a + np.eye(10)
        rhs = rand((10, 2), 13)
        x = solve_spd(m, rhs)
        assert np.linalg.norm(matmul_loops(m, x) - rhs) <= 1e-8 * np.linalg.norm(rhs)

    def test_not_positive_definite_names_pivot(self):
        m = np.diag([1.0, 2.0, -1.0])
        with pytest.raises(NotPositiveDefiniteError, match="pivot 2") as info:
            solve_spd(m, np.ones(3))
        assert info.value.pivot == 2

    def test_asymmetric_rejected(self):
        with pytest.raises(ValidationError, match="symmetric"):
            solve_spd(np.array([[2.0, 1.0], [0.0, 2.0]]), np.ones(2))


class TestGaussian:
    def test_moments(self):
        x = gaussian_matrix(1000, 100, 1.0, RandomSource(1))
        assert abs(x.mean()) < 0.02
        assert abs(x.var() - 1.0) < 0.05

    def test_variance_scaling(self):
        x = gaussian_matrix(500, 100, 0.25, RandomSource(2))
        assert abs(x.var() - 0.25) < 0.0125

    def test_deterministic(self):
        src = RandomSource(3, 4)
        np.testing.assert_array_equal(gaussian_matrix(5, 5, 1.0, src), gaussian_matrix(5, 5, 1.0, src))

    def test_streams_uncorrelated(self):
        a = gaussian_matrix(100, 100, 1.0, RandomSource(9, 0)).ravel()
        b = gaussian_matrix(100, 100, 1.0, RandomSource(9, 1)).ravel()
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_bad_variance(self):
        with pytest.raises(ValidationError):
            gaussian_matrix(2, 2, 0.0, RandomSource(0))


class TestPartitionedMatrix:
    def test_flatten_roundtrip(self):
        blocks = [rand((3, 2), 1), rand((1, 2), 2), rand((4, 2), 3)]
        p = PartitionedMatrix.from_blocks(blocks)
        np.testing.assert_array_equal(p.flatten(), np.vstack(blocks))
        assert p.block_rows == (3, 1, 4)
        assert p.total_rows == 8 and p.cols == 2
        for j, b in enumerate(blocks):
            np.testing.assert_array_equal(p.block(j), b)

    def test_split(self):
        p = PartitionedMatrix.split(np.arange(10.0), 3)
        assert p.block_rows == (4, 3, 3)

    def test_bad_partition(self):
        with pytest.raises(ValidationError, match="sum to 5"):
            PartitionedMatrix(np.ones((4, 2)), (2, 3))
        with pytest.raises(ValidationError):
            PartitionedMatrix(np.ones((4, 2)), (4, 0))

    def test_column_mismatch(self):
        with pytest.raises(ValidationError, match="column count"):
            PartitionedMatrix.from_blocks([np.ones((2, 2)), np.ones((2, 3))])

    def test_permute(self):
        p = PartitionedMatrix.from_blocks([np.full((1, 1), 1.0), np.full((2, 1), 2.0)])
        q = p.permute_blocks([1, 0])
        assert q.block_rows == (2, 1)
        np.testing.assert_array_equal(q.data[:, 0], [2, 2, 1])


def test_as_matrix_rejects_inf():
    with pytest.raises(ValidationError):
        as_matrix([[np.inf]])
