import json

import numpy as np
import pytest

from locsketch.errors import ValidationError
from locsketch.estimate import (
    EstimatorConfig,
    estimate_block_coherence,
    exact_block_importance,
)
from locsketch.linalg import PartitionedMatrix
from locsketch.rng import RandomSource

from oracles import gram_schmidt


def incoherent(n, d, j, seed):
    return PartitionedMatrix.split(np.random.default_rng(seed).standard_normal((n, d)), j)


def qr_oracle(a):
    u = gram_schmidt(a.data)
    raw = np.array([np.sum(b * b) for b in a.with_data(u).blocks])
    return raw / raw.sum()


class TestConfig:
    def test_defaults(self):
        cfg = EstimatorConfig()
        assert cfg.rows_for(20) == 4 and cfg.rows_for(50) == 7
        assert cfg.stable_rounds == 2 and cfg.rank_tol == 1e-8

    @pytest.mark.parametrize("kwargs", [
        {"rows_per_round": 0}, {"stable_rounds": 0}, {"max_rounds": 1, "stable_rounds": 2},
        {"omega": "sparse"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            EstimatorConfig(**kwargs)


class TestEstimate:
    def test_orthonormal_input_isometric_omega(self):
        # A full-height transform per block is orthogonal, so R is a scaled
        # rotation and the block Frobenius masses come back exactly.
        u = PartitionedMatrix.split(gram_schmidt(np.random.default_rng(0).standard_normal((300, 6))), 5)
        cfg = EstimatorConfig(rows_per_round=60, omega="fourier")
        res = estimate_block_coherence(u, cfg, RandomSource(1))
        assert res.converged
        ref = np.array([np.sum(b * b) for b in u.blocks]) / 6
        np.testing.assert_allclose(res.gammas_hat, ref, atol=1e-6)

    def test_orthonormal_input_gaussian_omega(self):
        u = PartitionedMatrix.split(gram_schmidt(np.random.default_rng(0).standard_normal((300, 6))), 5)
        res = estimate_block_coherence(u, seed=RandomSource(1))
        ref = np.array([np.sum(b * b) for b in u.blocks]) / 6
        assert res.converged
        np.testing.assert_allclose(res.gammas_hat, ref, rtol=0.25)

    def test_canonical_block(self):
        a = PartitionedMatrix(np.vstack([np.eye(4), np.zeros((12, 4))]), (4, 4, 4, 4))
        res = estimate_block_coherence(a, seed=2)
        np.testing.assert_allclose(res.gammas_hat, [1, 0, 0, 0], atol=1e-12)

    def test_constant_factor_against_qr_oracle(self):
        a = incoherent(10_000, 20, 100, 3)
        res = estimate_block_coherence(a, seed=RandomSource(3))
        ratio = np.array(res.gammas_hat) / qr_oracle(a)
        assert res.converged
        assert np.all(ratio <= 3) and np.all(ratio >= 1 / 3)

    @pytest.mark.parametrize("omega", ["gaussian", "fourier"])
    def test_normalization(self, omega):
        res = estimate_block_coherence(incoherent(400, 8, 8, 4), EstimatorConfig(omega=omega), 5)
        assert sum(res.gammas_hat) == pytest.approx(1.0, abs=1e-12)
        assert min(res.gammas_hat) >= 0

    def test_saturation_matches_exact(self):
        hits = 0
        for seed in range(20):
            a = incoherent(600, 10, 6, 100 + seed)
            cfg = EstimatorConfig(stable_rounds=4)
            s = np.linalg.svd(a.data, compute_uv=False)
            assert s[-1] / s[0] >= 1e-3
            res = estimate_block_coherence(a, cfg, seed)
            assert res.rounds_used * cfg.rows_for(10) * a.n_blocks >= 2 * 10
            ratio = np.array(res.gammas_hat) / exact_block_importance(a)
            hits += bool(np.all((ratio <= 3) & (ratio >= 1 / 3)))
        assert hits >= 19

    def test_permutation_equivariance(self):
        a = incoherent(500, 6, 5, 6)
        order = [3, 0, 4, 1, 2]
        base = estimate_block_coherence(a, seed=7)
        perm = estimate_block_coherence(a.permute_blocks(order), seed=7, block_keys=order)
        np.testing.assert_allclose(perm.gammas_hat, np.array(base.gammas_hat)[order], rtol=1e-10)

    def test_rank_deficient_is_finite(self):
        a = incoherent(300, 6, 3, 8)
        data = a.data.copy()
        data[:, 5] = data[:, 0] - data[:, 1]
        res = estimate_block_coherence(a.with_data(data), seed=9)
        assert res.numerical_rank == 5
        assert np.all(np.isfinite(res.gammas_hat))

    def test_not_converged_still_returns(self):
        cfg = EstimatorConfig(rows_per_round=1, stable_rounds=3, max_rounds=3)
        res = estimate_block_coherence(incoherent(200, 10, 2, 10), cfg, 11)
        assert not res.converged and res.rounds_used == 3
        assert sum(res.gammas_hat) == pytest.approx(1.0)

    def test_zero_matrix(self):
        with pytest.raises(ValidationError, match="all-zero"):
            estimate_block_coherence(PartitionedMatrix.split(np.zeros((10, 2)), 2))

    def test_deterministic_and_json(self):
        a = incoherent(200, 4, 4, 12)
        r1 = estimate_block_coherence(a, seed=13)
        r2 = estimate_block_coherence(a, seed=13)
        assert r1 == r2
        out = json.loads(r1.to_json())
        assert set(out) == {"gammas_hat", "rounds_used", "converged", "numerical_rank"}


class TestExact:
    def test_orthonormal(self):
        u = PartitionedMatrix.split(gram_schmidt(np.random.default_rng(1).standard_normal((40, 4))), 4)
        np.testing.assert_allclose(exact_block_importance(u), [np.sum(b * b) / 4 for b in u.blocks])

    def test_canonical(self):
        a = PartitionedMatrix(np.vstack([np.eye(2), np.zeros((4, 2))]), (2, 2, 2))
        np.testing.assert_allclose(exact_block_importance(a), [1, 0, 0], atol=1e-14)

    def test_normalized(self):
        g = exact_block_importance(incoherent(300, 7, 6, 2))
        assert g.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all((g >= 0) & (g <= 1))
