"""Exact permanents (permutation-sum oracle vs the 2**(n-1) expansion) and
the Glynn estimator: exactness cases, determinism, unbiasedness."""

import numpy as np
import pytest

from permdyn.permanent import (
    Method,
    as_complex_matrix,
    batch_ranges,
    glynn_estimate,
    glynn_sample,
    iter_glynn_batches,
    perm_bbfg,
    perm_naive,
)
from permdyn.stats import sampled_permanent
from helpers import random_complex


class TestNaive:
    def test_identity(self):
        assert perm_naive(np.eye(3)) == 1.0

    def test_two_by_two_ones(self):
        assert perm_naive(np.ones((2, 2))) == 2.0

    def test_all_ones_is_factorial(self):
        assert perm_naive(np.ones((4, 4))) == 24.0

    def test_cap(self):
        with pytest.raises(ValueError, match="capped"):
            perm_naive(np.eye(13))

    def test_known_complex_value(self):
        m = np.array([[1 + 1j, 2], [3, 4 - 2j]])
        # (1+1j)(4-2j) + 2*3 = 6 + 2j + 6
        assert perm_naive(m) == 12 + 2j


class TestBbfg:
    def test_identity(self):
        assert abs(perm_bbfg(np.eye(5)) - 1.0) < 1e-12

    def test_all_ones_3x3(self):
        assert abs(perm_bbfg(np.ones((3, 3))) - 6.0) < 1e-12

    def test_matches_naive_on_random_matrices(self):
        rng = np.random.default_rng(2024)
        for _ in range(40):
            n = int(rng.integers(2, 9))
            m = random_complex(rng, n)
            expected = perm_naive(m)
            assert abs(perm_bbfg(m) - expected) < 1e-10 * abs(expected)

    def test_cap_mentions_sampling(self):
        with pytest.raises(ValueError, match="sampling"):
            perm_bbfg(np.eye(35))
        # the cap is configurable
        with pytest.raises(ValueError):
            perm_bbfg(np.eye(10), max_n=8)

    def test_scaling_relation(self):
        rng = np.random.default_rng(7)
        m = random_complex(rng, 6)
        c = 0.7 - 0.2j
        for perm in (perm_naive, perm_bbfg):
            assert np.isclose(perm(c * m), c**6 * perm(m), rtol=1e-10)

    def test_transpose_invariance(self):
        m = random_complex(np.random.default_rng(8), 7)
        assert np.isclose(perm_bbfg(m.T), perm_bbfg(m), rtol=1e-12)
        assert np.isclose(perm_naive(m.T), perm_naive(m), rtol=1e-12)

    def test_row_column_permutation_invariance(self):
        rng = np.random.default_rng(9)
        m = random_complex(rng, 6)
        p = np.eye(6)[rng.permutation(6)]
        q = np.eye(6)[rng.permutation(6)]
        assert np.isclose(perm_bbfg(p @ m @ q), perm_bbfg(m), rtol=1e-12)

    def test_hermitian_matrix_has_real_permanent(self):
        m = random_complex(np.random.default_rng(10), 8)
        h = m + m.conj().T
        p = perm_bbfg(h)
        assert abs(p.imag) < 1e-10 * abs(p)


class TestMatrixValidation:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            as_complex_matrix(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        m = np.eye(3, dtype=complex)
        m[1, 1] = np.nan
        with pytest.raises(ValueError, match="finite"):
            as_complex_matrix(m)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            as_complex_matrix(np.empty((0, 0)))


class TestGlynnSample:
    def test_identity_is_exact_up_to_roundoff(self):
        for idx in range(20):
            p = glynn_sample(np.eye(8), seed=1, index=idx)
            assert abs(p - 1.0) < 1e-12

    def test_diagonal_matrix(self):
        d = np.array([0.5 + 1j, -2.0, 3.0 - 0.5j, 1j])
        expected = np.prod(d)
        for idx in (0, 5):
            assert abs(glynn_sample(np.diag(d), seed=3, index=idx) - expected) < 1e-12 * abs(expected)

    def test_replay_is_bit_identical(self):
        m = random_complex(np.random.default_rng(1), 6)
        assert glynn_sample(m, seed=42, index=17) == glynn_sample(m, seed=42, index=17)

    def test_seed_and_index_matter(self):
        m = random_complex(np.random.default_rng(1), 6)
        p = glynn_sample(m, seed=42, index=17)
        assert p != glynn_sample(m, seed=43, index=17)
        assert p != glynn_sample(m, seed=42, index=18)

    def test_rejects_bad_seed(self):
        with pytest.raises(ValueError, match="64"):
            glynn_sample(np.eye(2), seed=1 << 64, index=0)


class TestBatchRanges:
    def test_cover_exactly(self):
        ranges = batch_ranges(100, 32)
        assert ranges == [(0, 32), (32, 32), (64, 32), (96, 4)]

    def test_single_batch(self):
        assert batch_ranges(10, 64) == [(0, 10)]

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            batch_ranges(0)


class TestGlynnEstimate:
    def test_identity_mean_one_variance_zero(self):
        est = glynn_estimate(np.eye(6), n_total=512, seed=1)
        assert est.method is Method.GLYNN_SAMPLED
        assert abs(est.mean - 1.0) < 1e-12
        values = np.concatenate([b.values for b in iter_glynn_batches(np.eye(6), 512, 1)])
        assert values.std() < 1e-13

    def test_worker_count_does_not_change_bits(self):
        m = random_complex(np.random.default_rng(5), 10)
        means = {w: glynn_estimate(m, n_total=3000, seed=9, workers=w, batch_size=256).mean
                 for w in (1, 4, 8)}
        assert means[1] == means[4] == means[8]

    def test_consumer_sees_ordered_batches(self):
        seen = []
        glynn_estimate(np.eye(4), n_total=1000, seed=1, batch_size=256,
                       consumer=lambda b: seen.append((b.first, b.last)))
        assert seen == [(0, 256), (256, 512), (512, 768), (768, 1000)]

    def test_mean_equals_batch_values_mean(self):
        m = random_complex(np.random.default_rng(6), 5)
        est = glynn_estimate(m, n_total=2000, seed=2, batch_size=512)
        values = np.concatenate([b.values for b in iter_glynn_batches(m, 2000, 2, batch_size=512)])
        assert abs(est.mean - values.mean()) < 1e-14


class TestUnbiasedness:
    def test_pulls_center_on_exact_value(self):
        """Over 32 independent seeds the normalized deviations average out."""
        m = random_complex(np.random.default_rng(11), 5)
        exact = perm_bbfg(m)
        pulls = []
        above = below = 0
        for seed in range(1, 33):
            est, _, _ = sampled_permanent(m, 4096, seed=seed, n_block=64)
            pulls.append((est.mean.real - exact.real) / est.stderr_re)
            if est.mean.real > exact.real:
                above += 1
            else:
                below += 1
        assert abs(np.mean(pulls)) < 0.5
        assert above > 0 and below > 0
