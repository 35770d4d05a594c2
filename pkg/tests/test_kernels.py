"""Kernel-level tests: sampled values against direct-arithmetic oracles,
batch addressing, and compiled-vs-fallback agreement."""

import numpy as np
import pytest

from permdyn._kernels import available_backends, get_backend
from helpers import random_complex


def manual_samples(m, seed, stream, start, count, backend):
    """Oracle: p computed by plain complex products (no log-domain tricks)."""
    kern = get_backend(backend)
    n = m.shape[0]
    theta = kern.sample_phases(n, seed, stream, start, count)
    r = np.exp(1j * theta)
    v = r @ m.T
    return np.prod(np.conj(r) * v, axis=1)


def split(m):
    return np.ascontiguousarray(m.real), np.ascontiguousarray(m.imag)


@pytest.mark.parametrize("n", [1, 2, 5, 12, 30])
def test_glynn_batch_matches_direct_product(backend, n):
    kern = get_backend(backend)
    m = random_complex(np.random.default_rng(n), n)
    p_re, p_im = kern.glynn_batch(*split(m), 11, 0, 0, 200)
    expected = manual_samples(m, 11, 0, 0, 200, backend)
    assert np.allclose(p_re + 1j * p_im, expected, rtol=1e-11, atol=1e-13)


def test_glynn_batch_is_index_addressed(backend):
    kern = get_backend(backend)
    m = random_complex(np.random.default_rng(3), 6)
    args = split(m)
    whole = kern.glynn_batch(*args, 5, 0, 0, 100)
    head = kern.glynn_batch(*args, 5, 0, 0, 37)
    tail = kern.glynn_batch(*args, 5, 0, 37, 63)
    for w, h, t in zip(whole, head, tail):
        assert np.array_equal(w, np.concatenate([h, t]))


def test_glynn_batch_deterministic_replay(backend):
    kern = get_backend(backend)
    m = random_complex(np.random.default_rng(4), 8)
    a = kern.glynn_batch(*split(m), 99, 0, 1000, 50)
    b = kern.glynn_batch(*split(m), 99, 0, 1000, 50)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_bound_batch_shares_p_with_glynn_batch(backend):
    kern = get_backend(backend)
    m = random_complex(np.random.default_rng(5), 10)
    g_re, g_im = kern.glynn_batch(*split(m), 21, 0, 0, 128)
    b_re, b_im, q1, q2, q3 = kern.bound_batch(*split(m), 21, 0, 0, 128)
    assert np.array_equal(g_re, b_re)
    assert np.array_equal(g_im, b_im)


def test_bound_batch_matches_direct_formulas(backend):
    kern = get_backend(backend)
    n = 9
    m = random_complex(np.random.default_rng(6), n)
    theta = get_backend(backend).sample_phases(n, 7, 0, 0, 150)
    r = np.exp(1j * theta)
    v = r @ m.T
    mags = np.abs(v)
    _, _, q1, q2, q3 = kern.bound_batch(*split(m), 7, 0, 0, 150)
    assert np.allclose(q1, np.prod(mags, axis=1), rtol=1e-11)
    assert np.allclose(q2, (mags.mean(axis=1)) ** n, rtol=1e-11)
    assert np.allclose(q3, np.sqrt((mags**2).mean(axis=1)) ** n, rtol=1e-11)


def test_bound_batch_re_p_never_exceeds_q1(backend):
    kern = get_backend(backend)
    m = random_complex(np.random.default_rng(8), 14)
    p_re, _, q1, q2, q3 = kern.bound_batch(*split(m), 13, 0, 0, 2000)
    assert np.all(p_re <= q1)
    assert np.all(q1 <= q2 * (1 + 1e-10))
    assert np.all(q2 <= q3 * (1 + 1e-10))


def test_zero_row_gives_zero_sample(backend):
    kern = get_backend(backend)
    m = random_complex(np.random.default_rng(9), 5)
    m[2, :] = 0.0
    p_re, p_im = kern.glynn_batch(*split(m), 1, 0, 0, 10)
    assert np.all(p_re == 0.0)
    assert np.all(p_im == 0.0)


def test_bbfg_small_sizes_against_expansion(backend):
    """Independent oracle: explicit sum over all 2**(n-1) delta vectors."""
    kern = get_backend(backend)
    rng = np.random.default_rng(10)
    for n in (1, 2, 3, 6):
        m = random_complex(rng, n)
        total = 0j
        for k in range(1 << (n - 1)):
            delta = np.ones(n)
            for b in range(n - 1):
                if (k >> b) & 1:
                    delta[b + 1] = -1.0
            total += np.prod(delta) * np.prod(delta @ m)
        expected = total / (1 << (n - 1))
        got = kern.perm_bbfg(*split(m))
        assert np.isclose(got, expected, rtol=1e-11)


@pytest.mark.skipif(len(available_backends()) < 2, reason="only one backend built")
class TestBackendAgreement:
    def test_glynn_values_close(self):
        core, fb = get_backend("compiled"), get_backend("fallback")
        for n in (2, 7, 16, 48):
            m = random_complex(np.random.default_rng(n), n)
            a = core.glynn_batch(*split(m), 1, 0, 0, 400)
            b = fb.glynn_batch(*split(m), 1, 0, 0, 400)
            pa, pb = a[0] + 1j * a[1], b[0] + 1j * b[1]
            assert np.all(np.abs(pa - pb) <= 1e-11 * np.abs(pb) + 1e-280)

    def test_bound_values_close(self):
        core, fb = get_backend("compiled"), get_backend("fallback")
        m = random_complex(np.random.default_rng(2), 20)
        a = core.bound_batch(*split(m), 1, 0, 0, 400)
        b = fb.bound_batch(*split(m), 1, 0, 0, 400)
        for x, y in zip(a, b):
            assert np.allclose(x, y, rtol=1e-10, atol=1e-280)

    def test_bbfg_close(self):
        core, fb = get_backend("compiled"), get_backend("fallback")
        for n in (1, 2, 9, 14):
            m = random_complex(np.random.default_rng(n), n)
            assert np.isclose(core.perm_bbfg(*split(m)), fb.perm_bbfg(*split(m)), rtol=1e-10)
