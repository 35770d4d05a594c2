"""Pure-numpy sampling and permanent kernels (reference backend).

Random-word protocol (shared with the compiled backend): the word stream is
Philox4x64-10 keyed by (seed, stream); sample m owns the counter blocks
[m*bps, (m+1)*bps) with bps = ceil(n/4), i.e. 4*bps raw 64-bit words of which
the first n become phases via theta = 2*pi * ((word >> 11) * 2**-53).

All floating-point work here uses elementwise ufuncs with a fixed
accumulation order (no BLAS), so batch contents are independent of how
batches are scheduled across workers.
"""

import numpy as np
from numpy.random import Philox

NAME = "fallback"

TWO_PI = 6.283185307179586
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_BBFG_CHUNK = 1 << 15


def philox_words(seed, stream, start_block, n_blocks):
    """Raw 64-bit words of the keyed Philox stream, starting at a block index."""
    key = int(seed) | (int(stream) << 64)
    bg = Philox(key=key, counter=int(start_block))
    return bg.random_raw(4 * int(n_blocks))


def sample_phases(n, seed, stream, start, count):
    """Phase angles theta in [0, 2*pi) for samples [start, start+count), shape (count, n)."""
    bps = (n + 3) // 4
    words = philox_words(seed, stream, start * bps, count * bps)
    words = words.reshape(count, 4 * bps)[:, :n]
    return TWO_PI * ((words >> np.uint64(11)) * _INV53)


def _row_values(m_re, m_im, r_re, r_im):
    """v[k, i] = sum_j M[i, j] * r[k, j], accumulated in fixed j order."""
    count, n = r_re.shape
    v_re = np.zeros((count, n))
    v_im = np.zeros((count, n))
    for j in range(n):
        a = r_re[:, j, None]
        b = r_im[:, j, None]
        v_re += a * m_re[:, j] - b * m_im[:, j]
        v_im += a * m_im[:, j] + b * m_re[:, j]
    return v_re, v_im


def glynn_batch(m_re, m_im, seed, stream, start, count):
    """Glynn estimator samples p for indices [start, start+count).

    The per-sample product is carried as (log magnitude, phase) and
    exponentiated once at the end, so no intermediate under/overflow occurs.
    Returns (p_re, p_im) float64 arrays of length count.
    """
    theta = sample_phases(m_re.shape[0], seed, stream, start, count)
    r_re = np.cos(theta)
    r_im = np.sin(theta)
    v_re, v_im = _row_values(m_re, m_im, r_re, r_im)
    mag2 = v_re * v_re + v_im * v_im
    with np.errstate(divide="ignore"):
        log_mag = (0.5 * np.log(mag2)).sum(axis=1)
    phase = (np.arctan2(v_im, v_re) - theta).sum(axis=1)
    mag = np.exp(log_mag)
    return mag * np.cos(phase), mag * np.sin(phase)


def bound_batch(m_re, m_im, seed, stream, start, count):
    """Glynn samples plus the bound-chain samples, from shared random vectors.

    Returns (p_re, p_im, q1, q2, q3) where, with v_i = sum_j M[i,j] r_j,
    q1 = prod_i |v_i|, q2 = (mean_i |v_i|)**n, q3 = (sqrt(mean_i |v_i|^2))**n,
    all evaluated in the log domain.  p_re is q1 * cos(phase), which makes
    Re p <= q1 hold sample by sample at full floating-point strictness.
    """
    n = m_re.shape[0]
    theta = sample_phases(n, seed, stream, start, count)
    r_re = np.cos(theta)
    r_im = np.sin(theta)
    v_re, v_im = _row_values(m_re, m_im, r_re, r_im)
    mag2 = v_re * v_re + v_im * v_im
    mag = np.sqrt(mag2)
    with np.errstate(divide="ignore"):
        log_mag = (0.5 * np.log(mag2)).sum(axis=1)
        q1 = np.exp(log_mag)
        q2 = np.exp(n * np.log(mag.sum(axis=1) / n))
        q3 = np.exp(0.5 * n * np.log(mag2.sum(axis=1) / n))
    phase = (np.arctan2(v_im, v_re) - theta).sum(axis=1)
    return q1 * np.cos(phase), q1 * np.sin(phase), q1, q2, q3


def perm_bbfg(m_re, m_im):
    """Exact permanent via the 2**(n-1)-term +/-1 expansion.

    Enumerates delta vectors in fixed-size chunks and recomputes the column
    sums per chunk; the compiled backend walks the same sum in Gray-code
    order with O(n) updates instead.
    """
    m = m_re + 1j * m_im
    n = m.shape[0]
    total = 1 << (n - 1)
    acc = 0.0 + 0.0j
    shifts = np.arange(n - 1, dtype=np.uint64)
    for lo in range(0, total, _BBFG_CHUNK):
        k = np.arange(lo, min(lo + _BBFG_CHUNK, total), dtype=np.uint64)
        bits = (k[:, None] >> shifts) & np.uint64(1)
        deltas = np.empty((len(k), n))
        deltas[:, 0] = 1.0
        deltas[:, 1:] = 1.0 - 2.0 * bits
        col_sums = deltas @ m
        terms = np.prod(col_sums, axis=1)
        signs = 1.0 - 2.0 * (bits.sum(axis=1) & np.uint64(1)).astype(np.float64)
        acc += np.sum(signs * terms)
    return complex(acc / total)
