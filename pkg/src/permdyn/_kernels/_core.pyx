# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sampling and permanent kernels.

Implements the same Philox4x64-10 word protocol as the numpy fallback:
sample m owns counter blocks [m*bps, (m+1)*bps) with bps = ceil(n/4), keyed
by (seed, stream), and phases are 2*pi * ((word >> 11) * 2**-53).  Built
with -ffp-contract=off so the arithmetic stays aligned with the fallback.
"""

from libc.math cimport atan2, cos, exp, log, sin, sqrt
from libc.stdint cimport uint64_t
from libc.stdlib cimport free, malloc

import numpy as np

NAME = "compiled"

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t pd_mulhi64(uint64_t a, uint64_t b, uint64_t *lo) {
        __uint128_t p = (__uint128_t)a * (__uint128_t)b;
        *lo = (uint64_t)p;
        return (uint64_t)(p >> 64);
    }
    static inline int pd_ctz64(uint64_t x) { return __builtin_ctzll(x); }
    """
    uint64_t pd_mulhi64(uint64_t a, uint64_t b, uint64_t *lo) nogil
    int pd_ctz64(uint64_t x) nogil

cdef double TWO_PI = 6.283185307179586
cdef double INV53 = 1.0 / 9007199254740992.0

cdef uint64_t PHILOX_M0 = 0xD2E7470EE14C6C93U
cdef uint64_t PHILOX_M1 = 0xCA5A826395121157U
cdef uint64_t PHILOX_W0 = 0x9E3779B97F4A7C15U
cdef uint64_t PHILOX_W1 = 0xBB67AE8584CAA73BU


cdef inline void _philox_block(uint64_t c0, uint64_t k0, uint64_t k1,
                               uint64_t *out) noexcept nogil:
    # One philox4x64-10 block; high counter words are zero in this protocol.
    cdef uint64_t x0 = c0, x1 = 0, x2 = 0, x3 = 0
    cdef uint64_t hi0, lo0, hi1, lo1, t1, t3
    cdef int r
    for r in range(10):
        if r > 0:
            k0 += PHILOX_W0
            k1 += PHILOX_W1
        hi0 = pd_mulhi64(PHILOX_M0, x0, &lo0)
        hi1 = pd_mulhi64(PHILOX_M1, x2, &lo1)
        t1 = x1
        t3 = x3
        x0 = hi1 ^ t1 ^ k0
        x1 = lo1
        x2 = hi0 ^ t3 ^ k1
        x3 = lo0
    out[0] = x0
    out[1] = x1
    out[2] = x2
    out[3] = x3


cdef inline void _fill_phases(uint64_t seed, uint64_t stream, uint64_t m,
                              Py_ssize_t n, Py_ssize_t bps,
                              double *theta) noexcept nogil:
    cdef uint64_t words[4]
    cdef uint64_t base = m * <uint64_t>bps
    cdef Py_ssize_t j, w, i = 0
    for j in range(bps):
        # numpy's Philox pre-increments the counter, hence the +1
        _philox_block(base + <uint64_t>j + 1, seed, stream, words)
        for w in range(4):
            if i < n:
                theta[i] = TWO_PI * ((words[w] >> 11) * INV53)
                i += 1


def philox_words(seed, stream, start_block, n_blocks):
    """Raw 64-bit words of the keyed Philox stream, starting at a block index."""
    cdef Py_ssize_t nb = n_blocks
    out = np.empty(4 * nb, dtype=np.uint64)
    cdef uint64_t[::1] view = out
    cdef uint64_t k0 = seed, k1 = stream, c0 = start_block
    cdef Py_ssize_t j
    with nogil:
        for j in range(nb):
            _philox_block(c0 + <uint64_t>j + 1, k0, k1, &view[4 * j])
    return out


def sample_phases(n, seed, stream, start, count):
    """Phase angles theta in [0, 2*pi) for samples [start, start+count), shape (count, n)."""
    cdef Py_ssize_t nn = n, cnt = count
    cdef Py_ssize_t bps = (nn + 3) // 4
    out = np.empty((cnt, nn))
    cdef double[:, ::1] view = out
    cdef uint64_t k0 = seed, k1 = stream, first = start
    cdef Py_ssize_t s
    with nogil:
        for s in range(cnt):
            _fill_phases(k0, k1, first + <uint64_t>s, nn, bps, &view[s, 0])
    return out


def glynn_batch(double[:, ::1] m_re, double[:, ::1] m_im,
                seed, stream, start, count):
    """Glynn estimator samples p for indices [start, start+count).

    The per-sample product is carried as (log magnitude, phase) and
    exponentiated once at the end, so no intermediate under/overflow occurs.
    Returns (p_re, p_im) float64 arrays of length count.
    """
    cdef Py_ssize_t n = m_re.shape[0]
    cdef Py_ssize_t bps = (n + 3) // 4
    cdef Py_ssize_t cnt = count
    cdef uint64_t k0 = seed, k1 = stream, first = start
    out_re = np.empty(cnt)
    out_im = np.empty(cnt)
    cdef double[::1] p_re = out_re
    cdef double[::1] p_im = out_im
    cdef double *buf = <double *> malloc(3 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *theta = buf
    cdef double *r_re = buf + n
    cdef double *r_im = buf + 2 * n
    cdef Py_ssize_t s, i, j
    cdef double v_re, v_im, mag2, log_mag, phase, mag
    with nogil:
        for s in range(cnt):
            _fill_phases(k0, k1, first + <uint64_t>s, n, bps, theta)
            for i in range(n):
                r_re[i] = cos(theta[i])
                r_im[i] = sin(theta[i])
            log_mag = 0.0
            phase = 0.0
            for i in range(n):
                v_re = 0.0
                v_im = 0.0
                for j in range(n):
                    v_re += r_re[j] * m_re[i, j] - r_im[j] * m_im[i, j]
                    v_im += r_re[j] * m_im[i, j] + r_im[j] * m_re[i, j]
                mag2 = v_re * v_re + v_im * v_im
                log_mag += 0.5 * log(mag2)
                phase += atan2(v_im, v_re) - theta[i]
            mag = exp(log_mag)
            p_re[s] = mag * cos(phase)
            p_im[s] = mag * sin(phase)
    free(buf)
    return out_re, out_im


def bound_batch(double[:, ::1] m_re, double[:, ::1] m_im,
                seed, stream, start, count):
    """Glynn samples plus the bound-chain samples, from shared random vectors.

    Returns (p_re, p_im, q1, q2, q3) where, with v_i = sum_j M[i,j] r_j,
    q1 = prod_i |v_i|, q2 = (mean_i |v_i|)**n, q3 = (sqrt(mean_i |v_i|^2))**n,
    all evaluated in the log domain.  p_re is q1 * cos(phase), which makes
    Re p <= q1 hold sample by sample at full floating-point strictness.
    """
    cdef Py_ssize_t n = m_re.shape[0]
    cdef Py_ssize_t bps = (n + 3) // 4
    cdef Py_ssize_t cnt = count
    cdef uint64_t k0 = seed, k1 = stream, first = start
    out_re = np.empty(cnt)
    out_im = np.empty(cnt)
    out_q1 = np.empty(cnt)
    out_q2 = np.empty(cnt)
    out_q3 = np.empty(cnt)
    cdef double[::1] p_re = out_re
    cdef double[::1] p_im = out_im
    cdef double[::1] q1 = out_q1
    cdef double[::1] q2 = out_q2
    cdef double[::1] q3 = out_q3
    cdef double *buf = <double *> malloc(3 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *theta = buf
    cdef double *r_re = buf + n
    cdef double *r_im = buf + 2 * n
    cdef Py_ssize_t s, i, j
    cdef double v_re, v_im, mag2, mag_i, log_mag, phase, s_abs, s_sq, q1_s
    with nogil:
        for s in range(cnt):
            _fill_phases(k0, k1, first + <uint64_t>s, n, bps, theta)
            for i in range(n):
                r_re[i] = cos(theta[i])
                r_im[i] = sin(theta[i])
            log_mag = 0.0
            phase = 0.0
            s_abs = 0.0
            s_sq = 0.0
            for i in range(n):
                v_re = 0.0
                v_im = 0.0
                for j in range(n):
                    v_re += r_re[j] * m_re[i, j] - r_im[j] * m_im[i, j]
                    v_im += r_re[j] * m_im[i, j] + r_im[j] * m_re[i, j]
                mag2 = v_re * v_re + v_im * v_im
                log_mag += 0.5 * log(mag2)
                phase += atan2(v_im, v_re) - theta[i]
                s_abs += sqrt(mag2)
                s_sq += mag2
            q1_s = exp(log_mag)
            q1[s] = q1_s
            q2[s] = exp(n * log(s_abs / n))
            q3[s] = exp(0.5 * n * log(s_sq / n))
            p_re[s] = q1_s * cos(phase)
            p_im[s] = q1_s * sin(phase)
    free(buf)
    return out_re, out_im, out_q1, out_q2, out_q3


def perm_bbfg(double[:, ::1] m_re, double[:, ::1] m_im):
    """Exact permanent via the 2**(n-1)-term +/-1 expansion, Gray-code ordered.

    Each step flips a single sign, so the n running column sums are updated
    in O(n) and the whole sum costs O(n * 2**(n-1)).
    """
    cdef Py_ssize_t n = m_re.shape[0]
    cdef uint64_t total = (<uint64_t>1) << (n - 1)
    cdef double *buf = <double *> malloc(2 * n * sizeof(double) + n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *w_re = buf
    cdef double *w_im = buf + n
    cdef double *delta = buf + 2 * n
    cdef Py_ssize_t i, j
    cdef uint64_t k
    cdef double sign = 1.0, acc_re = 0.0, acc_im = 0.0
    cdef double t_re, t_im, tmp, f
    with nogil:
        for j in range(n):
            w_re[j] = 0.0
            w_im[j] = 0.0
            for i in range(n):
                w_re[j] += m_re[i, j]
                w_im[j] += m_im[i, j]
        for i in range(n):
            delta[i] = 1.0
        for k in range(total):
            if k > 0:
                i = pd_ctz64(k) + 1  # delta[0] is pinned to +1
                delta[i] = -delta[i]
                f = 2.0 * delta[i]
                for j in range(n):
                    w_re[j] += f * m_re[i, j]
                    w_im[j] += f * m_im[i, j]
                sign = -sign
            t_re = 1.0
            t_im = 0.0
            for j in range(n):
                tmp = t_re * w_re[j] - t_im * w_im[j]
                t_im = t_re * w_im[j] + t_im * w_re[j]
                t_re = tmp
            acc_re += sign * t_re
            acc_im += sign * t_im
    free(buf)
    return complex(acc_re / <double>total, acc_im / <double>total)
