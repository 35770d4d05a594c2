"""Matrix permanents: exact evaluation (permutation-sum oracle and the
2**(n-1)-term expansion) and the Glynn random-phase Monte Carlo estimator
with reproducible index-addressed parallel sampling."""

from __future__ import annotations

import itertools
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Iterator

import numpy as np

from . import _kernels

DEFAULT_BATCH_SIZE = 1 << 16
NAIVE_MAX_N = 12
BBFG_MAX_N = 34

# Stream tags separating independent Philox streams under one base seed.
SAMPLE_STREAM = 0
BOOT_STREAM = 1


def stream_ids(point_index: int = 0) -> tuple[int, int]:
    """(sampling, bootstrap) stream tags for one pipeline point."""
    return (point_index << 8) | SAMPLE_STREAM, (point_index << 8) | BOOT_STREAM


class Method(Enum):
    EXACT_NAIVE = "exact-naive"
    EXACT_BBFG = "exact-bbfg"
    GLYNN_SAMPLED = "glynn-sampled"


@dataclass(frozen=True)
class PermanentEstimate:
    """Permanent value with standard errors; exact methods carry stderr 0."""

    mean: complex
    stderr_re: float
    stderr_im: float
    n_total: int
    method: Method


@dataclass(frozen=True)
class SampleBatch:
    """Glynn samples p^(m) for m in [first, last), reproducible from (seed, stream, range)."""

    values: np.ndarray
    seed: int
    first: int
    last: int


def as_complex_matrix(matrix) -> np.ndarray:
    """Validate and convert to a square, finite complex128 array."""
    m = np.ascontiguousarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError("matrix must be at least 1x1")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix entries must be finite")
    return m


def _split(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.ascontiguousarray(m.real), np.ascontiguousarray(m.imag)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 1 << 64:
        raise ValueError("seed must fit in 64 bits")
    return seed


def perm_naive(matrix) -> complex:
    """Permanent as the direct sum over all n! permutations (oracle, n <= 12)."""
    m = as_complex_matrix(matrix)
    n = m.shape[0]
    if n > NAIVE_MAX_N:
        raise ValueError(f"naive permanent is capped at n = {NAIVE_MAX_N} (n! growth), got {n}")
    rows = [[complex(v) for v in row] for row in m]
    total = 0j
    for perm in itertools.permutations(range(n)):
        prod = 1.0 + 0j
        for i, j in enumerate(perm):
            prod *= rows[i][j]
        total += prod
    return total


def perm_bbfg(matrix, *, max_n: int = BBFG_MAX_N, backend: str | None = None) -> complex:
    """Exact permanent via the Gray-code-ordered 2**(n-1)-term +/-1 expansion."""
    m = as_complex_matrix(matrix)
    n = m.shape[0]
    if n > max_n:
        raise ValueError(
            f"exact permanent is capped at n = {max_n} (2**(n-1) terms), got {n}; "
            "use the Glynn sampling estimator instead"
        )
    kern = _kernels.get_backend(backend)
    return kern.perm_bbfg(*_split(m))


def glynn_sample(matrix, seed: int, index: int, *,
                 stream: int = SAMPLE_STREAM, backend: str | None = None) -> complex:
    """One Glynn draw p^(m); depends only on (seed, stream, index)."""
    m = as_complex_matrix(matrix)
    kern = _kernels.get_backend(backend)
    p_re, p_im = kern.glynn_batch(*_split(m), _check_seed(seed), stream, int(index), 1)
    return complex(p_re[0], p_im[0])


def batch_ranges(n_total: int, batch_size: int = DEFAULT_BATCH_SIZE) -> list[tuple[int, int]]:
    """(start, count) pairs covering [0, n_total); fixed for a given n_total."""
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    return [(s, min(batch_size, n_total - s)) for s in range(0, n_total, batch_size)]


def ordered_map(fn: Callable, items: Iterable, workers: int) -> Iterator:
    """Map with a thread pool, yielding results in input order with bounded look-ahead."""
    if workers <= 1:
        for item in items:
            yield fn(item)
        return
    lookahead = 2 * workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = deque()
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= lookahead:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def iter_glynn_batches(matrix, n_total: int, seed: int, *,
                       stream: int = SAMPLE_STREAM, workers: int = 1,
                       batch_size: int = DEFAULT_BATCH_SIZE,
                       backend: str | None = None) -> Iterator[SampleBatch]:
    """Stream Glynn sample batches in index order.

    Samples are addressed by index, and batch boundaries depend only on
    (n_total, batch_size), so the stream is identical for any worker count.
    """
    m = as_complex_matrix(matrix)
    m_re, m_im = _split(m)
    seed = _check_seed(seed)
    kern = _kernels.get_backend(backend)

    def run(rng: tuple[int, int]) -> SampleBatch:
        start, count = rng
        p_re, p_im = kern.glynn_batch(m_re, m_im, seed, stream, start, count)
        return SampleBatch(values=p_re + 1j * p_im, seed=seed, first=start, last=start + count)

    yield from ordered_map(run, batch_ranges(n_total, batch_size), workers)


def glynn_estimate(matrix, n_total: int, seed: int = 1, *,
                   stream: int = SAMPLE_STREAM, workers: int = 1,
                   batch_size: int = DEFAULT_BATCH_SIZE, backend: str | None = None,
                   consumer: Callable[[SampleBatch], None] | None = None) -> PermanentEstimate:
    """Plain sample mean over n_total Glynn draws.

    The stderr fields are zero here; error bars come from the blocking and
    bootstrap machinery in `stats`.  An optional `consumer` sees every batch
    in index order (used to feed block sums and histograms in one pass).
    """
    total = 0j
    for batch in iter_glynn_batches(matrix, n_total, seed, stream=stream, workers=workers,
                                    batch_size=batch_size, backend=backend):
        total += batch.values.sum()
        if consumer is not None:
            consumer(batch)
    return PermanentEstimate(mean=total / n_total, stderr_re=0.0, stderr_im=0.0,
                             n_total=n_total, method=Method.GLYNN_SAMPLED)
