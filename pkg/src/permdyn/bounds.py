"""Entropy-like lower-bound quantities from shared-randomness sampling.

Each random vector r yields, besides the Glynn sample p, the nonnegative
chain q1 = prod|v_i|, q2 = (mean|v_i|)**n, q3 = (rms|v_i|)**n with
v = M r, satisfying Re p <= q1 <= q2 <= q3 (and q3 <= 1 when ||M||_2 <= 1).
The bound entropies are S2' = -ln E[q1] >= S2'' = -ln E[q2] >= S2''' = -ln E[q3].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from .permanent import (
    BOOT_STREAM,
    DEFAULT_BATCH_SIZE,
    Method,
    PermanentEstimate,
    as_complex_matrix,
    batch_ranges,
    ordered_map,
)
from .stats import (
    DEFAULT_N_BLOCK,
    DEFAULT_N_BOOT,
    BlockAccumulator,
    BlockSummary,
    BootstrapResult,
    bootstrap,
)


@dataclass(frozen=True)
class BoundBatch:
    """Shared-randomness samples for indices [first, last)."""

    p: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    seed: int
    first: int
    last: int


@dataclass(frozen=True)
class BoundValue:
    value: float
    stderr: float
    finite: bool = True


@dataclass(frozen=True)
class BoundEstimates:
    """S2' >= S2'' >= S2''' with blocking/bootstrap error bars."""

    s2p: BoundValue
    s2pp: BoundValue
    s2ppp: BoundValue


@dataclass(frozen=True)
class BoundRun:
    """Combined shared-seed run: the bound chain plus the Glynn estimate."""

    bounds: BoundEstimates
    permanent: PermanentEstimate
    permanent_summary: BlockSummary
    permanent_bootstrap: BootstrapResult


def bound_samples(matrix, seed: int, index: int, *,
                  stream: int = 0, backend: str | None = None) -> tuple[complex, float, float, float]:
    """(p, q1, q2, q3) for a single sample index (same RNG keying as glynn_sample)."""
    m = as_complex_matrix(matrix)
    kern = _kernels.get_backend(backend)
    p_re, p_im, q1, q2, q3 = kern.bound_batch(
        np.ascontiguousarray(m.real), np.ascontiguousarray(m.imag),
        int(seed), stream, int(index), 1)
    return complex(p_re[0], p_im[0]), float(q1[0]), float(q2[0]), float(q3[0])


def iter_bound_batches(matrix, n_total: int, seed: int, *,
                       stream: int = 0, workers: int = 1,
                       batch_size: int = DEFAULT_BATCH_SIZE,
                       backend: str | None = None) -> Iterator[BoundBatch]:
    """Stream (p, q1, q2, q3) batches in index order; one pass, shared vectors."""
    m = as_complex_matrix(matrix)
    m_re = np.ascontiguousarray(m.real)
    m_im = np.ascontiguousarray(m.imag)
    seed = int(seed)
    kern = _kernels.get_backend(backend)

    def run(rng):
        start, count = rng
        p_re, p_im, q1, q2, q3 = kern.bound_batch(m_re, m_im, seed, stream, start, count)
        return BoundBatch(p=p_re + 1j * p_im, q1=q1, q2=q2, q3=q3,
                          seed=seed, first=start, last=start + count)

    yield from ordered_map(run, batch_ranges(n_total, batch_size), workers)


def _bound_value(summary: BlockSummary, boot: BootstrapResult) -> BoundValue:
    mean = summary.grand_mean.real
    if mean == 0.0:
        return BoundValue(value=math.inf, stderr=math.inf, finite=False)
    sigma = boot.stderr_re
    ratio = sigma / mean
    err = ratio if ratio < 1e-3 else abs(math.log(mean + sigma) - math.log(mean))
    return BoundValue(value=-math.log(mean), stderr=err)


def bound_run(matrix, n_total: int, seed: int = 1, *,
              sample_stream: int = 0, boot_stream: int = BOOT_STREAM,
              n_block: int = DEFAULT_N_BLOCK, n_boot: int = DEFAULT_N_BOOT,
              workers: int = 1, batch_size: int = DEFAULT_BATCH_SIZE,
              backend: str | None = None, consumer=None) -> BoundRun:
    """One shared-seed pass producing the bound chain and the Glynn estimate.

    The per-sample chain makes the bound ordering exact on sample means; the
    q means are nonnegative by construction.
    """
    accs = {name: BlockAccumulator(n_total, n_block) for name in ("p", "q1", "q2", "q3")}
    for batch in iter_bound_batches(matrix, n_total, seed, stream=sample_stream,
                                    workers=workers, batch_size=batch_size, backend=backend):
        accs["p"].add(batch.p)
        accs["q1"].add(batch.q1)
        accs["q2"].add(batch.q2)
        accs["q3"].add(batch.q3)
        if consumer is not None:
            consumer(batch)
    summaries = {name: acc.finalize() for name, acc in accs.items()}
    # distinct bootstrap stream per quantity, all independent of the samples
    boots = {name: bootstrap(summaries[name], n_boot, seed, stream=boot_stream + 16 * i)
             for i, name in enumerate(summaries)}
    p_summary = summaries["p"]
    p_boot = boots["p"]
    perm = PermanentEstimate(
        mean=p_summary.grand_mean,
        stderr_re=p_boot.stderr_re,
        stderr_im=p_boot.stderr_im,
        n_total=p_summary.n_total,
        method=Method.GLYNN_SAMPLED,
    )
    bounds = BoundEstimates(
        s2p=_bound_value(summaries["q1"], boots["q1"]),
        s2pp=_bound_value(summaries["q2"], boots["q2"]),
        s2ppp=_bound_value(summaries["q3"], boots["q3"]),
    )
    return BoundRun(bounds=bounds, permanent=perm,
                    permanent_summary=p_summary, permanent_bootstrap=p_boot)


def bound_entropies(matrix, n_total: int, seed: int = 1, **kwargs) -> BoundEstimates:
    """S2', S2'', S2''' with error bars (see bound_run for the full result)."""
    return bound_run(matrix, n_total, seed, **kwargs).bounds
