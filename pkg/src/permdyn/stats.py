"""Blocking + bootstrap error analysis for Glynn sample streams, error
propagation into the entropy, sample-sign histograms, and the error-scaling
law fit."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.random import Generator, Philox

from .permanent import (
    BOOT_STREAM,
    DEFAULT_BATCH_SIZE,
    Method,
    PermanentEstimate,
    SampleBatch,
    iter_glynn_batches,
)

DEFAULT_N_BLOCK = 1 << 10
DEFAULT_N_BOOT = 1 << 12
MAX_TRUNCATION_FRACTION = 0.01
SMALL_ERROR_RATIO = 1e-3
_BOOT_CHUNK = 512


class ZeroPermanentError(ValueError):
    """Re(perm) estimate <= 0: consistent with a vanishing permanent."""

    def __init__(self, estimate: PermanentEstimate):
        self.estimate = estimate
        super().__init__(
            "permanent estimate consistent with zero; increase n_total "
            f"(mean {estimate.mean}, stderr_re {estimate.stderr_re})"
        )


@dataclass(frozen=True)
class BlockSummary:
    """Per-block means of an ordered sample stream.

    n_total counts the samples actually used (n_block * n_blocksize); a
    trailing remainder below 1% of the stream may be truncated and is
    recorded in n_truncated.
    """

    block_means: np.ndarray
    n_blocksize: int
    n_total: int
    n_truncated: int = 0

    @property
    def n_block(self) -> int:
        return len(self.block_means)

    @property
    def grand_mean(self) -> complex:
        return complex(self.block_means.mean())


@dataclass(frozen=True)
class BootstrapResult:
    """Bootstrap over block means; `mean` is the grand mean of the blocks
    (the bootstrap mean of the resamples agrees in expectation)."""

    resample_means: np.ndarray
    mean: complex
    stderr_re: float
    stderr_im: float

    @property
    def bootstrap_mean(self) -> complex:
        return complex(self.resample_means.mean())


@dataclass(frozen=True)
class EntropyPoint:
    t: float
    s2: float
    sigma_s2: float
    perm_re: float
    perm_im: float
    sigma_perm_re: float
    sigma_perm_im: float
    n_total: int
    ns: int
    status: str = "ok"


@dataclass(frozen=True)
class ImagReport:
    ratio: float
    anomalous: bool


@dataclass(frozen=True)
class Histogram:
    centers: np.ndarray
    density: np.ndarray
    count: int


@dataclass(frozen=True)
class HistogramPair:
    """Histograms of x = -ln(+part) and x = -ln(-part) over one sample stream.

    Densities are normalized by the full stream size, so the areas of the
    two histograms compare the positive/negative sample weights directly.
    """

    part: str
    bin_width: float
    positive: Histogram
    negative: Histogram
    n_zero: int
    n_samples: int


class BlockAccumulator:
    """Accumulates block sums from an ordered stream of sample arrays."""

    def __init__(self, n_total: int, n_block: int = DEFAULT_N_BLOCK):
        if n_block < 1:
            raise ValueError("n_block must be >= 1")
        if n_block > n_total:
            raise ValueError(f"n_block = {n_block} exceeds n_total = {n_total}")
        blocksize = n_total // n_block
        used = blocksize * n_block
        truncated = n_total - used
        if truncated > MAX_TRUNCATION_FRACTION * n_total:
            raise ValueError(
                f"blocking would truncate {truncated} of {n_total} samples (>= 1%); "
                "choose n_total divisible by n_block"
            )
        self.n_blocksize = blocksize
        self.n_used = used
        self.n_truncated = truncated
        self._sums = np.zeros(n_block, dtype=np.complex128)
        self._pos = 0

    def add(self, values: np.ndarray) -> None:
        v = np.asarray(values)
        pos = self._pos
        self._pos += len(v)
        if pos >= self.n_used:
            return
        v = v[: self.n_used - pos]
        bs = self.n_blocksize
        offset = 0
        # partial head block up to the next boundary
        head = -pos % bs
        if head:
            take = min(head, len(v))
            self._sums[pos // bs] += v[:take].sum()
            offset += take
            pos += take
        n_full = (len(v) - offset) // bs
        if n_full:
            chunk = v[offset : offset + n_full * bs].reshape(n_full, bs)
            self._sums[pos // bs : pos // bs + n_full] += chunk.sum(axis=1)
            offset += n_full * bs
            pos += n_full * bs
        if offset < len(v):
            self._sums[pos // bs] += v[offset:].sum()

    def finalize(self) -> BlockSummary:
        if self._pos < self.n_used + self.n_truncated:
            raise ValueError(
                f"stream ended after {self._pos} samples, expected {self.n_used + self.n_truncated}"
            )
        return BlockSummary(
            block_means=self._sums / self.n_blocksize,
            n_blocksize=self.n_blocksize,
            n_total=self.n_used,
            n_truncated=self.n_truncated,
        )


def block_means(samples, n_block: int, n_total: int | None = None) -> BlockSummary:
    """BlockSummary from an array or an ordered iterable of sample arrays."""
    if isinstance(samples, np.ndarray):
        acc = BlockAccumulator(len(samples), n_block)
        acc.add(samples)
        return acc.finalize()
    if n_total is None:
        raise ValueError("n_total is required when blocking a stream")
    acc = BlockAccumulator(n_total, n_block)
    for chunk in samples:
        acc.add(chunk.values if isinstance(chunk, SampleBatch) else chunk)
    return acc.finalize()


def bootstrap(summary: BlockSummary, n_boot: int = DEFAULT_N_BOOT, seed: int = 1, *,
              stream: int = BOOT_STREAM) -> BootstrapResult:
    """Resample the block means with replacement n_boot times.

    The resampling RNG is keyed on its own stream, independent of the sample
    stream.  stderr_re/im are the standard deviations of the real/imaginary
    parts of the resample means.
    """
    if n_boot < 2:
        raise ValueError("n_boot must be >= 2")
    bm = summary.block_means
    nb = len(bm)
    rng = Generator(Philox(key=int(seed) | (int(stream) << 64)))
    means = np.empty(n_boot, dtype=np.complex128)
    for lo in range(0, n_boot, _BOOT_CHUNK):
        hi = min(lo + _BOOT_CHUNK, n_boot)
        idx = rng.integers(0, nb, size=(hi - lo, nb))
        means[lo:hi] = bm[idx].mean(axis=1)
    return BootstrapResult(
        resample_means=means,
        mean=summary.grand_mean,
        stderr_re=float(means.real.std(ddof=1)),
        stderr_im=float(means.imag.std(ddof=1)),
    )


def sampled_permanent(matrix, n_total: int, seed: int = 1, *,
                      n_block: int = DEFAULT_N_BLOCK, n_boot: int = DEFAULT_N_BOOT,
                      sample_stream: int = 0, boot_stream: int = BOOT_STREAM,
                      workers: int = 1, batch_size: int = DEFAULT_BATCH_SIZE,
                      backend: str | None = None,
                      consumer=None) -> tuple[PermanentEstimate, BlockSummary, BootstrapResult]:
    """Glynn estimate with blocking + bootstrap error bars in one pass."""
    acc = BlockAccumulator(n_total, n_block)
    for batch in iter_glynn_batches(matrix, n_total, seed, stream=sample_stream,
                                    workers=workers, batch_size=batch_size, backend=backend):
        acc.add(batch.values)
        if consumer is not None:
            consumer(batch)
    summary = acc.finalize()
    boot = bootstrap(summary, n_boot, seed, stream=boot_stream)
    est = PermanentEstimate(
        mean=summary.grand_mean,
        stderr_re=boot.stderr_re,
        stderr_im=boot.stderr_im,
        n_total=summary.n_total,
        method=Method.GLYNN_SAMPLED,
    )
    return est, summary, boot


def entropy_from_permanent(est: PermanentEstimate, t: float, ns: int) -> EntropyPoint:
    """S2 = -ln Re(perm) with the error bar propagated from the real part.

    sigma_S2 = |ln(p + sigma) - ln p|, simplified to sigma/p when
    sigma/p < 1e-3.  Raises ZeroPermanentError for Re(perm) <= 0; a point
    whose error bar reaches zero is flagged (status 'warn-sigma').
    """
    p = est.mean.real
    if p <= 0:
        raise ZeroPermanentError(est)
    ratio = est.stderr_re / p
    sigma = ratio if ratio < SMALL_ERROR_RATIO else abs(math.log(p + est.stderr_re) - math.log(p))
    status = "ok" if p - est.stderr_re > 0 else "warn-sigma"
    return EntropyPoint(
        t=float(t),
        s2=-math.log(p) + 0.0,  # + 0.0 canonicalizes -0.0
        sigma_s2=sigma,
        perm_re=p,
        perm_im=est.mean.imag,
        sigma_perm_re=est.stderr_re,
        sigma_perm_im=est.stderr_im,
        n_total=est.n_total,
        ns=int(ns),
        status=status,
    )


def imag_consistency(est: PermanentEstimate, matrix_size: int | None = None) -> ImagReport:
    """|Im(perm)| / stderr_im; ratios above 3 are anomalous.

    With `matrix_size` given, stderr_im is floored at n * eps * |mean|: the
    n-factor sample product carries a deterministic rounding offset of that
    order, so for a (nearly) zero-variance estimate the raw ratio compares
    two roundoff artifacts and stops being a statistical statement.
    """
    im = est.mean.imag
    sigma = est.stderr_im
    if matrix_size is not None:
        sigma = max(sigma, matrix_size * np.finfo(float).eps * abs(est.mean))
    if sigma == 0.0:
        ratio = 0.0 if im == 0.0 else math.inf
    else:
        ratio = abs(im) / sigma
    return ImagReport(ratio=ratio, anomalous=ratio > 3.0)


class SignHistogramAccumulator:
    """Streaming histogram of x = -ln(+-part(p)) with globally aligned bins."""

    def __init__(self, part: str = "re", bin_width: float = 0.25):
        if part not in ("re", "im"):
            raise ValueError(f"part must be 're' or 'im', got {part!r}")
        if bin_width <= 0:
            raise ValueError("bin_width must be positive")
        self.part = part
        self.bin_width = float(bin_width)
        self._pos: Counter = Counter()
        self._neg: Counter = Counter()
        self.n_pos = 0
        self.n_neg = 0
        self.n_zero = 0

    def add(self, values: np.ndarray) -> None:
        v = np.asarray(values)
        x = v.real if self.part == "re" else v.imag
        self.n_zero += int(np.count_nonzero(x == 0.0))
        for counter, data in ((self._pos, x[x > 0]), (self._neg, -x[x < 0])):
            if len(data) == 0:
                continue
            bins = np.floor(-np.log(data) / self.bin_width).astype(np.int64)
            uniq, cnt = np.unique(bins, return_counts=True)
            counter.update(dict(zip(uniq.tolist(), cnt.tolist())))
        self.n_pos = sum(self._pos.values())
        self.n_neg = sum(self._neg.values())

    def _one(self, counter: Counter, n_samples: int) -> Histogram:
        if not counter:
            return Histogram(centers=np.empty(0), density=np.empty(0), count=0)
        idx = np.array(sorted(counter))
        counts = np.array([counter[i] for i in idx], dtype=float)
        centers = (idx + 0.5) * self.bin_width
        return Histogram(
            centers=centers,
            density=counts / (n_samples * self.bin_width),
            count=int(counts.sum()),
        )

    def result(self) -> HistogramPair:
        n_samples = self.n_pos + self.n_neg + self.n_zero
        if n_samples == 0:
            raise ValueError("no samples accumulated")
        return HistogramPair(
            part=self.part,
            bin_width=self.bin_width,
            positive=self._one(self._pos, n_samples),
            negative=self._one(self._neg, n_samples),
            n_zero=self.n_zero,
            n_samples=n_samples,
        )


def sign_histogram(samples: np.ndarray, part: str = "re", bin_width: float = 0.25) -> HistogramPair:
    """Histogram pair of x = -ln(+-part(p)) over a sample array."""
    acc = SignHistogramAccumulator(part, bin_width)
    acc.add(np.asarray(samples))
    return acc.result()


def write_histogram(hist: Histogram, path) -> None:
    """Two-column plain text dump: bin center, probability density."""
    with open(path, "w", newline="\n") as fh:
        for c, d in zip(hist.centers, hist.density):
            fh.write(f"{c:.17g} {d:.17g}\n")


@dataclass(frozen=True)
class ScalingFit:
    """Fit of log2 c(Ns) = alpha * Ns - beta over the per-size error constants."""

    alpha: float
    beta: float
    alpha_err: float
    beta_err: float
    points: list = field(default_factory=list)  # (ns, c) pairs
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))


def fit_error_constant(n_totals: Sequence[float], sigmas: Sequence[float]) -> float:
    """c from least squares of log sigma vs log N_total with the slope fixed at -1/2.

    sigma(N) = sqrt(c / N)  =>  log c = mean(2 log sigma + log N).
    """
    n = np.asarray(n_totals, dtype=float)
    s = np.asarray(sigmas, dtype=float)
    if len(n) < 3:
        raise ValueError("need at least 3 (n_total, sigma) pairs per size")
    if np.any(s <= 0) or np.any(n <= 0):
        raise ValueError("n_total and sigma values must be positive")
    return float(np.exp(np.mean(2.0 * np.log(s) + np.log(n))))


def loglog_slope(n_totals: Sequence[float], sigmas: Sequence[float]) -> tuple[float, float]:
    """OLS slope of log sigma vs log N_total with its standard error."""
    x = np.log(np.asarray(n_totals, dtype=float))
    y = np.log(np.asarray(sigmas, dtype=float))
    if len(x) < 3:
        raise ValueError("need at least 3 points for a slope")
    coef, cov = np.polyfit(x, y, 1, cov=True)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def scaling_fit(points: Iterable[tuple[int, Sequence[tuple[float, float]]]]) -> ScalingFit:
    """Fit the error-scaling exponents from per-size (n_total, sigma) grids.

    `points` yields (ns, [(n_total, sigma), ...]); each size needs >= 3 pairs
    and the line fit needs >= 3 sizes.
    """
    sizes = []
    cs = []
    for ns, grid in points:
        grid = list(grid)
        c = fit_error_constant([g[0] for g in grid], [g[1] for g in grid])
        sizes.append(int(ns))
        cs.append(c)
    if len(sizes) < 3:
        raise ValueError("need at least 3 sizes for the exponent fit")
    x = np.asarray(sizes, dtype=float)
    y = np.log2(np.asarray(cs))
    coef, cov = np.polyfit(x, y, 1, cov=True)
    alpha, intercept = float(coef[0]), float(coef[1])
    beta = -intercept
    residuals = y - (alpha * x + intercept)
    return ScalingFit(
        alpha=alpha,
        beta=beta,
        alpha_err=float(np.sqrt(max(cov[0, 0], 0.0))),
        beta_err=float(np.sqrt(max(cov[1, 1], 0.0))),
        points=list(zip(sizes, cs)),
        residuals=residuals,
    )
