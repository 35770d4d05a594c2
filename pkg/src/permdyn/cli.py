"""Command-line orchestration: time sweeps, scaling experiments,
exact-vs-sampled comparisons, histograms, and raw permanents, with
deterministic CSV output and a JSON manifest per run."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .bounds import bound_run
from .lattice import (
    Dimension,
    LatticeSpec,
    build_hopping_matrix,
    cdw_pattern,
    diagonalize,
    subsystem_cut,
)
from .permanent import (
    BBFG_MAX_N,
    DEFAULT_BATCH_SIZE,
    Method,
    PermanentEstimate,
    as_complex_matrix,
    glynn_estimate,
    perm_bbfg,
    stream_ids,
)
from .quench import assemble_a, correlation_z, propagator
from .stats import (
    DEFAULT_N_BLOCK,
    DEFAULT_N_BOOT,
    BlockAccumulator,
    EntropyPoint,
    SignHistogramAccumulator,
    ZeroPermanentError,
    bootstrap,
    entropy_from_permanent,
    loglog_slope,
    sampled_permanent,
    scaling_fit,
    write_histogram,
)

DYNAMICS_HEADER = ("t,s2,sigma_s2,s2_density,sigma_s2_density,perm_re,perm_im,"
                   "sigma_perm_re,sigma_perm_im,n_total,ns,status")
COMPARE_HEADER = "t,s2_exact,s2_sampled,sigma_s2,diff,pull,ns,n_total,status"
BOUNDS_HEADER = "t,s2p,sigma_s2p,s2pp,sigma_s2pp,s2ppp,sigma_s2ppp,ns,n_total,status"
SCALING_HEADER = "ns,lx,ly,t,n_total,replicate,seed,s2,sigma_s2,sigma_s2_density,status"


@dataclass
class RunConfig:
    """Resolved run parameters shared by the pipeline subcommands."""

    dimension: int = 1
    lx: int = 4
    ly: int = 1
    j: float = 1.0
    t_start: float = 0.0
    t_end: float = 1.0
    t_points: int = 2
    n_total: "int | str" = "auto"
    n_block: int = DEFAULT_N_BLOCK
    n_boot: int = DEFAULT_N_BOOT
    seed: int = 1
    workers: int = 0  # 0 = all cores
    batch_size: int = DEFAULT_BATCH_SIZE
    exact: bool = False
    bounds: bool = False
    out: str = "."

    def __post_init__(self):
        if self.t_points < 1:
            raise ValueError("t_points must be >= 1")
        if self.t_end < self.t_start:
            raise ValueError("t_end must be >= t_start")
        for name in ("n_block", "n_boot", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if isinstance(self.n_total, str) and self.n_total != "auto":
            self.n_total = parse_count(self.n_total)
        if isinstance(self.n_total, int) and self.n_total < 1:
            raise ValueError("n_total must be positive")

    @property
    def lattice(self) -> LatticeSpec:
        return LatticeSpec(dimension=Dimension(self.dimension), lx=self.lx, ly=self.ly, j=self.j)

    @property
    def ns(self) -> int:
        return self.lattice.ns

    def resolved_n_total(self) -> int:
        return auto_n_total(self.ns) if self.n_total == "auto" else int(self.n_total)

    def resolved_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def time_grid(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.t_points)


def auto_n_total(ns: int) -> int:
    """2**(0.2*ns + 12) rounded up to a power of two (exact when 5 | ns)."""
    e_num = ns + 60  # exponent = (ns + 60) / 5
    k = e_num // 5 + (1 if e_num % 5 else 0)
    return 1 << k


def parse_count(text: str) -> int:
    """Integer count, accepting the 2^k shorthand."""
    text = text.strip()
    if "^" in text:
        base, _, exp = text.partition("^")
        return int(base) ** int(exp)
    return int(text)


def fmt(x) -> str:
    """Float/int cell with 17 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(fmt(c) if not isinstance(c, str) else c for c in row) + "\n")


def write_manifest(path: Path, manifest: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def base_manifest(command: str, config: RunConfig) -> dict:
    return {
        "command": command,
        "package": {"name": "permdyn", "version": __version__},
        "backend": _kernels.backend_name(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "config": {**asdict(config),
                   "n_total_resolved": config.resolved_n_total(),
                   "workers_resolved": config.resolved_workers()},
        "rng": {
            "algorithm": "philox4x64-10",
            "key": "(seed, stream); stream = (point_index << 8) | purpose, purpose 0=samples 1=bootstrap",
            "words_per_sample": "4 * ceil(n/4), first n words become phases",
            "batch_size": config.batch_size,
        },
        "warnings": [],
    }


def _entropy_row(point: EntropyPoint):
    return (point.t, point.s2, point.sigma_s2, point.s2 / point.ns, point.sigma_s2 / point.ns,
            point.perm_re, point.perm_im, point.sigma_perm_re, point.sigma_perm_im,
            point.n_total, point.ns, point.status)


def _failed_row(t, est: PermanentEstimate, ns: int):
    nan = float("nan")
    return (t, nan, nan, nan, nan, est.mean.real, est.mean.imag,
            est.stderr_re, est.stderr_im, est.n_total, ns, "failed")


def exact_estimate(a: np.ndarray) -> PermanentEstimate:
    return PermanentEstimate(mean=perm_bbfg(a), stderr_re=0.0, stderr_im=0.0,
                             n_total=0, method=Method.EXACT_BBFG)


def _pipeline_matrices(config: RunConfig):
    spec = config.lattice
    spectral = diagonalize(build_hopping_matrix(spec))
    rich = cdw_pattern(spec)
    cut = subsystem_cut(spec)

    def a_of_t(t: float) -> np.ndarray:
        return assemble_a(correlation_z(propagator(spectral, t), rich, cut))

    return spec, a_of_t


def run_dynamics(config: RunConfig):
    """Entropy dynamics over the time grid; writes dynamics.csv (+ bounds.csv)
    and manifest.json into config.out.  Returns (rows, paths)."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    spec, a_of_t = _pipeline_matrices(config)
    ns = spec.ns
    n_total = config.resolved_n_total()
    workers = config.resolved_workers()
    use_exact = config.exact and ns <= BBFG_MAX_N

    manifest = base_manifest("dynamics", config)
    if config.exact and not use_exact:
        manifest["warnings"].append(
            f"exact requested but ns = {ns} exceeds the cap {BBFG_MAX_N}; sampling instead")
    if use_exact and config.bounds:
        manifest["warnings"].append("bounds are sampling-based and were skipped on the exact path")
    rows = []
    bound_rows = []
    for i, t in enumerate(config.time_grid()):
        t0 = time.perf_counter()
        sample_stream, boot_stream = stream_ids(i)
        record = {"index": i, "t": float(t), "stream_sample": sample_stream,
                  "stream_boot": boot_stream}
        a = a_of_t(t)
        if use_exact:
            est = exact_estimate(a)
            record["method"] = est.method.value
        elif config.bounds:
            run = bound_run(a, n_total, config.seed, sample_stream=sample_stream,
                            boot_stream=boot_stream, n_block=config.n_block,
                            n_boot=config.n_boot, workers=workers,
                            batch_size=config.batch_size)
            est = run.permanent
            b = run.bounds
            bstatus = "ok" if all(v.finite for v in (b.s2p, b.s2pp, b.s2ppp)) else "infinite"
            bound_rows.append((float(t), b.s2p.value, b.s2p.stderr, b.s2pp.value, b.s2pp.stderr,
                               b.s2ppp.value, b.s2ppp.stderr, ns, n_total, bstatus))
            record["method"] = est.method.value
            record["truncated"] = run.permanent_summary.n_truncated
            record["bootstrap_mean_re"] = run.permanent_bootstrap.bootstrap_mean.real
        else:
            est, summary, boot = sampled_permanent(
                a, n_total, config.seed, n_block=config.n_block, n_boot=config.n_boot,
                sample_stream=sample_stream, boot_stream=boot_stream,
                workers=workers, batch_size=config.batch_size)
            record["method"] = est.method.value
            record["truncated"] = summary.n_truncated
            record["bootstrap_mean_re"] = boot.bootstrap_mean.real
        try:
            point = entropy_from_permanent(est, t, ns)
            rows.append(_entropy_row(point))
            record["status"] = point.status
        except ZeroPermanentError:
            rows.append(_failed_row(float(t), est, ns))
            record["status"] = "failed"
        record["seconds"] = time.perf_counter() - t0
        manifest.setdefault("points", []).append(record)

    paths = {"csv": out / "dynamics.csv", "manifest": out / "manifest.json"}
    write_csv(paths["csv"], DYNAMICS_HEADER, rows)
    if bound_rows:
        paths["bounds"] = out / "bounds.csv"
        write_csv(paths["bounds"], BOUNDS_HEADER, bound_rows)
    write_manifest(paths["manifest"], manifest)
    return rows, paths


def identity_selftest(n: int = 4, n_total: int = 1024, seed: int = 1) -> dict:
    """Exact and sampled permanent of the identity matrix (both must be 1)."""
    eye = np.eye(n, dtype=complex)
    exact = perm_bbfg(eye)
    sampled = glynn_estimate(eye, n_total, seed).mean
    return {
        "n": n,
        "exact_re": exact.real,
        "sampled_re": sampled.real,
        "max_error": max(abs(exact - 1.0), abs(sampled - 1.0)),
    }


def run_compare(config: RunConfig):
    """Exact vs sampled S2 over the time grid; writes compare.csv + manifest."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    spec, a_of_t = _pipeline_matrices(config)
    ns = spec.ns
    if ns > BBFG_MAX_N:
        raise ValueError(f"compare needs ns <= {BBFG_MAX_N} for the exact path, got {ns}")
    n_total = config.resolved_n_total()
    workers = config.resolved_workers()

    manifest = base_manifest("compare", config)
    manifest["identity_selftest"] = identity_selftest(seed=config.seed)
    rows = []
    for i, t in enumerate(config.time_grid()):
        t0 = time.perf_counter()
        sample_stream, boot_stream = stream_ids(i)
        a = a_of_t(t)
        exact_pt = entropy_from_permanent(exact_estimate(a), t, ns)
        est, summary, _ = sampled_permanent(
            a, n_total, config.seed, n_block=config.n_block, n_boot=config.n_boot,
            sample_stream=sample_stream, boot_stream=boot_stream,
            workers=workers, batch_size=config.batch_size)
        record = {"index": i, "t": float(t), "stream_sample": sample_stream,
                  "stream_boot": boot_stream, "truncated": summary.n_truncated}
        try:
            pt = entropy_from_permanent(est, t, ns)
            diff = pt.s2 - exact_pt.s2
            pull = diff / pt.sigma_s2 if pt.sigma_s2 > 0 else (0.0 if diff == 0 else math.inf)
            rows.append((float(t), exact_pt.s2, pt.s2, pt.sigma_s2, diff, pull,
                         ns, n_total, pt.status))
            record["status"] = pt.status
        except ZeroPermanentError:
            nan = float("nan")
            rows.append((float(t), exact_pt.s2, nan, nan, nan, nan, ns, n_total, "failed"))
            record["status"] = "failed"
        record["seconds"] = time.perf_counter() - t0
        manifest.setdefault("points", []).append(record)

    paths = {"csv": out / "compare.csv", "manifest": out / "manifest.json"}
    write_csv(paths["csv"], COMPARE_HEADER, rows)
    write_manifest(paths["manifest"], manifest)
    return rows, paths


def _hist_filename(ns: int, t: float, part: str, sign: str) -> str:
    return f"hist_ns{ns}_t{t:.6g}_{part}_{sign}.dat"


def run_histograms(config: RunConfig, times) -> dict:
    """Sample-distribution histograms of -ln(+-Re p) and -ln(+-Im p) at the
    requested times, plus the bootstrap-resample histogram; one file per
    part/sign, two columns (bin center, density)."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    spec, a_of_t = _pipeline_matrices(config)
    ns = spec.ns
    n_total = config.resolved_n_total()
    workers = config.resolved_workers()

    manifest = base_manifest("hist", config)
    manifest["times"] = [float(t) for t in times]
    paths = {}
    for i, t in enumerate(times):
        sample_stream, boot_stream = stream_ids(i)
        a = a_of_t(t)
        hists = {"re": SignHistogramAccumulator("re"), "im": SignHistogramAccumulator("im")}
        acc = BlockAccumulator(n_total, config.n_block)

        def consume(batch):
            hists["re"].add(batch.values)
            hists["im"].add(batch.values)
            acc.add(batch.values)

        glynn_estimate(a, n_total, config.seed, stream=sample_stream, workers=workers,
                       batch_size=config.batch_size, consumer=consume)
        summary = acc.finalize()
        boot = bootstrap(summary, config.n_boot, config.seed, stream=boot_stream)
        record = {"t": float(t), "stream_sample": sample_stream, "stream_boot": boot_stream}
        for part, h in hists.items():
            pair = h.result()
            for sign, hist in (("pos", pair.positive), ("neg", pair.negative)):
                name = _hist_filename(ns, t, part, sign)
                write_histogram(hist, out / name)
                paths[name] = out / name
            record[f"{part}_n_pos"] = pair.positive.count
            record[f"{part}_n_neg"] = pair.negative.count
            record[f"{part}_n_zero"] = pair.n_zero
        # bootstrap resample distribution (should look normal)
        counts, edges = np.histogram(boot.resample_means.real, bins=64, density=True)
        name = _hist_filename(ns, t, "boot", "re")
        with open(out / name, "w", newline="\n") as fh:
            for c, d in zip(0.5 * (edges[:-1] + edges[1:]), counts):
                fh.write(f"{c:.17g} {d:.17g}\n")
        paths[name] = out / name
        manifest.setdefault("points", []).append(record)

    manifest_path = out / "manifest.json"
    write_manifest(manifest_path, manifest)
    paths["manifest"] = manifest_path
    return paths


def _parse_sizes(text: str, dimension: int):
    """Size list: '16,20,24' in 1D or '4x4,6x4' in 2D."""
    sizes = []
    for token in text.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if "x" in token:
            lx, _, ly = token.partition("x")
            sizes.append((int(lx), int(ly)))
        elif dimension == 2:
            raise ValueError(f"2D sizes must be LXxLY, got {token!r}")
        else:
            sizes.append((int(token), 1))
    return sizes


def run_scaling(config: RunConfig, sizes, n_total_grid, replicates: int,
                synthetic: "tuple[float, float] | None" = None):
    """Error-scaling experiment: per (size, n_total, replicate) measure
    sigma_{S2/Ns} at t = 2*Ns (1D) or 2*Lx (2D), extract c(Ns), fit
    log2 c = alpha*Ns - beta.  Writes scaling.csv, scaling_fit.json, manifest.

    With `synthetic` = (alpha, beta), sigmas are generated from the exact law
    instead of being sampled (fit-machinery self-test)."""
    if len(sizes) < 3:
        raise ValueError("need at least 3 sizes")
    if len(n_total_grid) < 3:
        raise ValueError("need at least 3 n_total values")
    if replicates < 8 and synthetic is None:
        raise ValueError("need at least 8 replicates")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    manifest = base_manifest("scaling", config)
    manifest["sizes"] = [list(s) for s in sizes]
    manifest["n_total_grid"] = [int(n) for n in n_total_grid]
    manifest["replicates"] = replicates
    manifest["synthetic"] = list(synthetic) if synthetic else None

    rows = []
    sigma_table = {}  # (ns, n_total) -> list of sigma_{S2/Ns}
    run_counter = 0
    for lx, ly in sizes:
        spec = LatticeSpec(dimension=Dimension(config.dimension), lx=lx, ly=ly, j=config.j)
        ns = spec.ns
        t = 2.0 * ns if config.dimension == 1 else 2.0 * lx
        if synthetic is None:
            spectral = diagonalize(build_hopping_matrix(spec))
            a = assemble_a(correlation_z(propagator(spectral, t),
                                         cdw_pattern(spec), subsystem_cut(spec)))
        for n_total in n_total_grid:
            for rep in range(replicates):
                seed = config.seed + run_counter
                run_counter += 1
                if synthetic is not None:
                    alpha, beta = synthetic
                    sigma_density = math.sqrt(2.0 ** (alpha * ns - beta) / n_total)
                    rows.append((ns, lx, ly, t, n_total, rep, seed,
                                 float("nan"), sigma_density * ns, sigma_density, "synthetic"))
                    sigma_table.setdefault((ns, n_total), []).append(sigma_density)
                    continue
                est, _, _ = sampled_permanent(
                    a, int(n_total), seed, n_block=config.n_block, n_boot=config.n_boot,
                    workers=config.resolved_workers(), batch_size=config.batch_size)
                try:
                    pt = entropy_from_permanent(est, t, ns)
                    rows.append((ns, lx, ly, t, n_total, rep, seed,
                                 pt.s2, pt.sigma_s2, pt.sigma_s2 / ns, pt.status))
                    sigma_table.setdefault((ns, n_total), []).append(pt.sigma_s2 / ns)
                except ZeroPermanentError:
                    nan = float("nan")
                    rows.append((ns, lx, ly, t, n_total, rep, seed, nan, nan, nan, "failed"))

    # per-size c from the replicate-averaged sigmas, then the exponent fit
    fit_points = []
    slopes = {}
    for lx, ly in sizes:
        ns = lx * ly
        grid = [(float(n), float(np.mean(sigma_table[(ns, n)])))
                for n in n_total_grid if (ns, n) in sigma_table]
        fit_points.append((ns, grid))
        slope, slope_err = loglog_slope([g[0] for g in grid], [g[1] for g in grid])
        slopes[ns] = (slope, slope_err)
    fit = scaling_fit(fit_points)

    paths = {"csv": out / "scaling.csv", "fit": out / "scaling_fit.json",
             "manifest": out / "manifest.json"}
    write_csv(paths["csv"], SCALING_HEADER, rows)
    fit_payload = {
        "alpha": fit.alpha, "beta": fit.beta,
        "alpha_err": fit.alpha_err, "beta_err": fit.beta_err,
        "c": [{"ns": ns, "c": c} for ns, c in fit.points],
        "residuals_log2c": [float(r) for r in fit.residuals],
        "slopes_log_sigma_vs_log_n": {str(ns): {"slope": s, "err": e}
                                      for ns, (s, e) in slopes.items()},
    }
    with open(paths["fit"], "w", newline="\n") as fh:
        json.dump(fit_payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(paths["manifest"], manifest)
    return fit, rows, paths


def read_matrix_file(path) -> np.ndarray:
    """Matrix file: first line n, then n lines of n complex entries like 0.5-0.25j."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"empty matrix file {path}")
    n = int(lines[0])
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} matrix rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        entries = [complex(tok) for tok in ln.split()]
        if len(entries) != n:
            raise ValueError(f"expected {n} entries per row, got {len(entries)}")
        rows.append(entries)
    return as_complex_matrix(np.array(rows))


def write_matrix_file(path, matrix) -> None:
    m = as_complex_matrix(matrix)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{m.shape[0]}\n")
        for row in m:
            fh.write(" ".join(f"{v.real:.17g}{v.imag:+.17g}j" for v in row) + "\n")


def run_perm(path, *, exact: bool = False, n_total=None, seed: int = 1,
             workers: int = 1, n_block: int = DEFAULT_N_BLOCK,
             n_boot: int = DEFAULT_N_BOOT, batch_size: int = DEFAULT_BATCH_SIZE,
             out=None) -> PermanentEstimate:
    """Permanent of a matrix file, exact (BBFG) or Glynn-sampled with error bars."""
    out = out if out is not None else sys.stdout
    m = read_matrix_file(path)
    n = m.shape[0]
    if exact:
        est = PermanentEstimate(mean=perm_bbfg(m), stderr_re=0.0, stderr_im=0.0,
                                n_total=0, method=Method.EXACT_BBFG)
    else:
        resolved = auto_n_total(n) if n_total in (None, "auto") else int(n_total)
        est, _, _ = sampled_permanent(m, resolved, seed, n_block=min(n_block, resolved),
                                      n_boot=n_boot, workers=workers, batch_size=batch_size)
    print(f"# method={est.method.value} n={n} n_total={est.n_total}", file=out)
    print(f"perm_re = {fmt(est.mean.real)}", file=out)
    print(f"perm_im = {fmt(est.mean.imag)}", file=out)
    print(f"stderr_re = {fmt(est.stderr_re)}", file=out)
    print(f"stderr_im = {fmt(est.stderr_im)}", file=out)
    return est


def _add_lattice_args(p):
    p.add_argument("--dim", type=int, choices=(1, 2), default=1, help="lattice dimension")
    p.add_argument("--lx", type=int, required=True, help="sites along x")
    p.add_argument("--ly", type=int, default=1, help="sites along y (2D)")
    p.add_argument("--j", type=float, default=1.0, help="hopping energy")


def _add_sampling_args(p):
    p.add_argument("--n-total", default="auto",
                   help="sample count (integer, 2^k, or 'auto' = 2^(0.2 Ns + 12) rounded up)")
    p.add_argument("--n-block", type=int, default=DEFAULT_N_BLOCK, help="blocking block count")
    p.add_argument("--n-boot", type=int, default=DEFAULT_N_BOOT, help="bootstrap resamples")
    p.add_argument("--seed", type=int, default=1, help="base RNG seed (64-bit)")
    p.add_argument("--workers", type=int, default=0, help="sampling threads (0 = all cores)")
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE,
                   help="samples per kernel batch (part of the reproducibility protocol)")
    p.add_argument("--out", default=".", help="output directory")


def _add_time_args(p):
    p.add_argument("--t-start", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--t-points", type=int, default=2, help="linear time grid points")


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        dimension=args.dim, lx=args.lx, ly=args.ly, j=args.j,
        t_start=getattr(args, "t_start", 0.0), t_end=getattr(args, "t_end", 0.0),
        t_points=getattr(args, "t_points", 1),
        n_total=args.n_total, n_block=args.n_block, n_boot=args.n_boot,
        seed=args.seed, workers=args.workers, batch_size=args.batch_size,
        exact=getattr(args, "exact", False), bounds=getattr(args, "bounds", False),
        out=args.out,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permdyn",
        description="Renyi-2 entanglement entropy dynamics of free lattice bosons "
                    "via Monte Carlo matrix permanents.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dynamics", help="entropy over a time grid -> dynamics.csv")
    _add_lattice_args(p)
    _add_time_args(p)
    _add_sampling_args(p)
    p.add_argument("--exact", action="store_true", help="use the exact permanent (ns <= 34)")
    p.add_argument("--bounds", action="store_true",
                   help="also compute the lower-bound chain from shared random vectors")

    p = sub.add_parser("compare", help="exact vs sampled entropy -> compare.csv")
    _add_lattice_args(p)
    _add_time_args(p)
    _add_sampling_args(p)

    p = sub.add_parser("hist", help="sample-distribution histograms at given times")
    _add_lattice_args(p)
    _add_sampling_args(p)
    p.add_argument("--times", required=True, help="comma-separated times, e.g. 1,32")

    p = sub.add_parser("scaling", help="error-scaling experiment and exponent fit")
    p.add_argument("--dim", type=int, choices=(1, 2), default=1, help="lattice dimension")
    p.add_argument("--j", type=float, default=1.0, help="hopping energy")
    _add_sampling_args(p)
    p.add_argument("--sizes", required=True,
                   help="comma-separated sizes: Ns list in 1D, LXxLY list in 2D")
    p.add_argument("--n-total-grid", required=True,
                   help="comma-separated sample counts (2^k allowed)")
    p.add_argument("--replicates", type=int, default=8)
    p.add_argument("--synthetic", default=None, metavar="ALPHA,BETA",
                   help="skip sampling; generate sigmas from the exact law (self-test)")

    p = sub.add_parser("perm", help="permanent of a matrix file")
    p.add_argument("matrix", help="file: first line n, then n rows of n complex entries")
    p.add_argument("--exact", action="store_true", help="exact evaluation (n <= 34)")
    p.add_argument("--n-total", default=None, help="sample count for the estimator")
    p.add_argument("--n-block", type=int, default=DEFAULT_N_BLOCK)
    p.add_argument("--n-boot", type=int, default=DEFAULT_N_BOOT)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "dynamics":
            rows, paths = run_dynamics(_config_from_args(args))
            print(f"wrote {paths['csv']} ({len(rows)} points)")
        elif args.command == "compare":
            rows, paths = run_compare(_config_from_args(args))
            print(f"wrote {paths['csv']} ({len(rows)} points)")
        elif args.command == "hist":
            times = [float(tok) for tok in args.times.split(",") if tok.strip()]
            paths = run_histograms(_config_from_args(args), times)
            print(f"wrote {len(paths) - 1} histogram files to {args.out}")
        elif args.command == "scaling":
            sizes = _parse_sizes(args.sizes, args.dim)
            args.lx, args.ly = sizes[0]
            config = _config_from_args(args)
            grid = [parse_count(tok) for tok in args.n_total_grid.split(",") if tok.strip()]
            synthetic = None
            if args.synthetic:
                a, _, b = args.synthetic.partition(",")
                synthetic = (float(a), float(b))
            fit, _, paths = run_scaling(config, sizes, grid, args.replicates, synthetic)
            print(f"alpha = {fit.alpha:.4f} +/- {fit.alpha_err:.4f}, "
                  f"beta = {fit.beta:.3f} +/- {fit.beta_err:.3f}")
            print(f"wrote {paths['csv']}")
        elif args.command == "perm":
            run_perm(args.matrix, exact=args.exact, n_total=args.n_total, seed=args.seed,
                     workers=args.workers, n_block=args.n_block, n_boot=args.n_boot,
                     batch_size=args.batch_size)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
