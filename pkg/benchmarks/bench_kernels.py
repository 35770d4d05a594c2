#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-numpy fallback.

Times the Glynn sampling kernel, the shared-randomness bound kernel, and the
exact permanent, and cross-checks that both backends agree on the same
random-word stream.

Usage: python benchmarks/bench_kernels.py [--sizes 16,32,64] [--samples 2^16]
"""

import argparse
import time

import numpy as np

from permdyn._kernels import available_backends, get_backend


def parse_count(text):
    if "^" in text:
        base, _, exp = text.partition("^")
        return int(base) ** int(exp)
    return int(text)


def random_matrix(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return np.ascontiguousarray(m.real), np.ascontiguousarray(m.imag)


def best_of(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def max_rel_diff(a, b):
    scale = np.maximum(np.abs(b), 1e-280)
    return max(np.max(np.abs(x - y) / s) for x, y, s in zip(a, b, [scale] * len(a)))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="16,32,64")
    parser.add_argument("--samples", default="2^16")
    parser.add_argument("--bbfg-sizes", default="20,24")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if len(backends) < 2:
        print("compiled extension not built; timing the fallback only")

    count = parse_count(args.samples)
    print(f"\nGlynn sampling kernel ({count} samples per run, best of {args.repeat}):")
    print(f"{'n':>4} " + "".join(f"{name:>16} " for name in backends) + f"{'speedup':>9}")
    for n in (int(s) for s in args.sizes.split(",")):
        m_re, m_im = random_matrix(n, n)
        rates = []
        results = []
        for name in backends:
            kern = get_backend(name)
            dt, res = best_of(lambda k=kern: k.glynn_batch(m_re, m_im, 1, 0, 0, count),
                              args.repeat)
            rates.append(count / dt / 1e6)
            results.append(res)
        line = f"{n:>4} " + "".join(f"{r:>12.3f} Ms/s " for r in rates)
        if len(results) == 2:
            p0 = results[0][0] + 1j * results[0][1]
            p1 = results[1][0] + 1j * results[1][1]
            agree = np.max(np.abs(p0 - p1) / np.maximum(np.abs(p1), 1e-280))
            line += f"{rates[0] / rates[1]:>8.1f}x  (max rel diff {agree:.1e})"
        print(line)

    print(f"\nbound-chain kernel ({count} samples per run):")
    for n in (int(s) for s in args.sizes.split(",")):
        m_re, m_im = random_matrix(n, n)
        rates = []
        for name in backends:
            kern = get_backend(name)
            dt, _ = best_of(lambda k=kern: k.bound_batch(m_re, m_im, 1, 0, 0, count),
                            args.repeat)
            rates.append(count / dt / 1e6)
        extra = f"{rates[0] / rates[1]:>8.1f}x" if len(rates) == 2 else ""
        print(f"{n:>4} " + "".join(f"{r:>12.3f} Ms/s " for r in rates) + extra)

    print("\nexact permanent (single evaluation):")
    for n in (int(s) for s in args.bbfg_sizes.split(",")):
        m_re, m_im = random_matrix(n, n)
        times = []
        values = []
        for name in backends:
            kern = get_backend(name)
            dt, val = best_of(lambda k=kern: k.perm_bbfg(m_re, m_im), 1)
            times.append(dt)
            values.append(val)
        line = f"{n:>4} " + "".join(f"{t:>12.3f} s   " for t in times)
        if len(values) == 2:
            line += (f"{times[1] / times[0]:>8.1f}x  "
                     f"(rel diff {abs(values[0] - values[1]) / abs(values[1]):.1e})")
        print(line)


if __name__ == "__main__":
    main()
