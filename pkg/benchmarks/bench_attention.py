#!/usr/bin/env python3
"""Benchmark the attention kernel backends (compiled vs numpy fallback).

Shapes mirror the grouped attention calls issued while training the toy
motion benchmark (temporal groups, spatial groups, class-token pass) plus
a couple of larger configurations.

Usage: python benchmarks/bench_attention.py [--repeats 30]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from surgact._kernels import available_backends, get_backend

# (label, G, Sq, Sk, Dh)
WORKLOADS = [
    ("toy temporal groups (B16 N16 H4, T=8)", 1024, 8, 9, 8),
    ("toy spatial groups  (B16 T8 H4, N=16)", 512, 16, 17, 8),
    ("toy class-token pass (B16 H4, S=129)", 64, 1, 129, 8),
    ("wide temporal groups (B32 N64 H8, T=16)", 16384, 16, 17, 8),
    ("large single group (S=256, Dh=64)", 8, 256, 256, 64),
]


def bench_backend(mod, q, k, v, d_out, repeats):
    fwd = timeit.repeat(lambda: mod.attn_forward(q, k, v),
                        number=1, repeat=repeats)
    out, attn = mod.attn_forward(q, k, v)
    bwd = timeit.repeat(lambda: mod.attn_backward(d_out, attn, q, k, v),
                        number=1, repeat=repeats)
    return min(fwd), min(bwd)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled extension not built; only the numpy fallback is timed")

    rng = np.random.default_rng(0)
    header = f"{'workload':44s} {'backend':8s} {'fwd (ms)':>10s} {'bwd (ms)':>10s}"
    print(header)
    print("-" * len(header))
    for label, g, sq, sk, dh in WORKLOADS:
        q = rng.normal(size=(g, sq, dh))
        k = rng.normal(size=(g, sk, dh))
        v = rng.normal(size=(g, sk, dh))
        d_out = rng.normal(size=(g, sq, dh))
        times = {}
        for name in backends:
            fwd, bwd = bench_backend(get_backend(name), q, k, v, d_out,
                                     args.repeats)
            times[name] = (fwd, bwd)
            print(f"{label:44s} {name:8s} {fwd * 1e3:10.3f} {bwd * 1e3:10.3f}")
        if len(times) == 2:
            f_ratio = times["numpy"][0] / times["cython"][0]
            b_ratio = times["numpy"][1] / times["cython"][1]
            print(f"{'':44s} {'ratio':8s} {f_ratio:9.2f}x {b_ratio:9.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
