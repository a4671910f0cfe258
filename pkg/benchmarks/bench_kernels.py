"""Benchmark the node-attention kernel: compiled extension vs numpy fallback.

Usage: python benchmarks/bench_kernels.py [--neighbors N] [--dim D] [--reps R]
"""

import argparse
import time

import numpy as np

from fedhin.model import kernels, node_kernel_py


def bench(module, h_i, H, W, a, probe, reps):
    forward = module.node_forward
    backward = module.node_backward
    alpha, e, m, z = forward(h_i, H, W, a, 0.2)
    t0 = time.perf_counter()
    for _ in range(reps):
        forward(h_i, H, W, a, 0.2)
    t_fwd = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        backward(h_i, H, W, a, alpha, e, m, probe, 0.2)
    t_bwd = (time.perf_counter() - t0) / reps
    return t_fwd, t_bwd, z


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--neighbors", type=int, default=64)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--reps", type=int, default=2000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    h_i = rng.normal(size=args.dim)
    H = rng.normal(size=(args.neighbors, args.dim))
    W = rng.normal(size=(args.dim, args.dim))
    a = rng.normal(size=2 * args.dim)
    probe = rng.normal(size=args.dim)

    backends = [("python", node_kernel_py)]
    try:
        from fedhin.model import _node_kernel
        backends.insert(0, ("compiled", _node_kernel))
    except ImportError:
        print("compiled extension not built; timing the fallback only")

    print(f"neighbors={args.neighbors} dim={args.dim} reps={args.reps} "
          f"(active dispatch: {kernels.BACKEND})")
    results = {}
    for name, module in backends:
        t_fwd, t_bwd, z = bench(module, h_i, H, W, a, probe, args.reps)
        results[name] = (t_fwd, t_bwd, z)
        print(f"{name:>9}: forward {t_fwd * 1e6:8.1f} us   "
              f"backward {t_bwd * 1e6:8.1f} us")

    if len(results) == 2:
        zc, zp = results["compiled"][2], results["python"][2]
        assert np.allclose(zc, zp, atol=1e-12), "backends disagree"
        fwd_speedup = results["python"][0] / results["compiled"][0]
        bwd_speedup = results["python"][1] / results["compiled"][1]
        print(f"speedup: forward {fwd_speedup:.2f}x, backward {bwd_speedup:.2f}x")


if __name__ == "__main__":
    main()
