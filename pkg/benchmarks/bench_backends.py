"""Benchmark the numba kernels against their pure-numpy twins.

Times the four hot kernels on flat vectors of increasing size, then a
short end-to-end training run under each backend, and reports the
numeric gap between the two implementations.  The optimizer cores are
expected to agree bit-for-bit; the normal fill may differ in the last
ulp (vectorized vs scalar libm rounding).

Usage:
    python3 benchmarks/bench_backends.py [--sizes 1000,100000] [--repeats 50]
"""

import argparse
import time

import numpy as np

from vical import _kernels, backend
from vical.config import ExperimentConfig
from vical.experiment import train_one


def _time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _kernel_inputs(n, seed=123):
    key = np.uint64(seed)
    counter = np.uint64(0)
    fill = _kernels.get("normal_fill", "numpy")
    grad = 0.01 * fill(key, counter, n)
    params = fill(key, np.uint64(2 * n), n)
    return key, counter, params, grad


def _run_kernel(name, which, n, repeats):
    """Return (seconds per call, output vector) for one kernel twin."""
    fn = _kernels.get(name, which)
    key, counter, params, grad = _kernel_inputs(n)
    if name == "uniform_fill" or name == "normal_fill":
        fn(key, counter, n)  # warm the jit cache
        sec = _time_call(lambda: fn(key, counter, n), repeats)
        return sec, fn(key, counter, n)
    if name == "adamw_core":
        def step(p, m, v):
            fn(p, grad, m, v, 1e-3, 0.9, 0.999, 1e-8, 0.01, 0.1, 0.001)
        p, m, v = params.copy(), np.zeros(n), np.zeros(n)
        step(p, m, v)  # warm
        sec = _time_call(lambda: step(p, m, v), repeats)
        p, m, v = params.copy(), np.zeros(n), np.zeros(n)
        for _ in range(5):
            step(p, m, v)
        return sec, p
    # ivon_core: gprod = grad * (theta - mean) with a fixed displacement
    disp = 1e-3 * params
    def step(mean, hess, gmom):
        fn(mean, hess, gmom, grad * disp, grad,
           1e-3, 0.9, 1.0 - 1e-5, 1e5, 0.0, 0.1, 0.5e-10)
    mean, hess, gmom = params.copy(), np.full(n, 1e-3), np.zeros(n)
    step(mean, hess, gmom)  # warm
    sec = _time_call(lambda: step(mean, hess, gmom), repeats)
    mean, hess, gmom = params.copy(), np.full(n, 1e-3), np.zeros(n)
    for _ in range(5):
        step(mean, hess, gmom)
    return sec, mean


def bench_kernels(sizes, repeats):
    names = ("uniform_fill", "normal_fill", "adamw_core", "ivon_core")
    print(f"{'kernel':<14}{'n':>9}{'numpy':>12}{'numba':>12}"
          f"{'speedup':>9}{'max |diff|':>12}")
    for name in names:
        for n in sizes:
            t_np, out_np = _run_kernel(name, "numpy", n, repeats)
            t_nb, out_nb = _run_kernel(name, "numba", n, repeats)
            gap = float(np.max(np.abs(out_np - out_nb)))
            print(f"{name:<14}{n:>9}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us"
                  f"{t_np / t_nb:>8.1f}x{gap:>12.2e}")


def bench_training(repeats):
    cfg = ExperimentConfig()
    cfg.dataset.n_train = 512
    cfg.dataset.n_dev = 64
    cfg.hidden_sizes = (64,)
    cfg.epochs = 1
    print(f"\n{'training run':<23}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    for method in ("adamw", "ivon"):
        secs = {}
        for which in ("numpy", "numba"):
            backend.set_backend(which)
            train_one(cfg, 0, method)  # warm
            secs[which] = _time_call(lambda: train_one(cfg, 0, method), repeats)
        print(f"{method} (64 steps){'':<{23 - len(method) - 11}}"
              f"{secs['numpy'] * 1e3:>10.1f}ms{secs['numba'] * 1e3:>10.1f}ms"
              f"{secs['numpy'] / secs['numba']:>8.1f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,10000,100000",
                    help="comma-separated vector lengths")
    ap.add_argument("--repeats", type=int, default=50,
                    help="timing repeats, best-of is reported")
    args = ap.parse_args(argv)
    if "numba" not in _kernels._IMPLS:
        ap.error("numba is not importable; nothing to compare against")
    sizes = [int(s) for s in args.sizes.split(",")]
    bench_kernels(sizes, args.repeats)
    bench_training(max(3, args.repeats // 10))


if __name__ == "__main__":
    main()
