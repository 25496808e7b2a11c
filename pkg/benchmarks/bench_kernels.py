"""Time the numba kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--size N] [--repeat R]

Each kernel is warmed up once (which triggers numba compilation) and then
timed as the best of ``R`` runs.  Outputs of both backends are compared
before timing.
"""
import argparse
import time

import numpy as np

from starslice import kernels


def best_of(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size, rng):
    X = rng.standard_normal((size, 5))
    A = np.cov(rng.standard_normal((5, 50))) + np.eye(5)
    rho = rng.uniform(0.5, 2.0, size)
    a = rng.uniform(0.5, 1.5, (size, 2))
    kinds = np.array([kernels.KIND_GAUSSIAN, kernels.KIND_GENGAUSS], dtype=np.int64)
    params = np.array([[1.0, 0.8], [1.5, 1.2]])
    t, w = np.polynomial.legendre.leggauss(64)
    return {
        "lp_gauge p=1.5": ("lp_gauge", (X, 1.5)),
        "lp_gauge p=inf": ("lp_gauge", (X, np.inf)),
        "quadform_gauge": ("quadform_gauge", (X, A)),
        "radial_moments (2 factors, 64 nodes)": ("radial_moments", (rho, a, kinds, params, t, w, 3)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.numba_kernels is None:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, (attr, fargs) in cases(args.size, rng).items():
        f_np = getattr(kernels.numpy_kernels, attr)
        f_nb = getattr(kernels.numba_kernels, attr)
        np.testing.assert_allclose(f_np(*fargs), f_nb(*fargs), rtol=1e-12, atol=1e-300)
        t_np = best_of(f_np, fargs, args.repeat)
        t_nb = best_of(f_nb, fargs, args.repeat)
        print(f"{name:40s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
