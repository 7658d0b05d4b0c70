"""Compare the numba and numpy kernel families on PAN-sized rasters.

Usage: python benchmarks/bench_kernels.py [--rows 600] [--cols 525] [--repeat 20]

Both families are timed in one process (the env flag only picks which one the
public names bind to). The first numba call is timed separately as compile
time; the cache makes later runs cheap.
"""

import argparse
import time

import numpy as np

from fusionqa import kernels

KERNELS = ["gradient_sum", "sobel_sum", "laplacian", "deviation_sums", "box_mean"]


def _args(name, a, b):
    if name == "deviation_sums":
        return (kernels.np_laplacian(a), kernels.np_laplacian(b))
    if name == "box_mean":
        return (a, 5)
    return (a,)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=600)
    parser.add_argument("--cols", type=int, default=525)
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)

    rs = np.random.default_rng(0)
    a = rs.integers(0, 256, (args.rows, args.cols)).astype(np.float64)
    b = rs.integers(0, 256, (args.rows, args.cols)).astype(np.float64)

    print(f"raster {args.rows}x{args.cols}, best of {args.repeat}; active backend: {kernels.BACKEND}")
    print(f"{'kernel':<16}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}{'first call ms':>15}")
    for name in KERNELS:
        call_args = _args(name, a, b)
        t_np = best_of(getattr(kernels, f"np_{name}"), call_args, args.repeat)
        if not kernels.HAS_NUMBA:
            print(f"{name:<16}{t_np * 1e3:>10.3f}{'n/a':>10}")
            continue
        nb = getattr(kernels, f"nb_{name}")
        t0 = time.perf_counter()
        got = nb(*call_args)
        first = time.perf_counter() - t0
        want = getattr(kernels, f"np_{name}")(*call_args)
        assert np.allclose(np.asarray(got, dtype=float), np.asarray(want, dtype=float),
                           rtol=1e-12, atol=1e-6), name
        t_nb = best_of(nb, call_args, args.repeat)
        print(f"{name:<16}{t_np * 1e3:>10.3f}{t_nb * 1e3:>10.3f}{t_np / t_nb:>8.1f}x"
              f"{first * 1e3:>15.1f}")


if __name__ == "__main__":
    main()
