"""Hot raster kernels: numba-compiled loops with a pure-numpy fallback.

Every kernel exists twice. The ``loop_*`` functions are plain Python loops
that numba compiles with ``@njit``; the ``np_*`` functions are vectorised
numpy equivalents. The public names (``gradient_sum``, ``sobel_sum``, ...)
are bound at import time to one family:

* numba is used when it imports and ``FUSIONQA_DISABLE_NUMBA`` is unset
  (or set to ``0``/``false``/empty);
* otherwise the numpy family is used.

All kernels take C-contiguous float64 2-D arrays. Stencil kernels only touch
interior pixels; callers check the 3x3 minimum.
"""

import os

import numpy as np

_FLAG = "FUSIONQA_DISABLE_NUMBA"


def _numba_disabled():
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _numba_disabled()
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy family
# ---------------------------------------------------------------------------

def np_gradient_sum(a):
    dx = a[1:, :-1] - a[:-1, :-1]
    dy = a[:-1, 1:] - a[:-1, :-1]
    return float(np.sqrt((dx * dx + dy * dy) / 2.0).sum())


def np_sobel_xy(a):
    """Interior Sobel responses (gx, gy), each of shape (m-2, n-2)."""
    up, mid, down = a[:-2], a[1:-1], a[2:]
    gx = (up[:, 2:] + 2.0 * up[:, 1:-1] + up[:, :-2]) - (
        down[:, 2:] + 2.0 * down[:, 1:-1] + down[:, :-2])
    gy = (up[:, 2:] + 2.0 * mid[:, 2:] + down[:, 2:]) - (
        up[:, :-2] + 2.0 * mid[:, :-2] + down[:, :-2])
    return gx, gy


def np_sobel_sum(a):
    gx, gy = np_sobel_xy(a)
    return float(np.sqrt((gx * gx + gy * gy) / 2.0).sum())


def np_laplacian(a):
    out = np.zeros_like(a)
    m, n = a.shape
    neigh = np.zeros((m - 2, n - 2))
    for di in (0, 1, 2):
        for dj in (0, 1, 2):
            if di == 1 and dj == 1:
                continue
            neigh += a[di:m - 2 + di, dj:n - 2 + dj]
    out[1:-1, 1:-1] = 8.0 * a[1:-1, 1:-1] - neigh
    return out


def np_deviation_sums(f, r):
    mask = r != 0.0
    rv = r[mask]
    d = f[mask] - rv
    return float((np.abs(d) / np.abs(rv)).sum()), float((d / rv).sum()), int(mask.sum())


def np_box_mean(a, size):
    h = size // 2
    p = np.pad(a, h, mode="edge")
    win = np.lib.stride_tricks.sliding_window_view(p, (size, size))
    return win.sum(axis=(2, 3)) / float(size * size)


# ---------------------------------------------------------------------------
# loop family (compiled by numba when available)
# ---------------------------------------------------------------------------

def loop_gradient_sum(a):
    m, n = a.shape
    total = 0.0
    for i in range(m - 1):
        for j in range(n - 1):
            dx = a[i + 1, j] - a[i, j]
            dy = a[i, j + 1] - a[i, j]
            total += np.sqrt((dx * dx + dy * dy) / 2.0)
    return total


def loop_sobel_sum(a):
    m, n = a.shape
    total = 0.0
    for i in range(1, m - 1):
        for j in range(1, n - 1):
            gx = (a[i - 1, j + 1] + 2.0 * a[i - 1, j] + a[i - 1, j - 1]) - (
                a[i + 1, j + 1] + 2.0 * a[i + 1, j] + a[i + 1, j - 1])
            gy = (a[i - 1, j + 1] + 2.0 * a[i, j + 1] + a[i + 1, j + 1]) - (
                a[i - 1, j - 1] + 2.0 * a[i, j - 1] + a[i + 1, j - 1])
            total += np.sqrt((gx * gx + gy * gy) / 2.0)
    return total


def loop_laplacian(a):
    m, n = a.shape
    out = np.zeros((m, n))
    for i in range(1, m - 1):
        for j in range(1, n - 1):
            s = 0.0
            for di in range(-1, 2):
                for dj in range(-1, 2):
                    if di != 0 or dj != 0:
                        s += a[i + di, j + dj]
            out[i, j] = 8.0 * a[i, j] - s
    return out


def loop_deviation_sums(f, r):
    m, n = f.shape
    s_abs = 0.0
    s_signed = 0.0
    count = 0
    for i in range(m):
        for j in range(n):
            rv = r[i, j]
            if rv != 0.0:
                d = f[i, j] - rv
                s_abs += abs(d) / abs(rv)
                s_signed += d / rv
                count += 1
    return s_abs, s_signed, count


def loop_box_mean(a, size):
    m, n = a.shape
    h = size // 2
    out = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for di in range(-h, h + 1):
                ii = min(max(i + di, 0), m - 1)
                for dj in range(-h, h + 1):
                    jj = min(max(j + dj, 0), n - 1)
                    s += a[ii, jj]
            out[i, j] = s / (size * size)
    return out


if HAS_NUMBA:
    nb_gradient_sum = njit(cache=True)(loop_gradient_sum)
    nb_sobel_sum = njit(cache=True)(loop_sobel_sum)
    nb_laplacian = njit(cache=True)(loop_laplacian)
    nb_deviation_sums = njit(cache=True)(loop_deviation_sums)
    nb_box_mean = njit(cache=True)(loop_box_mean)


def _prep(a):
    return np.ascontiguousarray(a, dtype=np.float64)


if USE_NUMBA:
    def gradient_sum(a):
        return float(nb_gradient_sum(_prep(a)))

    def sobel_sum(a):
        return float(nb_sobel_sum(_prep(a)))

    def laplacian(a):
        return nb_laplacian(_prep(a))

    def deviation_sums(f, r):
        s_abs, s_signed, count = nb_deviation_sums(_prep(f), _prep(r))
        return float(s_abs), float(s_signed), int(count)

    def box_mean(a, size):
        return nb_box_mean(_prep(a), int(size))
else:
    def gradient_sum(a):
        return np_gradient_sum(_prep(a))

    def sobel_sum(a):
        return np_sobel_sum(_prep(a))

    def laplacian(a):
        return np_laplacian(_prep(a))

    def deviation_sums(f, r):
        return np_deviation_sums(_prep(f), _prep(r))

    def box_mean(a, size):
        return np_box_mean(_prep(a), int(size))
