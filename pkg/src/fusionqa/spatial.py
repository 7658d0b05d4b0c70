"""Spatial-quality metrics: mean gradient, Sobel gradient, FCC and HPDI.

Stencil metrics are evaluated on interior pixels only (those with a full
3x3 neighbourhood); borders are never padded. The Sobel gradient keeps the
``(m-1)(n-1)`` normaliser by default even though the interior holds
``(m-2)(n-2)`` pixels; pass ``normalize="interior"`` for the latter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateInputError, DimensionError, FusionQAError
from .raster import Band, MultibandImage, as_array, validate_pair
from .spectral import pearson

NORMALIZERS = ("printed", "interior")


@dataclass(frozen=True)
class Kernel3:
    """A 3x3 stencil applied as a correlation (no flip) on interior pixels."""

    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (3, 3):
            raise ValueError(f"Kernel3 needs exactly 3x3 coefficients, got shape {w.shape}")
        object.__setattr__(self, "weights", tuple(tuple(float(x) for x in r) for r in w))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.weights)

    def apply(self, values) -> np.ndarray:
        """Interior response, shape ``(m-2, n-2)``."""
        a = as_array(values)
        m, n = a.shape
        w = self.array
        out = np.zeros((m - 2, n - 2))
        for di in range(3):
            for dj in range(3):
                if w[di, dj]:
                    out += w[di, dj] * a[di:m - 2 + di, dj:n - 2 + dj]
        return out


SOBEL_X = Kernel3(((1, 2, 1), (0, 0, 0), (-1, -2, -1)))
SOBEL_Y = Kernel3(((-1, 0, 1), (-2, 0, 2), (-1, 0, 1)))
LAPLACIAN = Kernel3(((-1, -1, -1), (-1, 8, -1), (-1, -1, -1)))


@dataclass
class SpatialRow:
    """One (method, band) row of the spatial table; ``None`` marks n/a or flagged cells."""

    method_name: str
    band_name: str
    mg: float | None = None
    sg: float | None = None
    fcc: float | None = None
    fcc_avg: float | None = None
    hpdi: float | None = None
    hpdi_signed: float | None = None
    excluded_pixels: int = 0
    flags: list[str] = field(default_factory=list)


def _require_min(a: np.ndarray, rows: int, cols: int, what: str):
    if a.shape[0] < rows or a.shape[1] < cols:
        raise DimensionError(
            f"{what} needs a band of at least {rows}x{cols}, got {a.shape[0]}x{a.shape[1]}")


def mean_gradient(band) -> float:
    """Average of ``sqrt((dx**2 + dy**2) / 2)`` over forward differences."""
    a = as_array(band)
    _require_min(a, 2, 2, "mean gradient")
    m, n = a.shape
    return kernels.gradient_sum(a) / ((m - 1) * (n - 1))


def sobel_gradient(band, normalize: str = "printed") -> float:
    """Mean Sobel gradient magnitude ``sqrt((Gx**2 + Gy**2) / 2)`` over the interior.

    Args:
        band: Band or 2-D array, at least 3x3.
        normalize: ``"printed"`` divides the interior sum by ``(m-1)(n-1)``;
            ``"interior"`` divides by the interior pixel count ``(m-2)(n-2)``.
    """
    a = as_array(band)
    _require_min(a, 3, 3, "Sobel gradient")
    m, n = a.shape
    if normalize == "printed":
        denom = (m - 1) * (n - 1)
    elif normalize == "interior":
        denom = (m - 2) * (n - 2)
    else:
        raise ValueError(f"normalize must be one of {NORMALIZERS}, got {normalize!r}")
    return kernels.sobel_sum(a) / denom


def laplacian_filter(band) -> Band:
    """High-pass the band with the 8-neighbour Laplacian mask.

    Border pixels are set to 0. The result is signed, so it is returned as an
    ``unbounded`` Band carrying the input's bit depth for bookkeeping.
    """
    a = as_array(band)
    _require_min(a, 3, 3, "Laplacian filter")
    bit_depth = band.bit_depth if isinstance(band, Band) else 8
    return Band(kernels.laplacian(a), bit_depth, unbounded=True)


def _interior(a: np.ndarray) -> np.ndarray:
    return a[1:-1, 1:-1]


def filtered_correlation(band, pan) -> float:
    """Correlation of the Laplacian-filtered band with the filtered PAN (interior only)."""
    validate_pair(band, pan)
    return pearson(_interior(laplacian_filter(band).values),
                   _interior(laplacian_filter(pan).values))


def fcc(fused: MultibandImage, pan) -> tuple[list[float], float]:
    """Per-band filtered correlation with PAN and their arithmetic mean."""
    p_hat = _interior(laplacian_filter(pan).values)
    per_band = []
    for _, band in fused:
        validate_pair(band, pan)
        per_band.append(pearson(_interior(laplacian_filter(band).values), p_hat))
    return per_band, float(np.mean(per_band))


def _hpdi_filtered(f_hat: np.ndarray, p_hat: np.ndarray) -> tuple[float, float, int]:
    s_abs, s_signed, count = kernels.deviation_sums(_interior(f_hat), _interior(p_hat))
    if count == 0:
        raise DegenerateInputError("HPDI undefined: filtered PAN is zero on every interior pixel")
    interior = (f_hat.shape[0] - 2) * (f_hat.shape[1] - 2)
    return s_abs / count, s_signed / count, interior - count


def hpdi(fused_band, pan) -> tuple[float, float, int]:
    """High-pass deviation index between a fused band and PAN.

    Both inputs are Laplacian filtered. Over interior pixels where the
    filtered PAN ``P`` is non-zero, with filtered band ``F``:

    * absolute = mean ``|F - P| / |P|``
    * signed   = mean ``(F - P) / P``

    Returns:
        ``(absolute, signed, excluded)``; ``excluded`` counts interior pixels
        dropped because ``P == 0``.
    """
    validate_pair(fused_band, pan)
    return _hpdi_filtered(laplacian_filter(fused_band).values, laplacian_filter(pan).values)


def _try(flags, name, fn, *args):
    try:
        return fn(*args)
    except FusionQAError as exc:
        flags.append(f"{name}: {exc}")
        return None


def _band_rows(image: MultibandImage, pan, method_name: str, normalize: str) -> list[SpatialRow]:
    p_hat = laplacian_filter(pan).values
    rows = []
    for name, band in image:
        validate_pair(band, pan)
        row = SpatialRow(method_name, name)
        row.mg = mean_gradient(band)
        row.sg = sobel_gradient(band, normalize)
        f_hat = laplacian_filter(band).values
        row.fcc = _try(row.flags, "fcc", pearson, _interior(f_hat), _interior(p_hat))
        h = _try(row.flags, "hpdi", _hpdi_filtered, f_hat, p_hat)
        if h is not None:
            row.hpdi, row.hpdi_signed, row.excluded_pixels = h
        rows.append(row)
    per_band = [r.fcc for r in rows]
    if all(v is not None for v in per_band):
        avg = float(np.mean(per_band))
        for r in rows:
            r.fcc_avg = avg
    else:
        for r in rows:
            r.flags.append("fcc_avg: a per-band FCC is undefined")
    return rows


def pan_row(pan, normalize: str = "printed", name: str = "PAN") -> SpatialRow:
    """Gradient-only reference row for the PAN band itself."""
    return SpatialRow(name, name, mg=mean_gradient(pan), sg=sobel_gradient(pan, normalize))


def spatial_report(fused: MultibandImage, pan, method_name: str, normalize: str = "printed",
                   ms_up: MultibandImage | None = None,
                   include_pan: bool = False) -> list[SpatialRow]:
    """Evaluate MG, SG, FCC and HPDI for every band of ``fused`` against ``pan``.

    When ``ms_up`` is given, rows for the upsampled MS (method ``"MS"``) are
    appended, and ``include_pan`` appends the PAN gradient row, mirroring the
    reference rows of a published comparison table. Per-cell metric failures
    are flagged rather than raised.
    """
    if fused.shape != np.shape(as_array(pan)):
        raise DimensionError(
            f"fused image is {fused.shape[0]}x{fused.shape[1]} but PAN is "
            f"{as_array(pan).shape[0]}x{as_array(pan).shape[1]}")
    rows = _band_rows(fused, pan, method_name, normalize)
    if ms_up is not None:
        rows.extend(_band_rows(ms_up, pan, "MS", normalize))
    if include_pan:
        rows.append(pan_row(pan, normalize))
    return rows
