"""Spectral-fidelity metrics between a fused band and the upsampled MS band.

Conventions worth knowing before reading the numbers:

* SD is the population standard deviation (divide by ``rows * cols``).
* Entropy bins follow the band's bit depth (256 bins for 8-bit data).
* SNR uses the *fused* band's energy as the numerator,
  ``sqrt(sum F**2 / sum (F - M)**2)``.
* DI and NRMSE compare fused ``F`` against reference ``M``; DI skips pixels
  where ``M == 0`` and reports how many were skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (DegenerateInputError, DimensionError, FusionQAError,
                     IdenticalImagesError, UndefinedCorrelationError)
from .raster import Band, MultibandImage, as_array, max_dn, validate_pair


@dataclass
class SpectralRow:
    """One (method, band) row of the spectral table.

    Metric fields are ``None`` when a value is inapplicable (reference rows)
    or could not be computed; the latter also adds a ``"metric: reason"``
    string to ``flags``.
    """

    method_name: str
    band_name: str
    sd: float | None = None
    entropy: float | None = None
    snr: float | None = None
    nrmse: float | None = None
    di: float | None = None
    cc: float | None = None
    excluded_pixels: int = 0
    flags: list[str] = field(default_factory=list)


def std_dev(band) -> float:
    a = as_array(band)
    return float(np.sqrt(np.mean((a - a.mean()) ** 2)))


def entropy(band, bit_depth: int | None = None) -> float:
    """Shannon entropy (bits) of the DN histogram.

    DNs are rounded half-up and clamped into ``[0, 2**bit_depth - 1]`` before
    binning. ``bit_depth`` defaults to the band's own (8 for bare arrays).
    """
    if bit_depth is None:
        bit_depth = band.bit_depth if isinstance(band, Band) else 8
    bins = max_dn(bit_depth) + 1
    a = as_array(band)
    idx = np.clip(np.floor(a + 0.5), 0, bins - 1).astype(np.int64).ravel()
    p = np.bincount(idx, minlength=bins) / idx.size
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) + 0.0


def snr(fused, reference) -> float:
    validate_pair(fused, reference)
    f, m = as_array(fused), as_array(reference)
    noise = float(((f - m) ** 2).sum())
    if noise == 0.0:
        raise IdenticalImagesError("identical images: SNR has a zero noise denominator")
    return float(np.sqrt(float((f * f).sum()) / noise))


def deviation_index(fused, reference) -> tuple[float, int]:
    """Mean of ``|F - M| / M`` over pixels where the reference is non-zero.

    Returns:
        ``(di, excluded)`` where ``excluded`` counts the skipped ``M == 0`` pixels.
    """
    validate_pair(fused, reference)
    f, m = as_array(fused), as_array(reference)
    s_abs, _, count = kernels.deviation_sums(f, m)
    if count == 0:
        raise DegenerateInputError("deviation index undefined: every reference pixel is zero")
    return s_abs / count, m.size - count


def pearson(f: np.ndarray, m: np.ndarray) -> float:
    df = f - f.mean()
    dm = m - m.mean()
    sff = float((df * df).sum())
    smm = float((dm * dm).sum())
    if sff == 0.0 or smm == 0.0:
        raise UndefinedCorrelationError("undefined correlation: an operand has zero variance")
    # sqrt(a*b) keeps corr(x, x) == 1 exactly and is symmetric in its operands
    r = float((df * dm).sum()) / float(np.sqrt(sff * smm))
    return min(1.0, max(-1.0, r))


def correlation(fused, reference) -> float:
    """Pearson correlation coefficient between two co-registered bands."""
    validate_pair(fused, reference)
    return pearson(as_array(fused), as_array(reference))


def nrmse(fused, reference, peak: float = 255.0) -> float:
    validate_pair(fused, reference)
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    d = as_array(fused) - as_array(reference)
    return float(np.sqrt((d * d).sum() / (d.size * float(peak) ** 2)))


def _cell(flags, name, fn, *args):
    try:
        return fn(*args)
    except FusionQAError as exc:
        flags.append(f"{name}: identical" if isinstance(exc, IdenticalImagesError)
                     else f"{name}: {exc}")
        return None


def _check_band_sets(fused: MultibandImage, reference: MultibandImage):
    if fused.names != reference.names:
        raise DimensionError(f"band sets differ: {fused.names} vs {reference.names}")
    if fused.shape != reference.shape:
        raise DimensionError(f"image sizes differ: {fused.shape} vs {reference.shape}")


def spectral_report(fused: MultibandImage, reference: MultibandImage, method_name: str,
                    peak: float = 255.0) -> list[SpectralRow]:
    """Evaluate all six spectral metrics band by band.

    Metric failures (identical bands for SNR, constant bands for CC, ...) do
    not abort the report; the cell is left ``None`` and flagged instead.
    """
    _check_band_sets(fused, reference)
    rows = []
    for (name, f), (_, m) in zip(fused, reference):
        row = SpectralRow(method_name, name)
        row.sd = std_dev(f)
        row.entropy = entropy(f)
        row.snr = _cell(row.flags, "snr", snr, f, m)
        row.nrmse = nrmse(f, m, peak)
        di = _cell(row.flags, "di", deviation_index, f, m)
        if di is not None:
            row.di, row.excluded_pixels = di
        row.cc = _cell(row.flags, "cc", correlation, f, m)
        rows.append(row)
    return rows


def reference_rows(reference: MultibandImage, method_name: str = "MS") -> list[SpectralRow]:
    """SD and entropy of the reference bands themselves, for the MS baseline rows."""
    return [SpectralRow(method_name, name, sd=std_dev(b), entropy=entropy(b))
            for name, b in reference]
