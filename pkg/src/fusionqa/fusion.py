"""Reference fusion generators and a synthetic scene builder.

These exist to feed the metric suites with end-to-end inputs. The fusion
rules are the common textbook forms:

* ``UPSAMPLE_ONLY``: the upsampled MS, unchanged.
* ``HFA``: ``F_k = M_k + (P - lowpass(P))``.
* ``HFM``: ``F_k = M_k * P / lowpass(P)``.
* ``IHS``: linear (triangular) IHS with ``I = (R + G + B) / 3``; the
  intensity is replaced by PAN linearly matched to the intensity's mean/SD.

The low-pass filter is a box mean with edge-replicate padding. Outputs are
clamped into the MS DN range but not re-quantized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInputError, DimensionError
from .raster import (Band, MultibandImage, SceneBundle, as_array, block_mean, max_dn,
                     quantize, upsample_nearest)

log = logging.getLogger(__name__)

METHODS = ("UPSAMPLE_ONLY", "IHS", "HFA", "HFM")
_ALIASES = {"upsample": "UPSAMPLE_ONLY", "upsample_only": "UPSAMPLE_ONLY",
            "ihs": "IHS", "hfa": "HFA", "hfm": "HFM"}

PAN_WEIGHTS = (0.25, 0.5, 0.25)

_S2 = np.sqrt(2.0)
# rows: I, v1, v2 from (R, G, B)
IHS_FORWARD = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [-_S2 / 6, -_S2 / 6, 2 * _S2 / 6],
    [1 / _S2, -1 / _S2, 0.0],
])
# rows: R, G, B from (I, v1, v2)
IHS_INVERSE = np.array([
    [1.0, -1 / _S2, 1 / _S2],
    [1.0, -1 / _S2, -1 / _S2],
    [1.0, _S2, 0.0],
])


@dataclass(frozen=True)
class FusionMethod:
    name: str
    lowpass_size: int = 5

    def __post_init__(self):
        name = _ALIASES.get(self.name.lower(), self.name.upper())
        if name not in METHODS:
            raise ValueError(f"unknown fusion method {self.name!r}; choose from {METHODS}")
        object.__setattr__(self, "name", name)
        if self.lowpass_size < 3 or self.lowpass_size % 2 == 0:
            raise ValueError(f"low-pass size must be odd and >= 3, got {self.lowpass_size}")


@dataclass(frozen=True)
class SynthSpec:
    rows: int = 64
    cols: int = 64
    scale: int = 4
    seed: int = 0
    texture_octaves: int = 5
    bit_depth: int = 8

    def __post_init__(self):
        if self.scale < 2:
            raise ValueError(f"scale must be >= 2, got {self.scale}")
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"rows and cols must be positive, got {self.rows}x{self.cols}")
        if self.rows % self.scale or self.cols % self.scale:
            raise ValueError(
                f"rows ({self.rows}) and cols ({self.cols}) must be multiples of "
                f"scale ({self.scale})")
        if self.texture_octaves < 1:
            raise ValueError("texture_octaves must be >= 1")


def lowpass(values, size: int = 5) -> np.ndarray:
    """Box mean over a ``size x size`` window with edge-replicate padding."""
    if size < 3 or size % 2 == 0:
        raise ValueError(f"low-pass size must be odd and >= 3, got {size}")
    return kernels.box_mean(as_array(values), size)


def histogram_match_linear(source, target_mean: float, target_sd: float,
                           clamp: bool = True) -> Band:
    """Affinely map ``source`` onto a target mean and (population) SD.

    With ``clamp`` the result is clipped into the source's DN range; without
    it the raw affine output is returned as an unbounded Band.
    """
    a = as_array(source)
    sd = float(a.std())
    if sd == 0.0:
        raise DegenerateInputError("cannot match a constant source band")
    out = (a - a.mean()) * (target_sd / sd) + target_mean
    bit_depth = source.bit_depth if isinstance(source, Band) else 8
    if clamp:
        return Band(np.clip(out, 0, max_dn(bit_depth)), bit_depth)
    return Band(out, bit_depth, unbounded=True)


def ihs_forward(stack: np.ndarray) -> np.ndarray:
    """(3, m, n) RGB -> (3, m, n) (I, v1, v2)."""
    return np.tensordot(IHS_FORWARD, stack, axes=1)


def ihs_inverse(ivv: np.ndarray) -> np.ndarray:
    return np.tensordot(IHS_INVERSE, ivv, axes=1)


def _clamped(stack: np.ndarray, names, bit_depth: int) -> MultibandImage:
    top = max_dn(bit_depth)
    return MultibandImage(tuple(
        (n, Band(np.clip(v, 0, top), bit_depth)) for n, v in zip(names, stack)))


def hfm_fuse(ms_up: MultibandImage, pan, size: int = 5) -> tuple[MultibandImage, int]:
    """High-frequency modulation; returns the image and the count of pixels
    where ``lowpass(P) == 0`` (those are copied from the MS band)."""
    p = as_array(pan)
    low = lowpass(p, size)
    zero = low == 0.0
    ratio = np.divide(p, low, out=np.ones_like(p), where=~zero)
    stack = ms_up.stack() * ratio
    return _clamped(stack, ms_up.names, ms_up.bit_depth), int(zero.sum())


def fuse(scene: SceneBundle, method: FusionMethod) -> MultibandImage:
    """Fuse ``scene.pan`` into ``scene.ms_up`` with one of the reference methods."""
    ms = scene.ms_up
    if ms.shape != scene.pan.shape:
        raise DimensionError(f"ms_up is {ms.shape} but pan is {scene.pan.shape}")
    p = scene.pan.values
    if method.name == "UPSAMPLE_ONLY":
        return ms
    if method.name == "HFA":
        detail = p - lowpass(p, method.lowpass_size)
        return _clamped(ms.stack() + detail, ms.names, ms.bit_depth)
    if method.name == "HFM":
        image, excluded = hfm_fuse(ms, scene.pan, method.lowpass_size)
        if excluded:
            log.info("HFM: %d pixels with zero low-pass PAN copied from MS", excluded)
        return image
    # IHS
    if len(ms) != 3:
        raise ValueError(f"IHS requires 3 bands, got {len(ms)}")
    ivv = ihs_forward(ms.stack())
    intensity = ivv[0]
    matched = histogram_match_linear(scene.pan, float(intensity.mean()),
                                     float(intensity.std()), clamp=False)
    ivv[0] = matched.values
    return _clamped(ihs_inverse(ivv), ms.names, ms.bit_depth)


# ---------------------------------------------------------------------------
# synthetic scenes
# ---------------------------------------------------------------------------

def _bilinear(grid: np.ndarray, rows: int, cols: int) -> np.ndarray:
    gr, gc = grid.shape
    y = np.arange(rows) * (gr - 1) / rows
    x = np.arange(cols) * (gc - 1) / cols
    y0 = np.floor(y).astype(int)
    x0 = np.floor(x).astype(int)
    ty = (y - y0)[:, None]
    tx = (x - x0)[None, :]
    a = grid[np.ix_(y0, x0)]
    b = grid[np.ix_(y0, x0 + 1)]
    c = grid[np.ix_(y0 + 1, x0)]
    d = grid[np.ix_(y0 + 1, x0 + 1)]
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty


def value_noise(rng: np.random.Generator, rows: int, cols: int, octaves: int,
                persistence: float = 0.6) -> np.ndarray:
    """Multi-octave value noise normalised to [0, 1].

    Octave ``k`` uses a lattice of ``2**(k+1)`` cells per side, so the finest
    octaves carry detail below the MS pixel size.
    """
    total = np.zeros((rows, cols))
    amp = 1.0
    for k in range(octaves):
        cells = 2 ** (k + 1)
        total += amp * _bilinear(rng.random((cells + 1, cells + 1)), rows, cols)
        amp *= persistence
    lo, hi = total.min(), total.max()
    return (total - lo) / (hi - lo) if hi > lo else np.zeros_like(total)


# per-band (offset, span) as fractions of the DN range
_BAND_COLOURING = {"R": (0.16, 0.66), "G": (0.12, 0.72), "B": (0.20, 0.58)}


def synth_scene(spec: SynthSpec) -> SceneBundle:
    """Deterministic truth/PAN/MS bundle for Wald-style testing.

    A shared texture plus a weaker band-specific texture, coloured per band,
    forms the truth MS. PAN is a fixed weighted sum of the truth bands;
    ``ms_low`` is the truth block-averaged by ``scale``. Every product is
    quantized half-up to ``spec.bit_depth``.
    """
    rng = np.random.default_rng(spec.seed)
    top = max_dn(spec.bit_depth)
    shared = value_noise(rng, spec.rows, spec.cols, spec.texture_octaves)
    truth, low = [], []
    for name, (offset, span) in _BAND_COLOURING.items():
        own = value_noise(rng, spec.rows, spec.cols, spec.texture_octaves)
        t = quantize(top * (offset + span * (0.75 * shared + 0.25 * own)), spec.bit_depth)
        truth.append((name, Band(t, spec.bit_depth)))
        low.append((name, Band(quantize(block_mean(t, spec.scale), spec.bit_depth),
                               spec.bit_depth)))
    pan_values = sum(w * b.values for w, (_, b) in zip(PAN_WEIGHTS, truth))
    pan = Band(quantize(pan_values, spec.bit_depth), spec.bit_depth)
    ms_low = MultibandImage(tuple(low))
    ms_up = upsample_nearest(ms_low, spec.rows, spec.cols)
    return SceneBundle(pan=pan, ms_low=ms_low, ms_up=ms_up, truth=MultibandImage(tuple(truth)))
