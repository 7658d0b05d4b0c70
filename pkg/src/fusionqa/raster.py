"""Raster data model, PGM/CSV I/O and the resampling steps every metric needs.

A :class:`Band` is one 2-D grid of digital numbers (DN) stored as float64,
tagged with its sensor bit depth. A :class:`MultibandImage` is an ordered set
of equally sized, uniquely named bands.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionError, FormatError

BIT_DEPTHS = (6, 8, 16)


def max_dn(bit_depth: int) -> int:
    return (1 << bit_depth) - 1


def bit_depth_for_maxval(maxval: int) -> int:
    if maxval <= 63:
        return 6
    if maxval <= 255:
        return 8
    return 16


@dataclass(frozen=True, eq=False)
class Band:
    """A single raster band.

    ``unbounded`` waives the ``0 <= DN <= 2**bit_depth - 1`` range check. It is
    set on derived products such as Laplacian-filtered bands, whose values are
    signed; ``bit_depth`` is then kept for bookkeeping only.
    """

    values: np.ndarray
    bit_depth: int = 8
    unbounded: bool = False

    def __post_init__(self):
        if self.bit_depth not in BIT_DEPTHS:
            raise ValueError(f"bit_depth must be one of {BIT_DEPTHS}, got {self.bit_depth}")
        arr = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"band values must be a non-empty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("band values must be finite")
        if not self.unbounded:
            top = max_dn(self.bit_depth)
            bad = np.argwhere((arr < 0) | (arr > top))
            if bad.size:
                r, c = (int(x) for x in bad[0])
                raise FormatError(
                    f"DN {arr[r, c]:g} outside [0, {top}] for {self.bit_depth}-bit band",
                    row=r, col=c)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, Band):
            return NotImplemented
        return (self.bit_depth == other.bit_depth
                and self.shape == other.shape
                and bool(np.array_equal(self.values, other.values)))

    __hash__ = None

    def __repr__(self):
        return f"Band({self.rows}x{self.cols}, bit_depth={self.bit_depth})"


@dataclass(frozen=True)
class MultibandImage:
    """Ordered, uniquely named bands sharing rows, cols and bit depth."""

    bands: tuple[tuple[str, Band], ...] = field(default_factory=tuple)

    def __post_init__(self):
        bands = tuple((str(name), band) for name, band in self.bands)
        if not bands:
            raise ValueError("a MultibandImage needs at least one band")
        names = [n for n, _ in bands]
        if len(set(names)) != len(names):
            raise ValueError(f"band names must be unique, got {names}")
        first = bands[0][1]
        for name, band in bands[1:]:
            if band.shape != first.shape or band.bit_depth != first.bit_depth:
                raise DimensionError(
                    f"band {name!r} is {band.rows}x{band.cols}/{band.bit_depth}-bit but "
                    f"{names[0]!r} is {first.rows}x{first.cols}/{first.bit_depth}-bit")
        object.__setattr__(self, "bands", bands)

    @classmethod
    def from_arrays(cls, arrays, names: Sequence[str] | None = None, bit_depth: int = 8):
        """Build from a mapping name -> array, or a sequence of arrays plus names."""
        if isinstance(arrays, dict):
            items = list(arrays.items())
        else:
            arrays = list(arrays)
            if names is None:
                names = [f"b{k}" for k in range(len(arrays))]
            items = list(zip(names, arrays))
        return cls(tuple((n, a if isinstance(a, Band) else Band(a, bit_depth)) for n, a in items))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.bands]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bands[0][1].shape

    @property
    def bit_depth(self) -> int:
        return self.bands[0][1].bit_depth

    def __len__(self):
        return len(self.bands)

    def __iter__(self) -> Iterator[tuple[str, Band]]:
        return iter(self.bands)

    def __getitem__(self, name: str) -> Band:
        for n, b in self.bands:
            if n == name:
                return b
        raise KeyError(name)

    def stack(self) -> np.ndarray:
        """Bands stacked as a (k, rows, cols) float64 array."""
        return np.stack([b.values for _, b in self.bands])


@dataclass(frozen=True)
class SceneBundle:
    pan: Band
    ms_low: MultibandImage
    ms_up: MultibandImage
    truth: MultibandImage | None = None

    def __post_init__(self):
        if self.ms_up.shape != self.pan.shape:
            raise DimensionError(
                f"ms_up is {self.ms_up.shape} but pan is {self.pan.shape}")
        (lr, lc), (ur, uc) = self.ms_low.shape, self.ms_up.shape
        if ur % lr or uc % lc:
            raise DimensionError(
                f"ms_low {self.ms_low.shape} does not divide ms_up {self.ms_up.shape}")
        if self.truth is not None and self.truth.shape != self.ms_up.shape:
            raise DimensionError(
                f"truth is {self.truth.shape} but ms_up is {self.ms_up.shape}")

    @property
    def scale(self) -> tuple[int, int]:
        return (self.ms_up.shape[0] // self.ms_low.shape[0],
                self.ms_up.shape[1] // self.ms_low.shape[1])


def as_array(band) -> np.ndarray:
    """Return the float64 grid behind a Band, or coerce an array-like."""
    if isinstance(band, Band):
        return band.values
    return np.asarray(band, dtype=np.float64)


def validate_pair(a, b) -> None:
    """Raise DimensionError unless ``a`` and ``b`` have the same rows and cols."""
    sa, sb = np.shape(as_array(a)), np.shape(as_array(b))
    if sa != sb:
        raise DimensionError(
            f"dimension mismatch: {sa[0]}x{sa[1]} vs {sb[0]}x{sb[1]} "
            "(bands must be co-registered; upsample MS to PAN size first)")


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------

def _scale_factors(src: tuple[int, int], target_rows: int, target_cols: int) -> tuple[int, int]:
    rows, cols = src
    if target_rows < rows or target_cols < cols or target_rows % rows or target_cols % cols:
        raise DimensionError(
            f"cannot upsample {rows}x{cols} to {target_rows}x{target_cols}: "
            "target must be an integer multiple of the source along each axis")
    return target_rows // rows, target_cols // cols


def upsample_band(band: Band, target_rows: int, target_cols: int) -> Band:
    sr, sc = _scale_factors(band.shape, target_rows, target_cols)
    up = np.repeat(np.repeat(band.values, sr, axis=0), sc, axis=1)
    return Band(up, band.bit_depth, band.unbounded)


def upsample_nearest(ms: MultibandImage, target_rows: int, target_cols: int) -> MultibandImage:
    """Nearest-neighbour upsampling by integer block replication.

    Each source pixel becomes a ``scale_r x scale_c`` block. Non-integer
    ratios raise :class:`DimensionError`.
    """
    return MultibandImage(tuple(
        (name, upsample_band(b, target_rows, target_cols)) for name, b in ms))


def block_mean(values: np.ndarray, scale: int) -> np.ndarray:
    m, n = values.shape
    if m % scale or n % scale:
        raise DimensionError(f"{m}x{n} grid is not divisible by scale {scale}")
    return values.reshape(m // scale, scale, n // scale, scale).mean(axis=(1, 3))


def quantize(values: np.ndarray, bit_depth: int) -> np.ndarray:
    """Round half-up to integers and clamp into the bit depth's DN range."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, max_dn(bit_depth))


def rescale_bit_depth(band: Band, bit_depth: int) -> Band:
    """Linearly map DNs from ``band.bit_depth`` onto another bit depth.

    Never applied implicitly; e.g. a 6-bit PAN is only brought to 8 bits when
    the caller asks for it.
    """
    factor = max_dn(bit_depth) / max_dn(band.bit_depth)
    return Band(np.clip(band.values * factor, 0, max_dn(bit_depth)), bit_depth)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        fmt = fmt.upper()
        if fmt not in ("PGM", "CSV"):
            raise ValueError(f"unsupported format {fmt!r}; use PGM or CSV")
        return fmt
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return "PGM"
    if suffix in (".csv", ".txt"):
        return "CSV"
    raise ValueError(f"cannot infer raster format from {path.name!r}; pass format=")


def load_band(path, format: str | None = None, bit_depth: int | None = None) -> Band:
    """Read a band from a plain (P2) / binary (P5) PGM or a numeric CSV.

    PGM bit depth comes from maxval (<=63 -> 6, <=255 -> 8, else 16). CSV
    bands default to 8 bits unless ``bit_depth`` is given.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    data = path.read_bytes()
    if fmt == "PGM":
        return _parse_pgm(data, path)
    return _parse_csv(data, path, 8 if bit_depth is None else bit_depth)


_WS = b" \t\r\n\v\f"


def _header_tokens(data: bytes, path, count: int):
    """Pull ``count`` integer tokens after the magic number, skipping comments.

    Returns the tokens and the offset just past the last token.
    """
    pos, tokens = 2, []
    while len(tokens) < count:
        while pos < len(data) and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end + 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tok = data[start:pos]
        if not tok:
            raise FormatError("truncated PGM header", path)
        if not tok.isdigit():
            raise FormatError(f"malformed PGM header token {tok!r}", path)
        tokens.append(int(tok))
    return tokens, pos


def _parse_pgm(data: bytes, path) -> Band:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})", path)
    (cols, rows, maxval), pos = _header_tokens(data, path, 3)
    if cols < 1 or rows < 1:
        raise FormatError(f"invalid PGM size {cols}x{rows}", path)
    if not 0 < maxval < 65536:
        raise FormatError(f"PGM maxval {maxval} outside 1..65535", path)
    n = rows * cols
    if magic == b"P5":
        if pos >= len(data) or data[pos] not in _WS:
            raise FormatError("missing whitespace after PGM maxval", path)
        raw = data[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = n * dtype.itemsize
        if len(raw) < need:
            got = len(raw) // dtype.itemsize
            raise FormatError(f"raster truncated after {got} of {n} pixels", path,
                              row=got // cols, col=got % cols)
        values = np.frombuffer(raw[:need], dtype=dtype).astype(np.float64)
    else:
        body = re.sub(rb"#[^\n]*", b" ", data[pos:])
        toks = body.split()
        if len(toks) < n:
            raise FormatError(f"raster truncated after {len(toks)} of {n} pixels", path,
                              row=len(toks) // cols, col=len(toks) % cols)
        if len(toks) > n:
            raise FormatError(f"{len(toks) - n} trailing values after {n} pixels", path)
        values = np.empty(n)
        for k, tok in enumerate(toks):
            if not tok.isdigit():
                raise FormatError(f"non-integer sample {tok!r}", path,
                                  row=k // cols, col=k % cols)
            values[k] = int(tok)
    values = values.reshape(rows, cols)
    over = np.argwhere(values > maxval)
    if over.size:
        r, c = (int(x) for x in over[0])
        raise FormatError(f"sample {values[r, c]:g} exceeds maxval {maxval}", path, row=r, col=c)
    return Band(values, bit_depth_for_maxval(maxval))


def _parse_csv(data: bytes, path, bit_depth: int) -> Band:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    rows = []
    for r, rec in enumerate(reader):
        if not rec or all(not c.strip() for c in rec):
            continue
        row = []
        for c, cell in enumerate(rec):
            try:
                row.append(float(cell))
            except ValueError:
                raise FormatError(f"non-numeric cell {cell.strip()!r}", path, row=r, col=c) from None
        if rows and len(row) != len(rows[0]):
            raise FormatError(f"ragged row: {len(row)} values, expected {len(rows[0])}",
                              path, row=len(rows))
        rows.append(row)
    if not rows:
        raise FormatError("empty CSV raster", path)
    values = np.array(rows)
    top = max_dn(bit_depth)
    bad = np.argwhere(~np.isfinite(values) | (values < 0) | (values > top))
    if bad.size:
        r, c = (int(x) for x in bad[0])
        raise FormatError(f"DN {values[r, c]:g} outside [0, {top}] for {bit_depth}-bit band",
                          path, row=r, col=c)
    return Band(values, bit_depth)


def _fmt_csv_value(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def encode_pgm(band: Band, plain: bool = False) -> bytes:
    """PGM bytes for ``band``; DNs are rounded half-up to integers."""
    if band.unbounded:
        raise FormatError("filtered (unbounded) bands cannot be stored as PGM")
    maxval = max_dn(band.bit_depth)
    q = quantize(band.values, band.bit_depth).astype(np.int64)
    if plain:
        lines = [" ".join(str(v) for v in row) for row in q]
        return (f"P2\n{band.cols} {band.rows}\n{maxval}\n" + "\n".join(lines) + "\n").encode()
    dtype = ">u2" if maxval > 255 else "u1"
    return f"P5\n{band.cols} {band.rows}\n{maxval}\n".encode() + q.astype(dtype).tobytes()


def save_band(band: Band, path, format: str | None = None, plain: bool = False) -> None:
    """Write ``band`` as PGM (binary unless ``plain``) or full-precision CSV."""
    path = Path(path)
    fmt = _infer_format(path, format)
    if fmt == "PGM":
        path.write_bytes(encode_pgm(band, plain=plain))
        return
    text = "\n".join(",".join(_fmt_csv_value(v) for v in row) for row in band.values) + "\n"
    path.write_text(text)


def load_multiband(paths: Iterable, names: Sequence[str], bit_depth: int | None = None) -> MultibandImage:
    paths = list(paths)
    if len(paths) != len(names):
        raise ValueError(f"{len(paths)} band files given for {len(names)} band names")
    return MultibandImage(tuple((n, load_band(p, bit_depth=bit_depth)) for n, p in zip(names, paths)))
