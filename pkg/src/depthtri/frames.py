"""Depth frames: data model, region statistics and DTF1/CSV file I/O.

A frame is a rectangular grid of integer millimetre depths. Zero is the
only invalid value; every statistic here skips it.

Binary layout (DTF1)::

    b"DTF1 <width> <height>\\n" + width*height little-endian uint16, row-major

CSV layout::

    <width> <height>
    v,v,v,...        (height lines of width integers)
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyRegion,
    FormatError,
    OutOfBounds,
    TruncatedFile,
)

DEFAULT_WIDTH = 512
DEFAULT_HEIGHT = 424
MAGIC = b"DTF1"

PathLike = Union[str, Path]


class DepthFrame:
    """Immutable ``height x width`` grid of uint16 depths in millimetres."""

    __slots__ = ("_samples",)

    def __init__(self, samples):
        arr = np.asarray(samples)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D grid, got shape {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise DimensionMismatch(f"frame must be at least 2x2, got {arr.shape[1]}x{arr.shape[0]}")
        if arr.size and (arr.min() < 0 or arr.max() > 0xFFFF):
            raise FormatError("depth samples must lie in [0, 65535]")
        arr = np.array(arr, dtype=np.uint16, copy=True)
        arr.flags.writeable = False
        self._samples = arr

    @classmethod
    def constant(cls, value: int, width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT) -> "DepthFrame":
        return cls(np.full((height, width), value, dtype=np.uint16))

    @property
    def samples(self) -> np.ndarray:
        """Read-only ``(height, width)`` view."""
        return self._samples

    @property
    def width(self) -> int:
        return self._samples.shape[1]

    @property
    def height(self) -> int:
        return self._samples.shape[0]

    @property
    def shape(self) -> tuple:
        return self._samples.shape

    def __eq__(self, other):
        if not isinstance(other, DepthFrame):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._samples, other._samples))

    def __hash__(self):
        return hash((self.shape, self._samples.tobytes()))

    def __repr__(self):
        return f"DepthFrame({self.width}x{self.height})"


@dataclass(frozen=True)
class Region:
    """Pixel rectangle: top-left corner ``(x, y)`` plus width and height."""

    x: int
    y: int
    w: int
    h: int

    @classmethod
    def parse(cls, text: str) -> "Region":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"region must be 'x,y,w,h', got {text!r}")
        return cls(*(int(p) for p in parts))

    @classmethod
    def centered(cls, frame: DepthFrame, w: int, h: int) -> "Region":
        return cls((frame.width - w) // 2, (frame.height - h) // 2, w, h)

    def slices(self):
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)


def crop(frame: DepthFrame, region: Optional[Region] = None) -> np.ndarray:
    """Return the region's samples as an int64 array, bounds-checked."""
    data = frame.samples
    if region is None:
        return data.astype(np.int64)
    if (
        region.w < 1
        or region.h < 1
        or region.x < 0
        or region.y < 0
        or region.x + region.w > frame.width
        or region.y + region.h > frame.height
    ):
        raise OutOfBounds(f"{region} exceeds {frame.width}x{frame.height} frame")
    return data[region.slices()].astype(np.int64)


@dataclass(frozen=True)
class FrameStats:
    mean_mm: float
    stddev_mm: float
    min_mm: int
    max_mm: int
    valid_count: int


def frame_stats(frame: DepthFrame, region: Optional[Region] = None) -> FrameStats:
    """Mean, population stddev and range of the nonzero pixels in ``region``."""
    vals = crop(frame, region)
    vals = vals[vals != 0]
    if vals.size == 0:
        raise EmptyRegion("no nonzero pixels in region")
    n = int(vals.size)
    # integer sums are exact; only the final division rounds
    total = int(vals.sum())
    mean = total / n
    sq_dev = float(((vals - mean) ** 2).sum())
    return FrameStats(
        mean_mm=mean,
        stddev_mm=float(np.sqrt(sq_dev / n)),
        min_mm=int(vals.min()),
        max_mm=int(vals.max()),
        valid_count=n,
    )


# -- I/O ---------------------------------------------------------------------

def _parse_dims(tokens) -> tuple:
    if len(tokens) != 2:
        raise FormatError(f"header must carry width and height, got {tokens!r}")
    try:
        width, height = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise FormatError(f"non-integer dimensions {tokens!r}") from exc
    if width < 2 or height < 2:
        raise FormatError(f"frame must be at least 2x2, got {width}x{height}")
    return width, height


def decode_binary(blob: bytes) -> DepthFrame:
    nl = blob.find(b"\n")
    if nl < 0:
        raise FormatError("missing header line")
    head = blob[:nl].split()
    if not head or head[0] != MAGIC:
        raise FormatError("bad magic, expected DTF1")
    width, height = _parse_dims(head[1:])
    payload = blob[nl + 1:]
    expected = 2 * width * height
    if len(payload) < expected:
        raise TruncatedFile(f"header declares {width}x{height} but only {len(payload) // 2} samples follow")
    if len(payload) > expected:
        raise DimensionMismatch(f"{(len(payload) - expected)} trailing bytes after {width}x{height} samples")
    samples = np.frombuffer(payload, dtype="<u2").reshape(height, width)
    return DepthFrame(samples)


def encode_binary(frame: DepthFrame) -> bytes:
    header = f"DTF1 {frame.width} {frame.height}\n".encode("ascii")
    return header + frame.samples.astype("<u2").tobytes()


def decode_csv(text: str) -> DepthFrame:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty CSV frame")
    width, height = _parse_dims(lines[0].replace(",", " ").split())
    body = lines[1:]
    if len(body) < height:
        raise TruncatedFile(f"header declares {height} rows, found {len(body)}")
    if len(body) > height:
        raise DimensionMismatch(f"header declares {height} rows, found {len(body)}")
    rows = []
    for k, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != width:
            raise DimensionMismatch(f"row {k} has {len(cells)} values, expected {width}")
        try:
            rows.append([int(c) for c in cells])
        except ValueError as exc:
            raise FormatError(f"row {k}: {exc}") from exc
    arr = np.array(rows, dtype=np.int64)
    if arr.min() < 0 or arr.max() > 0xFFFF:
        raise FormatError("CSV depth values must lie in [0, 65535]")
    return DepthFrame(arr)


def encode_csv(frame: DepthFrame) -> str:
    out = [f"{frame.width} {frame.height}"]
    out.extend(",".join(str(int(v)) for v in row) for row in frame.samples)
    return "\n".join(out) + "\n"


def read_frame(path: PathLike) -> DepthFrame:
    """Load a frame, sniffing DTF1 by its magic and falling back to CSV."""
    blob = Path(path).read_bytes()
    if blob.startswith(MAGIC):
        return decode_binary(blob)
    try:
        text = blob.decode("ascii")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: neither DTF1 nor ASCII CSV") from exc
    return decode_csv(text)


def write_frame(frame: DepthFrame, path: PathLike, fmt: Optional[str] = None) -> None:
    """Write ``frame``; ``fmt`` is ``"dtf1"`` or ``"csv"``, else taken from the suffix."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "dtf1"
    if fmt == "csv":
        path.write_text(encode_csv(frame), encoding="ascii")
    elif fmt == "dtf1":
        path.write_bytes(encode_binary(frame))
    else:
        raise ValueError(f"unknown frame format {fmt!r}")


def read_frames(paths: Iterable[PathLike]) -> list:
    return [read_frame(p) for p in paths]


def frame_files(directory: PathLike) -> list:
    """Frame files of a directory in lexicographic order (``*.dtf``, ``*.dtf1``, ``*.csv``)."""
    directory = Path(directory)
    return sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in (".dtf", ".dtf1", ".csv")
    )
