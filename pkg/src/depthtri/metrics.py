"""Depth-quality metrics over :class:`~depthtri.frames.DepthFrame` data.

Five measurements are provided: accuracy against a known distance,
adjacent-pixel resolution, temporal depth entropy, zero-contour edge noise
and the radial (ring) structural profile. :func:`classify_region` places a
3-D point inside the sensor's accuracy cone.

Adjacency is the 4-neighbourhood throughout. Zero pixels are invalid and
are skipped by every metric except :func:`edge_noise`, which is about them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AllZeroFrame,
    DimensionMismatch,
    EmptyFrame,
    EmptyRegion,
    NoAdjacentPairs,
    TooFewFrames,
)
from .frames import DepthFrame, Region, crop

DEFAULT_ENTROPY_FRAMES = 30
DEFAULT_RING_BIN_PX = 5


# -- accuracy ----------------------------------------------------------------

def depth_accuracy(frame: DepthFrame, region: Optional[Region], true_distance_mm: float) -> float:
    """Signed error ``d - mean(M_d)``; positive means the sensor under-reads."""
    if not true_distance_mm > 0:
        raise ValueError("true distance must be positive")
    vals = crop(frame, region)
    vals = vals[vals != 0]
    if vals.size == 0:
        raise EmptyRegion("no nonzero pixels in region")
    return float(true_distance_mm) - int(vals.sum()) / vals.size


# -- resolution --------------------------------------------------------------

@dataclass(frozen=True)
class Resolution:
    min_mm: int
    mean_mm: float
    max_mm: int
    stddev_mm: float
    pair_count: int


def adjacent_differences(values: np.ndarray) -> np.ndarray:
    """|a - b| for every horizontally or vertically adjacent nonzero pair."""
    v = np.asarray(values, dtype=np.int64)
    h_ok = (v[:, 1:] != 0) & (v[:, :-1] != 0)
    v_ok = (v[1:, :] != 0) & (v[:-1, :] != 0)
    h = np.abs(v[:, 1:] - v[:, :-1])[h_ok]
    w = np.abs(v[1:, :] - v[:-1, :])[v_ok]
    return np.concatenate([h, w])


def depth_resolution(frame: DepthFrame, region: Optional[Region] = None) -> Resolution:
    """Statistics of the adjacent-pixel difference multiset.

    ``min_mm`` is the classic resolution (the smallest detectable step) and
    is taken over the full multiset, zero differences included, so a flat
    patch has resolution 0. Mean, max and population stddev describe the
    same multiset.
    """
    vals = crop(frame, region)
    if not (vals != 0).any():
        raise EmptyRegion("no nonzero pixels in region")
    diffs = adjacent_differences(vals)
    if diffs.size == 0:
        raise NoAdjacentPairs("region has no adjacent nonzero pixel pairs")
    n = int(diffs.size)
    mean = int(diffs.sum()) / n
    return Resolution(
        min_mm=int(diffs.min()),
        mean_mm=mean,
        max_mm=int(diffs.max()),
        stddev_mm=float(np.sqrt(float(((diffs - mean) ** 2).sum()) / n)),
        pair_count=n,
    )


# -- entropy -----------------------------------------------------------------

@dataclass(frozen=True)
class EntropyMap:
    width: int
    height: int
    entropy_bits: np.ndarray = field(repr=False)  # NaN marks invalid pixels
    mean_bits: float
    stddev_bits: float
    valid_count: int
    frame_count: int

    @property
    def max_bits(self) -> float:
        return float(np.nanmax(self.entropy_bits)) if self.valid_count else 0.0


def _difference_entropy(diffs: np.ndarray) -> np.ndarray:
    """Shannon entropy (bits) of each column of an ``(n, P)`` integer array.

    Every sample is weighted by its own relative frequency c/n, so
    ``H = -sum_k (1/n) log2(c_k / n)`` equals ``-sum_j p_j log2 p_j``.
    """
    n = diffs.shape[0]
    s = np.sort(diffs, axis=0)
    idx = np.arange(n)[:, None]
    starts = np.ones(s.shape, dtype=bool)
    starts[1:] = s[1:] != s[:-1]
    ends = np.ones(s.shape, dtype=bool)
    ends[:-1] = starts[1:]
    first = np.maximum.accumulate(np.where(starts, idx, 0), axis=0)
    last = np.minimum.accumulate(np.where(ends, idx, n - 1)[::-1], axis=0)[::-1]
    p = (last - first + 1) / n
    return -(np.log2(p) / n).sum(axis=0) + 0.0


def depth_entropy(series: Sequence[DepthFrame], region: Optional[Region] = None) -> EntropyMap:
    """Per-pixel entropy of frame-to-frame depth differences.

    A pixel counts only when it is nonzero in every frame; elsewhere the map
    holds NaN. Differences are integer millimetres and each distinct value is
    its own histogram bin.
    """
    if len(series) < 2:
        raise TooFewFrames(f"need at least 2 frames, got {len(series)}")
    shape = series[0].shape
    for k, f in enumerate(series):
        if f.shape != shape:
            raise DimensionMismatch(f"frame {k} is {f.shape[1]}x{f.shape[0]}, expected {shape[1]}x{shape[0]}")
    stack = np.stack([crop(f, region) for f in series])
    valid = (stack != 0).all(axis=0)
    h, w = valid.shape
    grid = np.full((h, w), np.nan)
    count = int(valid.sum())
    if count:
        diffs = np.diff(stack[:, valid], axis=0)
        grid[valid] = _difference_entropy(diffs)
        ent = grid[valid]
        mean = float(ent.mean())
        std = float(ent.std())
    else:
        mean = std = float("nan")
    grid.flags.writeable = False
    return EntropyMap(
        width=w,
        height=h,
        entropy_bits=grid,
        mean_bits=mean,
        stddev_bits=std,
        valid_count=count,
        frame_count=len(series),
    )


# -- edge noise --------------------------------------------------------------

UNBOUNDED = np.iinfo(np.int64).max


@dataclass(frozen=True)
class EdgeNoise:
    contour_pixel_count: int
    max_width_px: int
    width_histogram: dict  # width -> number of contour pixels


def _run_widths(zero: np.ndarray, sep: np.ndarray) -> np.ndarray:
    """Length of the zero run through each zero element of a 1-D mask.

    ``sep`` marks line separators; a run whose only neighbours are
    separators (a line that is entirely zero) gets ``UNBOUNDED``, because the
    frame border alone does not bound a run.
    """
    edges = np.diff(np.concatenate(([0], zero.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    lengths = stops - starts
    bounded = ~sep[starts - 1] | ~sep[np.minimum(stops, sep.size - 1)]
    return np.repeat(np.where(bounded, lengths, UNBOUNDED), lengths)


@lru_cache(maxsize=8)
def _line_layouts(h: int, w: int):
    """Flat pixel indices of every row, column and diagonal, -1 between lines.

    One layout per direction; each starts and ends with a separator.
    """
    flat = np.arange(h * w).reshape(h, w)
    groups = [
        list(flat),
        list(flat.T),
        [np.diagonal(flat, off) for off in range(-(h - 1), w)],
        [np.diagonal(flat[:, ::-1], off) for off in range(-(h - 1), w)],
    ]
    layouts = []
    for lines in groups:
        parts = [np.array([-1])]
        for line in lines:
            parts.extend((line, np.array([-1])))
        layout = np.concatenate(parts)
        layout.flags.writeable = False
        layouts.append(layout)
    return layouts


def _contour(zero: np.ndarray) -> np.ndarray:
    nz = ~zero
    touch = np.zeros_like(zero)
    touch[1:, :] |= nz[:-1, :]
    touch[:-1, :] |= nz[1:, :]
    touch[:, 1:] |= nz[:, :-1]
    touch[:, :-1] |= nz[:, 1:]
    return zero & touch


def edge_noise(frame: DepthFrame) -> EdgeNoise:
    """Zero-contour analysis.

    The contour is every zero pixel 4-adjacent to a nonzero one. A contour
    pixel's width is the shortest zero run through it along the row, the
    column or either diagonal, so a band that hugs an edge measures its
    thickness across the edge, corners included. ``max_width_px`` is the
    largest such width.
    """
    zero = frame.samples == 0
    if zero.all():
        raise AllZeroFrame("frame has no nonzero pixel")
    contour = _contour(zero)
    n = int(contour.sum())
    if n == 0:
        return EdgeNoise(0, 0, {})
    flat_zero = zero.ravel()
    best = np.full(flat_zero.size, UNBOUNDED, dtype=np.int64)
    for layout in _line_layouts(*zero.shape):
        sep = layout < 0
        z = np.zeros(layout.size, dtype=bool)
        z[~sep] = flat_zero[layout[~sep]]
        pix = layout[z]
        best[pix] = np.minimum(best[pix], _run_widths(z, sep))
    widths = best[contour.ravel()]
    values, counts = np.unique(widths, return_counts=True)
    return EdgeNoise(
        contour_pixel_count=n,
        max_width_px=int(widths.max()),
        width_histogram={int(v): int(c) for v, c in zip(values, counts)},
    )


# -- structural (ring) noise -------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    bin_radius_px: list
    mean_depth_mm: list  # None where the bin is empty
    pixel_count: list
    center_px: tuple

    def present(self):
        """(radius, mean) pairs for non-empty bins."""
        return [(r, m) for r, m in zip(self.bin_radius_px, self.mean_depth_mm) if m is not None]

    def to_csv(self) -> str:
        lines = ["radius_px,mean_depth_mm"]
        for r, m in zip(self.bin_radius_px, self.mean_depth_mm):
            lines.append(f"{r!r},{'' if m is None else repr(m)}")
        return "\n".join(lines) + "\n"


def structural_noise(frame: DepthFrame, bin_width_px: float = DEFAULT_RING_BIN_PX) -> RadialProfile:
    """Mean depth per radial bin around the centroid of the valid pixels."""
    if bin_width_px < 1:
        raise ValueError("bin width must be >= 1 px")
    data = frame.samples
    valid = data != 0
    if not valid.any():
        raise EmptyFrame("frame has no nonzero pixel")
    ys, xs = np.nonzero(valid)
    cx, cy = float(xs.mean()), float(ys.mean())
    radius = np.hypot(xs - cx, ys - cy)
    bins = np.floor(radius / bin_width_px).astype(np.int64)
    nbins = int(bins.max()) + 1
    depth = data[valid].astype(np.float64)
    sums = np.bincount(bins, weights=depth, minlength=nbins)
    counts = np.bincount(bins, minlength=nbins)
    means = [float(s / c) if c else None for s, c in zip(sums, counts)]
    centers = [(k + 0.5) * bin_width_px for k in range(nbins)]
    return RadialProfile(
        bin_radius_px=centers,
        mean_depth_mm=means,
        pixel_count=[int(c) for c in counts],
        center_px=(cx, cy),
    )


# -- accuracy cone -----------------------------------------------------------

class AccuracyRegion(enum.Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"
    OUT_OF_VIEW = "out_of_view"


@dataclass(frozen=True)
class AccuracyCone:
    """Elliptical view cone split into distance shells along the optical axis."""

    horizontal_fov_deg: float = 70.0
    vertical_fov_deg: float = 60.0
    min_range_mm: float = 500.0
    green_max_mm: float = 2000.0
    yellow_max_mm: float = 3000.0
    max_range_mm: float = 4000.0

    def __post_init__(self):
        if not (0 < self.horizontal_fov_deg < 180 and 0 < self.vertical_fov_deg < 180):
            raise ValueError("field of view angles must lie in (0, 180) degrees")
        if not (0 <= self.min_range_mm < self.green_max_mm < self.yellow_max_mm <= self.max_range_mm):
            raise ValueError("need min_range < green_max < yellow_max <= max_range")

    @property
    def horizontal_half_angle_deg(self) -> float:
        return self.horizontal_fov_deg / 2

    @property
    def vertical_half_angle_deg(self) -> float:
        return self.vertical_fov_deg / 2


DEFAULT_CONE = AccuracyCone()

_REGION_CODES = (AccuracyRegion.GREEN, AccuracyRegion.YELLOW, AccuracyRegion.RED, AccuracyRegion.OUT_OF_VIEW)


def classify_points(points: np.ndarray, cone: AccuracyCone = DEFAULT_CONE) -> np.ndarray:
    """Vectorised :func:`classify_region`; returns indices into ``_REGION_CODES``."""
    p = np.asarray(points, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    h_ang = np.degrees(np.abs(np.arctan2(x, z)))
    v_ang = np.degrees(np.abs(np.arctan2(y, z)))
    out = (
        ~np.isfinite(z)
        | (h_ang > cone.horizontal_half_angle_deg)
        | (v_ang > cone.vertical_half_angle_deg)
        | (z < cone.min_range_mm)
        | (z > cone.max_range_mm)
    )
    code = np.where(z <= cone.green_max_mm, 0, np.where(z <= cone.yellow_max_mm, 1, 2))
    return np.where(out, 3, code)


def classify_region(point, cone: AccuracyCone = DEFAULT_CONE) -> AccuracyRegion:
    x, y, z = (float(c) for c in point)
    if not all(math.isfinite(c) for c in (x, y, z)):
        return AccuracyRegion.OUT_OF_VIEW
    return _REGION_CODES[int(classify_points(np.array([x, y, z]), cone))]
