"""Synthetic time-of-flight depth sensor.

A pinhole camera (512x424, 70x60 degree field of view) looks down +z and
renders planar targets into :class:`DepthFrame` objects. Depth is the
z-coordinate of the hit point, so a wall perpendicular to the optical axis
renders flat before noise.

Noise, applied in this order:

1. a stepwise bias by accuracy region (green / yellow / red shells);
2. a radial ring term ``-ring_amplitude * (r_px / r_max)**2``;
3. rounding to integer millimetres;
4. temporal jitter: a Gaussian draw of std ``pixel_sigma`` (scaled linearly
   with depth), rounded and clipped to ``+-jitter_span/2``. The draw depends
   only on ``(seed, t, pixel)``.

Finally, target pixels within ``edge_width_px`` 4-steps of anything that is
not the target are zeroed, leaving the zero contour seen around object
edges.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import NoIntersection
from .frames import DEFAULT_HEIGHT, DEFAULT_WIDTH, DepthFrame
from .metrics import AccuracyCone, classify_points

_CROSS = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class NoiseModel:
    green_offset_mm: float = 1.0
    yellow_offset_mm: float = 3.0
    red_offset_mm: float = 5.0
    pixel_sigma_mm: float = 1.2
    reference_distance_mm: float = 2000.0
    jitter_span_mm: int = 6
    edge_width_px: int = 2
    ring_amplitude_mm: float = 2.0
    min_range_mm: float = 500.0
    max_range_mm: float = 4000.0
    green_max_mm: float = 2000.0
    yellow_max_mm: float = 3000.0
    horizontal_fov_deg: float = 70.0
    vertical_fov_deg: float = 60.0
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    seed: int = 0

    def __post_init__(self):
        if self.jitter_span_mm < 0 or self.jitter_span_mm % 2:
            raise ValueError("jitter_span_mm must be even and >= 0")
        if not 0 <= self.edge_width_px <= 3:
            raise ValueError("edge_width_px must lie in [0, 3]")
        if self.pixel_sigma_mm < 0 or self.ring_amplitude_mm < 0:
            raise ValueError("noise magnitudes must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.width < 2 or self.height < 2:
            raise ValueError("frame must be at least 2x2")
        self.cone  # validates the range ordering

    @classmethod
    def noiseless(cls, **overrides) -> "NoiseModel":
        base = dict(
            green_offset_mm=0.0, yellow_offset_mm=0.0, red_offset_mm=0.0,
            pixel_sigma_mm=0.0, jitter_span_mm=0, edge_width_px=0, ring_amplitude_mm=0.0,
        )
        base.update(overrides)
        return cls(**base)

    @property
    def cone(self) -> AccuracyCone:
        return AccuracyCone(
            horizontal_fov_deg=self.horizontal_fov_deg,
            vertical_fov_deg=self.vertical_fov_deg,
            min_range_mm=self.min_range_mm,
            green_max_mm=self.green_max_mm,
            yellow_max_mm=self.yellow_max_mm,
            max_range_mm=self.max_range_mm,
        )

    @property
    def offsets(self) -> np.ndarray:
        return np.array([self.green_offset_mm, self.yellow_offset_mm, self.red_offset_mm, 0.0])

    def with_seed(self, seed: int) -> "NoiseModel":
        return replace(self, seed=seed)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "NoiseModel":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown noise model fields: {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True)
class PlanarTarget:
    """A plane through ``center`` with normal ``normal``.

    ``extent`` is the ``(width, height)`` of a rectangle centred on
    ``center``; ``None`` means an unbounded wall.
    """

    center: tuple
    normal: tuple = (0.0, 0.0, -1.0)
    extent: Optional[tuple] = None

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        n = np.asarray(self.normal, dtype=float)
        if len(c) != 3 or n.shape != (3,):
            raise ValueError("center and normal must be 3-vectors")
        norm = float(np.linalg.norm(n))
        if not norm > 0:
            raise ValueError("normal must be nonzero")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "normal", tuple(float(v) for v in n / norm))
        if self.extent is not None:
            ext = tuple(float(v) for v in self.extent)
            if len(ext) != 2 or min(ext) <= 0:
                raise ValueError("extent must be two positive lengths")
            object.__setattr__(self, "extent", ext)

    @classmethod
    def wall(cls, distance_mm: float) -> "PlanarTarget":
        return cls((0.0, 0.0, float(distance_mm)))

    @classmethod
    def plate(cls, center, width_mm: float, height_mm: float, normal=(0.0, 0.0, -1.0)) -> "PlanarTarget":
        return cls(tuple(center), tuple(normal), (width_mm, height_mm))

    def axes(self):
        """In-plane unit vectors (horizontal, vertical) spanning the rectangle."""
        n = np.array(self.normal)
        up = np.array([0.0, 1.0, 0.0])
        if abs(n @ up) > 0.999:
            up = np.array([0.0, 0.0, 1.0])
        u = np.cross(up, n)
        u /= np.linalg.norm(u)
        return u, np.cross(n, u)

    def to_json(self) -> dict:
        return {
            "center": list(self.center),
            "normal": list(self.normal),
            "extent": None if self.extent is None else list(self.extent),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PlanarTarget":
        return cls(tuple(obj["center"]), tuple(obj.get("normal", (0.0, 0.0, -1.0))), obj.get("extent"))


@dataclass(frozen=True)
class Camera:
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    horizontal_fov_deg: float = 70.0
    vertical_fov_deg: float = 60.0

    @classmethod
    def for_model(cls, model: NoiseModel) -> "Camera":
        return cls(model.width, model.height, model.horizontal_fov_deg, model.vertical_fov_deg)

    @property
    def fx(self) -> float:
        return (self.width / 2) / math.tan(math.radians(self.horizontal_fov_deg / 2))

    @property
    def fy(self) -> float:
        return (self.height / 2) / math.tan(math.radians(self.vertical_fov_deg / 2))

    @property
    def principal(self) -> tuple:
        return ((self.width - 1) / 2, (self.height - 1) / 2)

    def rays(self) -> np.ndarray:
        """``(height, width, 3)`` ray directions with unit z component."""
        cx, cy = self.principal
        v, u = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return np.stack([(u - cx) / self.fx, (v - cy) / self.fy, np.ones_like(u)], axis=-1)

    def pixel_radius(self) -> np.ndarray:
        """Distance of every pixel centre from the principal point, normalised to the corner."""
        cx, cy = self.principal
        v, u = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return np.hypot(u - cx, v - cy) / math.hypot(cx, cy)

    def project(self, point) -> tuple:
        x, y, z = (float(c) for c in point)
        cx, cy = self.principal
        return (cx + self.fx * x / z, cy + self.fy * y / z)


def _intersect(target: PlanarTarget, rays: np.ndarray):
    """Ray parameter (== z depth) of each hit and the mask of rays that hit."""
    n = np.array(target.normal)
    c = np.array(target.center)
    denom = rays @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        depth = np.where(np.abs(denom) > 1e-12, (c @ n) / denom, np.nan)
    hit = np.isfinite(depth) & (depth > 0)
    if target.extent is not None:
        u, w = target.axes()
        rel = rays * np.where(hit, depth, 0.0)[..., None] - c
        hw, hh = target.extent[0] / 2, target.extent[1] / 2
        hit &= (np.abs(rel @ u) <= hw) & (np.abs(rel @ w) <= hh)
    return np.where(hit, depth, np.nan), hit


@dataclass
class _Base:
    depth: np.ndarray   # int64 rounded depth with bias and ring, 0 where invalid
    sigma: np.ndarray   # per-pixel jitter std
    valid: np.ndarray


def _render_base(target: PlanarTarget, model: NoiseModel, background: Optional[PlanarTarget]) -> _Base:
    cam = Camera.for_model(model)
    rays = cam.rays()
    depth, on_target = _intersect(target, rays)
    if not on_target.any():
        raise NoIntersection("target is not hit by any camera ray")
    z = depth.copy()
    if background is not None:
        bg_depth, on_bg = _intersect(background, rays)
        fill = ~on_target & on_bg
        z[fill] = bg_depth[fill]
    hits = rays * np.nan_to_num(z)[..., None]
    codes = classify_points(hits, model.cone)
    valid = np.isfinite(z) & (codes != 3)

    if model.edge_width_px > 0:
        near_other = ndimage.binary_dilation(
            ~on_target, structure=_CROSS, iterations=model.edge_width_px, border_value=0
        )
        valid &= ~(on_target & near_other)

    zz = np.nan_to_num(z)
    biased = zz + model.offsets[codes] - model.ring_amplitude_mm * cam.pixel_radius() ** 2
    rounded = np.where(valid, np.rint(biased), 0).astype(np.int64)
    sigma = model.pixel_sigma_mm * zz / model.reference_distance_mm
    return _Base(rounded, sigma, valid)


def _jitter(base: _Base, model: NoiseModel, t: int) -> np.ndarray:
    half = model.jitter_span_mm // 2
    if half == 0 or model.pixel_sigma_mm == 0:
        return np.zeros(base.depth.shape, dtype=np.int64)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((model.seed, t))))
    draw = rng.standard_normal(base.depth.shape)
    return np.clip(np.rint(draw * base.sigma), -half, half).astype(np.int64)


def _finish(base: _Base, model: NoiseModel, t: int) -> DepthFrame:
    vals = base.depth + _jitter(base, model, t)
    vals = np.clip(vals, int(math.ceil(model.min_range_mm)), int(model.max_range_mm))
    return DepthFrame(np.where(base.valid, vals, 0))


def render_frame(target: PlanarTarget, model: NoiseModel, t: int = 0,
                 background: Optional[PlanarTarget] = None) -> DepthFrame:
    """Render frame ``t`` of ``target`` (optionally in front of ``background``)."""
    if t < 0:
        raise ValueError("frame index must be >= 0")
    return _finish(_render_base(target, model, background), model, t)


def render_series(target: PlanarTarget, model: NoiseModel, count: int,
                  background: Optional[PlanarTarget] = None) -> list:
    """Frames ``t = 0 .. count-1``; they differ only by the temporal jitter."""
    if count < 2:
        raise ValueError("a series needs at least 2 frames")
    base = _render_base(target, model, background)
    return [_finish(base, model, t) for t in range(count)]
