"""Deterministic synthetic multi-view B-mode scenes with ground truth.

The scene lives in the common frame: an elliptical vessel wall plus
horizontal reflector segments.  Each view renders the scene in its own
native frame (the inverse of its `to_common` transform).  Reflectors that
stay near-horizontal in a view's frame (within +/-20 degrees of the lateral
axis) spawn a reverberation echo train straight down the beam and cast an
acoustic shadow below; reflectors seen near-vertically do neither.

Speckle is additive Rayleigh noise drawn from an explicit xorshift64* PRNG
(state' per step: s ^= s >> 12; s ^= s << 25; s ^= s >> 27; output
(s * 0x2545F4914F6CDD1D) >> 11 scaled to [0, 1)), inverse-transform
sampled, so fixtures are bit-identical across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .image import Image, RigidTransform2D

__all__ = [
    "VesselSpec",
    "ReverbSpec",
    "ReflectorSpec",
    "SpeckleSpec",
    "PhantomSpec",
    "PhantomView",
    "PhantomScene",
    "generate",
    "Xorshift64Star",
]

NEAR_HORIZONTAL_DEG = 20.0

_MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


class Xorshift64Star:
    """Documented 64-bit xorshift* generator for reproducible speckle."""

    def __init__(self, seed: int):
        self.state = (seed & _MASK64) or 0x9E3779B97F4A7C15

    def next_uint64(self) -> int:
        s = self.state
        s ^= s >> 12
        s ^= (s << 25) & _MASK64
        s ^= s >> 27
        self.state = s
        return (s * _MULT) & _MASK64

    def next_float(self) -> float:
        # 53 uniform mantissa bits in [0, 1)
        return (self.next_uint64() >> 11) * (1.0 / (1 << 53))

    def rayleigh(self, scale: float, n: int) -> np.ndarray:
        u = np.array([self.next_float() for _ in range(n)])
        return scale * np.sqrt(-2.0 * np.log1p(-u))


@dataclass(frozen=True)
class VesselSpec:
    cx: float
    cy: float
    a: float
    b: float
    wall_thickness: float = 3.0
    wall_intensity: float = 0.8
    rotation: float = 0.0


@dataclass(frozen=True)
class ReverbSpec:
    count: int = 3
    spacing: float = 30.0     # rows between consecutive echoes
    decay: float = 0.5        # per-echo intensity factor, in (0, 1)


@dataclass(frozen=True)
class ReflectorSpec:
    row: float
    col_start: float
    col_end: float
    intensity: float = 0.9
    thickness: float = 3.0
    reverb: ReverbSpec | None = None
    shadow: float = 1.0       # attenuation factor applied below, 1 = none


@dataclass(frozen=True)
class SpeckleSpec:
    scale: float = 0.03       # Rayleigh scale
    seed: int = 1


@dataclass(frozen=True)
class PhantomSpec:
    width: int
    height: int
    vessel: VesselSpec | None = None
    reflectors: tuple[ReflectorSpec, ...] = ()
    speckle: SpeckleSpec | None = None
    views: tuple[RigidTransform2D, ...] = (RigidTransform2D(),)

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomSpec":
        known = {"width", "height", "vessel", "reflectors", "speckle", "views"}
        extra = set(d) - known
        if extra:
            raise SpecError(f"unknown phantom spec keys: {sorted(extra)}")
        vessel = VesselSpec(**d["vessel"]) if d.get("vessel") else None
        reflectors = []
        for r in d.get("reflectors", []):
            r = dict(r)
            if r.get("reverb"):
                r["reverb"] = ReverbSpec(**r["reverb"])
            reflectors.append(ReflectorSpec(**r))
        speckle = SpeckleSpec(**d["speckle"]) if d.get("speckle") else None
        views = tuple(RigidTransform2D.from_dict(v) for v in d.get("views", [{}]))
        return cls(int(d["width"]), int(d["height"]), vessel,
                   tuple(reflectors), speckle, views)


@dataclass
class PhantomView:
    image: Image                 # native frame
    boundary_mask: np.ndarray    # ground truth: vessel wall + reflector pixels
    artifact_mask: np.ndarray    # ground truth: reverberation echo pixels
    to_common: RigidTransform2D


@dataclass
class PhantomScene:
    views: list[PhantomView]
    spec: PhantomSpec

    def structural_confidences(self, low: float = 0.2) -> list[np.ndarray]:
        """Ground-truth-derived structural confidence: `low` on artifact
        pixels, 1 elsewhere (a stand-in for external confidence estimators)."""
        return [np.where(v.artifact_mask, low, 1.0).astype(np.float32)
                for v in self.views]


def _validate(spec: PhantomSpec) -> None:
    w, h = spec.width, spec.height
    if w <= 0 or h <= 0:
        raise SpecError("phantom dimensions must be positive")
    if spec.vessel is not None:
        v = spec.vessel
        r = max(v.a, v.b) + v.wall_thickness
        if not (0 <= v.cx - r and v.cx + r < w and 0 <= v.cy - r and v.cy + r < h):
            raise SpecError("vessel extends outside the phantom")
        if v.a <= 0 or v.b <= 0 or v.wall_thickness <= 0:
            raise SpecError("vessel axes and wall thickness must be positive")
    for refl in spec.reflectors:
        if not (0 <= refl.col_start <= refl.col_end < w and 0 <= refl.row < h):
            raise SpecError("reflector outside the phantom")
        if refl.reverb is not None and not 0.0 < refl.reverb.decay < 1.0:
            raise SpecError("echo decay factor must lie in (0, 1)")
        if not 0.0 <= refl.shadow <= 1.0:
            raise SpecError("shadow factor must lie in [0, 1]")


def _wrap_angle(a: float) -> float:
    """Fold to (-pi/2, pi/2]: segment orientation modulo 180 degrees."""
    a = math.fmod(a, math.pi)
    if a > math.pi / 2:
        a -= math.pi
    elif a <= -math.pi / 2:
        a += math.pi
    return a


def _common_coords(t: RigidTransform2D, width: int, height: int):
    px, py = np.meshgrid(np.arange(width, dtype=np.float64),
                         np.arange(height, dtype=np.float64))
    return t.apply(px, py)


def _render_view(spec: PhantomSpec, t: RigidTransform2D,
                 rng_seed: int) -> PhantomView:
    w, h = spec.width, spec.height
    img = np.zeros((h, w), dtype=np.float64)
    boundary = np.zeros((h, w), dtype=bool)
    artifact = np.zeros((h, w), dtype=bool)
    qx, qy = _common_coords(t, w, h)

    if spec.vessel is not None:
        v = spec.vessel
        c, s = math.cos(v.rotation), math.sin(v.rotation)
        dx, dy = qx - v.cx, qy - v.cy
        u = c * dx + s * dy
        vv = -s * dx + c * dy
        rho = np.sqrt((u / v.a) ** 2 + (vv / v.b) ** 2)
        half = v.wall_thickness / (2.0 * min(v.a, v.b))
        wall = np.abs(rho - 1.0) <= half
        img[wall] = v.wall_intensity
        boundary |= wall

    near_horizontal = abs(_wrap_angle(-t.rotation)) <= math.radians(NEAR_HORIZONTAL_DEG)

    for refl in spec.reflectors:
        hit = ((qy >= refl.row) & (qy < refl.row + refl.thickness)
               & (qx >= refl.col_start) & (qx <= refl.col_end))
        img[hit] = np.maximum(img[hit], refl.intensity)
        boundary |= hit
        if not near_horizontal:
            continue
        rows, cols = np.nonzero(hit)
        if rows.size == 0:
            continue
        # Shadow: attenuate everything below the reflector in each column.
        if refl.shadow < 1.0:
            for col in np.unique(cols):
                bottom = rows[cols == col].max()
                img[bottom + 1:, col] *= refl.shadow
        # Echo train straight down the beam at multiples of the spacing.
        if refl.reverb is not None:
            rv = refl.reverb
            for n in range(1, rv.count + 1):
                erows = rows + int(round(n * rv.spacing))
                keep = erows < h
                if not keep.any():
                    break
                level = refl.intensity * rv.decay ** n
                er, ec = erows[keep], cols[keep]
                img[er, ec] = np.maximum(img[er, ec], level)
                artifact[er, ec] = True

    if spec.speckle is not None:
        rng = Xorshift64Star(rng_seed)
        noise = rng.rayleigh(spec.speckle.scale, h * w).reshape(h, w)
        img = img + noise

    artifact &= ~boundary  # ground-truth masks stay disjoint
    return PhantomView(Image(np.clip(img, 0.0, 1.0).astype(np.float32)),
                       boundary, artifact, t)


def generate(spec: PhantomSpec) -> PhantomScene:
    """Render every view of the scene; bit-identical for identical specs."""
    _validate(spec)
    base_seed = spec.speckle.seed if spec.speckle is not None else 0
    views = []
    for idx, t in enumerate(spec.views):
        seed = (base_seed ^ ((idx + 1) * 0x9E3779B97F4A7C15)) & _MASK64
        views.append(_render_view(spec, t, seed))
    return PhantomScene(views, spec)
