"""Fusion of co-registered multi-view ultrasound images.

Baselines: per-pixel average, per-pixel maximum, and confidence-weighted
average (uncertainty-based fusion).  The main method blends, per Laplacian
pyramid layer, a per-pixel view selection (largest local contrast, gated by
structural-confidence agreement) with an intensity-confidence weighted
average, then enhances detected anatomic boundaries while reconstructing.

All methods operate on views already warped into the common frame, using
their validity masks; pixels observed by no view are set to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import pyramid as pyr
from .boundary import BoundaryParams, detect_boundaries
from .confidence import attenuation_intensity_confidence
from .errors import DimensionError
from .image import ViewInput, WarpedView, warp_to_common

__all__ = [
    "PyramidParams",
    "compound_average",
    "compound_maximum",
    "compound_ubf",
    "compound_pyramid",
    "compound",
    "phi",
    "select_view_layer",
    "weighted_average_layer",
    "blend_layer",
    "enhance_boundaries",
    "prepare_views",
]

METHODS = ("average", "maximum", "ubf", "pyramid")

DebugSink = Callable[[str, np.ndarray], None]


@dataclass(frozen=True)
class PyramidParams:
    levels: int = pyr.DEFAULT_LEVELS
    gamma: float = 0.05            # structural-confidence spread gate
    enhance_layer: int = 3
    enhancement_enabled: bool = True
    phi_overrides: tuple[float, ...] | None = None  # per-layer, length `levels`

    def __post_init__(self):
        if not 1 <= self.enhance_layer <= self.levels:
            raise ValueError("enhance_layer must lie in 1..levels")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.phi_overrides is not None:
            if len(self.phi_overrides) != self.levels:
                raise ValueError("phi_overrides must have one entry per layer")
            if any(not 0.0 <= p <= 1.0 for p in self.phi_overrides):
                raise ValueError("phi override values must lie in [0, 1]")


def _stack(views: Sequence[WarpedView]):
    if len(views) < 1:
        raise ValueError("need at least one view")
    shape = views[0].image.shape
    for v in views:
        if v.image.shape != shape or v.validity.shape != shape:
            raise DimensionError("views must share common-frame dimensions")
    imgs = np.stack([np.asarray(v.image, dtype=np.float64) for v in views])
    valid = np.stack([v.validity for v in views])
    return imgs, valid


def compound_average(views: Sequence[WarpedView]) -> np.ndarray:
    """Per-pixel mean over the views that observed each pixel."""
    imgs, valid = _stack(views)
    counts = valid.sum(axis=0)
    total = np.where(valid, imgs, 0.0).sum(axis=0)
    return np.divide(total, counts, out=np.zeros_like(total),
                     where=counts > 0).astype(np.float32)


def compound_maximum(views: Sequence[WarpedView]) -> np.ndarray:
    """Per-pixel maximum over valid views."""
    imgs, valid = _stack(views)
    out = np.where(valid, imgs, -np.inf).max(axis=0)
    return np.where(valid.any(axis=0), out, 0.0).astype(np.float32)


def compound_ubf(views: Sequence[WarpedView]) -> np.ndarray:
    """Intensity-confidence weighted average (uncertainty-based fusion)."""
    imgs, valid = _stack(views)
    for v in views:
        if v.intensity_confidence is None:
            raise ValueError("ubf requires an intensity confidence map per view")
    conf = np.stack([np.asarray(v.intensity_confidence, dtype=np.float64)
                     for v in views])
    return _masked_weighted_mean(imgs, conf, valid).astype(np.float32)


def _masked_weighted_mean(values, weights, valid):
    """Sum(w*v)/Sum(w) over valid entries; zero weight-sum falls back to the
    unweighted mean; pixels valid nowhere get 0."""
    w = np.where(valid, weights, 0.0)
    wsum = w.sum(axis=0)
    num = (w * values).sum(axis=0)
    out = np.divide(num, wsum, out=np.zeros_like(num), where=wsum > 0)
    counts = valid.sum(axis=0)
    fallback = np.divide(np.where(valid, values, 0.0).sum(axis=0), counts,
                         out=np.zeros_like(num), where=counts > 0)
    return np.where(wsum > 0, out, fallback)


def phi(k: int, levels: int) -> float:
    """Layer weight for the contrast-selection branch: a Gaussian bump over
    layer index, peaked mid-pyramid, clamped to at most 1."""
    if levels < 2:
        raise DimensionError("phi needs at least 2 layers")
    if not 1 <= k <= levels:
        raise ValueError(f"layer {k} out of range 1..{levels}")
    z = (2 * k - levels - 1) ** 2 / (0.16 * (levels - 1) ** 2)
    return min(1.0, math.exp(-0.5 * z) / (0.4 * math.sqrt(2.0 * math.pi)))


_NEIGHBOR_OFFSETS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)
                     if (di, dj) != (0, 0)]


def _local_contrast(layer: np.ndarray) -> np.ndarray:
    """Sum of |neighbor - center| over the 8-neighborhood; neighbors falling
    outside the border are skipped."""
    a = np.asarray(layer, dtype=np.float64)
    h, w = a.shape
    out = np.zeros_like(a)
    for di, dj in _NEIGHBOR_OFFSETS:
        cs = slice(max(0, -di), h - max(0, di))
        cj = slice(max(0, -dj), w - max(0, dj))
        ns = slice(max(0, di), h - max(0, -di))
        nj = slice(max(0, dj), w - max(0, -dj))
        out[cs, cj] += np.abs(a[ns, nj] - a[cs, cj])
    return out


def select_view_layer(image_layers: Sequence[np.ndarray],
                      structural_layers: Sequence[np.ndarray],
                      validity_layers: Sequence[np.ndarray],
                      gamma: float = 0.05) -> np.ndarray:
    """Per-pixel chosen view index at one pyramid layer.

    Where the valid views' structural confidences agree to within `gamma`,
    pick the view with the largest local contrast; otherwise pick the view
    with the largest structural confidence.  Ties go to the lowest index.
    """
    gs = np.stack([np.asarray(g, dtype=np.float64) for g in structural_layers])
    valid = np.stack([np.asarray(v, dtype=bool) for v in validity_layers])
    gs_masked_max = np.where(valid, gs, -np.inf).max(axis=0)
    gs_masked_min = np.where(valid, gs, np.inf).min(axis=0)
    any_valid = valid.any(axis=0)
    agree = np.where(any_valid, gs_masked_max - gs_masked_min < gamma, True)

    contrast = np.stack([_local_contrast(g) for g in image_layers])
    by_contrast = np.where(valid, contrast, -np.inf).argmax(axis=0)
    by_confidence = np.where(valid, gs, -np.inf).argmax(axis=0)
    return np.where(agree, by_contrast, by_confidence)


def weighted_average_layer(laplacian_layers: Sequence[np.ndarray],
                           intensity_layers: Sequence[np.ndarray],
                           validity_layers: Sequence[np.ndarray]) -> np.ndarray:
    """Intensity-confidence weighted average of one Laplacian layer."""
    lap = np.stack([np.asarray(x, dtype=np.float64) for x in laplacian_layers])
    gc = np.stack([np.asarray(x, dtype=np.float64) for x in intensity_layers])
    valid = np.stack([np.asarray(v, dtype=bool) for v in validity_layers])
    return _masked_weighted_mean(lap, gc, valid)


def blend_layer(selected: np.ndarray, averaged: np.ndarray,
                k: int, levels: int,
                phi_overrides: Sequence[float] | None = None) -> np.ndarray:
    """Convex combination of the selection and averaging results; the two
    weights always sum to 1."""
    w = phi_overrides[k - 1] if phi_overrides is not None else phi(k, levels)
    return w * np.asarray(selected, np.float64) + (1.0 - w) * np.asarray(averaged, np.float64)


def enhance_boundaries(partial: np.ndarray,
                       boundary_layers: Sequence[np.ndarray],
                       image_layers: Sequence[np.ndarray],
                       validity_layers: Sequence[np.ndarray]) -> np.ndarray:
    """Boundary compensation on a partial reconstruction.

    Where any view's (blurred) boundary mask is positive, replace the value
    by the maximum of the boundary-weighted view intensity and the current
    reconstruction; elsewhere leave the reconstruction untouched.
    """
    part = np.asarray(partial, dtype=np.float64)
    gb = np.stack([np.asarray(x, dtype=np.float64) for x in boundary_layers])
    gi = np.stack([np.asarray(x, dtype=np.float64) for x in image_layers])
    valid = np.stack([np.asarray(v, dtype=bool) for v in validity_layers])
    gb = np.where(valid, gb, 0.0)
    den = gb.sum(axis=0)
    num = (gb * gi).sum(axis=0)
    weighted = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return np.where(den > 0, np.maximum(weighted, part), part)


def _fill_maps(view: WarpedView) -> WarpedView:
    """Default any missing per-view maps (documented fallbacks)."""
    if view.intensity_confidence is None:
        view.intensity_confidence = attenuation_intensity_confidence(view.image).data
    if view.structural_confidence is None:
        view.structural_confidence = np.ones_like(view.image, dtype=np.float32)
    if view.boundary_mask is None:
        view.boundary_mask = detect_boundaries(view.image)
    return view


def compound_pyramid(views: Sequence[WarpedView],
                     params: PyramidParams = PyramidParams(),
                     debug_sink: DebugSink | None = None) -> np.ndarray:
    """Confidence-gated Laplacian-pyramid compounding.

    Per layer: per-pixel view selection blended with the confidence-weighted
    Laplacian average by the layer weight; boundary enhancement is applied to
    the partial reconstruction at `enhance_layer` on the way back down.
    """
    views = [_fill_maps(v) for v in views]
    imgs, valid = _stack(views)
    k_levels = params.levels
    any_valid = valid.any(axis=0)

    gi = [pyr.gaussian_pyramid(v.image, k_levels) for v in views]
    lap = [pyr.laplacian_pyramid(v.image, k_levels) for v in views]
    gc = [pyr.gaussian_pyramid(v.intensity_confidence, k_levels) for v in views]
    gs = [pyr.gaussian_pyramid(v.structural_confidence, k_levels) for v in views]
    gb = [pyr.gaussian_pyramid(v.boundary_mask.astype(np.float64), k_levels)
          for v in views]
    # A coarse pixel counts as observed only if the blurred validity stays
    # above 0.5, so never-seen regions do not bleed through the blur.
    gv = [[layer > 0.5 for layer in pyr.gaussian_pyramid(v.validity.astype(np.float64),
                                                         k_levels)]
          for v in views]

    blended: list[np.ndarray] = []
    for k in range(1, k_levels + 1):
        i = k - 1
        img_layers = [p[i] for p in gi]
        lap_layers = [p[i] for p in lap]
        valid_layers = [p[i] for p in gv]
        selection = select_view_layer(img_layers, [p[i] for p in gs],
                                      valid_layers, params.gamma)
        stacked = np.stack(lap_layers)
        selected = np.take_along_axis(stacked, selection[None], axis=0)[0]
        selected = np.where(np.stack(valid_layers).any(axis=0), selected, 0.0)
        averaged = weighted_average_layer(lap_layers, [p[i] for p in gc],
                                          valid_layers)
        blended.append(blend_layer(selected, averaged, k, k_levels,
                                   params.phi_overrides))
        if debug_sink is not None:
            debug_sink(f"selection_layer{k}", selection.astype(np.float64))
            debug_sink(f"blended_layer{k}", blended[-1])

    def enhance(partial: np.ndarray, k: int) -> np.ndarray:
        i = k - 1
        if debug_sink is not None:
            debug_sink(f"partial_layer{k}_pre_enhance", partial)
        out = enhance_boundaries(partial, [p[i] for p in gb],
                                 [p[i] for p in gi], [p[i] for p in gv])
        if debug_sink is not None:
            debug_sink(f"partial_layer{k}_post_enhance", out)
        return out

    recon = blended[-1]
    if params.enhancement_enabled and params.enhance_layer == k_levels:
        recon = enhance(recon, k_levels)
    for k in range(k_levels - 1, 0, -1):
        recon = pyr.upsample(recon, blended[k - 1].shape) + blended[k - 1]
        if params.enhancement_enabled and k == params.enhance_layer:
            recon = enhance(recon, k)

    recon = np.where(any_valid, np.clip(recon, 0.0, 1.0), 0.0)
    return recon.astype(np.float32)


def prepare_views(views: Sequence[ViewInput], out_width: int, out_height: int,
                  *, boundary_params: BoundaryParams = BoundaryParams(),
                  decay: float | None = None,
                  absorption: float | None = None,
                  detect: bool = True) -> list[WarpedView]:
    """Warp native-frame views into the common frame, filling missing maps.

    Intensity confidence and boundary masks are computed in the native frame
    (where the beam direction is straight down) and then warped along with
    the image.
    """
    kwargs = {}
    if decay is not None:
        kwargs["decay"] = decay
    if absorption is not None:
        kwargs["absorption"] = absorption
    prepared = []
    for v in views:
        gc = v.intensity_confidence
        if gc is None:
            gc = attenuation_intensity_confidence(v.image, **kwargs).data
        bmask = v.boundary_mask
        if bmask is None and detect:
            bmask = detect_boundaries(v.image.data, boundary_params)
        prepared.append(ViewInput(v.image, v.to_common,
                                  intensity_confidence=gc,
                                  structural_confidence=v.structural_confidence,
                                  boundary_mask=bmask))
    return [warp_to_common(v, out_width, out_height) for v in prepared]


def compound(views: Sequence[WarpedView], method: str,
             params: PyramidParams = PyramidParams(),
             debug_sink: DebugSink | None = None) -> np.ndarray:
    """Dispatch to one of the four compounding methods."""
    if method == "average":
        return compound_average(views)
    if method == "maximum":
        return compound_maximum(views)
    if method == "ubf":
        return compound_ubf([_fill_maps(v) for v in views])
    if method == "pyramid":
        return compound_pyramid(views, params, debug_sink)
    raise ValueError(f"unknown method {method!r} (choose from {METHODS})")
