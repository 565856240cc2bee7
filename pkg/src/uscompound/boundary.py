"""Detection of good anatomic horizontal boundaries.

Reverberation artifacts show up as trains of progressively dimmer copies of
a strong reflector at regular depth intervals.  The pipeline here keeps the
topmost boundary of each such stack and rejects the echoes beneath it:

  1. downward-looking gradient (max difference over the next `alpha` rows),
  2. binarize + 8-connected clustering (with optional 3x3 median denoise),
  3. drop small clusters and clusters that have another cluster directly
     above them within `beta` rows,
  4. stack-based region growing seeded from the kept clusters, gated by an
     absolute intensity threshold t1 and a step threshold t2.

t1 and t2 are given in 8-bit units (0..255, as commonly quoted) and converted to
the internal [0, 1] scale by /255.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

__all__ = [
    "BoundaryParams",
    "ClusterSet",
    "vertical_gradient",
    "extract_clusters",
    "filter_clusters",
    "refine_boundaries",
    "detect_boundaries",
]

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class BoundaryParams:
    alpha: int = 15           # gradient look-ahead, rows
    beta: int = 20            # reject clusters with another cluster this close above
    min_size: int = 50        # minimum cluster pixel count
    grad_threshold: float = 10.0 / 255.0
    t1: float = 30.0          # seed/growth intensity threshold, 8-bit units
    t2: float = 2.0           # growth step threshold, 8-bit units
    median_denoise: bool = True


@dataclass(frozen=True)
class ClusterSet:
    """8-connected components of the thresholded gradient map.

    `labels` is 0 for background; `ids` lists the clusters still alive
    (filtering narrows `ids` without relabeling).
    """

    labels: np.ndarray
    ids: tuple[int, ...]

    def mask(self) -> np.ndarray:
        return np.isin(self.labels, self.ids)

    def __len__(self) -> int:
        return len(self.ids)


def vertical_gradient(image: np.ndarray, alpha: int = 15) -> np.ndarray:
    """max_{j=1..alpha} |I(x,y) - I(x,y+j)|, truncated at the bottom edge.

    The bottom row has no pixels beneath it and gets gradient 0.
    """
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    a = np.asarray(image, dtype=np.float64)
    h = a.shape[0]
    grad = np.zeros_like(a)
    for j in range(1, min(alpha, h - 1) + 1):
        np.maximum(grad[:h - j], np.abs(a[:h - j] - a[j:]), out=grad[:h - j])
    return grad


def extract_clusters(grad: np.ndarray, grad_threshold: float,
                     median_denoise: bool = True) -> ClusterSet:
    g = np.asarray(grad, dtype=np.float64)
    if median_denoise:
        g = ndimage.median_filter(g, size=3, mode="nearest")
    binary = g > grad_threshold
    labels, n = ndimage.label(binary, structure=_EIGHT)
    return ClusterSet(labels, tuple(range(1, n + 1)))


def filter_clusters(clusters: ClusterSet, min_size: int = 50,
                    beta: int = 20) -> ClusterSet:
    """Size filter, then reject clusters shadowed from above.

    A cluster is dropped when any pixel of another size-surviving cluster
    sits in the same column within `beta` rows directly above one of its
    pixels (reverberation echoes sit close beneath the true reflector).
    """
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    sizes = np.bincount(clusters.labels.ravel())
    survivors = [i for i in clusters.ids if i < len(sizes) and sizes[i] >= min_size]
    lab = np.where(np.isin(clusters.labels, survivors), clusters.labels, 0)

    blocked: set[int] = set()
    for d in range(1, beta + 1):
        if d >= lab.shape[0]:
            break
        below, above = lab[d:], lab[:-d]
        clash = (below > 0) & (above > 0) & (below != above)
        if clash.any():
            blocked.update(np.unique(below[clash]).tolist())
    return replace(clusters, ids=tuple(i for i in survivors if i not in blocked))


def refine_boundaries(image: np.ndarray, clusters: ClusterSet,
                      threshold1: float = 30.0, threshold2: float = 2.0) -> np.ndarray:
    """Stack-based region growing from the kept clusters.

    Seeds are cluster pixels brighter than t1 (visited in row-major order);
    growth steps to 8-neighbors that are brighter than t1 and within t2 of
    the popped pixel.  Thresholds arrive in 8-bit units.
    """
    a = np.asarray(image, dtype=np.float64)
    t1 = threshold1 / 255.0
    t2 = threshold2 / 255.0
    h, w = a.shape
    marked = np.zeros((h, w), dtype=bool)
    seed_mask = clusters.mask()

    for i, j in zip(*np.nonzero(seed_mask)):
        if marked[i, j] or a[i, j] <= t1:
            continue
        stack = [(i, j)]
        marked[i, j] = True
        while stack:
            x, y = stack.pop()
            v = a[x, y]
            for ii in range(max(x - 1, 0), min(x + 2, h)):
                for jj in range(max(y - 1, 0), min(y + 2, w)):
                    if (not marked[ii, jj] and a[ii, jj] > t1
                            and abs(v - a[ii, jj]) < t2):
                        marked[ii, jj] = True
                        stack.append((ii, jj))
    return marked


def detect_boundaries(image: np.ndarray,
                      params: BoundaryParams = BoundaryParams()) -> np.ndarray:
    """Full pipeline: gradient, clustering, filtering, refinement."""
    grad = vertical_gradient(image, params.alpha)
    clusters = extract_clusters(grad, params.grad_threshold, params.median_denoise)
    kept = filter_clusters(clusters, params.min_size, params.beta)
    return refine_boundaries(image, kept, params.t1, params.t2)
