"""Hole geometry and nearest-neighbor matching of feature patches.

The texture term compares small s x s x c blocks of a feature map inside the
hole against blocks from the known region.  This module maps the pixel-space
hole into feature coordinates, enumerates query and candidate patch centers,
and finds each query's nearest candidate, either by brute force or by the
fast route that batches the inner products as a cross-correlation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import ConvSpec, conv2d_forward


class HoleGeometryError(ValueError):
    """Hole region degenerate for the requested operation."""


@dataclass(frozen=True)
class HoleRegion:
    """Axis-aligned rectangle, optionally refined by a binary mask.

    `space` tags the coordinate system: "pixel" or "feature@<stride>".
    The mask, when present, has shape (height, width) and marks hole pixels
    inside the rectangle.
    """

    top: int
    left: int
    height: int
    width: int
    mask: np.ndarray | None = None
    space: str = "pixel"

    def __post_init__(self):
        if self.height < 0 or self.width < 0:
            raise HoleGeometryError("negative rectangle dims")
        if self.mask is not None and self.mask.shape != (self.height, self.width):
            raise HoleGeometryError(
                f"mask shape {self.mask.shape} does not match rect "
                f"{(self.height, self.width)}"
            )

    @property
    def bottom(self):
        return self.top + self.height

    @property
    def right(self):
        return self.left + self.width

    def check_inside(self, h, w):
        if self.top < 0 or self.left < 0 or self.bottom > h or self.right > w:
            raise HoleGeometryError(
                f"rect {(self.top, self.left, self.height, self.width)} exceeds {h}x{w} bounds"
            )

    def contains(self, y, x):
        return self.top <= y < self.bottom and self.left <= x < self.right


@dataclass(frozen=True)
class NNAssignment:
    """Nearest-candidate assignment for every query patch center."""

    query_centers: np.ndarray      # (Q, 2) row, col
    candidate_centers: np.ndarray  # (C, 2) row, col, row-major enumeration
    indices: np.ndarray            # (Q,) index into candidate_centers
    sq_dists: np.ndarray           # (Q,)

    def matched_centers(self):
        return self.candidate_centers[self.indices]


def map_hole_to_feature(region: HoleRegion, stride, patch_size, map_hw):
    """Project a pixel-space hole into a feature map's patch-center grid.

    The pixel rectangle is expanded to whole feature cells (ceil division)
    and then dilated by half a patch so that every patch whose window can
    touch hole-influenced cells counts as a query.  Candidate patches are
    the remaining centers; if none remain the hole covers the whole map.
    """
    mh, mw = map_hw
    top = region.top // stride
    left = region.left // stride
    bottom = -(-region.bottom // stride)
    right = -(-region.right // stride)
    d = patch_size // 2
    top, left = top - d, left - d
    bottom, right = bottom + d, right + d
    # Clip to valid patch-center range (full windows only).
    top = max(top, d)
    left = max(left, d)
    bottom = min(bottom, mh - d)
    right = min(right, mw - d)
    if bottom <= top or right <= left:
        raise HoleGeometryError("hole region is empty in feature space")
    feat = HoleRegion(top, left, bottom - top, right - left, space=f"feature@{stride}")
    if not _candidate_centers(feat, patch_size, map_hw).size:
        raise HoleGeometryError("hole covers the whole feature map; no candidate patches")
    return feat


def _query_centers(feat: HoleRegion):
    ys, xs = np.mgrid[feat.top : feat.bottom, feat.left : feat.right]
    return np.column_stack([ys.ravel(), xs.ravel()])


def _candidate_centers(feat: HoleRegion, patch_size, map_hw):
    mh, mw = map_hw
    d = patch_size // 2
    ys, xs = np.mgrid[d : mh - d, d : mw - d]
    inside = (
        (ys >= feat.top) & (ys < feat.bottom) & (xs >= feat.left) & (xs < feat.right)
    )
    return np.column_stack([ys[~inside].ravel(), xs[~inside].ravel()])


def query_and_candidate_centers(feat: HoleRegion, patch_size, map_hw):
    """Patch centers inside the (already dilated) feature hole and outside it."""
    return _query_centers(feat), _candidate_centers(feat, patch_size, map_hw)


def extract_patches(feature_map, centers, patch_size):
    """Rows of s*s*c patch vectors (channel-major) at the given centers."""
    _, c, h, w = feature_map.shape
    d = patch_size // 2
    centers = np.asarray(centers)
    if centers.size and (
        centers[:, 0].min() < d
        or centers[:, 1].min() < d
        or centers[:, 0].max() >= h - d
        or centers[:, 1].max() >= w - d
    ):
        raise HoleGeometryError("patch window out of bounds")
    fm = feature_map[0]
    rows = np.empty((len(centers), c * patch_size * patch_size), dtype=feature_map.dtype)
    for k, (y, x) in enumerate(centers):
        rows[k] = fm[:, y - d : y + d + 1, x - d : x + d + 1].ravel()
    return rows


def nn_search_bruteforce(queries, candidates):
    """Exact argmin of squared distance; earliest candidate wins ties."""
    queries = np.asarray(queries, dtype=np.float64)
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.shape[0] == 0:
        raise HoleGeometryError("empty candidate set")
    indices = np.empty(len(queries), dtype=np.intp)
    dists = np.empty(len(queries), dtype=np.float64)
    for i, q in enumerate(queries):
        d = ((candidates - q) ** 2).sum(axis=1)
        indices[i] = np.argmin(d)  # first minimum = smallest index
        dists[i] = d[indices[i]]
    return indices, dists


def assign_bruteforce(feature_map, feat: HoleRegion, patch_size):
    qc, cc = query_and_candidate_centers(feat, patch_size, feature_map.shape[2:])
    q = extract_patches(feature_map, qc, patch_size)
    c = extract_patches(feature_map, cc, patch_size)
    idx, d = nn_search_bruteforce(q, c)
    return NNAssignment(qc, cc, idx, d)


def nn_search_fast(feature_map, feat: HoleRegion, patch_size, window_radius=math.inf,
                   chunk=256):
    """Same assignment as brute force, via the correlation expansion.

    ||q - p||^2 = ||q||^2 - 2<q, p> + ||p||^2 with the <q, p> term for all
    patch positions computed by cross-correlating the feature map with the
    query patches as convolution kernels.  A finite `window_radius` keeps
    only candidates within that Chebyshev distance of the query center; a
    query whose window holds no candidate falls back to the global search.
    """
    mh, mw = feature_map.shape[2:]
    qc, cc = query_and_candidate_centers(feat, patch_size, (mh, mw))
    if cc.shape[0] == 0:
        raise HoleGeometryError("empty candidate set")
    fm = feature_map.astype(np.float64, copy=False)
    c = fm.shape[1]
    d = patch_size // 2
    spec_norm = ConvSpec(patch_size, patch_size, c, 1)
    # ||p||^2 for every patch position, as one box correlation of the squares.
    pnorm = conv2d_forward(fm * fm, np.ones((1, c, patch_size, patch_size)), np.zeros(1),
                           spec_norm)[0, 0]
    cand_pn = pnorm[cc[:, 0] - d, cc[:, 1] - d]

    indices = np.empty(len(qc), dtype=np.intp)
    dists = np.empty(len(qc), dtype=np.float64)
    warned = False
    for start in range(0, len(qc), chunk):
        block = qc[start : start + chunk]
        kernels = extract_patches(fm, block, patch_size).reshape(
            len(block), c, patch_size, patch_size
        )
        spec = ConvSpec(patch_size, patch_size, c, len(block))
        corr = conv2d_forward(fm, kernels, np.zeros(len(block)), spec)[0]
        cand_corr = corr[:, cc[:, 0] - d, cc[:, 1] - d]
        qnorm = (kernels.reshape(len(block), -1) ** 2).sum(axis=1)
        sq = qnorm[:, None] - 2.0 * cand_corr + cand_pn[None, :]
        np.maximum(sq, 0.0, out=sq)
        if math.isinf(window_radius):
            best = np.argmin(sq, axis=1)
        else:
            cheb = np.maximum(
                np.abs(cc[None, :, 0] - block[:, None, 0]),
                np.abs(cc[None, :, 1] - block[:, None, 1]),
            )
            allowed = cheb <= window_radius
            empty = ~allowed.any(axis=1)
            if empty.any() and not warned:
                warnings.warn(
                    "nn search window holds no candidates for some queries; "
                    "falling back to global search",
                    stacklevel=2,
                )
                warned = True
            masked = np.where(allowed, sq, np.inf)
            masked[empty] = sq[empty]
            best = np.argmin(masked, axis=1)
        indices[start : start + len(block)] = best
        dists[start : start + len(block)] = sq[np.arange(len(block)), best]
    return NNAssignment(qc, cc, indices, dists)
