"""The three loss terms and their joint combination.

Per pyramid scale the engine minimizes, over the hole pixels only,

    E_c(x)  +  alpha * sum_taps E_t(features(x))  +  beta * tv(x)

where E_c is the squared difference against the scale's content reference,
E_t the mean squared distance between hole feature patches and their nearest
known-region patches (matches held fixed between refreshes), and tv the sum
of squared neighbor differences.  Every term returns value and gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import patches as P


@dataclass
class JointConfig:
    """Tunables of the joint objective and its optimization schedule."""

    alpha: float = 5e-6          # texture weight
    beta: float = 5e-6           # smoothness weight
    patch_size: int = 3
    query_stride: int = 1
    taps: tuple | None = None    # None = network defaults
    nn_refresh_period: int = 10  # optimizer iterations between re-matches
    max_iters_per_scale: int = 500
    window_radius: float = math.inf

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ValueError("patch size must be odd and positive")
        if self.query_stride != 1:
            raise ValueError("only dense (stride 1) query sampling is supported")


@dataclass
class LossReport:
    """One evaluation of the joint objective."""

    total: float
    content: float
    texture: dict          # tap name -> value
    tv: float
    grad: np.ndarray | None = None   # gradient over the free (hole) variables
    extras: dict = field(default_factory=dict)

    @property
    def texture_total(self):
        return float(sum(self.texture.values()))


def content_loss(x, reference, region: P.HoleRegion):
    """Sum of squared differences against the reference inside the hole.

    `x` is the full 1x3xHxW image, `reference` a hole-rect-shaped 3xhxw
    block.  The gradient covers the full image and vanishes outside the
    hole (and outside the mask, when the region carries one).
    """
    region.check_inside(*x.shape[2:])
    if reference.shape != (x.shape[1], region.height, region.width):
        raise ValueError(
            f"reference shape {reference.shape} does not match hole "
            f"{(x.shape[1], region.height, region.width)}"
        )
    block = x[0, :, region.top : region.bottom, region.left : region.right]
    diff = block - reference.astype(x.dtype, copy=False)
    if region.mask is not None:
        diff = diff * region.mask
    value = float((diff * diff).sum())
    grad = np.zeros_like(x)
    grad[0, :, region.top : region.bottom, region.left : region.right] = 2.0 * diff
    return value, grad


def tv_loss(x):
    """Sum of squared horizontal and vertical neighbor differences."""
    if x.shape[2] < 2 or x.shape[3] < 2:
        raise ValueError("tv loss needs at least 2x2 images")
    dh = x[:, :, :, 1:] - x[:, :, :, :-1]
    dv = x[:, :, 1:, :] - x[:, :, :-1, :]
    value = float((dh * dh).sum() + (dv * dv).sum())
    grad = np.zeros_like(x)
    grad[:, :, :, 1:] += 2.0 * dh
    grad[:, :, :, :-1] -= 2.0 * dh
    grad[:, :, 1:, :] += 2.0 * dv
    grad[:, :, :-1, :] -= 2.0 * dv
    return value, grad


def texture_loss(feature_map, assignment: P.NNAssignment, patch_size):
    """Mean squared distance between query patches and their matches.

    The matches are treated as constants, but both the query windows and the
    matched candidate windows live in the same feature map, so the gradient
    accumulates at both.
    """
    n_queries = len(assignment.query_centers)
    if n_queries == 0:
        return 0.0, np.zeros_like(feature_map)
    q = P.extract_patches(feature_map, assignment.query_centers, patch_size)
    cand = P.extract_patches(feature_map, assignment.matched_centers(), patch_size)
    diff = q - cand
    value = float((diff * diff).sum()) / n_queries

    c = feature_map.shape[1]
    d = patch_size // 2
    diff = (2.0 / n_queries) * diff.reshape(n_queries, c, patch_size, patch_size)
    # Scatter-add with (H, W, C) layout so np.add.at can broadcast channels.
    ghwc = np.zeros(
        (feature_map.shape[2], feature_map.shape[3], c), dtype=feature_map.dtype
    )
    qcent = assignment.query_centers
    mcent = assignment.matched_centers()
    for a in range(patch_size):
        for b in range(patch_size):
            vals = np.ascontiguousarray(diff[:, :, a, b])
            np.add.at(ghwc, (qcent[:, 0] + a - d, qcent[:, 1] + b - d), vals)
            np.add.at(ghwc, (mcent[:, 0] + a - d, mcent[:, 1] + b - d), -vals)
    return value, ghwc.transpose(2, 0, 1)[None]


class JointObjective:
    """Joint loss over the free hole pixels of one pyramid scale.

    Known pixels are baked in; the optimization variable is the flat vector
    of hole-pixel values (channel-major).  Nearest-neighbor assignments stay
    fixed until :meth:`refresh_assignments` is called.
    """

    def __init__(self, base_image, region: P.HoleRegion, reference, texture_net,
                 config: JointConfig):
        region.check_inside(*base_image.shape[2:])
        self.base = base_image.copy()
        self.region = region
        self.reference = reference
        self.net = texture_net
        self.config = config
        self.taps = list(config.taps) if config.taps else list(texture_net.taps)

        if region.mask is not None:
            rows, cols = np.nonzero(region.mask)
            rows = rows + region.top
            cols = cols + region.left
        else:
            ys, xs = np.mgrid[region.top : region.bottom, region.left : region.right]
            rows, cols = ys.ravel(), xs.ravel()
        if rows.size == 0:
            raise P.HoleGeometryError("hole region has no free pixels")
        self.rows, self.cols = rows, cols

        self.feat_regions = {}
        self.dropped_taps = {}
        for tap in list(self.taps):
            stride = texture_net.tap_stride(tap)
            map_hw = (base_image.shape[2] // stride, base_image.shape[3] // stride)
            try:
                self.feat_regions[tap] = P.map_hole_to_feature(
                    region, stride, config.patch_size, map_hw
                )
            except P.HoleGeometryError as exc:
                # A feature level the hole saturates carries no texture
                # information at this scale; drop it rather than fail.
                self.dropped_taps[tap] = str(exc)
                self.taps.remove(tap)
        if not self.taps:
            raise P.HoleGeometryError(
                "hole saturates every texture tap at this scale: "
                + "; ".join(self.dropped_taps.values())
            )
        self.assignments = None

    def free_vector(self, image=None):
        img = self.base if image is None else image
        return img[0][:, self.rows, self.cols].astype(np.float64).ravel()

    def compose(self, vec):
        img = self.base.copy()
        img[0][:, self.rows, self.cols] = (
            vec.reshape(img.shape[1], -1).astype(img.dtype, copy=False)
        )
        return img

    def refresh_assignments(self, vec):
        img = self.compose(vec)
        feats, _ = self.net.features(img, self.taps)
        self.assignments = {
            tap: P.nn_search_fast(
                feats[tap], self.feat_regions[tap], self.config.patch_size,
                window_radius=self.config.window_radius,
            )
            for tap in self.taps
        }

    def evaluate(self, vec, with_grad=True):
        if self.assignments is None:
            self.refresh_assignments(vec)
        cfg = self.config
        img = self.compose(vec)

        c_val, grad = content_loss(img, self.reference, self.region)
        tv_val, tv_grad = tv_loss(img)
        grad = grad + cfg.beta * tv_grad

        feats, cache = self.net.features(img, self.taps)
        t_vals = {}
        tap_grads = {}
        for tap in self.taps:
            t_vals[tap], tap_grads[tap] = texture_loss(
                feats[tap], self.assignments[tap], cfg.patch_size
            )
        if cfg.alpha != 0.0:
            gtex = self.net.image_grad(
                cache, {t: g.astype(feats[t].dtype, copy=False) for t, g in tap_grads.items()}
            )
            grad = grad + cfg.alpha * gtex

        total = c_val + cfg.alpha * sum(t_vals.values()) + cfg.beta * tv_val
        report = LossReport(total=total, content=c_val, texture=t_vals, tv=tv_val)
        if with_grad:
            report.grad = grad[0][:, self.rows, self.cols].astype(np.float64).ravel()
        return report

    def callback(self):
        """(value, gradient) closure in the form the optimizer consumes."""

        def f(vec):
            report = self.evaluate(vec)
            return report.total, report.grad

        return f
