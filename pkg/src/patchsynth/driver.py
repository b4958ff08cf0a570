"""Coarse-to-fine inpainting pipeline.

Flow for one request: find the hole's bounding rectangle, cut a working
window with the rectangle centered (replicate-padded where it leaves the
image), build a factor-2 pyramid, seed the coarsest hole from the content
network (or the mean color when no content weights are given), then run the
joint optimization at each scale, upsampling each result to initialize the
next.  Only masked pixels of the original image are ever replaced.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import network
from .kernels import downsample2x, resize_bilinear, upsample2x
from .lbfgs import OptimizerOptions, minimize
from .losses import JointConfig, JointObjective
from .patches import HoleGeometryError, HoleRegion


class RequestError(ValueError):
    """The inpainting request itself is invalid."""


MIN_COARSE_SIDE = 64
MIN_WINDOW_SIDE = 64


@dataclass
class InpaintRequest:
    image01: np.ndarray            # (H, W, 3) floats in [0, 1]
    mask: np.ndarray               # (H, W) bool, True = hole
    texture_weights: dict
    content_weights: dict | None = None
    config: JointConfig = field(default_factory=JointConfig)
    scales: int = 3
    optimizer: OptimizerOptions | None = None
    dtype: np.dtype = np.float32


@dataclass
class ScaleState:
    level: int                     # 1 = coarsest
    image: np.ndarray              # (1, 3, h, w)
    region: HoleRegion             # hole at this scale, mask attached
    reference: np.ndarray | None = None   # (3, rh, rw) content target
    trace: object = None
    report: dict = field(default_factory=dict)


def make_center_hole_mask(h, w, hole_h, hole_w):
    mask = np.zeros((h, w), dtype=bool)
    top, left = (h - hole_h) // 2, (w - hole_w) // 2
    mask[top : top + hole_h, left : left + hole_w] = True
    return mask


def mask_bounding_rect(mask):
    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    if rows.size == 0:
        raise RequestError("mask is empty")
    return int(rows[0]), int(cols[0]), int(rows[-1] - rows[0] + 1), int(cols[-1] - cols[0] + 1)


def _to_chw(image01, dtype):
    img = np.asarray(image01)
    if img.ndim != 3 or img.shape[2] != 3:
        raise RequestError(f"expected an (H, W, 3) image, got {img.shape}")
    return np.ascontiguousarray(img.transpose(2, 0, 1)[None]).astype(dtype)


def _halve_rect(top, left, height, width):
    bottom, right = top + height, left + width
    t, l = top // 2, left // 2
    b, r = -(-bottom // 2), -(-right // 2)
    return t, l, b - t, r - l


def _downsample_mask(mask):
    h, w = mask.shape
    return mask.reshape(h // 2, 2, w // 2, 2).any(axis=(1, 3))


def plan_window(image_hw, rect, scales):
    """Working window with the hole rectangle centered.

    Returns (top, left, height, width, n_scales); the window is sized to at
    least twice the hole, divisible by 2^(scales-1), and may extend past the
    image (handled by replicate padding).  The scale count drops until the
    coarsest level keeps a workable side length.
    """
    rt, rl, rh, rw = rect
    n = max(1, int(scales))
    while n > 1:
        mult = 2 ** (n - 1)
        wh = -(-max(2 * rh, MIN_WINDOW_SIDE) // mult) * mult
        ww = -(-max(2 * rw, MIN_WINDOW_SIDE) // mult) * mult
        if min(wh, ww) // mult >= MIN_COARSE_SIDE:
            break
        n -= 1
    else:
        mult = 1
        wh = max(2 * rh, MIN_WINDOW_SIDE)
        ww = max(2 * rw, MIN_WINDOW_SIDE)
    top = rt + rh // 2 - wh // 2
    left = rl + rw // 2 - ww // 2
    return top, left, wh, ww, n


def _extract_window(image_chw, window):
    """Crop with replicate padding for parts outside the image."""
    top, left, wh, ww = window
    _, _, h, w = image_chw.shape
    t0, l0 = max(top, 0), max(left, 0)
    t1, l1 = min(top + wh, h), min(left + ww, w)
    if t1 <= t0 or l1 <= l0:
        raise RequestError("working window does not intersect the image")
    crop = image_chw[:, :, t0:t1, l0:l1]
    pads = ((0, 0), (0, 0), (t0 - top, top + wh - t1), (l0 - left, left + ww - l1))
    if any(p != (0, 0) for p in pads[2:]):
        crop = np.pad(crop, pads, mode="edge")
    return crop


def _extract_window_mask(mask, window):
    top, left, wh, ww = window
    out = np.zeros((wh, ww), dtype=bool)
    h, w = mask.shape
    t0, l0 = max(top, 0), max(left, 0)
    t1, l1 = min(top + wh, h), min(left + ww, w)
    out[t0 - top : t1 - top, l0 - left : l1 - left] = mask[t0:t1, l0:l1]
    return out


def build_pyramid(window_image, window_mask, n_scales):
    """ScaleStates from coarsest (level 1) to finest (level n)."""
    states = []
    img = window_image
    msk = window_mask
    rect = mask_bounding_rect(window_mask)
    for level in range(n_scales, 0, -1):
        rt, rl, rh, rw = rect
        region = HoleRegion(rt, rl, rh, rw, mask=msk[rt : rt + rh, rl : rl + rw].copy())
        states.append(ScaleState(level=level, image=img.copy(), region=region))
        if level > 1:
            img = downsample2x(img)
            msk = _downsample_mask(msk)
            rect = _halve_rect(*rect)
    states.reverse()
    return states


def _region_mask(region: HoleRegion):
    if region.mask is not None:
        return region.mask
    return np.ones((region.height, region.width), dtype=bool)


def mean_known_color(image_chw, mask):
    known = ~mask
    if not known.any():
        raise RequestError("mask covers the whole image")
    return image_chw[0][:, known].mean(axis=1)


def init_coarsest(state: ScaleState, content_graph=None):
    """Fill the hole with the mean color, then refine with the content net.

    Sets `state.reference` and writes it into the hole pixels.  With no
    content network the reference is the constant mean fill.
    """
    img = state.image
    region = state.region
    rmask = _region_mask(region)
    full_mask = np.zeros(img.shape[2:], dtype=bool)
    full_mask[region.top : region.bottom, region.left : region.right] = rmask
    mean = mean_known_color(img, full_mask).astype(img.dtype)
    img[0][:, full_mask] = mean[:, None]

    rh, rw = region.height, region.width
    if content_graph is None:
        reference = np.tile(mean[:, None, None], (1, rh, rw))
    else:
        reference = _content_reference(img, region, content_graph).astype(img.dtype)
    state.reference = reference
    block = img[0, :, region.top : region.bottom, region.left : region.right]
    block[:, rmask] = reference[:, rmask]
    return reference


def _content_reference(img, region: HoleRegion, graph):
    """Run the content network on a square crop centered on the hole.

    The crop side is twice the larger hole dimension so the 128x128 network
    input maps the hole onto the 64x64 center prediction; the prediction is
    resized back and the hole rectangle cut out of its center.
    """
    side = 2 * max(region.height, region.width)
    cy = region.top + region.height // 2
    cx = region.left + region.width // 2
    crop = _extract_window(img, (cy - side // 2, cx - side // 2, side, side))
    net_in = crop if side == network.CONTENT_INPUT else resize_bilinear(
        crop, network.CONTENT_INPUT, network.CONTENT_INPUT
    )
    pred = network.content_net_predict(graph, net_in.astype(np.float32))
    half = side // 2
    pred_sq = pred if half == network.CONTENT_OUTPUT else resize_bilinear(pred, half, half)
    # Offset of the hole inside the center square of the crop.
    rel_t = (side - region.height) // 2 - side // 4
    rel_l = (side - region.width) // 2 - side // 4
    return pred_sq[0, :, rel_t : rel_t + region.height, rel_l : rel_l + region.width]


def _loss_dict(report):
    return {
        "total": report.total,
        "content": report.content,
        "texture": {k: float(v) for k, v in report.texture.items()},
        "texture_total": report.texture_total,
        "tv": report.tv,
    }


def run_scale(state: ScaleState, texture_net, config: JointConfig, optimizer=None):
    """Minimize the joint objective over this scale's hole pixels.

    Known pixels stay bit-identical; hole pixels are clamped to [0, 1] after
    the optimizer finishes.  The scale report carries the loss decomposition
    at the start and end, both measured under the final patch matches.
    """
    if state.reference is None:
        raise RequestError("scale has no content reference; initialize it first")
    obj = JointObjective(state.image, state.region, state.reference, texture_net, config)
    x0 = obj.free_vector()
    opts = replace(optimizer) if optimizer else OptimizerOptions()
    opts.max_iters = config.max_iters_per_scale

    period = max(1, config.nn_refresh_period)

    def hook(k, x):
        if (k + 1) % period == 0:
            obj.refresh_assignments(x)
            return True
        return False

    initial = obj.evaluate(x0, with_grad=False)
    if config.max_iters_per_scale > 0:
        x_best, trace = minimize(obj.callback(), x0, opts, refresh=hook)
    else:
        x_best, trace = x0, None

    obj.refresh_assignments(x_best)
    final = obj.evaluate(x_best, with_grad=False)
    initial_at_final_nn = obj.evaluate(x0, with_grad=False)

    clamped = np.clip(x_best, 0.0, 1.0)
    state.image = obj.compose(clamped)
    state.trace = trace
    warning = bool(
        trace is not None and trace.status == "line_search_failed" and trace.iterations == 0
    )
    state.report = {
        "level": state.level,
        "image_hw": list(state.image.shape[2:]),
        "hole": [state.region.top, state.region.left, state.region.height, state.region.width],
        "free_pixels": int(_region_mask(state.region).sum()),
        "iterations": 0 if trace is None else trace.iterations,
        "status": "skipped" if trace is None else trace.status,
        "warning": warning,
        "taps_used": list(obj.taps),
        "taps_dropped": dict(obj.dropped_taps),
        "initial": _loss_dict(initial),
        "final": _loss_dict(final),
        "initial_total_at_final_nn": initial_at_final_nn.total,
        "clamp_delta": float(np.abs(clamped - x_best).max()),
        "objective_trace": [] if trace is None else [r.value for r in trace.records],
        "grad_norm_trace": [] if trace is None else [r.grad_norm for r in trace.records],
        "step_trace": [] if trace is None else [r.step for r in trace.records],
        "nn_refresh_iters": [] if trace is None else [
            r.iteration for r in trace.records if r.refreshed
        ],
    }
    return state.image


def advance_scale(coarse: ScaleState, finer: ScaleState):
    """Seed the next level's hole (and its content reference) from below."""
    up = upsample2x(coarse.image)
    if up.shape != finer.image.shape:
        raise HoleGeometryError(
            f"upsampled coarse level {up.shape} does not match {finer.image.shape}"
        )
    r = finer.region
    full_mask = np.zeros(finer.image.shape[2:], dtype=bool)
    full_mask[r.top : r.bottom, r.left : r.right] = _region_mask(r)
    finer.image[0][:, full_mask] = up.astype(finer.image.dtype)[0][:, full_mask]
    finer.reference = np.ascontiguousarray(
        up[0, :, r.top : r.bottom, r.left : r.right]
    ).astype(finer.image.dtype)
    return finer


def inpaint(request: InpaintRequest):
    """Full pipeline; returns (result_image01, report dict).

    Pixels outside the mask are bit-identical to the input.
    """
    t_start = time.monotonic()
    mask = np.asarray(request.mask, dtype=bool)
    img = np.asarray(request.image01)
    if img.ndim != 3 or img.shape[2] != 3:
        raise RequestError(f"expected an (H, W, 3) image, got {img.shape}")
    if mask.shape != img.shape[:2]:
        raise RequestError(f"mask shape {mask.shape} does not match image {img.shape[:2]}")
    if not mask.any():
        raise RequestError("mask is empty")
    if mask.all():
        raise RequestError("mask covers the whole image")

    dtype = np.dtype(request.dtype)
    texture_net = network.build_texture_network(request.texture_weights, taps=request.config.taps)
    if dtype == np.float64:
        texture_net = texture_net.astype(np.float64)
    content_graph = None
    if request.content_weights:
        content_graph = network.build_content_net(request.content_weights)

    chw = _to_chw(img, dtype)
    rect = mask_bounding_rect(mask)
    wt, wl, wh, ww, n_scales = plan_window(img.shape[:2], rect, request.scales)
    window = (wt, wl, wh, ww)
    win_img = _extract_window(chw, window)
    win_mask = _extract_window_mask(mask, window)

    states = build_pyramid(win_img, win_mask, n_scales)
    init_coarsest(states[0], content_graph)
    scale_reports = []
    for i, state in enumerate(states):
        run_scale(state, texture_net, request.config, optimizer=request.optimizer)
        scale_reports.append(state.report)
        if i + 1 < len(states):
            advance_scale(state, states[i + 1])

    final = states[-1].image
    result = np.array(img, copy=True)
    ys, xs = np.nonzero(mask)
    result[ys, xs] = final[0][:, ys - wt, xs - wl].T.astype(result.dtype)

    report = {
        "image_hw": list(img.shape[:2]),
        "hole_rect": list(rect),
        "hole_pixels": int(mask.sum()),
        "window": {"top": wt, "left": wl, "height": wh, "width": ww,
                   "padded": bool(wt < 0 or wl < 0 or wt + wh > img.shape[0]
                                  or wl + ww > img.shape[1])},
        "scales_requested": request.scales,
        "scales_used": n_scales,
        "texture_network": texture_net.graph.name,
        "content_network_used": content_graph is not None,
        "dtype": dtype.name,
        "config": {
            "alpha": request.config.alpha,
            "beta": request.config.beta,
            "patch_size": request.config.patch_size,
            "taps": list(texture_net.taps if request.config.taps is None
                         else request.config.taps),
            "nn_refresh_period": request.config.nn_refresh_period,
            "max_iters_per_scale": request.config.max_iters_per_scale,
            "window_radius": (None if math.isinf(request.config.window_radius)
                              else request.config.window_radius),
        },
        "scales": scale_reports,
        "warnings": [s["level"] for s in scale_reports if s["warning"]],
        "runtime_sec": time.monotonic() - t_start,
    }
    return result, report
