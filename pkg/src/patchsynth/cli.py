"""Command-line front end: fill a masked hole in an image file.

Exit codes: 0 on success, 1 for unusable inputs, 2 when the optimizer gave
up (a best-effort result is still written).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import imageio, metrics, npsw
from .driver import InpaintRequest, RequestError, inpaint
from .lbfgs import ObjectiveError
from .losses import JointConfig
from .patches import HoleGeometryError


def build_parser():
    p = argparse.ArgumentParser(
        prog="inpaint",
        description="Fill the masked region of an image by multi-scale "
        "neural patch synthesis.",
    )
    p.add_argument("--image", required=True, help="input image (PPM P6 or 8-bit PNG)")
    p.add_argument("--mask", required=True,
                   help="hole mask, same size (PGM P5 or grayscale PNG, nonzero = hole)")
    p.add_argument("--vgg-weights", required=True,
                   help="NPSW file with the texture network weights")
    p.add_argument("--content-weights", help="optional NPSW file with content-network weights")
    p.add_argument("--out", help="output path (default: <image>.inpainted.ppm)")
    p.add_argument("--scales", type=int, default=3, help="pyramid levels (default 3)")
    p.add_argument("--alpha", type=float, default=5e-6, help="texture loss weight")
    p.add_argument("--beta", type=float, default=5e-6, help="smoothness loss weight")
    p.add_argument("--patch-size", type=int, default=3, help="feature patch size (odd)")
    p.add_argument("--iters", type=int, default=500, help="optimizer iterations per scale")
    p.add_argument("--nn-refresh", type=int, default=10,
                   help="iterations between patch re-matching")
    p.add_argument("--window", type=float, default=math.inf,
                   help="candidate search radius in feature cells (default: unbounded)")
    p.add_argument("--metrics-gt", help="ground-truth image; report reconstruction metrics")
    p.add_argument("--metrics-full", action="store_true",
                   help="evaluate metrics over the full image instead of the hole")
    p.add_argument("--report", help="write a JSON report with per-scale loss traces")
    p.add_argument("--seed", type=int, default=0,
                   help="seed recorded in the report (the engine is deterministic)")
    p.add_argument("--f64-check", action="store_true",
                   help="run in float64 and verify the objective gradient by "
                   "finite differences before optimizing")
    return p


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _fd_gradient_check(request):
    """Spot-check the joint gradient at the coarsest scale in float64."""
    from . import network
    from .driver import (_extract_window, _extract_window_mask, _to_chw, build_pyramid,
                         init_coarsest, mask_bounding_rect, plan_window)
    from .losses import JointObjective

    chw = _to_chw(request.image01, np.float64)
    rect = mask_bounding_rect(request.mask)
    wt, wl, wh, ww, n = plan_window(request.image01.shape[:2], rect, request.scales)
    states = build_pyramid(
        _extract_window(chw, (wt, wl, wh, ww)),
        _extract_window_mask(request.mask, (wt, wl, wh, ww)),
        n,
    )
    net = network.build_texture_network(
        request.texture_weights, taps=request.config.taps
    ).astype(np.float64)
    init_coarsest(states[0])
    obj = JointObjective(states[0].image, states[0].region, states[0].reference,
                         net, request.config)
    vec = obj.free_vector()
    # The mean-filled hole is constant, which puts every pooling window on a
    # tie; nudge to a generic nearby point before differentiating.
    vec = np.clip(vec + np.random.default_rng(1).uniform(-0.02, 0.02, vec.size), 0, 1)
    obj.refresh_assignments(vec)
    grad = obj.evaluate(vec).grad
    rng = np.random.default_rng(0)
    coords = rng.choice(vec.size, size=min(8, vec.size), replace=False)
    step = 1e-5
    errs = []
    for i in coords:
        vp, vm = vec.copy(), vec.copy()
        vp[i] += step
        vm[i] -= step
        fd = (obj.evaluate(vp, with_grad=False).total
              - obj.evaluate(vm, with_grad=False).total) / (2 * step)
        denom = max(abs(fd), abs(grad[i]), 1e-12)
        errs.append(abs(grad[i] - fd) / denom)
    return {"coords_checked": len(errs), "max_rel_err": max(errs),
            "median_rel_err": float(np.median(errs))}


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_path = Path(args.out) if args.out else Path(str(args.image) + ".inpainted.ppm")

    try:
        image = imageio.read_image(args.image)
        mask = imageio.read_mask(args.mask, image_hw=image.shape[:2])
        texture_weights = npsw.load_weights(args.vgg_weights)
        content_weights = (
            npsw.load_weights(args.content_weights) if args.content_weights else None
        )
        config = JointConfig(
            alpha=args.alpha,
            beta=args.beta,
            patch_size=args.patch_size,
            nn_refresh_period=args.nn_refresh,
            max_iters_per_scale=args.iters,
            window_radius=args.window,
        )
        gt = imageio.read_image(args.metrics_gt) if args.metrics_gt else None
        if gt is not None and gt.shape != image.shape:
            raise RequestError(f"ground truth is {gt.shape}, image is {image.shape}")
    except (OSError, ValueError, npsw.NpswError) as exc:
        print(f"inpaint: error: {exc}", file=sys.stderr)
        return 1

    request = InpaintRequest(
        image01=image.astype(np.float64) / 255.0,
        mask=mask,
        texture_weights=texture_weights,
        content_weights=content_weights,
        config=config,
        scales=args.scales,
        dtype=np.float64 if args.f64_check else np.float32,
    )

    report = {"seed": args.seed}
    exit_code = 0
    try:
        if args.f64_check:
            report["gradient_check"] = _fd_gradient_check(request)
            if report["gradient_check"]["median_rel_err"] > 1e-4:
                print("inpaint: warning: gradient check exceeded 1e-4", file=sys.stderr)
        result01, run_report = inpaint(request)
        report.update(run_report)
        out = image.copy()
        out[mask] = np.clip(np.rint(result01[mask] * 255.0), 0, 255).astype(np.uint8)
        if report.get("warnings"):
            print(f"inpaint: optimizer stalled at scales {report['warnings']}",
                  file=sys.stderr)
            exit_code = 2
    except (RequestError, HoleGeometryError) as exc:
        print(f"inpaint: error: {exc}", file=sys.stderr)
        return 1
    except (ObjectiveError, FloatingPointError) as exc:
        print(f"inpaint: optimization failed: {exc}; writing input unchanged",
              file=sys.stderr)
        report["error"] = str(exc)
        out = image.copy()
        exit_code = 2

    imageio.write_image(out_path, out)
    print(f"wrote {out_path}")

    if gt is not None:
        m = metrics.compute_metrics(out, gt, region_mask=None if args.metrics_full else mask)
        report["metrics"] = m.as_dict()
        psnr = "inf" if math.isinf(m.psnr_db) else f"{m.psnr_db:.2f}"
        print(f"metrics ({m.region}): L1 {m.mean_l1_pct:.2f}%  "
              f"L2 {m.mean_l2_pct:.2f}%  PSNR {psnr} dB")

    if args.report:
        with open(args.report, "w") as f:
            json.dump(_json_safe(report), f, indent=2)
        print(f"report: {args.report}")
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
