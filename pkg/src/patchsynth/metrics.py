"""Reconstruction error metrics over 8-bit images.

Mean L1 is reported as a percentage of the 255 range, mean L2 as a
percentage of 255^2, and PSNR in dB against the 255 peak.  Identical inputs
report ``PSNR_IDENTICAL`` (infinity) as the PSNR sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PSNR_IDENTICAL = math.inf


@dataclass(frozen=True)
class MetricsReport:
    mean_l1_pct: float
    mean_l2_pct: float
    psnr_db: float
    region: str
    pixels: int

    def as_dict(self):
        return {
            "mean_l1_pct": self.mean_l1_pct,
            "mean_l2_pct": self.mean_l2_pct,
            "psnr_db": "inf" if math.isinf(self.psnr_db) else self.psnr_db,
            "region": self.region,
            "pixels": self.pixels,
        }


def compute_metrics(prediction, ground_truth, region_mask=None):
    """Compare two (H, W, 3) uint8 images, optionally over a masked region.

    With a mask only the marked pixels enter the averages; the report's
    `region` field records which mode was used.
    """
    pred = np.asarray(prediction, dtype=np.float64)
    gt = np.asarray(ground_truth, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if region_mask is not None:
        mask = np.asarray(region_mask, dtype=bool)
        if mask.shape != pred.shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match image")
        if not mask.any():
            raise ValueError("empty evaluation region")
        diff = pred[mask] - gt[mask]
        pixels = int(mask.sum())
        region = "hole"
    else:
        diff = pred - gt
        pixels = int(np.prod(pred.shape[:2]))
        region = "full"
    abs_diff = np.abs(diff)
    mse = float((diff * diff).mean())
    psnr = PSNR_IDENTICAL if mse == 0.0 else 10.0 * math.log10(255.0 ** 2 / mse)
    return MetricsReport(
        mean_l1_pct=float(abs_diff.mean()) / 255.0 * 100.0,
        mean_l2_pct=mse / 255.0 ** 2 * 100.0,
        psnr_db=psnr,
        region=region,
        pixels=pixels,
    )
