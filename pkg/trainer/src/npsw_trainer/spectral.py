"""High-frequency energy measure used to compare trained models.

Blurry predictions concentrate spectral power near DC; the share of power
beyond a radial cutoff is a simple scalar proxy for sharpness.
"""

from __future__ import annotations

import numpy as np


def high_frequency_share(image, cutoff_fraction=0.25):
    """Fraction of non-DC power at radii above `cutoff_fraction` * Nyquist.

    `image` is (c, h, w) or (h, w); channels are averaged.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    h, w = arr.shape[-2:]
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    radius = np.hypot(fy, fx)  # cycles per pixel, Nyquist at 0.5
    shares = []
    for chan in arr:
        spec = np.abs(np.fft.fft2(chan - chan.mean())) ** 2
        total = spec.sum()
        if total == 0:
            shares.append(0.0)
            continue
        shares.append(float(spec[radius > cutoff_fraction * 0.5].sum() / total))
    return float(np.mean(shares))


def mean_high_frequency_share(images, cutoff_fraction=0.25):
    return float(np.mean([high_frequency_share(im, cutoff_fraction) for im in images]))
