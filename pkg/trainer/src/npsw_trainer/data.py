"""Toy training data: procedural striped / checkered 128x128 images.

Each sample is (network input, ground-truth center): the input is the image
with its 64x64 center replaced by the mean color of the surroundings, scaled
to [-1, 1]; the target is the original center, also in [-1, 1].
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset

SIZE = 128
HOLE = 64


def _stripes(rng):
    period = int(rng.integers(6, 20))
    phase = int(rng.integers(0, period))
    horizontal = bool(rng.integers(0, 2))
    lo, hi = sorted(rng.uniform(0.05, 0.95, size=2))
    if hi - lo < 0.3:
        hi = min(0.95, lo + 0.5)
    idx = np.arange(SIZE)
    wave = (((idx + phase) // period) % 2).astype(np.float64) * (hi - lo) + lo
    img = np.tile(wave[:, None], (1, SIZE)) if horizontal else np.tile(wave, (SIZE, 1))
    color = rng.uniform(0.6, 1.0, size=3)
    return img[None, :, :] * color[:, None, None]


def _checkers(rng):
    period = int(rng.integers(8, 24))
    ys, xs = np.mgrid[0:SIZE, 0:SIZE]
    cells = (((ys // period) + (xs // period)) % 2).astype(np.float64)
    a = rng.uniform(0.05, 0.4, size=3)
    b = rng.uniform(0.6, 0.95, size=3)
    return cells[None] * (b - a)[:, None, None] + a[:, None, None]


def make_toy_images(count, seed=0, kinds=("stripes", "checkers")):
    """Deterministic batch of (count, 3, 128, 128) float32 images in [0, 1]."""
    rng = np.random.default_rng(seed)
    makers = {"stripes": _stripes, "checkers": _checkers}
    images = np.empty((count, 3, SIZE, SIZE), dtype=np.float32)
    for i in range(count):
        kind = kinds[int(rng.integers(0, len(kinds)))]
        images[i] = makers[kind](rng)
    return images


def center_mask():
    m = np.zeros((SIZE, SIZE), dtype=bool)
    t = (SIZE - HOLE) // 2
    m[t : t + HOLE, t : t + HOLE] = True
    return m


class HoleDataset(Dataset):
    """Wraps [0,1] images into mean-filled inputs and center targets."""

    def __init__(self, images01):
        self.images = np.asarray(images01, dtype=np.float32)
        self.mask = center_mask()
        t = (SIZE - HOLE) // 2
        self.slice = slice(t, t + HOLE)

    def __len__(self):
        return len(self.images)

    def __getitem__(self, i):
        img = self.images[i]
        filled = img.copy()
        mean = img[:, ~self.mask].mean(axis=1)
        filled[:, self.mask] = mean[:, None]
        x = torch.from_numpy(filled * 2.0 - 1.0)
        target = torch.from_numpy(img[:, self.slice, self.slice] * 2.0 - 1.0)
        return x, target


def load_directory(path):
    """Images from a directory (PPM or PNG via Pillow), center-cropped to 128."""
    from PIL import Image

    files = sorted(p for p in Path(path).iterdir()
                   if p.suffix.lower() in (".png", ".ppm", ".jpg", ".jpeg"))
    if not files:
        raise ValueError(f"no images found under {path}")
    out = []
    for p in files:
        with Image.open(p) as im:
            im = im.convert("RGB")
            w, h = im.size
            side = min(w, h)
            im = im.crop(((w - side) // 2, (h - side) // 2,
                          (w + side) // 2, (h + side) // 2)).resize((SIZE, SIZE))
            out.append(np.asarray(im, dtype=np.float32).transpose(2, 0, 1) / 255.0)
    return np.stack(out)
