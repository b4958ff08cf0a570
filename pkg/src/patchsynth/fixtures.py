"""Deterministic fixture weights.

The tiny texture network bundled with the package (``data/tinytex.npsw``)
lets the whole engine run, and be tested end to end, without real VGG-19
weights.  ``python3 -m patchsynth.fixtures out.npsw`` regenerates it
bit-for-bit.
"""

from __future__ import annotations

import sys
from importlib import resources

import numpy as np

from . import npsw

# Conv stack of the tiny texture net; must stay in sync with
# network.build_tiny_texture.
_TINY_CONVS = [("conv1", 3, 8), ("conv2", 8, 16), ("conv3", 16, 32), ("conv4", 32, 32)]

# Chosen so the patch-distance term competes with the per-pixel content pull
# at the default loss weights; see tests/test_acceptance.py (stripe recovery).
TINY_GAIN = 3.0


def make_tiny_texture_weights(seed=20240601, gain=TINY_GAIN):
    rng = np.random.default_rng(seed)
    table = {}
    for name, cin, cout in _TINY_CONVS:
        std = gain * np.sqrt(2.0 / (cin * 9))
        table[f"tinytex.{name}.weight"] = (
            rng.standard_normal((cout, cin, 3, 3)) * std
        ).astype(np.float32)
        table[f"tinytex.{name}.bias"] = np.zeros(cout, dtype=np.float32)
    table["tinytex.mean"] = np.full(3, 127.5, dtype=np.float32)
    return table


def make_random_content_weights(seed=7, widths=(16, 32, 64, 128, 128), bottleneck=256):
    """Random content-network weights, mainly for tests of the forward path."""
    rng = np.random.default_rng(seed)
    table = {}

    def t(name, shape, std):
        table[f"contentnet.{name}.weight"] = (rng.standard_normal(shape) * std).astype(np.float32)
        table[f"contentnet.{name}.bias"] = np.zeros(shape[0] if "fc" in name else (
            shape[0] if name.startswith("enc") else shape[1]), dtype=np.float32)

    cin = 3
    for i, cout in enumerate(widths, start=1):
        t(f"enc{i}", (cout, cin, 4, 4), np.sqrt(2.0 / (cin * 16)))
        cin = cout
    flat = widths[-1] * 16
    t("fc1", (bottleneck, flat), np.sqrt(2.0 / flat))
    t("fc2", (flat, bottleneck), np.sqrt(2.0 / bottleneck))
    dec = [widths[-1], widths[-2], widths[-3], widths[-4], 3]
    for i in range(1, 5):
        t(f"dec{i}", (dec[i - 1], dec[i], 4, 4), np.sqrt(2.0 / (dec[i - 1] * 16)))
    return table


def bundled_tiny_texture_path():
    """Path of the packaged tiny texture weight file."""
    return resources.files("patchsynth").joinpath("data/tinytex.npsw")


def write_tiny_texture_file(path):
    npsw.write_weights(path, make_tiny_texture_weights())


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "tinytex.npsw"
    write_tiny_texture_file(out)
    print(f"wrote {out}")
