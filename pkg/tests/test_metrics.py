import math

import numpy as np
import pytest

from patchsynth import metrics


def test_identical_images():
    img = np.random.default_rng(0).integers(0, 256, (16, 16, 3), dtype=np.uint8)
    r = metrics.compute_metrics(img, img)
    assert r.mean_l1_pct == 0.0
    assert r.mean_l2_pct == 0.0
    assert r.psnr_db == metrics.PSNR_IDENTICAL
    assert math.isinf(r.psnr_db)


def test_uniform_extreme_difference():
    a = np.zeros((8, 8, 3), dtype=np.uint8)
    b = np.full((8, 8, 3), 255, dtype=np.uint8)
    r = metrics.compute_metrics(a, b)
    assert r.mean_l1_pct == pytest.approx(100.0)
    assert r.mean_l2_pct == pytest.approx(100.0)
    assert r.psnr_db == pytest.approx(0.0, abs=1e-12)


def test_unit_mse_closed_form():
    a = np.zeros((10, 10, 3), dtype=np.uint8)
    b = a.copy()
    b[:, :, :] = 1  # |diff| = 1 everywhere -> MSE = 1 on the 0..255 scale
    r = metrics.compute_metrics(a, b)
    assert r.psnr_db == pytest.approx(10 * math.log10(255.0 ** 2), abs=1e-12)
    assert r.psnr_db == pytest.approx(48.13, abs=0.01)


def test_symmetry():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
    b = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
    r1 = metrics.compute_metrics(a, b)
    r2 = metrics.compute_metrics(b, a)
    assert r1.mean_l1_pct == r2.mean_l1_pct
    assert r1.mean_l2_pct == r2.mean_l2_pct
    assert r1.psnr_db == r2.psnr_db


def test_psnr_decreases_with_noise_amplitude():
    rng = np.random.default_rng(2)
    base = rng.integers(100, 156, (32, 32, 3)).astype(np.int64)
    last = math.inf
    for amp in (1, 4, 16, 48):
        noisy = np.clip(base + rng.integers(-amp, amp + 1, base.shape), 0, 255)
        r = metrics.compute_metrics(noisy.astype(np.uint8), base.astype(np.uint8))
        assert r.psnr_db < last
        last = r.psnr_db


def test_region_mask():
    a = np.zeros((8, 8, 3), dtype=np.uint8)
    b = a.copy()
    b[0, 0] = 255  # error confined to one pixel
    mask = np.zeros((8, 8), dtype=bool)
    mask[0, 0] = True
    hole = metrics.compute_metrics(b, a, region_mask=mask)
    full = metrics.compute_metrics(b, a)
    assert hole.region == "hole" and hole.pixels == 1
    assert hole.mean_l1_pct == pytest.approx(100.0)
    assert full.mean_l1_pct == pytest.approx(100.0 / 64)
    with pytest.raises(ValueError):
        metrics.compute_metrics(b, a, region_mask=np.zeros((8, 8), dtype=bool))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        metrics.compute_metrics(np.zeros((4, 4, 3)), np.zeros((5, 5, 3)))
