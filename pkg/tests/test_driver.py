import numpy as np
import pytest

from patchsynth import driver, fixtures, network
from patchsynth.losses import JointConfig
from patchsynth.patches import HoleRegion

TEX = fixtures.make_tiny_texture_weights()


def checker_image(h, w, period=8):
    ys, xs = np.mgrid[0:h, 0:w]
    img = (((ys // period) + (xs // period)) % 2).astype(np.float64)
    return np.stack([img * 0.8 + 0.1, img * 0.6 + 0.2, 1.0 - img * 0.8], axis=2)


def stripe_image(h, w, period=8):
    xs = np.arange(w)
    stripe = ((xs // period) % 2).astype(np.float64)
    img = np.tile(stripe, (h, 1))
    return np.stack([img * 0.8 + 0.1] * 3, axis=2)


def small_request(**kw):
    img = checker_image(64, 64)
    mask = driver.make_center_hole_mask(64, 64, 16, 16)
    cfg = kw.pop("config", JointConfig(max_iters_per_scale=kw.pop("iters", 5)))
    return driver.InpaintRequest(img, mask, TEX, config=cfg, scales=kw.pop("scales", 1), **kw)


class TestPyramid:
    def test_canonical_512_levels(self):
        img = np.zeros((1, 3, 512, 512), dtype=np.float32)
        mask = driver.make_center_hole_mask(512, 512, 256, 256)
        states = driver.build_pyramid(img, mask, 3)
        assert [s.level for s in states] == [1, 2, 3]
        assert [s.image.shape[2] for s in states] == [128, 256, 512]
        holes = [(s.region.top, s.region.left, s.region.height, s.region.width)
                 for s in states]
        assert holes == [(32, 32, 64, 64), (64, 64, 128, 128), (128, 128, 256, 256)]

    def test_single_level(self):
        img = np.random.default_rng(0).random((1, 3, 64, 64)).astype(np.float32)
        mask = driver.make_center_hole_mask(64, 64, 16, 16)
        states = driver.build_pyramid(img, mask, 1)
        assert len(states) == 1
        np.testing.assert_array_equal(states[0].image, img)

    def test_center_stays_center(self):
        img = np.zeros((1, 3, 128, 128), dtype=np.float32)
        mask = driver.make_center_hole_mask(128, 128, 64, 64)
        states = driver.build_pyramid(img, mask, 3)
        for s in states:
            h = s.image.shape[2]
            assert s.region.top == (h - s.region.height) // 2
            assert s.region.left == (w := s.image.shape[3]) // 2 - s.region.width // 2 or w


class TestInitCoarsest:
    def make_state(self, img, hole=(24, 24, 16, 16)):
        region = HoleRegion(*hole, mask=np.ones(hole[2:], dtype=bool))
        return driver.ScaleState(level=1, image=img.copy(), region=region)

    def test_mean_fill_fallback(self):
        img = np.zeros((1, 3, 64, 64), dtype=np.float32)
        img[:, :, :, :32] = 0.0
        img[:, :, :, 32:] = 1.0
        state = self.make_state(img)
        ref = driver.init_coarsest(state, None)
        # Known area is half black, half white except the hole bite.
        assert ref.shape == (3, 16, 16)
        assert np.allclose(ref, ref[0, 0, 0])
        hole_block = state.image[0, :, 24:40, 24:40]
        assert np.allclose(hole_block, ref[0, 0, 0])

    def test_mean_of_half_black_half_white(self):
        img = np.zeros((1, 3, 64, 64), dtype=np.float64)
        img[:, :, :32, :] = 0.0
        img[:, :, 32:, :] = 1.0
        mask = np.zeros((64, 64), dtype=bool)
        mask[24:40, 24:40] = True
        # Hole removes equal area from both halves, keeping the mean at 0.5.
        mean = driver.mean_known_color(img, mask)
        np.testing.assert_allclose(mean, 0.5)

    def test_content_net_reference_on_canonical_geometry(self):
        graph = network.build_content_net(fixtures.make_random_content_weights())
        rng = np.random.default_rng(1)
        img = rng.random((1, 3, 128, 128)).astype(np.float32)
        region = HoleRegion(32, 32, 64, 64, mask=np.ones((64, 64), dtype=bool))
        state = driver.ScaleState(level=1, image=img.copy(), region=region)
        ref = driver.init_coarsest(state, graph)
        filled = img.copy()
        mean = driver.mean_known_color(
            img, driver.make_center_hole_mask(128, 128, 64, 64)
        ).astype(np.float32)
        filled[0, :, 32:96, 32:96] = mean[:, None, None]
        want = network.content_net_predict(graph, filled)[0]
        np.testing.assert_allclose(ref, want, atol=1e-6)
        np.testing.assert_allclose(state.image[0, :, 32:96, 32:96], want, atol=1e-6)


class TestRunScale:
    def test_zero_iteration_budget_is_identity(self):
        img = checker_image(64, 64)
        mask = driver.make_center_hole_mask(64, 64, 16, 16)
        states = driver.build_pyramid(driver._to_chw(img, np.float32), mask, 1)
        driver.init_coarsest(states[0])
        before = states[0].image.copy()
        driver.run_scale(states[0], network.build_texture_network(TEX),
                         JointConfig(max_iters_per_scale=0))
        np.testing.assert_array_equal(states[0].image, before)

    def test_content_only_converges_to_reference(self):
        rng = np.random.default_rng(2)
        img = driver._to_chw(checker_image(64, 64), np.float64)
        mask = driver.make_center_hole_mask(64, 64, 16, 16)
        states = driver.build_pyramid(img, mask, 1)
        state = states[0]
        driver.init_coarsest(state)
        state.reference = rng.random((3, 16, 16))
        driver.run_scale(state, network.build_texture_network(TEX),
                         JointConfig(alpha=0.0, beta=0.0, max_iters_per_scale=50))
        r = state.region
        got = state.image[0, :, r.top : r.bottom, r.left : r.right]
        np.testing.assert_allclose(got, state.reference, atol=1e-6)

    def test_known_pixels_bit_identical(self):
        img = driver._to_chw(checker_image(64, 64), np.float32)
        mask = driver.make_center_hole_mask(64, 64, 16, 16)
        states = driver.build_pyramid(img, mask, 1)
        state = states[0]
        driver.init_coarsest(state)
        driver.run_scale(state, network.build_texture_network(TEX),
                         JointConfig(max_iters_per_scale=8))
        known = ~driver.make_center_hole_mask(64, 64, 16, 16)
        np.testing.assert_array_equal(state.image[0][:, known], img[0][:, known])


class TestAdvanceScale:
    def test_constant_coarse_gives_constant_hole(self):
        img = np.full((1, 3, 64, 64), 0.25, dtype=np.float32)
        mask = driver.make_center_hole_mask(64, 64, 16, 16)
        states = driver.build_pyramid(img, mask, 2)
        states[0].image[:] = 0.25
        driver.advance_scale(states[0], states[1])
        r = states[1].region
        hole = states[1].image[0, :, r.top : r.bottom, r.left : r.right]
        np.testing.assert_allclose(hole, 0.25, atol=1e-7)

    def test_known_pixels_untouched_and_reference_dims(self):
        rng = np.random.default_rng(3)
        img = rng.random((1, 3, 64, 64)).astype(np.float32)
        mask = driver.make_center_hole_mask(64, 64, 16, 16)
        states = driver.build_pyramid(img, mask, 2)
        before = states[1].image.copy()
        driver.advance_scale(states[0], states[1])
        r = states[1].region
        full = np.zeros((64, 64), dtype=bool)
        full[r.top : r.bottom, r.left : r.right] = r.mask
        np.testing.assert_array_equal(states[1].image[0][:, ~full], before[0][:, ~full])
        assert states[1].reference.shape == (3, r.height, r.width)
        assert (r.height, r.width) == (2 * states[0].region.height, 2 * states[0].region.width)


class TestInpaint:
    def test_unmasked_pixels_bit_identical_random_masks(self):
        rng = np.random.default_rng(4)
        img = checker_image(72, 80)
        for trial in range(10):
            mask = np.zeros((72, 80), dtype=bool)
            n_blobs = int(rng.integers(1, 4))
            for _ in range(n_blobs):
                t = int(rng.integers(0, 60))
                l = int(rng.integers(0, 66))
                mask[t : t + int(rng.integers(3, 12)), l : l + int(rng.integers(3, 12))] = True
            req = driver.InpaintRequest(
                img, mask, TEX, config=JointConfig(max_iters_per_scale=2), scales=1
            )
            out, _ = driver.inpaint(req)
            np.testing.assert_array_equal(out[~mask], img[~mask])
            assert out.shape == img.shape

    def test_single_pixel_mask(self):
        img = checker_image(64, 64)
        mask = np.zeros((64, 64), dtype=bool)
        mask[30, 31] = True
        out, report = driver.inpaint(
            driver.InpaintRequest(img, mask, TEX,
                                  config=JointConfig(max_iters_per_scale=2), scales=1)
        )
        diff = np.nonzero((out != img).any(axis=2))
        assert len(diff[0]) <= 1
        if len(diff[0]):
            assert (diff[0][0], diff[1][0]) == (30, 31)

    def test_rect_mask_matches_direct_pyramid_path(self):
        img = checker_image(128, 128)
        mask = driver.make_center_hole_mask(128, 128, 64, 64)
        cfg = JointConfig(max_iters_per_scale=4)
        out, report = driver.inpaint(driver.InpaintRequest(img, mask, TEX, config=cfg, scales=2))
        # The window is the whole image, so running the pyramid by hand must
        # give the same bytes.
        assert report["window"] == {"top": 0, "left": 0, "height": 128, "width": 128,
                                    "padded": False}
        states = driver.build_pyramid(driver._to_chw(img, np.float32), mask, 2)
        net = network.build_texture_network(TEX)
        driver.init_coarsest(states[0])
        driver.run_scale(states[0], net, cfg)
        driver.advance_scale(states[0], states[1])
        driver.run_scale(states[1], net, cfg)
        want = img.copy()
        want[mask] = states[1].image[0][:, mask].T
        np.testing.assert_array_equal(out, want)

    def test_determinism(self):
        req1 = small_request(iters=3)
        req2 = small_request(iters=3)
        out1, _ = driver.inpaint(req1)
        out2, _ = driver.inpaint(req2)
        assert np.array_equal(out1, out2)

    def test_single_scale_equals_run_scale_directly(self):
        img = checker_image(128, 128)
        mask = driver.make_center_hole_mask(128, 128, 64, 64)
        cfg = JointConfig(max_iters_per_scale=5)
        out, report = driver.inpaint(driver.InpaintRequest(img, mask, TEX, config=cfg,
                                                           scales=1))
        assert report["scales_used"] == 1
        states = driver.build_pyramid(driver._to_chw(img, np.float32), mask, 1)
        driver.init_coarsest(states[0])
        driver.run_scale(states[0], network.build_texture_network(TEX), cfg)
        want = img.copy()
        want[mask] = states[0].image[0][:, mask].T
        np.testing.assert_array_equal(out, want)

    def test_empty_and_full_masks_rejected(self):
        img = checker_image(64, 64)
        with pytest.raises(driver.RequestError):
            driver.inpaint(driver.InpaintRequest(img, np.zeros((64, 64), bool), TEX))
        with pytest.raises(driver.RequestError):
            driver.inpaint(driver.InpaintRequest(img, np.ones((64, 64), bool), TEX))

    def test_objective_decreases_per_scale(self):
        img = stripe_image(128, 128)
        mask = driver.make_center_hole_mask(128, 128, 64, 64)
        req = driver.InpaintRequest(
            img, mask, TEX, config=JointConfig(max_iters_per_scale=15), scales=2
        )
        _, report = driver.inpaint(req)
        assert report["scales_used"] == 2
        for sc in report["scales"]:
            assert sc["final"]["total"] <= sc["initial_total_at_final_nn"] + 1e-9

    def test_off_center_hole_window_padded(self):
        img = checker_image(96, 96)
        mask = np.zeros((96, 96), dtype=bool)
        mask[2:20, 3:25] = True  # near the corner; window exceeds the image
        req = driver.InpaintRequest(img, mask, TEX,
                                    config=JointConfig(max_iters_per_scale=2), scales=2)
        out, report = driver.inpaint(req)
        assert report["window"]["padded"]
        np.testing.assert_array_equal(out[~mask], img[~mask])
