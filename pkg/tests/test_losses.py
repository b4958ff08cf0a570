import numpy as np
import pytest

from patchsynth import losses as L
from patchsynth import network, patches as P
from patchsynth.kernels import ConvSpec

from _oracles import central_diff_grad, rel_err


def tiny_2conv_net(dtype=np.float64, seed=0, taps_strides=((\
        "reluA", 1), ("reluB", 2))):
    """A 2-conv texture net with taps at strides 1 and 2, for gradient checks."""
    rng = np.random.default_rng(seed)
    w = {
        "tinytex.conv1.weight": rng.standard_normal((4, 3, 3, 3)) * 0.4,
        "tinytex.conv1.bias": rng.standard_normal(4) * 0.1,
        "tinytex.conv2.weight": rng.standard_normal((6, 4, 3, 3)) * 0.4,
        "tinytex.conv2.bias": rng.standard_normal(6) * 0.1,
    }
    layers = [
        network.LayerSpec("conv1", "conv", conv=ConvSpec(3, 3, 3, 4, padding=1)),
        network.LayerSpec("reluA", "relu"),
        network.LayerSpec("pool1", "maxpool"),
        network.LayerSpec("conv2", "conv", conv=ConvSpec(3, 3, 4, 6, padding=1)),
        network.LayerSpec("reluB", "relu"),
    ]
    graph = network.NetworkGraph("test2conv", layers, {k: v.astype(dtype) for k, v in w.items()},
                                 prefix="tinytex")
    net = network.TextureNetwork(graph, np.full(3, 127.5), dict(taps_strides))
    net.MIN_INPUT = 8
    return net


class TestContentLoss:
    def test_identity_case(self):
        x = np.random.default_rng(0).random((1, 3, 8, 8))
        region = P.HoleRegion(2, 2, 4, 4)
        ref = x[0, :, 2:6, 2:6].copy()
        val, grad = L.content_loss(x, ref, region)
        assert val == 0.0
        assert not grad.any()

    def test_one_pixel_hand_value(self):
        x = np.zeros((1, 3, 4, 4))
        x[0, 0, 1, 1] = 0.5
        region = P.HoleRegion(1, 1, 1, 1)
        ref = np.zeros((3, 1, 1))
        ref[0, 0, 0] = 0.25
        val, grad = L.content_loss(x, ref, region)
        assert val == pytest.approx(0.0625)
        assert grad[0, 0, 1, 1] == pytest.approx(0.5)
        assert not grad[0, 1:].any()  # other channels match their reference

    def test_quadratic_homogeneity(self):
        rng = np.random.default_rng(1)
        region = P.HoleRegion(1, 2, 3, 3)
        x = rng.random((1, 3, 8, 8))
        ref = rng.random((3, 3, 3))
        v1, _ = L.content_loss(x, ref, region)
        doubled = ref + 2.0 * (x[0, :, 1:4, 2:5] - ref)
        x2 = x.copy()
        x2[0, :, 1:4, 2:5] = doubled
        v2, _ = L.content_loss(x2, ref, region)
        assert v2 == pytest.approx(4.0 * v1, rel=1e-12)

    def test_gradient_zero_outside_region(self):
        rng = np.random.default_rng(2)
        x = rng.random((1, 3, 8, 8))
        region = P.HoleRegion(3, 3, 2, 2)
        _, grad = L.content_loss(x, rng.random((3, 2, 2)), region)
        grad[0, :, 3:5, 3:5] = 0
        assert not grad.any()

    def test_out_of_bounds_region(self):
        with pytest.raises(P.HoleGeometryError):
            L.content_loss(np.zeros((1, 3, 4, 4)), np.zeros((3, 3, 3)), P.HoleRegion(2, 2, 3, 3))


class TestTvLoss:
    def test_constant_image(self):
        val, grad = L.tv_loss(np.full((1, 3, 5, 7), 0.3))
        assert val == 0.0
        assert not grad.any()

    def test_hand_value_2x2(self):
        x = np.array([[0.0, 1.0], [2.0, 3.0]]).reshape(1, 1, 2, 2)
        val, _ = L.tv_loss(x)
        assert val == 10.0

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        x = rng.random((1, 2, 5, 5))
        _, grad = L.tv_loss(x)

        def f(xx):
            return L.tv_loss(xx)[0]

        fd = central_diff_grad(f, x, coords=rng.choice(x.size, 12, replace=False))
        for i, val in fd.items():
            assert rel_err(grad.ravel()[i], val) <= 1e-6


class TestTextureLoss:
    def build(self, fm, hole_rect, s=3):
        feat = P.map_hole_to_feature(hole_rect, 1, s, fm.shape[2:])
        return feat, P.assign_bruteforce(fm, feat, s)

    def test_exact_duplicates_give_zero(self):
        rng = np.random.default_rng(4)
        tile = rng.standard_normal((1, 2, 12, 6))
        fm = np.concatenate([tile, tile], axis=3)  # left half == right half
        feat = P.HoleRegion(1, 1, 10, 4, space="feature@1")
        assign = P.assign_bruteforce(fm, feat, 3)
        val, grad = L.texture_loss(fm, assign, 3)
        assert val == pytest.approx(0.0, abs=1e-20)
        np.testing.assert_allclose(grad, 0.0, atol=1e-18)

    def test_single_unit_difference_hand_value(self):
        fm = np.zeros((1, 1, 3, 12))
        feat = P.HoleRegion(1, 1, 1, 3, space="feature@1")
        qc, cc = P.query_and_candidate_centers(feat, 3, (3, 12))
        assert len(qc) == 3
        # A cell covered by exactly one query window: unit diff, all
        # candidates zero, so the loss is 1 / (number of query patches).
        fm[0, 0, 1, 0] = 1.0
        assign = P.assign_bruteforce(fm, feat, 3)
        val, _ = L.texture_loss(fm, assign, 3)
        assert val == pytest.approx(1.0 / 3.0)

    def test_overlapping_queries_accumulate(self):
        fm = np.zeros((1, 1, 3, 12))
        feat = P.HoleRegion(1, 1, 1, 3, space="feature@1")
        fm[0, 0, 1, 1] = 1.0  # covered by two of the three query windows
        assign = P.assign_bruteforce(fm, feat, 3)
        val, _ = L.texture_loss(fm, assign, 3)
        assert val == pytest.approx(2.0 / 3.0)

    def test_value_invariant_to_query_order(self):
        rng = np.random.default_rng(5)
        fm = rng.standard_normal((1, 2, 10, 10))
        feat, assign = self.build(fm, P.HoleRegion(3, 3, 3, 3))
        perm = rng.permutation(len(assign.query_centers))
        shuffled = P.NNAssignment(
            assign.query_centers[perm], assign.candidate_centers,
            assign.indices[perm], assign.sq_dists[perm],
        )
        v1, g1 = L.texture_loss(fm, assign, 3)
        v2, g2 = L.texture_loss(fm, shuffled, 3)
        assert v1 == pytest.approx(v2, rel=1e-12)
        np.testing.assert_allclose(g1, g2, rtol=1e-10)

    def test_gradient_matches_finite_differences_fixed_nn(self):
        rng = np.random.default_rng(6)
        fm = rng.standard_normal((1, 2, 9, 9))
        feat, assign = self.build(fm, P.HoleRegion(3, 3, 3, 3))
        _, grad = L.texture_loss(fm, assign, 3)

        def f(m):
            return L.texture_loss(m, assign, 3)[0]

        fd = central_diff_grad(f, fm, coords=rng.choice(fm.size, 15, replace=False))
        for i, val in fd.items():
            assert abs(grad.ravel()[i] - val) <= 1e-6 * max(1.0, abs(val))


def make_joint(alpha=5e-6, beta=5e-6, seed=7, dtype=np.float64, hole=(6, 6, 4, 4)):
    rng = np.random.default_rng(seed)
    net = tiny_2conv_net(dtype=dtype, seed=seed)
    base = (rng.random((1, 3, 16, 16)) * 0.6 + 0.2).astype(dtype)
    region = P.HoleRegion(*hole)
    ref = rng.random((3, hole[2], hole[3])).astype(dtype)
    cfg = L.JointConfig(alpha=alpha, beta=beta)
    return L.JointObjective(base, region, ref, net, cfg)


class TestJointObjective:
    def test_zero_when_alpha_beta_zero_and_x_equals_ref(self):
        obj = make_joint(alpha=0.0, beta=0.0)
        vec = obj.reference.astype(np.float64).ravel()
        report = obj.evaluate(vec)
        assert report.total == pytest.approx(0.0, abs=1e-18)
        assert report.content == 0.0

    def test_default_weights_recorded(self):
        cfg = L.JointConfig()
        assert cfg.alpha == pytest.approx(5e-6)
        assert cfg.beta == pytest.approx(5e-6)

    def test_decomposition_identity(self):
        obj = make_joint()
        report = obj.evaluate(obj.free_vector())
        recombined = report.content + obj.config.alpha * report.texture_total \
            + obj.config.beta * report.tv
        assert rel_err(report.total, recombined) <= 1e-6

    def test_losses_non_negative(self):
        obj = make_joint(seed=9)
        report = obj.evaluate(obj.free_vector())
        assert report.content >= 0 and report.tv >= 0
        assert all(v >= 0 for v in report.texture.values())

    def test_full_gradient_matches_finite_differences(self):
        # Larger weights than the defaults so every term contributes
        # meaningfully to the check.
        obj = make_joint(alpha=1e-3, beta=1e-2)
        vec = obj.free_vector()
        obj.refresh_assignments(vec)
        report = obj.evaluate(vec)
        rng = np.random.default_rng(11)
        coords = rng.choice(vec.size, 10, replace=False)
        relu_outs = self._relu_inputs(obj, vec)
        step = 1e-5
        checked = 0
        for i in coords:
            vp, vm = vec.copy(), vec.copy()
            vp[i] += step
            vm[i] -= step
            if self._crosses_kink(obj, vp, vm, relu_outs):
                continue
            fp = obj.evaluate(vp, with_grad=False).total
            fm = obj.evaluate(vm, with_grad=False).total
            fd = (fp - fm) / (2 * step)
            assert rel_err(report.grad[i], fd) <= 1e-4
            checked += 1
        assert checked >= 5

    @staticmethod
    def _relu_inputs(obj, vec):
        img = obj.compose(vec)
        _, cache = obj.net.features(img, obj.taps)
        names = obj.net.graph.layer_names()
        return [names.index(n) - 1 for n in names if n.startswith("relu")]

    @staticmethod
    def _crosses_kink(obj, vp, vm, conv_idxs):
        _, cp = obj.net.features(obj.compose(vp), obj.taps)
        _, cm = obj.net.features(obj.compose(vm), obj.taps)
        for li in conv_idxs:
            if (cp.outputs[li] * cm.outputs[li] < 0).any():
                return True
        return False

    def test_gradient_restricted_to_hole(self):
        obj = make_joint()
        vec = obj.free_vector()
        assert obj.evaluate(vec).grad.shape == (3 * 16,)

    def test_masked_region_free_pixels(self):
        rng = np.random.default_rng(12)
        mask = rng.random((4, 4)) > 0.5
        mask[0, 0] = True
        net = tiny_2conv_net()
        base = rng.random((1, 3, 16, 16)) * 0.5 + 0.25
        region = P.HoleRegion(6, 6, 4, 4, mask=mask)
        obj = L.JointObjective(base, region, rng.random((3, 4, 4)), net, L.JointConfig())
        vec = obj.free_vector()
        assert vec.size == 3 * int(mask.sum())
        out = obj.compose(vec + 0.1)
        # Unmasked pixels of the rectangle stay untouched.
        changed = (out != base)[0].any(axis=0)
        assert not changed[6:10, 6:10][~mask].any()
