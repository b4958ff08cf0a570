#!/usr/bin/env python3
"""Tour of the raw tensor kernels.

Runs a convolution against a plain quadruple-loop evaluation, checks its
input gradient with finite differences, and shows what the resampling
kernels preserve.
"""

import numpy as np

from patchsynth import kernels as K

rng = np.random.default_rng(0)

print("== convolution forward vs direct summation")
x = rng.standard_normal((1, 3, 6, 6))
w = rng.standard_normal((4, 3, 3, 3))
b = rng.standard_normal(4)
spec = K.ConvSpec(3, 3, 3, 4, stride=1, padding=1)
out = K.conv2d_forward(x, w, b, spec)

direct = np.zeros_like(out)
xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
for o in range(4):
    for y in range(6):
        for xx in range(6):
            direct[0, o, y, xx] = (w[o] * xp[0, :, y : y + 3, xx : xx + 3]).sum() + b[o]
print(f"   max |fast - direct| = {np.abs(out - direct).max():.2e}")

print("== input gradient vs central finite differences")
go = rng.standard_normal(out.shape)
gx = K.conv2d_backward_input(go, w, spec, input_hw=(6, 6))
i = (0, 1, 2, 3)
step = 1e-6
xp_, xm_ = x.copy(), x.copy()
xp_[i] += step
xm_[i] -= step
fd = ((K.conv2d_forward(xp_, w, b, spec) * go).sum()
      - (K.conv2d_forward(xm_, w, b, spec) * go).sum()) / (2 * step)
print(f"   analytic {gx[i]:+.6f}   finite-difference {fd:+.6f}")

print("== pooling routes gradients to the window winners")
pool_in = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
pooled, idx = K.maxpool2x2_forward(pool_in)
print(f"   max of {pool_in.ravel().tolist()} = {pooled.item()}")
print(f"   gradient lands on: {K.maxpool2x2_backward(np.ones_like(pooled), idx).ravel().tolist()}")

print("== bilinear resampling preserves ramps and constants")
ramp = (np.arange(8, dtype=np.float64) * 0.1).reshape(1, 1, 1, 8).repeat(4, axis=2)
up = K.upsample2x(ramp)
d1 = np.diff(up[0, 0, 0])
print(f"   upsampled ramp stays linear: spread of successive diffs = {d1.max() - d1.min():.2e}")
const = np.full((1, 1, 4, 4), 0.5)
print(f"   constant -> up -> down is identity: "
      f"{np.allclose(K.downsample2x(K.upsample2x(const)), const)}")
