"""Dense NCHW tensor kernels: convolution, pooling, activations, resampling.

Every kernel is a pure function over numpy arrays in (batch, channel, height,
width) layout.  Kernels preserve the floating dtype of their inputs, so the
same code runs in float32 for production and float64 for gradient
verification.  Only input gradients are implemented; the networks built on
top of these kernels are frozen at inference time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeMismatchError(ValueError):
    """Array dimensions are inconsistent with the requested operation."""


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of one convolution layer."""

    kernel_h: int
    kernel_w: int
    in_channels: int
    out_channels: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.kernel_h < 1 or self.kernel_w < 1:
            raise ValueError("kernel dims must be positive")
        if self.stride < 1:
            raise ValueError("stride must be positive")
        if self.padding < 0:
            raise ValueError("padding must be non-negative")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")

    def output_hw(self, h, w):
        oh = (h + 2 * self.padding - self.kernel_h) // self.stride + 1
        ow = (w + 2 * self.padding - self.kernel_w) // self.stride + 1
        if oh < 1 or ow < 1:
            raise ShapeMismatchError(
                f"conv output would be empty for input {h}x{w} with {self}"
            )
        return oh, ow


def _check_4d(a, name):
    if not isinstance(a, np.ndarray) or a.ndim != 4:
        raise ShapeMismatchError(f"{name} must be a 4-d array, got {getattr(a, 'shape', None)}")


def _pad2d(x, p):
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def conv2d_forward(x, weights, bias, spec: ConvSpec):
    """Cross-correlate `x` [n,ci,h,w] with `weights` [co,ci,kh,kw] plus bias.

    Output spatial dims follow floor((in + 2*pad - kernel)/stride) + 1.
    """
    _check_4d(x, "input")
    _check_4d(weights, "weights")
    co, ci, kh, kw = weights.shape
    if (kh, kw, ci, co) != (spec.kernel_h, spec.kernel_w, spec.in_channels, spec.out_channels):
        raise ShapeMismatchError(f"weight shape {weights.shape} does not match {spec}")
    n, xc, h, w = x.shape
    if xc != ci:
        raise ShapeMismatchError(f"input has {xc} channels, spec expects {ci}")
    bias = np.asarray(bias, dtype=x.dtype)
    if bias.shape != (co,):
        raise ShapeMismatchError(f"bias must have shape ({co},), got {bias.shape}")

    oh, ow = spec.output_hw(h, w)
    s = spec.stride
    xp = _pad2d(x, spec.padding)
    # One GEMM per kernel offset keeps memory flat (no im2col buffer).
    acc = np.zeros((co, n, oh, ow), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            xs = xp[:, :, i : i + s * (oh - 1) + 1 : s, j : j + s * (ow - 1) + 1 : s]
            acc += np.tensordot(weights[:, :, i, j], xs, axes=([1], [1]))
    out = acc.transpose(1, 0, 2, 3) + bias[None, :, None, None]
    return np.ascontiguousarray(out)


def conv2d_backward_input(grad_output, weights, spec: ConvSpec, input_hw=None):
    """Gradient of a conv2d output w.r.t. its input (weights held fixed).

    `input_hw` disambiguates the input size when stride > 1; by default the
    smallest size consistent with the output dims is assumed.
    """
    _check_4d(grad_output, "grad_output")
    _check_4d(weights, "weights")
    co, ci, kh, kw = weights.shape
    if (kh, kw, ci, co) != (spec.kernel_h, spec.kernel_w, spec.in_channels, spec.out_channels):
        raise ShapeMismatchError(f"weight shape {weights.shape} does not match {spec}")
    n, gc, oh, ow = grad_output.shape
    if gc != co:
        raise ShapeMismatchError(f"grad_output has {gc} channels, spec expects {co}")
    s, p = spec.stride, spec.padding
    if input_hw is None:
        h = (oh - 1) * s + kh - 2 * p
        w = (ow - 1) * s + kw - 2 * p
    else:
        h, w = input_hw
        if spec.output_hw(h, w) != (oh, ow):
            raise ShapeMismatchError(
                f"grad_output {oh}x{ow} inconsistent with input {h}x{w} under {spec}"
            )

    gxp = np.zeros((n, ci, h + 2 * p, w + 2 * p), dtype=grad_output.dtype)
    for i in range(kh):
        for j in range(kw):
            g = np.tensordot(weights[:, :, i, j], grad_output, axes=([0], [1]))
            gxp[:, :, i : i + s * (oh - 1) + 1 : s, j : j + s * (ow - 1) + 1 : s] += (
                g.transpose(1, 0, 2, 3)
            )
    if p == 0:
        return gxp
    return np.ascontiguousarray(gxp[:, :, p : p + h, p : p + w])


def conv_transpose2d_forward(x, weights, bias, stride, padding):
    """Transposed convolution (fractionally strided), weights [ci,co,kh,kw].

    Output spatial size is (in - 1) * stride - 2 * padding + kernel.
    """
    _check_4d(x, "input")
    _check_4d(weights, "weights")
    ci, co, kh, kw = weights.shape
    n, xc, h, w = x.shape
    if xc != ci:
        raise ShapeMismatchError(f"input has {xc} channels, weights expect {ci}")
    bias = np.asarray(bias, dtype=x.dtype)
    if bias.shape != (co,):
        raise ShapeMismatchError(f"bias must have shape ({co},), got {bias.shape}")
    oh = (h - 1) * stride + kh - 2 * padding
    ow = (w - 1) * stride + kw - 2 * padding
    if oh < 1 or ow < 1:
        raise ShapeMismatchError("transposed conv output would be empty")

    outp = np.zeros((n, co, oh + 2 * padding, ow + 2 * padding), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            g = np.tensordot(weights[:, :, i, j], x, axes=([0], [1]))
            outp[:, :, i : i + stride * (h - 1) + 1 : stride,
                 j : j + stride * (w - 1) + 1 : stride] += g.transpose(1, 0, 2, 3)
    out = outp[:, :, padding : padding + oh, padding : padding + ow]
    return np.ascontiguousarray(out) + bias[None, :, None, None]


@dataclass(frozen=True)
class PoolIndices:
    """Winning 2x2 window positions recorded by a maxpool forward pass.

    `codes` holds values 0..3 laid out row-major inside each window; the
    first position wins ties.  Input dims are kept so the backward pass can
    undo the replicate padding applied to odd inputs.
    """

    codes: np.ndarray
    input_hw: tuple


def maxpool2x2_forward(x):
    """2x2/stride-2 max pooling; odd trailing rows/cols are replicate-padded."""
    _check_4d(x, "input")
    n, c, h, w = x.shape
    if h < 1 or w < 1 or x.size == 0:
        raise ShapeMismatchError("cannot pool an empty tensor")
    xp = x
    if h % 2 or w % 2:
        xp = np.pad(x, ((0, 0), (0, 0), (0, h % 2), (0, w % 2)), mode="edge")
    # Window entries in row-major order so argmax's first-hit rule breaks
    # ties toward the smallest row-major index.
    stack = np.stack(
        [xp[:, :, 0::2, 0::2], xp[:, :, 0::2, 1::2], xp[:, :, 1::2, 0::2], xp[:, :, 1::2, 1::2]]
    )
    codes = np.argmax(stack, axis=0).astype(np.uint8)
    out = np.take_along_axis(stack, codes[None].astype(np.intp), axis=0)[0]
    return np.ascontiguousarray(out), PoolIndices(codes=codes, input_hw=(h, w))


def maxpool2x2_backward(grad_output, indices: PoolIndices):
    """Route output gradients back to the recorded argmax positions."""
    _check_4d(grad_output, "grad_output")
    h, w = indices.input_hw
    n, c, oh, ow = grad_output.shape
    if indices.codes.shape != (n, c, oh, ow):
        raise ShapeMismatchError(
            f"grad_output shape {grad_output.shape} does not match pool indices "
            f"{indices.codes.shape}"
        )
    if (oh, ow) != ((h + 1) // 2, (w + 1) // 2):
        raise ShapeMismatchError("pool indices are stale for this gradient")
    hp, wp = h + h % 2, w + w % 2
    gxp = np.zeros((n, c, hp, wp), dtype=grad_output.dtype)
    for code, (dy, dx) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        sel = indices.codes == code
        gxp[:, :, dy::2, dx::2] += np.where(sel, grad_output, 0)
    # Fold replicate-padding gradients back onto the source row/column.
    if h % 2:
        gxp[:, :, h - 1, :] += gxp[:, :, h, :]
    if w % 2:
        gxp[:, :, :, w - 1] += gxp[:, :, :, w]
    return np.ascontiguousarray(gxp[:, :, :h, :w])


def activation_forward(x, kind):
    """Elementwise nonlinearity: relu, elu (unit alpha) or tanh."""
    if kind == "relu":
        return np.maximum(x, 0)
    if kind == "elu":
        return np.where(x > 0, x, np.expm1(np.minimum(x, 0)))
    if kind == "tanh":
        return np.tanh(x)
    raise ValueError(f"unknown activation kind {kind!r}")


def activation_backward(grad_output, output, kind):
    """Elementwise derivative product, computed from the forward output."""
    if grad_output.shape != output.shape:
        raise ShapeMismatchError("activation gradient shape mismatch")
    if kind == "relu":
        return grad_output * (output > 0)
    if kind == "elu":
        # Below zero the output is exp(x) - 1, so the slope is output + 1.
        return grad_output * np.where(output > 0, 1.0, output + 1.0).astype(output.dtype)
    if kind == "tanh":
        return grad_output * (1.0 - output * output)
    raise ValueError(f"unknown activation kind {kind!r}")


def _axis_lerp_coords(n_in, n_out, dtype):
    # End-aligned sampling: interpolating a linear ramp stays exactly linear.
    if n_out == 1 or n_in == 1:
        idx = np.zeros(n_out, dtype=np.intp)
        return idx, idx, np.zeros(n_out, dtype=dtype)
    pos = np.arange(n_out, dtype=dtype) * ((n_in - 1) / (n_out - 1))
    lo = np.floor(pos).astype(np.intp)
    lo = np.minimum(lo, n_in - 2)
    t = pos - lo
    return lo, lo + 1, t.astype(dtype)


def resize_bilinear(x, out_h, out_w):
    """Bilinear resize of an NCHW array to an arbitrary spatial size."""
    _check_4d(x, "input")
    n, c, h, w = x.shape
    if h < 1 or w < 1 or out_h < 1 or out_w < 1:
        raise ShapeMismatchError("resize requires non-empty input and output")
    dt = x.dtype if np.issubdtype(x.dtype, np.floating) else np.float32
    x = x.astype(dt, copy=False)
    r0, r1, tr = _axis_lerp_coords(h, out_h, dt)
    c0, c1, tc = _axis_lerp_coords(w, out_w, dt)
    rows = x[:, :, r0, :] * (1 - tr)[None, None, :, None] + x[:, :, r1, :] * tr[None, None, :, None]
    out = rows[:, :, :, c0] * (1 - tc) + rows[:, :, :, c1] * tc
    return np.ascontiguousarray(out)


def upsample2x(x):
    """Bilinear x2 upsampling; constants and linear ramps are preserved."""
    _check_4d(x, "input")
    n, c, h, w = x.shape
    if h < 2 or w < 2:
        raise ShapeMismatchError("upsample needs spatial dims of at least 2")
    return resize_bilinear(x, 2 * h, 2 * w)


def downsample2x(x):
    """2x2 box-average downsampling; requires even spatial dims."""
    _check_4d(x, "input")
    n, c, h, w = x.shape
    if h < 2 or w < 2:
        raise ShapeMismatchError("downsample needs spatial dims of at least 2")
    if h % 2 or w % 2:
        raise ShapeMismatchError("downsample requires even spatial dims")
    return x.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))
