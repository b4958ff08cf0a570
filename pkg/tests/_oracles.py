"""Independent reference implementations used to check the fast kernels.

Everything here is written as plainly as possible (explicit loops, no shared
code with the package) so it can serve as ground truth in tests.
"""

import numpy as np


def conv2d_direct(x, weights, bias, stride, padding):
    """Quadruple-loop cross-correlation."""
    n, ci, h, w = x.shape
    co, _, kh, kw = weights.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((n, co, oh, ow), dtype=np.float64)
    for b in range(n):
        for o in range(co):
            for y in range(oh):
                for xx in range(ow):
                    acc = 0.0
                    for c in range(ci):
                        for i in range(kh):
                            for j in range(kw):
                                acc += weights[o, c, i, j] * xp[b, c, y * stride + i, xx * stride + j]
                    out[b, o, y, xx] = acc + bias[o]
    return out


def maxpool2x2_direct(x):
    """Exhaustive window max with replicate padding for odd dims."""
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (0, h % 2), (0, w % 2)), mode="edge")
    oh, ow = (h + 1) // 2, (w + 1) // 2
    out = np.zeros((n, c, oh, ow), dtype=x.dtype)
    for b in range(n):
        for ch in range(c):
            for y in range(oh):
                for xx in range(ow):
                    out[b, ch, y, xx] = xp[b, ch, 2 * y : 2 * y + 2, 2 * xx : 2 * xx + 2].max()
    return out


def central_diff_grad(f, x, step=1e-4, coords=None):
    """Central finite differences of a scalar function over a flat array."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    if coords is None:
        coords = range(flat.size)
    grad = {}
    for i in coords:
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (f(xp.reshape(x.shape)) - f(xm.reshape(x.shape))) / (2 * step)
    return grad


def nn_rescan(queries, candidates):
    """Exhaustive nearest-candidate scan, first index wins ties."""
    best_idx = np.zeros(len(queries), dtype=np.intp)
    best_d = np.zeros(len(queries), dtype=np.float64)
    for qi, q in enumerate(queries):
        dists = [float(((q - c) ** 2).sum()) for c in candidates]
        best = min(range(len(dists)), key=lambda k: (dists[k], k))
        best_idx[qi] = best
        best_d[qi] = dists[best]
    return best_idx, best_d


def rel_err(a, b):
    denom = max(abs(a), abs(b), 1e-12)
    return abs(a - b) / denom
