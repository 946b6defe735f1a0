"""Pure numpy implementations of the hot kernels.

Contracts match ``_native.pyx`` exactly (same layouts, same summation
order in the bilinear kernels) so the two backends are interchangeable.
Feature maps are row-major [H, W, C]; patch matrices are laid out with
kernel taps outer and channels inner, matching weight.reshape(k*k*Cin, Cout).
"""

import numpy as np

NAME = "numpy"


def im2col(x, k, stride, pad):
    """[H,W,C] -> [Ho*Wo, k*k*C] patch matrix with zero padding."""
    H, W, C = x.shape
    if pad:
        x = np.pad(x, ((pad, pad), (pad, pad), (0, 0)))
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(0, 1))
    win = win[::stride, ::stride]  # [Ho, Wo, C, k, k]
    return np.ascontiguousarray(win.transpose(0, 1, 3, 4, 2)).reshape(Ho * Wo, k * k * C)


def col2im(cols, H, W, C, k, stride, pad):
    """Adjoint of im2col: scatter-add patch rows back to an [H,W,C] map."""
    Hp, Wp = H + 2 * pad, W + 2 * pad
    Ho = (Hp - k) // stride + 1
    Wo = (Wp - k) // stride + 1
    out = np.zeros((Hp * Wp, C), dtype=cols.dtype)
    vals = cols.reshape(Ho, Wo, k, k, C)
    hi = np.arange(Ho)[:, None] * stride + np.arange(k)[None, :]  # [Ho,k]
    wi = np.arange(Wo)[:, None] * stride + np.arange(k)[None, :]  # [Wo,k]
    idx = hi[:, None, :, None] * Wp + wi[None, :, None, :]        # [Ho,Wo,k,k]
    np.add.at(out, idx.reshape(-1), vals.reshape(-1, C))
    out = out.reshape(Hp, Wp, C)
    if pad:
        out = out[pad:pad + H, pad:pad + W]
    return np.ascontiguousarray(out)


def _corners(x, pts):
    H, W, _ = x.shape
    y = np.clip(pts[:, 0], 0.0, H - 1.0)
    xx = np.clip(pts[:, 1], 0.0, W - 1.0)
    y0 = np.floor(y).astype(np.intp)
    x0 = np.floor(xx).astype(np.intp)
    np.clip(y0, 0, max(H - 2, 0), out=y0)
    np.clip(x0, 0, max(W - 2, 0), out=x0)
    y1 = np.minimum(y0 + 1, H - 1)
    x1 = np.minimum(x0 + 1, W - 1)
    fy = (y - y0).astype(x.dtype)[:, None]
    fx = (xx - x0).astype(x.dtype)[:, None]
    return y0, x0, y1, x1, fy, fx


def bilinear_gather(x, pts):
    """Sample [H,W,C] at continuous (row, col) points [P,2], border-clamped."""
    y0, x0, y1, x1, fy, fx = _corners(x, pts)
    v00 = x[y0, x0]
    v01 = x[y0, x1]
    v10 = x[y1, x0]
    v11 = x[y1, x1]
    return (v00 * (1 - fy) * (1 - fx) + v01 * (1 - fy) * fx
            + v10 * fy * (1 - fx) + v11 * fy * fx)


def bilinear_backward(x, pts, gout):
    """Gradients of bilinear_gather w.r.t. the map and the points.

    Point gradients are zeroed where the raw coordinate lies outside the
    map (the clamp is flat there); the exact border keeps its one-sided slope.
    """
    H, W, C = x.shape
    y0, x0, y1, x1, fy, fx = _corners(x, pts)
    w00 = (1 - fy) * (1 - fx)
    w01 = (1 - fy) * fx
    w10 = fy * (1 - fx)
    w11 = fy * fx

    gx = np.zeros((H * W, C), dtype=x.dtype)
    np.add.at(gx, y0 * W + x0, gout * w00)
    np.add.at(gx, y0 * W + x1, gout * w01)
    np.add.at(gx, y1 * W + x0, gout * w10)
    np.add.at(gx, y1 * W + x1, gout * w11)
    gx = gx.reshape(H, W, C)

    v00 = x[y0, x0]
    v01 = x[y0, x1]
    v10 = x[y1, x0]
    v11 = x[y1, x1]
    dy = (v10 - v00) * (1 - fx) + (v11 - v01) * fx
    dx = (v01 - v00) * (1 - fy) + (v11 - v10) * fy
    gpts = np.empty_like(pts)
    gpts[:, 0] = (gout * dy).sum(axis=1)
    gpts[:, 1] = (gout * dx).sum(axis=1)
    gpts[:, 0] *= (pts[:, 0] >= 0.0) & (pts[:, 0] <= H - 1.0)
    gpts[:, 1] *= (pts[:, 1] >= 0.0) & (pts[:, 1] <= W - 1.0)
    return gx, gpts
