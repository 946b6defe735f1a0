"""Dense float tensors with a reverse-mode gradient tape.

Carries exactly the differentiable operator set the network needs:
elementwise arithmetic, matmul, conv2d (+ depthwise), softmax, layer norm,
bilinear sampling, shape plumbing and reductions. Data lives in numpy
arrays, feature maps row-major [H, W, C]. Ops are recorded on the active
GradTape (creation order is a topological order); backward walks the tape
once in reverse. Everything is a pure function of its inputs, so forward
evaluation is safe from multiple threads; a tape is single-owner.

float32 is the working precision; build parameters as float64 for
finite-difference checks (grad_check insists on it).
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf, expit

from .errors import ConfigError, NumericError, ShapeError
from . import kernels

DEFAULT_DTYPE = np.float32

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)

_TAPE = None
_FINITE_CHECKS = True


def set_finite_checks(enabled):
    """Toggle the non-finite guard on op outputs; returns the old value."""
    global _FINITE_CHECKS
    old = _FINITE_CHECKS
    _FINITE_CHECKS = bool(enabled)
    return old


class Tensor:
    """A dense array plus its accumulated gradient."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        if _FINITE_CHECKS and not np.all(np.isfinite(arr)):
            raise NumericError("non-finite values in tensor")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # operator sugar; scalars are plain python numbers
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ShapeError("tensor/tensor division is not part of the op set")
        return div(self, other)

    def __pow__(self, p):
        return power(self, p)


class GradTape:
    """Ordered record of op applications; reversing it yields the adjoints."""

    __slots__ = ("_nodes",)

    def __init__(self):
        self._nodes = []

    def __enter__(self):
        global _TAPE
        if _TAPE is not None:
            raise ConfigError("GradTape already active")
        _TAPE = self
        return self

    def __exit__(self, *exc):
        global _TAPE
        _TAPE = None
        return False

    def __len__(self):
        return len(self._nodes)

    def backward(self, loss):
        """Accumulate d loss / d input into .grad of every recorded input."""
        if loss.size != 1:
            raise ShapeError("backward needs a scalar loss")
        loss.grad = np.ones_like(loss.data)
        for out, inputs, back in reversed(self._nodes):
            gout = out.grad
            if gout is None:
                continue
            grads = back(gout)
            for t, g in zip(inputs, grads):
                if g is None or not t.requires_grad:
                    continue
                if t.grad is None:
                    t.grad = g
                else:
                    # out of place: g may alias another tensor's pending grad
                    # (add hands the same array to both inputs)
                    t.grad = t.grad + g
            out.grad = None  # consumers already visited; free it
        self._nodes.clear()


def _finite(arr, op):
    if _FINITE_CHECKS and not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values out of {op}")
    return arr


def _out(data, inputs, back, op):
    _finite(data, op)
    rg = _TAPE is not None and any(t.requires_grad for t in inputs)
    t = Tensor.__new__(Tensor)
    t.data = data
    t.requires_grad = rg
    t.grad = None
    if rg:
        _TAPE._nodes.append((t, inputs, back))
    return t


def _unbroadcast(g, shape):
    """Sum g down to `shape` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------- arithmetic

def add(a, b):
    if not isinstance(b, Tensor):
        c = float(b)
        return _out(a.data + c, (a,), lambda g: (g,), "add")
    data = a.data + b.data

    def back(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _out(data, (a, b), back, "add")


def sub(a, b):
    if not isinstance(b, Tensor):
        return add(a, -float(b))
    data = a.data - b.data

    def back(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _out(data, (a, b), back, "sub")


def mul(a, b):
    if not isinstance(b, Tensor):
        c = float(b)
        return _out(a.data * c, (a,), lambda g: (g * c,), "mul")
    data = a.data * b.data
    ad, bd = a.data, b.data

    def back(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _out(data, (a, b), back, "mul")


def neg(a):
    return _out(-a.data, (a,), lambda g: (-g,), "neg")


def div(a, c):
    """True division by a scalar (x/x stays exactly 1, unlike mul by 1/c)."""
    c = float(c)
    return _out(a.data / c, (a,), lambda g: (g / c,), "div")


def power(a, p):
    p = float(p)
    ad = a.data
    data = ad ** p
    return _out(data, (a,), lambda g: (g * p * ad ** (p - 1.0),), "power")


def exp(a):
    data = np.exp(a.data)
    return _out(data, (a,), lambda g: (g * data,), "exp")


def log(a):
    ad = a.data
    return _out(np.log(ad), (a,), lambda g: (g / ad,), "log")


def relu(a):
    ad = a.data
    data = np.maximum(ad, 0)
    return _out(data, (a,), lambda g: (g * (ad > 0),), "relu")


def sigmoid(a):
    s = expit(a.data)
    return _out(s, (a,), lambda g: (g * s * (1 - s),), "sigmoid")


def gelu(a):
    ad = a.data
    phi = 0.5 * (1.0 + erf(ad * _INV_SQRT2))
    data = ad * phi

    def back(g):
        pdf = np.exp(-0.5 * ad * ad) * _INV_SQRT2PI
        return (g * (phi + ad * pdf),)

    return _out(data, (a,), back, "gelu")


def abs_(a):
    ad = a.data
    return _out(np.abs(ad), (a,), lambda g: (g * np.sign(ad),), "abs")


def clamp(a, lo, hi):
    ad = a.data
    data = np.clip(ad, lo, hi)
    mask = (ad >= lo) & (ad <= hi)
    return _out(data, (a,), lambda g: (g * mask,), "clamp")


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum_(a, axis=None, keepdims=False):
    axes = _norm_axis(axis, a.ndim)
    data = a.data.sum(axis=axes, keepdims=keepdims)
    shape = a.data.shape

    def back(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, shape).copy(),)

    return _out(np.asarray(data), (a,), back, "sum")


def mean(a, axis=None, keepdims=False):
    axes = _norm_axis(axis, a.ndim)
    n = 1
    for ax in axes:
        n *= a.data.shape[ax]
    data = a.data.mean(axis=axes, keepdims=keepdims)
    shape = a.data.shape

    def back(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / n, shape).copy(),)

    return _out(np.asarray(data), (a,), back, "mean")


# ------------------------------------------------------------------- linear

def matmul(a, b):
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2:
        raise ShapeError("matmul needs >=2-d operands")
    if bd.ndim != 2 and ad.ndim != bd.ndim:
        raise ShapeError(f"unsupported matmul ranks {ad.ndim} @ {bd.ndim}")
    data = np.matmul(ad, bd)

    def back(g):
        if bd.ndim == 2:
            ga = np.matmul(g, bd.T)
            gb = np.matmul(ad.reshape(-1, ad.shape[-1]).T, g.reshape(-1, g.shape[-1]))
        else:
            ga = np.matmul(g, bd.swapaxes(-1, -2))
            gb = np.matmul(ad.swapaxes(-1, -2), g)
            gb = _unbroadcast(gb, bd.shape)
        return _unbroadcast(ga, ad.shape), gb

    return _out(data, (a, b), back, "matmul")


def linear(x, w, b=None):
    """x[..., Cin] @ w[Cin, Cout] (+ b): the per-position projection."""
    lead = x.shape[:-1]
    y = matmul(reshape(x, (-1, w.shape[0])), w)
    y = reshape(y, lead + (w.shape[1],))
    if b is not None:
        y = add(y, b)
    return y


def conv2d(x, weight, bias=None, stride=1, padding=None, pad_mode="zeros"):
    """Cross-correlate [H,W,Cin] with [k,k,Cin,Cout]; odd k only."""
    if x.ndim != 3 or weight.ndim != 4:
        raise ShapeError("conv2d wants x[H,W,Cin], weight[k,k,Cin,Cout]")
    k = weight.shape[0]
    if weight.shape[1] != k or k % 2 == 0:
        raise ShapeError(f"kernel must be odd square, got {weight.shape[:2]}")
    if weight.shape[2] != x.shape[2]:
        raise ShapeError(f"Cin mismatch: x has {x.shape[2]}, weight {weight.shape[2]}")
    if stride < 1:
        raise ConfigError("stride must be >= 1")
    if padding is None:
        padding = (k - 1) // 2
    if pad_mode == "circular" and padding:
        x = pad2d(x, padding, padding, padding, padding, mode="wrap")
        padding = 0
    elif pad_mode not in ("zeros", "circular"):
        raise ConfigError(f"unknown pad_mode {pad_mode!r}")

    H, W, Cin = x.shape
    Cout = weight.shape[3]
    _finite(x.data, "conv2d input")
    cols = kernels.im2col(x.data, k, stride, padding)
    w2 = weight.data.reshape(k * k * Cin, Cout)
    out = np.dot(cols, w2)
    if bias is not None:
        out = out + bias.data
    Ho = (H + 2 * padding - k) // stride + 1
    Wo = (W + 2 * padding - k) // stride + 1
    out = out.reshape(Ho, Wo, Cout)

    def back(g):
        g2 = g.reshape(-1, Cout)
        gw = np.dot(cols.T, g2).reshape(weight.shape)
        gx = kernels.col2im(np.dot(g2, w2.T), H, W, Cin, k, stride, padding)
        gb = g2.sum(axis=0) if bias is not None else None
        return (gx, gw, gb) if bias is not None else (gx, gw)

    inputs = (x, weight, bias) if bias is not None else (x, weight)
    return _out(out, inputs, back, "conv2d")


def _dw_windows(xd, k):
    p = (k - 1) // 2
    xp = np.pad(xd, ((p, p), (p, p), (0, 0)))
    return np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(0, 1))


def depthwise_conv2d(x, weight, bias=None):
    """Per-channel [k,k,C] correlation, stride 1, shape-preserving."""
    if weight.ndim != 3 or weight.shape[0] != weight.shape[1]:
        raise ShapeError("depthwise weight must be [k,k,C]")
    if weight.shape[2] != x.shape[2]:
        raise ShapeError("depthwise channel mismatch")
    k = weight.shape[0]
    if k % 2 == 0:
        raise ShapeError("kernel must be odd")
    win = _dw_windows(x.data, k)  # [H,W,C,k,k]
    out = np.einsum("hwcij,ijc->hwc", win, weight.data)
    if bias is not None:
        out = out + bias.data

    def back(g):
        gw = np.einsum("hwcij,hwc->ijc", win, g)
        gwin = _dw_windows(g, k)
        gx = np.einsum("hwcij,ijc->hwc", gwin, weight.data[::-1, ::-1])
        gb = g.sum(axis=(0, 1)) if bias is not None else None
        return (gx, gw, gb) if bias is not None else (gx, gw)

    inputs = (x, weight, bias) if bias is not None else (x, weight)
    return _out(out, inputs, back, "depthwise_conv2d")


# -------------------------------------------------------------- normalizers

def softmax_lastdim(x):
    """Max-subtracted softmax over the last dimension."""
    xd = x.data
    if xd.shape[-1] < 1:
        raise ShapeError("softmax needs a non-empty last dim")
    e = np.exp(xd - xd.max(axis=-1, keepdims=True))
    y = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    return _out(y, (x,), back, "softmax_lastdim")


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize the channel (last) dim to zero mean / unit var, then affine."""
    if eps <= 0:
        raise ConfigError("eps must be positive")
    C = x.shape[-1]
    if gamma.shape != (C,) or beta.shape != (C,):
        raise ShapeError(f"gamma/beta must be [{C}]")
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = gamma.data * xhat + beta.data

    def back(g):
        lead = tuple(range(g.ndim - 1))
        ggamma = (g * xhat).sum(axis=lead)
        gbeta = g.sum(axis=lead)
        dxhat = g * gamma.data
        gx = inv * (dxhat
                    - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return gx, ggamma, gbeta

    return _out(data, (x, gamma, beta), back, "layer_norm")


# ------------------------------------------------------------------ sampling

def bilinear_sample(x, points):
    """Sample x[H,W,C] at continuous (row, col) points[P,2], border-clamped."""
    if x.ndim != 3 or points.ndim != 2 or points.shape[1] != 2:
        raise ShapeError("bilinear_sample wants x[H,W,C], points[P,2]")
    xd, pd = x.data, points.data
    data = kernels.bilinear_gather(xd, pd)

    def back(g):
        return kernels.bilinear_backward(xd, pd, g)

    return _out(data, (x, points), back, "bilinear_sample")


# ------------------------------------------------------------ shape plumbing

def reshape(x, shape):
    old = x.data.shape
    return _out(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),), "reshape")


def transpose(x, axes):
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _out(np.ascontiguousarray(x.data.transpose(axes)), (x,),
                lambda g: (g.transpose(inv),), "transpose")


def roll(x, shifts, axes):
    data = np.roll(x.data, shifts, axis=axes)
    neg_shifts = tuple(-s for s in shifts)
    return _out(data, (x,), lambda g: (np.roll(g, neg_shifts, axis=axes),), "roll")


def concat(tensors, axis):
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _out(data, tuple(tensors), back, "concat")


def select0(x, i):
    """x[i] along axis 0."""
    shape = x.data.shape

    def back(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[i] = g
        return (gx,)

    return _out(np.ascontiguousarray(x.data[i]), (x,), back, "select0")


def take0(x, idx):
    """Gather rows x[idx] along axis 0 (idx is a 1-d int array)."""
    idx = np.asarray(idx)
    shape = x.data.shape

    def back(g):
        gx = np.zeros(shape, dtype=g.dtype)
        np.add.at(gx, idx, g)
        return (gx,)

    return _out(x.data[idx], (x,), back, "take0")


def crop2d(x, h0, h1, w0, w1):
    shape = x.data.shape

    def back(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[h0:h1, w0:w1] = g
        return (gx,)

    return _out(np.ascontiguousarray(x.data[h0:h1, w0:w1]), (x,), back, "crop2d")


def pad2d(x, top, bottom, left, right, mode="reflect"):
    """Pad the two leading (spatial) dims by index reuse (reflect or wrap)."""
    if mode not in ("reflect", "wrap"):
        raise ConfigError(f"unknown pad mode {mode!r}")
    H, W = x.shape[:2]
    if mode == "reflect" and (top >= H or bottom >= H or left >= W or right >= W):
        raise ShapeError("reflect padding wider than the map")
    rows = np.pad(np.arange(H), (top, bottom), mode=mode)
    cols = np.pad(np.arange(W), (left, right), mode=mode)
    data = x.data[rows[:, None], cols[None, :]]
    idx = (rows[:, None] * W + cols[None, :]).ravel()

    def back(g):
        gflat = np.zeros((H * W,) + g.shape[2:], dtype=g.dtype)
        np.add.at(gflat, idx, g.reshape((-1,) + g.shape[2:]))
        return (gflat.reshape(x.data.shape),)

    return _out(data, (x,), back, "pad2d")


def avg_pool2(x):
    """2x2 average pooling; spatial dims must be even."""
    H, W = x.shape[:2]
    if H % 2 or W % 2:
        raise ShapeError("avg_pool2 needs even spatial dims")
    C = x.shape[2]
    data = x.data.reshape(H // 2, 2, W // 2, 2, C).mean(axis=(1, 3))

    def back(g):
        gx = np.broadcast_to(g[:, None, :, None, :] * 0.25, (H // 2, 2, W // 2, 2, C))
        return (gx.reshape(H, W, C).copy(),)

    return _out(data, (x,), back, "avg_pool2")


# --------------------------------------------------------- gradient checking

class GradCheckReport:
    """Per-parameter worst relative error between tape and finite differences."""

    def __init__(self, tol):
        self.tol = tol
        self.per_param = {}
        self.failures = []

    @property
    def max_error(self):
        return max(self.per_param.values(), default=0.0)

    @property
    def passed(self):
        return not self.failures

    def raise_on_failure(self):
        if self.failures:
            name, idx, a, fd, err = max(self.failures, key=lambda f: f[-1])
            raise NumericError(
                f"grad check failed at {name}[{idx}]: tape {a:.6e} vs fd {fd:.6e} "
                f"(rel err {err:.3e} >= {self.tol:.1e})")

    def __repr__(self):
        worst = max(self.per_param.items(), key=lambda kv: kv[1], default=("-", 0.0))
        return (f"GradCheckReport(passed={self.passed}, max_error={self.max_error:.3e},"
                f" worst={worst[0]})")


def grad_check(f, params, tol=1e-4, h=1e-5, max_entries=8, rng=None):
    """Compare tape gradients of the scalar f() against central differences.

    `params` maps names to float64 Tensors that f closes over. Large
    parameters are subsampled (`max_entries` elements each, rng-chosen).
    """
    for name, p in params.items():
        if p.dtype != np.float64:
            raise ConfigError(f"grad_check needs float64 params ({name} is {p.dtype})")
    rng = rng or np.random.Generator(np.random.Philox(0))

    for p in params.values():
        p.grad = None
    with GradTape() as tape:
        out = f()
        if out.size != 1:
            raise ShapeError("grad_check needs a scalar-valued f")
        tape.backward(out)
    analytic = {name: (p.grad if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}

    report = GradCheckReport(tol)
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n = flat.size
        if n <= max_entries:
            entries = np.arange(n)
        else:
            entries = rng.choice(n, size=max_entries, replace=False)
        worst = 0.0
        ana = analytic[name].reshape(-1)
        for i in entries:
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f().data)
            flat[i] = orig - h
            fm = float(f().data)
            flat[i] = orig
            fd = (fp - fm) / (2.0 * h)
            a = float(ana[i])
            err = abs(a - fd) / max(abs(a), abs(fd), 1e-4)
            worst = max(worst, err)
            if err >= tol:
                report.failures.append((name, int(i), a, fd, err))
        report.per_param[name] = worst
    return report
