"""Hot-kernel backend selection.

Prefers the compiled extension (built from _native.pyx) and falls back to
the numpy implementation. Set HYHDR_PURE_PYTHON=1 to force the fallback.
"""

import os

import numpy as np

from . import numpy_backend

if os.environ.get("HYHDR_PURE_PYTHON") == "1":
    _impl = numpy_backend
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = numpy_backend

BACKEND = _impl.NAME


def _as2(x, dtype):
    return np.ascontiguousarray(x, dtype=dtype)


def im2col(x, k, stride, pad):
    return _impl.im2col(np.ascontiguousarray(x), int(k), int(stride), int(pad))


def col2im(cols, H, W, C, k, stride, pad):
    return _impl.col2im(np.ascontiguousarray(cols), int(H), int(W), int(C),
                        int(k), int(stride), int(pad))


def bilinear_gather(x, pts):
    x = np.ascontiguousarray(x)
    return _impl.bilinear_gather(x, _as2(pts, x.dtype))


def bilinear_backward(x, pts, gout):
    x = np.ascontiguousarray(x)
    return _impl.bilinear_backward(x, _as2(pts, x.dtype), _as2(gout, x.dtype))
