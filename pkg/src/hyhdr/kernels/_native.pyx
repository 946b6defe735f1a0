# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: patch extraction/accumulation and bilinear sampling.

Same contracts and summation order as numpy_backend.py. The wins over the
numpy fallback come from col2im and the bilinear scatter, where numpy has
to go through add.at.
"""

import numpy as np

cimport numpy as cnp

NAME = "native"

ctypedef fused floating:
    float
    double


def im2col(floating[:, :, ::1] x, int k, int stride, int pad):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t Ho = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - k) // stride + 1
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.zeros((Ho * Wo, k * k * C), dtype=dtype)
    cdef floating[:, ::1] out = out_arr
    cdef Py_ssize_t ho, wo, i, j, c, hi, wi, row, col
    with nogil:
        for ho in range(Ho):
            for wo in range(Wo):
                row = ho * Wo + wo
                for i in range(k):
                    hi = ho * stride + i - pad
                    if hi < 0 or hi >= H:
                        continue
                    for j in range(k):
                        wi = wo * stride + j - pad
                        if wi < 0 or wi >= W:
                            continue
                        col = (i * k + j) * C
                        for c in range(C):
                            out[row, col + c] = x[hi, wi, c]
    return out_arr


def col2im(floating[:, ::1] cols, int H, int W, int C, int k, int stride, int pad):
    cdef Py_ssize_t Ho = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - k) // stride + 1
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.zeros((H, W, C), dtype=dtype)
    cdef floating[:, :, ::1] out = out_arr
    cdef Py_ssize_t ho, wo, i, j, c, hi, wi, row, col
    with nogil:
        for ho in range(Ho):
            for wo in range(Wo):
                row = ho * Wo + wo
                for i in range(k):
                    hi = ho * stride + i - pad
                    if hi < 0 or hi >= H:
                        continue
                    for j in range(k):
                        wi = wo * stride + j - pad
                        if wi < 0 or wi >= W:
                            continue
                        col = (i * k + j) * C
                        for c in range(C):
                            out[hi, wi, c] += cols[row, col + c]
    return out_arr


def bilinear_gather(floating[:, :, ::1] x, floating[:, ::1] pts):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t P = pts.shape[0]
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.zeros((P, C), dtype=dtype)
    cdef floating[:, ::1] out = out_arr
    cdef Py_ssize_t p, c, y0, x0, y1, x1
    # omfy/omfx keep 1-f in the working precision; a bare 1.0 literal would
    # promote the float32 path to double and drift a ulp off the fallback
    cdef floating y, xx, fy, fx, omfy, omfx, one = 1
    with nogil:
        for p in range(P):
            y = pts[p, 0]
            xx = pts[p, 1]
            if y < 0: y = 0
            if y > H - 1: y = H - 1
            if xx < 0: xx = 0
            if xx > W - 1: xx = W - 1
            y0 = <Py_ssize_t>y
            x0 = <Py_ssize_t>xx
            if y0 > H - 2: y0 = H - 2
            if y0 < 0: y0 = 0
            if x0 > W - 2: x0 = W - 2
            if x0 < 0: x0 = 0
            y1 = y0 + 1 if y0 + 1 < H else H - 1
            x1 = x0 + 1 if x0 + 1 < W else W - 1
            fy = y - y0
            fx = xx - x0
            omfy = one - fy
            omfx = one - fx
            for c in range(C):
                out[p, c] = (x[y0, x0, c] * omfy * omfx
                             + x[y0, x1, c] * omfy * fx
                             + x[y1, x0, c] * fy * omfx
                             + x[y1, x1, c] * fy * fx)
    return out_arr


def bilinear_backward(floating[:, :, ::1] x, floating[:, ::1] pts,
                      floating[:, ::1] gout):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t P = pts.shape[0]
    dtype = np.float32 if floating is float else np.float64
    gx_arr = np.zeros((H, W, C), dtype=dtype)
    gp_arr = np.zeros((P, 2), dtype=dtype)
    cdef floating[:, :, ::1] gx = gx_arr
    cdef floating[:, ::1] gp = gp_arr
    cdef Py_ssize_t p, c, y0, x0, y1, x1
    cdef floating y, xx, fy, fx, omfy, omfx, g, gy, gxx, one = 1
    with nogil:
        for p in range(P):
            y = pts[p, 0]
            xx = pts[p, 1]
            if y < 0: y = 0
            if y > H - 1: y = H - 1
            if xx < 0: xx = 0
            if xx > W - 1: xx = W - 1
            y0 = <Py_ssize_t>y
            x0 = <Py_ssize_t>xx
            if y0 > H - 2: y0 = H - 2
            if y0 < 0: y0 = 0
            if x0 > W - 2: x0 = W - 2
            if x0 < 0: x0 = 0
            y1 = y0 + 1 if y0 + 1 < H else H - 1
            x1 = x0 + 1 if x0 + 1 < W else W - 1
            fy = y - y0
            fx = xx - x0
            omfy = one - fy
            omfx = one - fx
            gy = 0
            gxx = 0
            for c in range(C):
                g = gout[p, c]
                # same grouping as the fallback: weight product first
                gx[y0, x0, c] += g * (omfy * omfx)
                gx[y0, x1, c] += g * (omfy * fx)
                gx[y1, x0, c] += g * (fy * omfx)
                gx[y1, x1, c] += g * (fy * fx)
                gy += g * ((x[y1, x0, c] - x[y0, x0, c]) * omfx
                           + (x[y1, x1, c] - x[y0, x1, c]) * fx)
                gxx += g * ((x[y0, x1, c] - x[y0, x0, c]) * omfy
                            + (x[y1, x1, c] - x[y1, x0, c]) * fy)
            if pts[p, 0] >= 0 and pts[p, 0] <= H - 1:
                gp[p, 0] = gy
            if pts[p, 1] >= 0 and pts[p, 1] <= W - 1:
                gp[p, 1] = gxx
    return gx_arr, gp_arr
