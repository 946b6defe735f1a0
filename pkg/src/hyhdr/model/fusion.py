"""Transformer fusion: Swin-style layers, window-based deformable attention
with a channel-attention FFN, and the residual blocks that stack them.

The deformable layer predicts per-token offsets from the queries, samples
keys/values bilinearly at reference-point + offset locations in the full
feature map (border-clamped), and attends inside each window. With the
offset network zeroed it collapses to plain window attention.
"""

from __future__ import annotations

import math

import numpy as np

from .. import tensor as T
from ..windows import WindowGrid, window_partition, window_reverse, window_origins
from .alignment import _rel_idx


def _mlp(x, params, base):
    h = T.linear(x, params[f"{base}.fc1.w"], params[f"{base}.fc1.b"])
    h = T.gelu(h)
    return T.linear(h, params[f"{base}.fc2.w"], params[f"{base}.fc2.b"])


def stl_layer(x, params, cfg, base, shift):
    """Pre-LN windowed multi-head self-attention + FFN, both residual."""
    H, W, C = x.shape
    M = cfg.window
    nh = cfg.heads
    hd = C // nh
    grid = WindowGrid.for_shape(H, W, M, shift=shift)

    h = T.layer_norm(x, params[f"{base}.ln1.g"], params[f"{base}.ln1.b"])
    tokens = window_partition(h, grid)                      # [nW, T, C]
    n_win, n_tok = tokens.shape[0], tokens.shape[1]
    qkv = T.linear(tokens, params[f"{base}.qkv.w"], params[f"{base}.qkv.b"])
    qkv = T.reshape(qkv, (n_win, n_tok, 3, nh, hd))
    qkv = T.transpose(qkv, (2, 0, 3, 1, 4))                 # [3, nW, nh, T, hd]
    q, k, v = (T.select0(qkv, i) for i in range(3))

    attn = T.matmul(q, T.transpose(k, (0, 1, 3, 2)))
    attn = T.mul(attn, 1.0 / math.sqrt(hd))
    bias = T.reshape(T.take0(params[f"{base}.bias"], _rel_idx(M)),
                     (n_tok, n_tok, nh))
    attn = T.add(attn, T.transpose(bias, (2, 0, 1)))
    attn = T.softmax_lastdim(attn)

    out = T.matmul(attn, v)                                 # [nW, nh, T, hd]
    out = T.reshape(T.transpose(out, (0, 2, 1, 3)), (n_win, n_tok, C))
    out = T.linear(out, params[f"{base}.proj.w"], params[f"{base}.proj.b"])
    x = T.add(x, window_reverse(out, grid, H, W))

    h = T.layer_norm(x, params[f"{base}.ln2.g"], params[f"{base}.ln2.b"])
    return T.add(x, _mlp(h, params, f"{base}.mlp"))


def reference_points(window, Hp, Wp):
    """Pixel-center coordinates of every window token in the padded map."""
    grid = WindowGrid(window=window)
    origins = window_origins(grid, Hp, Wp)                  # [nW, 2]
    ij = np.stack(np.meshgrid(np.arange(window), np.arange(window), indexing="ij"),
                  axis=-1).reshape(-1, 2)                   # [T, 2]
    return (origins[:, None, :] + ij[None, :, :]).astype(np.float64)


def wdtl_attention(x, params, cfg, base, return_attn=False):
    """Window-based deformable self-attention (the WDAtt stage)."""
    H, W, C = x.shape
    M = cfg.window
    grid = WindowGrid.for_shape(H, W, M)
    Hp, Wp = grid.padded(H, W)
    xp = T.pad2d(x, 0, grid.pad_h, 0, grid.pad_w) if (grid.pad_h or grid.pad_w) else x
    flat_grid = WindowGrid(window=M)

    tokens = window_partition(xp, flat_grid)                # [nW, T, C]
    n_win, n_tok = tokens.shape[0], tokens.shape[1]
    q = T.matmul(tokens, params[f"{base}.wq.w"])

    # offsets predicted from the query map by depthwise conv -> GELU -> 1x1
    qmap = window_reverse(q, flat_grid, Hp, Wp)
    off = T.depthwise_conv2d(qmap, params[f"{base}.off.dw"], params[f"{base}.off.dwb"])
    off = T.gelu(off)
    off = T.linear(off, params[f"{base}.off.pw.w"], params[f"{base}.off.pw.b"])  # [Hp, Wp, 2]
    offsets = window_partition(off, flat_grid)              # [nW, T, 2]

    base_pts = reference_points(M, Hp, Wp).astype(x.dtype)
    pts = T.add(T.reshape(offsets, (n_win * n_tok, 2)),
                T.Tensor(base_pts.reshape(n_win * n_tok, 2)))
    sampled = T.reshape(T.bilinear_sample(xp, pts), (n_win, n_tok, C))

    k = T.matmul(sampled, params[f"{base}.wk.w"])
    v = T.matmul(sampled, params[f"{base}.wv.w"])
    attn = T.softmax_lastdim(T.mul(T.matmul(q, T.transpose(k, (0, 2, 1))),
                                   1.0 / math.sqrt(C)))
    out = window_reverse(T.matmul(attn, v), flat_grid, Hp, Wp)
    if grid.pad_h or grid.pad_w:
        out = T.crop2d(out, 0, H, 0, W)
    if return_attn:
        return out, attn.data.copy()
    return out


def ffn_channel_attention(x, params, cfg, base):
    """Residual MLP, then a global per-channel sigmoid rescale, GELU and conv."""
    h = T.layer_norm(x, params[f"{base}.ln.g"], params[f"{base}.ln.b"])
    xr = T.add(x, _mlp(h, params, f"{base}.mlp"))

    s = T.reshape(T.mean(xr, axis=(0, 1)), (1, -1))
    s = T.relu(T.add(T.matmul(s, params[f"{base}.ca.fc1.w"]), params[f"{base}.ca.fc1.b"]))
    s = T.sigmoid(T.add(T.matmul(s, params[f"{base}.ca.fc2.w"]), params[f"{base}.ca.fc2.b"]))
    scaled = T.mul(xr, T.reshape(s, (-1,)))

    return T.conv2d(T.gelu(scaled), params[f"{base}.conv.w"], params[f"{base}.conv.b"],
                    pad_mode=cfg.conv_pad_mode)


def wdtl_layer(x, params, cfg, base):
    """Deformable attention followed by the channel-attention FFN."""
    return ffn_channel_attention(wdtl_attention(x, params, cfg, base), params, cfg, base)


def rdtb_block(x, params, cfg, r):
    """N Swin layers (alternating shift), one deformable layer, conv, residual."""
    M = cfg.window
    h = x
    for s in range(cfg.n_stl):
        h = stl_layer(h, params, cfg, f"rdtb{r}.stl{s}", shift=0 if s % 2 == 0 else M // 2)
    h = wdtl_layer(h, params, cfg, f"rdtb{r}.wdtl")
    h = T.conv2d(h, params[f"rdtb{r}.conv.w"], params[f"rdtb{r}.conv.b"],
                 pad_mode=cfg.conv_pad_mode)
    return T.add(h, x)
