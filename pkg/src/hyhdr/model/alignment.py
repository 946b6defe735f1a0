"""Content alignment: shallow encoders, patch aggregation, ghost attention
and the mutual-guidance gating between them.

Patch aggregation is windowed cross-attention: reference tokens query
non-reference keys/values inside each window, so whole patches are pulled
over. Ghost attention is per-pixel: a sigmoid map multiplies the
non-reference values to suppress misaligned content. Both use the same
query/key/value projections.
"""

from __future__ import annotations

import math

from .. import tensor as T
from ..windows import WindowGrid, window_partition, window_reverse
from .params import relative_index

_REL_IDX_CACHE = {}


def _rel_idx(window):
    if window not in _REL_IDX_CACHE:
        _REL_IDX_CACHE[window] = relative_index(window)
    return _REL_IDX_CACHE[window]


def shallow_encode(x, params, which, cfg):
    """Per-frame conv encoder: [H,W,6] -> [H,W,C]. Each frame owns its weights."""
    return T.conv2d(x, params[f"enc{which}.w"], params[f"enc{which}.b"],
                    pad_mode=cfg.conv_pad_mode)


def patch_aggregate(f_r, f_i, params, cfg, shifted=False, return_attn=False):
    """Window cross-attention from reference queries to non-reference patches."""
    H, W, _ = f_r.shape
    M = cfg.window
    grid = WindowGrid.for_shape(H, W, M, shift=M // 2 if shifted else 0)
    q = T.linear(window_partition(f_r, grid), params["shared.wq"])
    kw = window_partition(f_i, grid)
    k = T.linear(kw, params["shared.wk"])
    v = T.linear(kw, params["shared.wv"])

    d = q.shape[-1]
    logits = T.matmul(q, T.transpose(k, (0, 2, 1)))
    logits = T.mul(logits, 1.0 / math.sqrt(d))
    bias = T.reshape(T.take0(params["pa.bias"], _rel_idx(M)), (M * M, M * M))
    attn = T.softmax_lastdim(T.add(logits, bias))
    out = window_reverse(T.matmul(attn, v), grid, H, W)
    if return_attn:
        return out, attn.data.copy()
    return out


def ghost_attention(f_r, f_i, params, cfg, return_attn=False):
    """Pixel-level suppression: v_i scaled by sigmoid(conv(concat(q, k_i)))."""
    q = T.linear(f_r, params["shared.wq"])
    k = T.linear(f_i, params["shared.wk"])
    v = T.linear(f_i, params["shared.wv"])
    a = T.sigmoid(T.conv2d(T.concat([q, k], axis=2), params["ga.conv.w"],
                           params["ga.conv.b"], pad_mode=cfg.conv_pad_mode))
    out = T.mul(v, a)
    if return_attn:
        return out, a.data.copy()
    return out


def gating_fuse(f_pa, f_ga, params, cfg):
    """Mutual guidance: each branch gated by a sigmoid of the other, fused
    by conv, then a residual MLP branch normalized after the MLP."""

    def phi(z):
        return T.sigmoid(T.conv2d(z, params["gate.phi.w"], params["gate.phi.b"],
                                  pad_mode=cfg.conv_pad_mode))

    mixed = T.concat([T.mul(f_ga, phi(f_pa)), T.mul(f_pa, phi(f_ga))], axis=2)
    f_gating = T.conv2d(mixed, params["gate.fuse.w"], params["gate.fuse.b"],
                        pad_mode=cfg.conv_pad_mode)
    h = T.linear(f_gating, params["gate.mlp.fc1.w"], params["gate.mlp.fc1.b"])
    h = T.gelu(h)
    h = T.linear(h, params["gate.mlp.fc2.w"], params["gate.mlp.fc2.b"])
    h = T.layer_norm(h, params["gate.ln.g"], params["gate.ln.b"])
    return T.add(f_gating, h)


def align_stack(inputs, params, cfg):
    """Full alignment path: encode, PA+GA+gating per non-reference frame,
    concat with the reference feature and reduce to C channels."""
    f1 = shallow_encode(inputs[0], params, 1, cfg)
    f2 = shallow_encode(inputs[1], params, 2, cfg)
    f3 = shallow_encode(inputs[2], params, 3, cfg)

    aligned = []
    for f_i in (f1, f3):
        branch = cfg.alignment_mode
        if branch in ("gated", "pa"):
            pa = T.mul(T.add(patch_aggregate(f2, f_i, params, cfg, shifted=False),
                             patch_aggregate(f2, f_i, params, cfg, shifted=True)),
                       0.5)
        if branch in ("gated", "ga"):
            ga = ghost_attention(f2, f_i, params, cfg)
        if branch == "gated":
            aligned.append(gating_fuse(pa, ga, params, cfg))
        elif branch == "pa":
            aligned.append(pa)
        else:
            aligned.append(ga)

    cat = T.concat([aligned[0], f2, aligned[1]], axis=2)
    return T.conv2d(cat, params["reduce.w"], params["reduce.b"],
                    pad_mode=cfg.conv_pad_mode)
