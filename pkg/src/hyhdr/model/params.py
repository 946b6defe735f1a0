"""Model configuration, parameter initialization and bookkeeping.

Parameters live in a flat name->Tensor dict. The PA/GA projection triple
(shared.wq/wk/wv) is stored once and read by both modules, which is what
makes the weight sharing real rather than a copy.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import ConfigError
from .. import tensor as T


@dataclass
class ModelConfig:
    channels: int = 16        # shallow feature width C
    attn_dim: int = 16        # PA/GA projection width d
    window: int = 8           # window size M for PA, STL and WDTL
    heads: int = 2            # STL attention heads
    n_rdtb: int = 3
    n_stl: int = 6
    mlp_ratio: int = 2
    ca_reduction: int = 4
    alignment_mode: str = "gated"   # gated | pa | ga
    conv_pad_mode: str = "zeros"    # zeros | circular

    def __post_init__(self):
        if self.channels <= 0 or self.attn_dim <= 0 or self.window <= 0:
            raise ConfigError("channels, attn_dim and window must be positive")
        if self.channels % self.heads:
            raise ConfigError("heads must divide channels")
        if self.channels // self.ca_reduction < 1:
            raise ConfigError("ca_reduction too large for channel count")
        if self.alignment_mode not in ("gated", "pa", "ga"):
            raise ConfigError(f"unknown alignment_mode {self.alignment_mode!r}")
        if self.conv_pad_mode not in ("zeros", "circular"):
            raise ConfigError(f"unknown conv_pad_mode {self.conv_pad_mode!r}")

    @property
    def aligned_channels(self):
        # gated mode fuses to C; single-branch modes pass d through
        return self.channels if self.alignment_mode == "gated" else self.attn_dim

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def relative_index(window):
    """[M^2, M^2] lookup into a (2M-1)^2 relative-position table, flattened."""
    m = window
    coords = np.stack(np.meshgrid(np.arange(m), np.arange(m), indexing="ij"),
                      axis=-1).reshape(-1, 2)
    rel = coords[:, None, :] - coords[None, :, :] + (m - 1)
    return (rel[..., 0] * (2 * m - 1) + rel[..., 1]).reshape(-1)


def init_model_params(cfg: ModelConfig, seed=0, dtype=np.float32):
    """Seeded (Philox) parameter dict; draw order is fixed."""
    rng = np.random.Generator(np.random.Philox(seed))
    p = {}

    def param(name, data):
        p[name] = T.Tensor(np.asarray(data), requires_grad=True, dtype=dtype)

    def conv(name, k, cin, cout, zero=False):
        if zero:
            w = np.zeros((k, k, cin, cout))
        else:
            w = rng.normal(0.0, np.sqrt(2.0 / (k * k * cin)), size=(k, k, cin, cout))
        param(f"{name}.w", w)
        param(f"{name}.b", np.zeros(cout))

    def lin(name, cin, cout, zero=False, bias=True):
        w = np.zeros((cin, cout)) if zero else rng.normal(0.0, np.sqrt(1.0 / cin),
                                                          size=(cin, cout))
        param(f"{name}.w", w)
        if bias:
            param(f"{name}.b", np.zeros(cout))

    def ln(name, c):
        param(f"{name}.g", np.ones(c))
        param(f"{name}.b", np.zeros(c))

    def mlp(name, c, hidden):
        lin(f"{name}.fc1", c, hidden)
        lin(f"{name}.fc2", hidden, c)

    C, d, M = cfg.channels, cfg.attn_dim, cfg.window
    table = (2 * M - 1) ** 2

    for i in (1, 2, 3):
        conv(f"enc{i}", 3, 6, C)

    param("shared.wq", rng.normal(0.0, np.sqrt(1.0 / C), size=(C, d)))
    param("shared.wk", rng.normal(0.0, np.sqrt(1.0 / C), size=(C, d)))
    param("shared.wv", rng.normal(0.0, np.sqrt(1.0 / C), size=(C, d)))
    param("pa.bias", np.zeros(table))
    conv("ga.conv", 3, 2 * d, d)

    if cfg.alignment_mode == "gated":
        conv("gate.phi", 3, d, d)
        conv("gate.fuse", 3, 2 * d, C)
        mlp("gate.mlp", C, cfg.mlp_ratio * C)
        ln("gate.ln", C)

    conv("reduce", 1, C + 2 * cfg.aligned_channels, C)

    for r in range(cfg.n_rdtb):
        for s in range(cfg.n_stl):
            base = f"rdtb{r}.stl{s}"
            ln(f"{base}.ln1", C)
            lin(f"{base}.qkv", C, 3 * C)
            lin(f"{base}.proj", C, C)
            param(f"{base}.bias", np.zeros((table, cfg.heads)))
            ln(f"{base}.ln2", C)
            mlp(f"{base}.mlp", C, cfg.mlp_ratio * C)
        base = f"rdtb{r}.wdtl"
        lin(f"{base}.wq", C, C, bias=False)
        lin(f"{base}.wk", C, C, bias=False)
        lin(f"{base}.wv", C, C, bias=False)
        param(f"{base}.off.dw", rng.normal(0.0, np.sqrt(2.0 / 9.0), size=(3, 3, C)))
        param(f"{base}.off.dwb", np.zeros(C))
        lin(f"{base}.off.pw", C, 2, zero=True)  # start at zero offsets
        ln(f"{base}.ln", C)
        mlp(f"{base}.mlp", C, cfg.mlp_ratio * C)
        lin(f"{base}.ca.fc1", C, C // cfg.ca_reduction)
        lin(f"{base}.ca.fc2", C // cfg.ca_reduction, C)
        conv(f"{base}.conv", 3, C, C)
        conv(f"rdtb{r}.conv", 3, C, C)

    conv("head", 3, C, 3)
    return p


def parameter_count(params):
    return sum(t.size for t in params.values())


def model_summary(params):
    """Aligned per-tensor listing plus the total, as one printable string."""
    lines = []
    width = max(len(n) for n in params)
    for name in sorted(params):
        t = params[name]
        lines.append(f"{name:<{width}}  {str(t.shape):<18} {t.size:>8}")
    lines.append(f"{'total':<{width}}  {'':<18} {parameter_count(params):>8}")
    return "\n".join(lines)


def zero_grads(params):
    for t in params.values():
        t.grad = None
