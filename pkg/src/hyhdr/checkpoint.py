"""Binary checkpoint container.

Layout: magic "HYHD", version u32, tensor count u32, then per tensor
(name-length u32, name utf-8, ndim u32, dims u32*ndim, float32 LE data).
Adam moments ride along as "adam.m/<name>" / "adam.v/<name>"; the train
config and step counter are packed as tensors under "config/" and
"meta/". Config floats are stored as four 16-bit chunks of their float64
bits (each chunk is exact in float32), the seed as two 16-bit halves, so
the whole container round-trips bit-exactly through float32.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .train import AdamState, TrainConfig

MAGIC = b"HYHD"
VERSION = 1

_FLOAT_FIELDS = ("lr", "beta1", "beta2", "eps", "lr_decay", "lam")
_INT_FIELDS = ("batch", "decay_every", "epochs", "crop", "stride", "channels",
               "attn_dim", "window", "heads", "n_rdtb", "n_stl", "mlp_ratio",
               "ca_reduction")
_MODE_CODES = {"gated": 0, "pa": 1, "ga": 2}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}


@dataclass
class Checkpoint:
    params: dict           # name -> float32 ndarray
    config: TrainConfig
    step: int
    state: AdamState


def _split64(x):
    bits = struct.unpack("<Q", struct.pack("<d", float(x)))[0]
    return np.array([(bits >> s) & 0xFFFF for s in (0, 16, 32, 48)],
                    dtype=np.float32)


def _join64(chunks):
    bits = 0
    for i, s in enumerate((0, 16, 32, 48)):
        bits |= int(chunks[i]) << s
    return struct.unpack("<d", struct.pack("<Q", bits))[0]


def _config_tensors(cfg: TrainConfig, step: int):
    out = {}
    for name in _FLOAT_FIELDS:
        out[f"config/{name}"] = _split64(getattr(cfg, name))
    for name in _INT_FIELDS:
        out[f"config/{name}"] = np.array([getattr(cfg, name)], dtype=np.float32)
    out["config/alignment_mode"] = np.array(
        [_MODE_CODES[cfg.alignment_mode]], dtype=np.float32)
    out["config/seed.hi"] = np.array([cfg.seed >> 16], dtype=np.float32)
    out["config/seed.lo"] = np.array([cfg.seed & 0xFFFF], dtype=np.float32)
    out["meta/step"] = np.array([step], dtype=np.float32)
    return out


def _config_from_tensors(tensors):
    kwargs = {}
    for name in _FLOAT_FIELDS:
        kwargs[name] = _join64(tensors[f"config/{name}"])
    for name in _INT_FIELDS:
        kwargs[name] = int(tensors[f"config/{name}"][0])
    kwargs["alignment_mode"] = _MODE_NAMES[int(tensors["config/alignment_mode"][0])]
    kwargs["seed"] = (int(tensors["config/seed.hi"][0]) << 16) | int(
        tensors["config/seed.lo"][0])
    return TrainConfig(**kwargs), int(tensors["meta/step"][0])


def save_checkpoint(path, ckpt: Checkpoint):
    tensors = dict(_config_tensors(ckpt.config, ckpt.step))
    for name, arr in ckpt.params.items():
        tensors[name] = np.asarray(arr, dtype=np.float32)
    for name, arr in ckpt.state.m.items():
        tensors[f"adam.m/{name}"] = np.asarray(arr, dtype=np.float32)
    for name, arr in ckpt.state.v.items():
        tensors[f"adam.v/{name}"] = np.asarray(arr, dtype=np.float32)

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(tensors)))
        for name in sorted(tensors):
            data = np.ascontiguousarray(tensors[name], dtype="<f4")
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", data.ndim))
            f.write(struct.pack(f"<{data.ndim}I", *data.shape))
            f.write(data.tobytes())


def _read_exact(f, n, path):
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"{path}: truncated checkpoint")
    return buf


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        if _read_exact(f, 4, path) != MAGIC:
            raise FormatError(f"{path}: bad magic, not a HYHD checkpoint")
        version, count = struct.unpack("<II", _read_exact(f, 8, path))
        if version != VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        tensors = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<I", _read_exact(f, 4, path))
            name = _read_exact(f, nlen, path).decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(f, 4, path))
            dims = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, path))
            n = int(np.prod(dims)) if ndim else 1
            raw = _read_exact(f, 4 * n, path)
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()

    try:
        config, step = _config_from_tensors(tensors)
    except KeyError as exc:
        raise FormatError(f"{path}: missing config entry {exc}") from exc
    params = {}
    m = {}
    v = {}
    for name, arr in tensors.items():
        if name.startswith("adam.m/"):
            m[name[len("adam.m/"):]] = arr
        elif name.startswith("adam.v/"):
            v[name[len("adam.v/"):]] = arr
        elif not name.startswith(("config/", "meta/")):
            params[name] = arr
    return Checkpoint(params=params, config=config, step=step,
                      state=AdamState(m=m, v=v))


def params_to_tensors(params):
    """Checkpoint arrays -> live parameter Tensors."""
    from . import tensor as T

    return {name: T.Tensor(arr, requires_grad=True) for name, arr in params.items()}
