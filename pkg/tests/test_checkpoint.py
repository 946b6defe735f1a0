"""Checkpoint container: bit-exact round trips and format errors."""

import numpy as np
import pytest

from hyhdr.checkpoint import (Checkpoint, load_checkpoint, params_to_tensors,
                              save_checkpoint)
from hyhdr.errors import FormatError
from hyhdr.model import init_model_params, hyhdrnet_forward
from hyhdr.train import AdamState, TrainConfig

from conftest import random_stack, rng


def make_ckpt(seed=0, step=17):
    cfg = TrainConfig(channels=8, attn_dim=8, window=4, heads=2,
                      n_rdtb=1, n_stl=2, seed=seed)
    params = init_model_params(cfg.model_config(), seed=seed)
    state = AdamState.fresh(params)
    for n in state.m:
        state.m[n][:] = rng(1).normal(size=state.m[n].shape).astype(np.float32)
    return Checkpoint(params={n: p.data for n, p in params.items()},
                      config=cfg, step=step, state=state), cfg


def test_round_trip_bit_exact(tmp_path):
    ckpt, _ = make_ckpt()
    path = tmp_path / "a.hyhd"
    save_checkpoint(path, ckpt)
    back = load_checkpoint(path)
    assert back.step == ckpt.step
    assert back.config == ckpt.config
    assert set(back.params) == set(ckpt.params)
    for n, arr in ckpt.params.items():
        assert back.params[n].tobytes() == arr.tobytes()
    for n, arr in ckpt.state.m.items():
        assert back.state.m[n].tobytes() == arr.tobytes()
        assert back.state.v[n].tobytes() == ckpt.state.v[n].tobytes()


def test_config_floats_survive_exactly(tmp_path):
    cfg = TrainConfig(lr=2e-4, lam=1e-2, beta1=0.9, beta2=0.999, eps=1e-8,
                      channels=8, attn_dim=8, window=4, heads=2, n_rdtb=1,
                      n_stl=2, seed=0xDEADBEEF)
    params = init_model_params(cfg.model_config(), seed=0)
    ckpt = Checkpoint(params={n: p.data for n, p in params.items()},
                      config=cfg, step=0, state=AdamState.fresh(params))
    path = tmp_path / "cfg.hyhd"
    save_checkpoint(path, ckpt)
    back = load_checkpoint(path).config
    assert back.lr == 2e-4 and back.lam == 1e-2
    assert back.beta2 == 0.999 and back.eps == 1e-8
    assert back.seed == 0xDEADBEEF


def test_forward_identical_after_reload(tmp_path):
    ckpt, cfg = make_ckpt()
    path = tmp_path / "fwd.hyhd"
    save_checkpoint(path, ckpt)
    back = load_checkpoint(path)
    stack = random_stack(16, 16, seed=4)
    mcfg = cfg.model_config()
    a = hyhdrnet_forward(stack, params_to_tensors(ckpt.params), mcfg).radiance
    b = hyhdrnet_forward(stack, params_to_tensors(back.params),
                         back.config.model_config()).radiance
    assert a.tobytes() == b.tobytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.hyhd"
    path.write_bytes(b"NOPE" + b"\0" * 64)
    with pytest.raises(FormatError, match="magic"):
        load_checkpoint(path)


def test_truncated_file(tmp_path):
    ckpt, _ = make_ckpt()
    path = tmp_path / "full.hyhd"
    save_checkpoint(path, ckpt)
    data = path.read_bytes()
    trunc = tmp_path / "trunc.hyhd"
    trunc.write_bytes(data[:len(data) // 2])
    with pytest.raises(FormatError, match="truncated"):
        load_checkpoint(trunc)


def test_unsupported_version(tmp_path):
    ckpt, _ = make_ckpt()
    path = tmp_path / "v.hyhd"
    save_checkpoint(path, ckpt)
    data = bytearray(path.read_bytes())
    data[4] = 99  # version field
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError, match="version"):
        load_checkpoint(path)


def test_wire_format_layout(tmp_path):
    """Spot-check the binary layout: magic, version, count, first record."""
    import struct

    ckpt, _ = make_ckpt()
    path = tmp_path / "wire.hyhd"
    save_checkpoint(path, ckpt)
    raw = path.read_bytes()
    assert raw[:4] == b"HYHD"
    version, count = struct.unpack_from("<II", raw, 4)
    assert version == 1
    names = sorted(list(ckpt.params)
                   + [f"adam.m/{n}" for n in ckpt.state.m]
                   + [f"adam.v/{n}" for n in ckpt.state.v])
    assert count >= len(names)
    (nlen,) = struct.unpack_from("<I", raw, 12)
    first = raw[16:16 + nlen].decode("utf-8")
    assert first == sorted(n for n in (names + ["meta/step"]
                                       + [k for k in _config_names(ckpt)]))[0]


def _config_names(ckpt):
    from hyhdr.checkpoint import _config_tensors

    return list(_config_tensors(ckpt.config, ckpt.step))
