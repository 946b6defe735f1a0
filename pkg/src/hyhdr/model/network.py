"""The full network: alignment subnetwork, RDTB stack, sigmoid conv head."""

from __future__ import annotations

from .. import tensor as T
from ..radiometry import ExposureStack, HdrImage, build_network_input
from .alignment import align_stack
from .fusion import rdtb_block
from .params import ModelConfig


def apply_model(inputs, params, cfg: ModelConfig):
    """Differentiable forward on three [H,W,6] input Tensors -> [H,W,3] in (0,1)."""
    h = align_stack(inputs, params, cfg)
    for r in range(cfg.n_rdtb):
        h = rdtb_block(h, params, cfg, r)
    return T.sigmoid(T.conv2d(h, params["head.w"], params["head.b"],
                              pad_mode=cfg.conv_pad_mode))


def hyhdrnet_forward(stack: ExposureStack, params, cfg: ModelConfig) -> HdrImage:
    """Inference entry point: exposure stack in, radiance map out."""
    inputs = [T.Tensor(x) for x in build_network_input(stack)]
    out = apply_model(inputs, params, cfg)
    return HdrImage(out.data)
