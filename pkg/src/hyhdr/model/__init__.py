from .params import ModelConfig, init_model_params, model_summary, parameter_count, zero_grads
from .alignment import align_stack, gating_fuse, ghost_attention, patch_aggregate, shallow_encode
from .fusion import ffn_channel_attention, rdtb_block, stl_layer, wdtl_attention, wdtl_layer
from .network import apply_model, hyhdrnet_forward

__all__ = [
    "ModelConfig", "init_model_params", "model_summary", "parameter_count", "zero_grads",
    "align_stack", "gating_fuse", "ghost_attention", "patch_aggregate", "shallow_encode",
    "ffn_channel_attention", "rdtb_block", "stl_layer", "wdtl_attention", "wdtl_layer",
    "apply_model", "hyhdrnet_forward",
]
