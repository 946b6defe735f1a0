"""hyhdr: multi-exposure HDR deghosting with patch/pixel hybrid alignment.

Subpackages: tensor core with a gradient tape, radiometry and losses, the
alignment + transformer fusion model, quality metrics, a synthetic scene
generator, and the synth/train/infer/eval pipeline behind the `hyhdr` CLI.
"""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
