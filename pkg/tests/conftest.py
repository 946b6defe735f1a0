import numpy as np
import pytest

from hyhdr.model import ModelConfig
from hyhdr.radiometry import ExposureStack, LdrFrame


def rng(seed=0):
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture
def tiny_cfg():
    return ModelConfig(channels=8, attn_dim=8, window=4, heads=2,
                       n_rdtb=1, n_stl=2)


def random_stack(h, w, seed=0, evs=(-2.0, 0.0, 2.0)):
    g = rng(seed)
    frames = tuple(LdrFrame(g.uniform(0, 1, (h, w, 3)).astype(np.float32), ev)
                   for ev in evs)
    return ExposureStack(frames)
