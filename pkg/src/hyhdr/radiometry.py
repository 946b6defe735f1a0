"""Radiometric layer: LDR/HDR domain mappings and mu-law tonemapping.

An exposure stack is three LDR frames ordered by ascending EV with the
middle frame as reference. Each frame is lifted to the linear HDR domain
by inverse gamma (L^gamma / t) and concatenated with its LDR pixels into
the 6-channel network input. The mu-law map compresses [0,1] radiance
into the tonemapped domain used by the loss and the metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from . import tensor as T

GAMMA = 2.2
MU = 5000.0

REFERENCE_INDEX = 1  # middle of the 3-frame stack

# count of mu_law_tonemap calls that had to clamp out-of-range input
clamp_warnings = 0


def reset_clamp_warnings():
    global clamp_warnings
    clamp_warnings = 0


@dataclass
class LdrFrame:
    """8-bit-ish capture in [0,1] plus its relative exposure."""

    pixels: np.ndarray          # [H,W,3] float32 in [0,1]
    ev: float                   # stops relative to the reference
    exposure_time: float = field(init=False)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ShapeError(f"LDR frame must be [H,W,3], got {self.pixels.shape}")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("LDR pixels must lie in [0,1]")
        self.exposure_time = float(2.0 ** self.ev)


@dataclass
class ExposureStack:
    """Three frames by ascending EV; the reference is the middle one."""

    frames: tuple

    def __post_init__(self):
        self.frames = tuple(self.frames)
        if len(self.frames) != 3:
            raise ValueError(f"need exactly 3 frames, got {len(self.frames)}")
        evs = [f.ev for f in self.frames]
        if sorted(evs) != evs:
            raise ValueError(f"frames must be ordered by ascending EV, got {evs}")
        h, w = self.frames[0].pixels.shape[:2]
        for f in self.frames[1:]:
            if f.pixels.shape[:2] != (h, w):
                raise ShapeError("frames must share spatial dims")

    @property
    def reference_index(self):
        return REFERENCE_INDEX

    @property
    def reference(self):
        return self.frames[REFERENCE_INDEX]

    @property
    def shape(self):
        return self.frames[0].pixels.shape


@dataclass
class HdrImage:
    """Linear-domain radiance normalized to [0,1]."""

    radiance: np.ndarray        # [H,W,3] float32

    def __post_init__(self):
        self.radiance = np.asarray(self.radiance, dtype=np.float32)
        if self.radiance.ndim != 3 or self.radiance.shape[2] != 3:
            raise ShapeError(f"HDR image must be [H,W,3], got {self.radiance.shape}")
        if not np.all(np.isfinite(self.radiance)):
            raise ValueError("HDR radiance must be finite")
        if self.radiance.min() < 0.0 or self.radiance.max() > 1.0:
            raise ValueError("HDR radiance must lie in [0,1]")


def gamma_correct(frame: LdrFrame, gamma: float = GAMMA) -> np.ndarray:
    """Lift an LDR frame to the linear HDR domain: L^gamma / t."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if frame.exposure_time <= 0:
        raise ValueError("exposure time must be positive")
    return frame.pixels ** np.float32(gamma) / np.float32(frame.exposure_time)


def build_network_input(stack: ExposureStack, gamma: float = GAMMA):
    """Per frame: concat(LDR, gamma-corrected HDR) -> three [H,W,6] arrays."""
    return [np.concatenate([f.pixels, gamma_correct(f, gamma)], axis=2)
            for f in stack.frames]


def mu_law_tonemap(x, mu: float = MU):
    """log(1 + mu x) / log(1 + mu) on [0,1]; works on arrays and Tensors.

    Out-of-range input is clamped (counted in `clamp_warnings`).
    """
    global clamp_warnings
    if mu <= 0:
        raise ValueError("mu must be positive")
    if isinstance(x, T.Tensor):
        if x.data.min() < 0.0 or x.data.max() > 1.0:
            clamp_warnings += 1
            x = T.clamp(x, 0.0, 1.0)
        # same log form top and bottom so T(1) divides to exactly 1
        denom = float(np.log(np.asarray(mu, dtype=x.dtype) + 1))
        return T.div(T.log(T.add(T.mul(x, mu), 1.0)), denom)
    x = np.asarray(x)
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        clamp_warnings += 1
        x = np.clip(x, 0.0, 1.0)
    return np.log(mu * x + 1) / np.log(np.asarray(mu, dtype=x.dtype) + 1)
