"""Window partitioning for the attention layers.

A feature map is reflect-padded up to a multiple of the window size,
optionally cyclically shifted, then cut into non-overlapping MxM token
blocks. Windows and the tokens inside them are ordered row-major, so
window_reverse(window_partition(x)) is the identity bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from . import tensor as T


@dataclass(frozen=True)
class WindowGrid:
    """Partition descriptor: window size, cyclic shift and padding."""

    window: int
    shift: int = 0
    pad_h: int = 0
    pad_w: int = 0

    def __post_init__(self):
        if self.window <= 0:
            raise ConfigError("window size must be positive")
        if not 0 <= self.shift < self.window:
            raise ConfigError(f"shift must lie in [0, {self.window})")

    @classmethod
    def for_shape(cls, H, W, window, shift=0):
        if window <= 0:
            raise ConfigError("window size must be positive")
        pad_h = (-H) % window
        pad_w = (-W) % window
        return cls(window=window, shift=shift, pad_h=pad_h, pad_w=pad_w)

    def padded(self, H, W):
        return H + self.pad_h, W + self.pad_w

    def n_windows(self, H, W):
        Hp, Wp = self.padded(H, W)
        return (Hp * Wp) // (self.window * self.window)


def window_partition(x, grid):
    """[H,W,C] -> [nWin, M*M, C] token blocks (pad, shift, cut)."""
    H, W, C = x.shape
    M = grid.window
    Hp, Wp = grid.padded(H, W)
    if Hp % M or Wp % M:
        raise ShapeError(f"grid pads {H}x{W} to {Hp}x{Wp}, not a multiple of {M}")
    if grid.pad_h or grid.pad_w:
        x = T.pad2d(x, 0, grid.pad_h, 0, grid.pad_w, mode="reflect")
    if grid.shift:
        x = T.roll(x, (-grid.shift, -grid.shift), axes=(0, 1))
    x = T.reshape(x, (Hp // M, M, Wp // M, M, C))
    x = T.transpose(x, (0, 2, 1, 3, 4))
    return T.reshape(x, (grid.n_windows(H, W), M * M, C))


def window_reverse(w, grid, H, W):
    """Inverse of window_partition back to [H,W,C]."""
    M = grid.window
    Hp, Wp = grid.padded(H, W)
    nwin, tokens, C = w.shape
    if nwin != grid.n_windows(H, W) or tokens != M * M:
        raise ShapeError(f"window block {w.shape} does not match grid for {H}x{W}")
    x = T.reshape(w, (Hp // M, Wp // M, M, M, C))
    x = T.transpose(x, (0, 2, 1, 3, 4))
    x = T.reshape(x, (Hp, Wp, C))
    if grid.shift:
        x = T.roll(x, (grid.shift, grid.shift), axes=(0, 1))
    if grid.pad_h or grid.pad_w:
        x = T.crop2d(x, 0, H, 0, W)
    return x


def window_origins(grid, H, W):
    """Top-left (row, col) of each window in the padded/shifted frame."""
    M = grid.window
    Hp, Wp = grid.padded(H, W)
    rows = np.arange(Hp // M) * M
    cols = np.arange(Wp // M) * M
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1)
