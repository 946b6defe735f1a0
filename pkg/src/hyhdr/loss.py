"""Training loss: tonemapped L1 plus a frozen-feature perceptual term.

The perceptual features come from a fixed-seed, never-trained conv stack
tapped at two pooling depths. It plays the role of a pretrained deep
feature extractor without the external weights: fixed, non-learnable,
multi-scale. Gradients still flow through it to the prediction.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ShapeError
from . import tensor as T
from .radiometry import HdrImage, MU, mu_law_tonemap

LAMBDA_DEFAULT = 1e-2

_EXTRACTOR_SEED = 0x7FEA7


class PerceptualExtractor:
    """Frozen two-stage conv pyramid; __call__ returns one feature map per stage."""

    def __init__(self, channels=8, seed=_EXTRACTOR_SEED, dtype=np.float32):
        rng = np.random.Generator(np.random.Philox(seed))
        c = channels

        def conv_w(k, cin, cout):
            std = np.sqrt(2.0 / (k * k * cin))
            return T.Tensor(rng.normal(0.0, std, size=(k, k, cin, cout)), dtype=dtype)

        self.w1 = conv_w(3, 3, c)
        self.w2 = conv_w(3, c, 2 * c)
        self.w3 = conv_w(3, 2 * c, 4 * c)
        self.weights = (self.w1, self.w2, self.w3)

    def __call__(self, x):
        if x.ndim != 3 or x.shape[2] != 3:
            raise ShapeError(f"extractor wants [H,W,3], got {x.shape}")
        h = T.relu(T.conv2d(x, self.w1))
        f1 = T.relu(T.conv2d(_even(T.avg_pool2(_even(h))), self.w2))
        f2 = T.relu(T.conv2d(_even(T.avg_pool2(_even(f1))), self.w3))
        return [f1, f2]

    def weight_hash(self):
        digest = hashlib.sha256()
        for w in self.weights:
            digest.update(w.data.tobytes())
        return digest.hexdigest()


def _even(x):
    H, W = x.shape[:2]
    if H % 2 or W % 2:
        return T.crop2d(x, 0, H - H % 2, 0, W - W % 2)
    return x


def _as_tensor(img):
    if isinstance(img, T.Tensor):
        return img
    if isinstance(img, HdrImage):
        return T.Tensor(img.radiance)
    return T.Tensor(np.asarray(img))


_default_extractor = None


def default_extractor():
    global _default_extractor
    if _default_extractor is None:
        _default_extractor = PerceptualExtractor()
    return _default_extractor


def perceptual_features(x, extractor=None):
    """Frozen multi-scale features of a tonemapped [H,W,3] image."""
    return (extractor or default_extractor())(_as_tensor(x))


def compute_loss(pred, target, lam=LAMBDA_DEFAULT, mu=MU, extractor=None):
    """Mu-law L1 plus lam * perceptual L1.

    Returns (total: scalar Tensor, breakdown dict with float 'l1' and
    'perceptual' terms). pred may be a live Tensor (training) or an
    HdrImage; target likewise.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    p = _as_tensor(pred)
    t = _as_tensor(target)
    if p.shape != t.shape:
        raise ShapeError(f"loss shapes differ: {p.shape} vs {t.shape}")
    tp = mu_law_tonemap(p, mu)
    tt = mu_law_tonemap(t, mu)
    l1 = T.mean(T.abs_(T.sub(tt, tp)))
    total = l1
    perceptual = 0.0
    if lam > 0:
        ext = extractor or default_extractor()
        pterm = None
        for fp, ft in zip(ext(tp), ext(tt)):
            d = T.mean(T.abs_(T.sub(ft, fp)))
            pterm = d if pterm is None else T.add(pterm, d)
        perceptual = float(pterm.data)
        total = T.add(l1, T.mul(pterm, lam))
    return total, {"l1": float(l1.data), "perceptual": perceptual}
