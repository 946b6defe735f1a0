"""PSNR and SSIM in the linear and mu-law tonemapped domains.

All math runs in float64. PSNR of identical images is reported as the
"identical" sentinel (infinity) rather than a number. SSIM follows the
standard protocol: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
dynamic range 1.0, population statistics, border cropped by the window
radius, averaged over space and channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .radiometry import HdrImage, MU, mu_law_tonemap

SSIM_SIGMA = 1.5
SSIM_RADIUS = 5           # 11-tap window
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PEAK = 1.0


def _pair(a, b, domain):
    av = a.radiance if isinstance(a, HdrImage) else np.asarray(a)
    bv = b.radiance if isinstance(b, HdrImage) else np.asarray(b)
    if av.shape != bv.shape:
        raise ShapeError(f"metric shapes differ: {av.shape} vs {bv.shape}")
    if domain not in ("linear", "mu"):
        raise ConfigError(f"unknown metric domain {domain!r}")
    av = av.astype(np.float64)
    bv = bv.astype(np.float64)
    if domain == "mu":
        av = mu_law_tonemap(av, MU)
        bv = mu_law_tonemap(bv, MU)
    return av, bv


def psnr(a, b, domain="linear"):
    """10*log10(peak^2 / MSE); inf for identical images."""
    av, bv = _pair(a, b, domain)
    mse = float(np.mean((av - bv) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def _gauss_kernel():
    x = np.arange(-SSIM_RADIUS, SSIM_RADIUS + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / SSIM_SIGMA) ** 2)
    return w / w.sum()


def _filter_valid(img, w):
    """Separable 2-d correlation keeping only fully-covered positions."""
    from numpy.lib.stride_tricks import sliding_window_view

    k = w.size
    rows = sliding_window_view(img, k, axis=0) @ w       # [H-k+1, W]
    return sliding_window_view(rows, k, axis=1) @ w      # [H-k+1, W-k+1]


def _ssim_channel(x, y):
    w = _gauss_kernel()
    ux = _filter_valid(x, w)
    uy = _filter_valid(y, w)
    uxx = _filter_valid(x * x, w)
    uyy = _filter_valid(y * y, w)
    uxy = _filter_valid(x * y, w)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy
    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    return float(s.mean())


def ssim(a, b, domain="linear"):
    av, bv = _pair(a, b, domain)
    if min(av.shape[0], av.shape[1]) < 2 * SSIM_RADIUS + 1:
        raise ConfigError(f"image smaller than the {2 * SSIM_RADIUS + 1}x"
                          f"{2 * SSIM_RADIUS + 1} SSIM window")
    return float(np.mean([_ssim_channel(av[..., c], bv[..., c])
                          for c in range(av.shape[2])]))


@dataclass
class MetricReport:
    """The four paired metrics for one prediction/ground-truth pair."""

    psnr_l: float
    psnr_mu: float
    ssim_l: float
    ssim_mu: float
    identical: bool = field(default=False)

    def to_dict(self):
        def num(v):
            return None if math.isinf(v) else v

        return {"psnr_mu": num(self.psnr_mu), "psnr_l": num(self.psnr_l),
                "ssim_mu": self.ssim_mu, "ssim_l": self.ssim_l,
                "identical": self.identical}


def evaluate_pair(pred, gt) -> MetricReport:
    """All four metrics; the mu domain uses mu=5000."""
    p_l = psnr(pred, gt, "linear")
    p_mu = psnr(pred, gt, "mu")
    return MetricReport(
        psnr_l=p_l,
        psnr_mu=p_mu,
        ssim_l=ssim(pred, gt, "linear"),
        ssim_mu=ssim(pred, gt, "mu"),
        identical=math.isinf(p_l),
    )
