"""Synthetic multi-exposure dynamic scenes with ghost-free ground truth.

A scene is a smooth textured background, a few static highlight regions
near saturation, and moving shapes that slide between frames. Ground
truth renders every object at its reference-frame (middle) position, so
it is ghost-free by construction; the LDR frames see the objects shifted
by +-velocity. All randomness comes from the counter-based Philox
generator, so samples are reproducible across platforms from the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .radiometry import ExposureStack, HdrImage, LdrFrame

DEFAULT_EVS = (-2.0, 0.0, 2.0)
MAX_DISPLACEMENT = 12.0
GAMMA = 2.2


@dataclass
class SceneObject:
    kind: str                    # "rect" | "disk"
    center: tuple                # (row, col), pixels
    size: float                  # half-extent / radius, pixels
    radiance: tuple              # RGB in [0,1]
    velocity: tuple = (0.0, 0.0)  # pixels per frame step

    def __post_init__(self):
        if self.kind not in ("rect", "disk"):
            raise ConfigError(f"unknown object kind {self.kind!r}")
        if max(abs(v) for v in self.velocity) > MAX_DISPLACEMENT:
            raise ConfigError(f"velocity exceeds the {MAX_DISPLACEMENT}px limit")
        if min(self.radiance) < 0 or max(self.radiance) > 1:
            raise ConfigError("object radiance must lie in [0,1]")


@dataclass
class SceneSpec:
    height: int
    width: int
    objects: list = field(default_factory=list)
    highlights: list = field(default_factory=list)  # static, radiance near 1
    evs: tuple = DEFAULT_EVS
    background_lo: float = 0.02
    background_hi: float = 0.3
    background_cell: int = 8     # texture blob size, pixels


@dataclass
class Sample:
    stack: ExposureStack
    gt: HdrImage


def _background(spec, rng):
    h, w, cell = spec.height, spec.width, spec.background_cell
    gh, gw = h // cell + 2, w // cell + 2
    coarse = rng.uniform(spec.background_lo, spec.background_hi, size=(gh, gw, 3))
    yy = np.linspace(0, gh - 1.001, h)
    xx = np.linspace(0, gw - 1.001, w)
    y0 = yy.astype(int)
    x0 = xx.astype(int)
    fy = (yy - y0)[:, None, None]
    fx = (xx - x0)[None, :, None]
    c = coarse
    img = (c[y0][:, x0] * (1 - fy) * (1 - fx) + c[y0][:, x0 + 1] * (1 - fy) * fx
           + c[y0 + 1][:, x0] * fy * (1 - fx) + c[y0 + 1][:, x0 + 1] * fy * fx)
    return img.astype(np.float64)


def _paint(img, obj, offset_steps):
    h, w = img.shape[:2]
    cy = obj.center[0] + obj.velocity[0] * offset_steps
    cx = obj.center[1] + obj.velocity[1] * offset_steps
    yy = np.arange(h)[:, None]
    xx = np.arange(w)[None, :]
    if obj.kind == "disk":
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= obj.size ** 2
    else:
        mask = (np.abs(yy - cy) <= obj.size) & (np.abs(xx - cx) <= obj.size)
    img[mask] = np.asarray(obj.radiance)  # off-canvas parts just clip away


def render_radiance(spec: SceneSpec, seed: int, offset_steps: float = 0.0):
    """Radiance map with moving objects displaced by offset_steps * velocity."""
    rng = np.random.Generator(np.random.Philox(seed))
    img = _background(spec, rng)
    for obj in spec.highlights:
        _paint(img, obj, 0.0)
    for obj in spec.objects:
        _paint(img, obj, offset_steps)
    return np.clip(img, 0.0, 1.0)


def expose_ldr(radiance, t, gamma=GAMMA) -> LdrFrame:
    """Inverse camera model: clip((R*t)^(1/gamma)) quantized to 8 bits."""
    if t <= 0:
        raise ValueError("exposure time must be positive")
    rad = radiance.radiance if isinstance(radiance, HdrImage) else np.asarray(radiance)
    L = np.clip((rad * t) ** (1.0 / gamma), 0.0, 1.0)
    L = np.round(L * 255.0) / 255.0
    return LdrFrame(L.astype(np.float32), ev=float(np.log2(t)))


def synth_scene(spec: SceneSpec, seed: int) -> Sample:
    """Render one (stack, ground truth) pair; pure in (spec, seed)."""
    gt = render_radiance(spec, seed, 0.0)
    frames = []
    for i, ev in enumerate(spec.evs):
        offset = i - 1  # reference is the middle frame
        rad = gt if offset == 0 else render_radiance(spec, seed, offset)
        frames.append(expose_ldr(rad, 2.0 ** ev))
    return Sample(stack=ExposureStack(tuple(frames)),
                  gt=HdrImage(gt.astype(np.float32)))


def random_scene(height, width, seed, n_objects=3, n_highlights=2,
                 max_speed=5.0, evs=DEFAULT_EVS) -> SceneSpec:
    """Draw a SceneSpec from the seed (Philox stream, offset from render's)."""
    rng = np.random.Generator(np.random.Philox(key=seed, counter=1 << 64))
    objects = []
    for _ in range(n_objects):
        objects.append(SceneObject(
            kind=("disk" if rng.uniform() < 0.5 else "rect"),
            center=(rng.uniform(0.2, 0.8) * height, rng.uniform(0.2, 0.8) * width),
            size=rng.uniform(0.06, 0.14) * min(height, width),
            radiance=tuple(rng.uniform(0.35, 0.85, size=3)),
            velocity=(rng.uniform(-max_speed, max_speed),
                      rng.uniform(-max_speed, max_speed)),
        ))
    highlights = []
    for _ in range(n_highlights):
        highlights.append(SceneObject(
            kind="disk",
            center=(rng.uniform(0.15, 0.85) * height, rng.uniform(0.15, 0.85) * width),
            size=rng.uniform(0.04, 0.09) * min(height, width),
            radiance=tuple(rng.uniform(0.92, 1.0, size=3)),
        ))
    return SceneSpec(height=height, width=width, objects=objects,
                     highlights=highlights, evs=tuple(evs))


def crop_patches(sample: Sample, size: int, stride: int):
    """Regular crop grid applied identically to all frames and the GT."""
    h, w = sample.gt.radiance.shape[:2]
    if size > h or size > w:
        raise ConfigError(f"crop {size} exceeds image {h}x{w}")
    if stride <= 0:
        raise ConfigError("stride must be positive")
    out = []
    for y in range(0, h - size + 1, stride):
        for x in range(0, w - size + 1, stride):
            frames = tuple(LdrFrame(f.pixels[y:y + size, x:x + size].copy(), f.ev)
                           for f in sample.stack.frames)
            gt = HdrImage(sample.gt.radiance[y:y + size, x:x + size].copy())
            out.append(Sample(stack=ExposureStack(frames), gt=gt))
    return out
