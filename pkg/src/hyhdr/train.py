"""Adam training loop with the stepped learning-rate schedule.

One epoch is one pass over all crops; the learning rate is scaled by
lr_decay every decay_every epochs. Crop order reshuffles per epoch from
(seed, epoch), so a run resumed from a checkpoint continues exactly the
loss log an uninterrupted run would have produced.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .datagen import crop_patches
from .errors import ConfigError, NumericError
from .loss import LAMBDA_DEFAULT, compute_loss, default_extractor
from .model import ModelConfig, init_model_params, zero_grads
from .model.network import apply_model
from .radiometry import build_network_input
from . import tensor as T


@dataclass
class TrainConfig:
    lr: float = 2e-4
    batch: int = 4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr_decay: float = 0.1
    decay_every: int = 50      # epochs
    epochs: int = 5            # desk-scale default; the full schedule is 150
    crop: int = 128
    stride: int = 64
    lam: float = LAMBDA_DEFAULT
    channels: int = 16
    attn_dim: int = 16
    window: int = 8
    heads: int = 2
    n_rdtb: int = 3
    n_stl: int = 6
    mlp_ratio: int = 2
    ca_reduction: int = 4
    alignment_mode: str = "gated"
    seed: int = 0

    def __post_init__(self):
        if min(self.lr, self.batch, self.epochs, self.crop, self.stride,
               self.decay_every, self.beta1, self.beta2, self.eps, self.lr_decay) <= 0:
            raise ConfigError("train config values must be positive")
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        if not 0 <= self.seed < 2 ** 32:
            raise ConfigError("seed must fit in 32 bits")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            channels=self.channels, attn_dim=self.attn_dim, window=self.window,
            heads=self.heads, n_rdtb=self.n_rdtb, n_stl=self.n_stl,
            mlp_ratio=self.mlp_ratio, ca_reduction=self.ca_reduction,
            alignment_mode=self.alignment_mode)

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        names = {f.name for f in fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)


@dataclass
class AdamState:
    m: dict
    v: dict

    @classmethod
    def fresh(cls, params):
        return cls(m={n: np.zeros_like(p.data) for n, p in params.items()},
                   v={n: np.zeros_like(p.data) for n, p in params.items()})


def effective_lr(cfg: TrainConfig, epoch: int) -> float:
    return cfg.lr * cfg.lr_decay ** (epoch // cfg.decay_every)


def adam_step(params, grads, state: AdamState, cfg: TrainConfig, step, epoch=0):
    """Bias-corrected Adam update in place; step counts from 1."""
    if step < 1:
        raise ConfigError("step counts from 1")
    lr = effective_lr(cfg, epoch)
    b1, b2, eps = cfg.beta1, cfg.beta2, cfg.eps
    c1 = 1.0 - b1 ** step
    c2 = 1.0 - b2 ** step
    for name in sorted(params):
        g = grads[name]
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}; aborting step {step}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[name].data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


def _loss_on_crop(sample, params, mcfg, lam, extractor):
    inputs = [T.Tensor(x) for x in build_network_input(sample.stack)]
    pred = apply_model(inputs, params, mcfg)
    return compute_loss(pred, T.Tensor(sample.gt.radiance), lam=lam,
                        extractor=extractor)


def train_loop(samples, cfg: TrainConfig, params=None, state=None, start_step=0,
               max_steps=None, log_hook=None):
    """Run (the rest of) the schedule; returns (params, state, log_rows).

    Each log row is (step, total, l1_term, perceptual_term, lr). With
    start_step > 0 the first start_step batches are skipped, which
    reproduces resuming from a checkpoint taken at that step.
    """
    if not samples:
        raise ConfigError("empty dataset")
    mcfg = cfg.model_config()
    if params is None:
        params = init_model_params(mcfg, seed=cfg.seed)
    if state is None:
        state = AdamState.fresh(params)
    extractor = default_extractor() if cfg.lam > 0 else None

    crops = []
    for s in samples:
        crops.extend(crop_patches(s, cfg.crop, cfg.stride))
    steps_per_epoch = max(1, len(crops) // cfg.batch)
    total_steps = cfg.epochs * steps_per_epoch
    if max_steps is not None:
        total_steps = min(total_steps, max_steps)

    rows = []
    step = start_step
    while step < total_steps:
        epoch = step // steps_per_epoch
        in_epoch = step % steps_per_epoch
        order = np.random.Generator(
            np.random.Philox(key=cfg.seed, counter=epoch)).permutation(len(crops))
        take = order[in_epoch * cfg.batch:(in_epoch + 1) * cfg.batch]
        if take.size == 0:
            take = order[:min(cfg.batch, len(crops))]

        zero_grads(params)
        tot = l1 = perc = 0.0
        for ci in take:
            with T.GradTape() as tape:
                loss, terms = _loss_on_crop(crops[ci], params, mcfg, cfg.lam, extractor)
                scaled = T.div(loss, len(take))
                tape.backward(scaled)
            tot += float(loss.data) / len(take)
            l1 += terms["l1"] / len(take)
            perc += terms["perceptual"] / len(take)

        step += 1
        grads = {n: p.grad for n, p in params.items()}
        adam_step(params, grads, state, cfg, step, epoch)
        row = (step, tot, l1, perc, effective_lr(cfg, epoch))
        rows.append(row)
        if log_hook:
            log_hook(row)
    return params, state, rows


def write_loss_log(path, rows, append=False):
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8", newline="") as f:
        if not append:
            f.write("step,total,l1_term,perceptual_term,lr\n")
        for step, tot, l1, perc, lr in rows:
            f.write(f"{step},{tot:.10g},{l1:.10g},{perc:.10g},{lr:.10g}\n")
