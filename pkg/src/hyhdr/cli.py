"""Command-line pipeline: synth, train, infer, eval."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, params_to_tensors, save_checkpoint
from .dataset import load_dataset, read_stack, write_sample
from .datagen import random_scene, synth_scene
from .errors import ConfigError
from .imageio import write_pfm, write_ppm
from .metrics import evaluate_pair
from .model.network import hyhdrnet_forward
from .radiometry import mu_law_tonemap
from .train import TrainConfig, train_loop, write_loss_log


def cmd_synth(out_dir, count, height, width, seed, max_speed=5.0):
    os.makedirs(out_dir, exist_ok=True)
    for k in range(count):
        spec = random_scene(height, width, seed=seed + k, max_speed=max_speed)
        sample = synth_scene(spec, seed=seed + k)
        write_sample(os.path.join(out_dir, f"sample_{k}"), sample)
    return count


def cmd_train(config, data_dir, out_dir, resume=None):
    """Train on data_dir; writes checkpoint.hyhd and loss_log.csv to out_dir.

    config may be None: fresh runs then use defaults, resumed runs reuse the
    checkpoint's config. An explicit config always wins (e.g. to lengthen
    the schedule when resuming).
    """
    samples = load_dataset(data_dir)
    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, "loss_log.csv")
    ckpt_path = os.path.join(out_dir, "checkpoint.hyhd")

    params = state = None
    start_step = 0
    if resume:
        ckpt = load_checkpoint(resume)
        if config is None:
            config = ckpt.config
        params = params_to_tensors(ckpt.params)
        state = ckpt.state
        start_step = ckpt.step
    elif config is None:
        config = TrainConfig()

    params, state, rows = train_loop(samples, config, params=params, state=state,
                                     start_step=start_step)
    write_loss_log(log_path, rows, append=bool(resume) and os.path.exists(log_path))
    final_step = rows[-1][0] if rows else start_step
    save_checkpoint(ckpt_path, Checkpoint(
        params={n: p.data for n, p in params.items()},
        config=config, step=final_step, state=state))
    return ckpt_path, log_path, rows


def cmd_infer(ckpt_path, stack_dir, out_path):
    """Run the network on one stack; writes a PFM and an 8-bit PPM preview."""
    ckpt = load_checkpoint(ckpt_path)
    params = params_to_tensors(ckpt.params)
    stack = read_stack(stack_dir)
    pred = hyhdrnet_forward(stack, params, ckpt.config.model_config())
    write_pfm(out_path, pred.radiance)
    preview = os.path.splitext(out_path)[0] + "_preview.ppm"
    write_ppm(preview, mu_law_tonemap(pred.radiance.astype(np.float64)))
    return out_path, preview


def cmd_eval(ckpt_path, data_dir):
    """Per-sample and mean metrics against ground truth."""
    ckpt = load_checkpoint(ckpt_path)
    params = params_to_tensors(ckpt.params)
    mcfg = ckpt.config.model_config()
    samples = load_dataset(data_dir)
    reports = []
    for sample in samples:
        pred = hyhdrnet_forward(sample.stack, params, mcfg)
        reports.append(evaluate_pair(pred, sample.gt))
    means = {
        "psnr_mu": float(np.mean([r.psnr_mu for r in reports])),
        "psnr_l": float(np.mean([r.psnr_l for r in reports])),
        "ssim_mu": float(np.mean([r.ssim_mu for r in reports])),
        "ssim_l": float(np.mean([r.ssim_l for r in reports])),
    }
    return reports, means


def format_eval_table(reports, means):
    lines = [f"{'sample':>8} {'psnr_mu':>9} {'psnr_l':>9} {'ssim_mu':>9} {'ssim_l':>9}"]

    def fmt(v):
        return "ident" if math.isinf(v) else f"{v:9.4f}"

    for i, r in enumerate(reports):
        lines.append(f"{i:>8} {fmt(r.psnr_mu):>9} {fmt(r.psnr_l):>9} "
                     f"{r.ssim_mu:9.6f} {r.ssim_l:9.6f}")
    lines.append(f"{'mean':>8} {fmt(means['psnr_mu']):>9} {fmt(means['psnr_l']):>9} "
                 f"{means['ssim_mu']:9.6f} {means['ssim_l']:9.6f}")
    return "\n".join(lines)


def _parse_size(text):
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as exc:
        raise ConfigError(f"size must look like 64x64, got {text!r}") from exc


def build_parser():
    p = argparse.ArgumentParser(prog="hyhdr",
                                description="multi-exposure HDR deghosting pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--size", default="128x128", help="HxW, e.g. 128x128")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-speed", type=float, default=5.0)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--config", help="JSON file mirroring TrainConfig")
    t.add_argument("--resume", help="checkpoint to continue from")

    i = sub.add_parser("infer", help="fuse one exposure stack")
    i.add_argument("--ckpt", required=True)
    i.add_argument("--stack", required=True)
    i.add_argument("--out", required=True, help="output .pfm path")

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--json", help="also write the report as JSON here")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "synth":
        h, w = _parse_size(args.size)
        n = cmd_synth(args.out, args.count, h, w, args.seed, args.max_speed)
        print(f"wrote {n} samples to {args.out}")
    elif args.command == "train":
        config = None
        if args.config:
            with open(args.config, encoding="utf-8") as f:
                config = TrainConfig.from_json(f.read())
        ckpt, log, rows = cmd_train(config, args.data, args.out, resume=args.resume)
        last = rows[-1] if rows else None
        print(f"checkpoint: {ckpt}")
        print(f"loss log:   {log}")
        if last:
            print(f"final step {last[0]}: total {last[1]:.6f} (lr {last[4]:.2e})")
    elif args.command == "infer":
        out, preview = cmd_infer(args.ckpt, args.stack, args.out)
        print(f"wrote {out} and {preview}")
    elif args.command == "eval":
        reports, means = cmd_eval(args.ckpt, args.data)
        print(format_eval_table(reports, means))
        if args.json:
            payload = {"samples": [r.to_dict() for r in reports], "means": means}
            with open(args.json, "w", encoding="utf-8") as f:
                json.dump(payload, f, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
