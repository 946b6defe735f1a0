"""On-disk sample layout shared by synth, train, infer and eval.

    data_dir/
      sample_0/
        frame_1.ppm  frame_2.ppm  frame_3.ppm   # ascending EV
        exposures.txt                           # one EV per line
        gt.pfm                                  # absent for inference stacks
"""

from __future__ import annotations

import os
import re

from .datagen import Sample
from .errors import FormatError
from .imageio import read_pfm, read_ppm, write_pfm, write_ppm
from .radiometry import ExposureStack, HdrImage, LdrFrame


def write_sample(dirpath, sample: Sample):
    os.makedirs(dirpath, exist_ok=True)
    for i, frame in enumerate(sample.stack.frames, start=1):
        write_ppm(os.path.join(dirpath, f"frame_{i}.ppm"), frame.pixels)
    with open(os.path.join(dirpath, "exposures.txt"), "w", encoding="utf-8") as f:
        for frame in sample.stack.frames:
            f.write(f"{frame.ev}\n")
    write_pfm(os.path.join(dirpath, "gt.pfm"), sample.gt.radiance)


def read_stack(dirpath) -> ExposureStack:
    evs_path = os.path.join(dirpath, "exposures.txt")
    if not os.path.exists(evs_path):
        raise FormatError(f"missing exposures file: {evs_path}")
    with open(evs_path, encoding="utf-8") as f:
        evs = [float(line) for line in f if line.strip()]
    if len(evs) != 3:
        raise FormatError(f"{evs_path}: need 3 EV lines, got {len(evs)}")
    frames = []
    for i, ev in enumerate(evs, start=1):
        fpath = os.path.join(dirpath, f"frame_{i}.ppm")
        if not os.path.exists(fpath):
            raise FormatError(f"missing frame: {fpath}")
        frames.append(LdrFrame(read_ppm(fpath), ev))
    return ExposureStack(tuple(frames))


def read_sample(dirpath) -> Sample:
    gt_path = os.path.join(dirpath, "gt.pfm")
    if not os.path.exists(gt_path):
        raise FormatError(f"missing ground truth: {gt_path}")
    return Sample(stack=read_stack(dirpath), gt=HdrImage(read_pfm(gt_path)))


def sample_dirs(data_dir):
    """sample_* subdirectories ordered by their integer suffix."""
    pat = re.compile(r"^sample_(\d+)$")
    found = []
    for name in os.listdir(data_dir):
        m = pat.match(name)
        if m and os.path.isdir(os.path.join(data_dir, name)):
            found.append((int(m.group(1)), os.path.join(data_dir, name)))
    return [path for _, path in sorted(found)]


def load_dataset(data_dir):
    dirs = sample_dirs(data_dir)
    if not dirs:
        raise FormatError(f"no sample_* directories under {data_dir}")
    return [read_sample(d) for d in dirs]
