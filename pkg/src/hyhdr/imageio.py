"""Binary PPM (P6, 8-bit) for LDR frames and PFM for HDR radiance maps.

PFM is written as color "PF", little-endian (scale header -1.0), rows
bottom-up per the format. LDR pixels map between [0,1] floats and 8-bit
by round(255*x) / x/255.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError


def write_ppm(path, pixels):
    """pixels: [H,W,3] float in [0,1]; quantized to 8 bits."""
    arr = np.asarray(pixels)
    q = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    h, w = q.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(q.tobytes())


def read_ppm(path):
    """-> [H,W,3] float32 in [0,1]."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise FormatError(f"{path}: not a binary PPM (P6)")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":  # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(v) for v in fields)
    except ValueError as exc:
        raise FormatError(f"{path}: bad PPM header") from exc
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PPM supported, maxval={maxval}")
    need = w * h * 3
    raw = data[pos:pos + need]
    if len(raw) < need:
        raise FormatError(f"{path}: truncated PPM payload")
    img = np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3)
    return img.astype(np.float32) / np.float32(255.0)


def write_pfm(path, img):
    """img: [H,W,3] float; stored float32 little-endian, bottom-up."""
    arr = np.asarray(img, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise FormatError(f"PFM writer wants [H,W,3], got {arr.shape}")
    h, w = arr.shape[:2]
    with open(path, "wb") as f:
        f.write(b"PF\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(arr).astype("<f4").tobytes())


def read_pfm(path):
    """-> [H,W,3] float32 (top-down)."""
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"PF":
            raise FormatError(f"{path}: not a color PFM")
        try:
            w, h = (int(v) for v in f.readline().split())
            scale = float(f.readline())
        except ValueError as exc:
            raise FormatError(f"{path}: bad PFM header") from exc
        raw = f.read(w * h * 3 * 4)
    if len(raw) < w * h * 3 * 4:
        raise FormatError(f"{path}: truncated PFM payload")
    dt = "<f4" if scale < 0 else ">f4"
    img = np.frombuffer(raw, dtype=dt).reshape(h, w, 3).astype(np.float32)
    return np.flipud(img).copy()
