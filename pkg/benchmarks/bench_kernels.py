#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the four hot kernels on training-sized inputs and one full
forward+backward of the tiny model with whichever backend is active.

    python3 benchmarks/bench_kernels.py
    HYHDR_PURE_PYTHON=1 python3 benchmarks/bench_kernels.py   # force fallback
"""

import time

import numpy as np

from hyhdr import kernels
from hyhdr.kernels import numpy_backend

try:
    from hyhdr.kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeat=20):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_kernels():
    rng = np.random.Generator(np.random.Philox(0))
    H, W, C, k = 128, 128, 32, 3
    x = rng.normal(size=(H, W, C)).astype(np.float32)
    cols = rng.normal(size=(H * W, k * k * C)).astype(np.float32)
    pts = np.stack([rng.uniform(0, H - 1, 4 * H * W),
                    rng.uniform(0, W - 1, 4 * H * W)], 1).astype(np.float32)
    gout = rng.normal(size=(pts.shape[0], C)).astype(np.float32)

    cases = [
        ("im2col 128x128x32", lambda b: b.im2col(x, k, 1, 1)),
        ("col2im 128x128x32", lambda b: b.col2im(cols, H, W, C, k, 1, 1)),
        ("bilinear_gather 64k pts", lambda b: b.bilinear_gather(x, pts)),
        ("bilinear_backward 64k pts", lambda b: b.bilinear_backward(x, pts, gout)),
    ]

    print(f"{'kernel':<28} {'numpy':>10} {'native':>10} {'speedup':>9}")
    for name, call in cases:
        t_np = timeit(lambda: call(numpy_backend))
        if _native is not None:
            t_nat = timeit(lambda: call(_native))
            print(f"{name:<28} {t_np * 1e3:>8.2f}ms {t_nat * 1e3:>8.2f}ms "
                  f"{t_np / t_nat:>8.1f}x")
        else:
            print(f"{name:<28} {t_np * 1e3:>8.2f}ms {'n/a':>10} {'':>9}")


def bench_train_step():
    from hyhdr import tensor as T
    from hyhdr.loss import compute_loss
    from hyhdr.model import ModelConfig, init_model_params
    from hyhdr.model.network import apply_model
    from hyhdr.radiometry import LdrFrame, ExposureStack, build_network_input

    cfg = ModelConfig(channels=16, attn_dim=16, n_rdtb=1, n_stl=2)
    params = init_model_params(cfg, seed=0)
    rng = np.random.Generator(np.random.Philox(1))
    frames = tuple(LdrFrame(rng.uniform(0, 1, (64, 64, 3)).astype(np.float32), ev)
                   for ev in (-2.0, 0.0, 2.0))
    inputs = [T.Tensor(v) for v in build_network_input(ExposureStack(frames))]
    target = T.Tensor(rng.uniform(0, 1, (64, 64, 3)).astype(np.float32))

    def step():
        with T.GradTape() as tape:
            loss, _ = compute_loss(apply_model(inputs, params, cfg), target)
            tape.backward(loss)

    t = timeit(step, repeat=5)
    print(f"\ntiny-model fwd+bwd 64x64 ({kernels.BACKEND} backend): {t * 1e3:.1f}ms")


if __name__ == "__main__":
    print(f"active backend: {kernels.BACKEND}\n")
    bench_kernels()
    bench_train_step()
