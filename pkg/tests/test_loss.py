"""Training loss and the frozen perceptual extractor."""

import numpy as np
import pytest

from hyhdr import tensor as T
from hyhdr.errors import ShapeError
from hyhdr.loss import PerceptualExtractor, compute_loss, perceptual_features
from hyhdr.radiometry import HdrImage

from conftest import rng


def img(seed, h=16, w=16):
    return HdrImage(rng(seed).uniform(0, 1, (h, w, 3)).astype(np.float32))


def test_identical_images_zero_loss_exactly():
    a = img(0)
    total, terms = compute_loss(a, HdrImage(a.radiance.copy()))
    assert float(total.data) == 0.0
    assert terms["l1"] == 0.0 and terms["perceptual"] == 0.0


def test_lambda_zero_is_pure_mulaw_l1():
    a, b = img(1), img(2)
    total, terms = compute_loss(a, b, lam=0.0)
    assert float(total.data) == terms["l1"]
    assert terms["perceptual"] == 0.0


def test_constant_images_closed_form():
    # |T(0.5) - T(0.6)| = ln(3001)/ln(5001) - ln(2501)/ln(5001)
    a = HdrImage(np.full((8, 8, 3), 0.5, np.float32))
    b = HdrImage(np.full((8, 8, 3), 0.6, np.float32))
    total, _ = compute_loss(b, a, lam=0.0)
    assert float(total.data) == pytest.approx(0.02139796894363466, abs=1e-4)


def test_loss_nonnegative_and_zero_iff_equal():
    a, b = img(3), img(4)
    total, _ = compute_loss(a, b)
    assert float(total.data) > 0.0
    total2, _ = compute_loss(a, a)
    assert float(total2.data) == 0.0


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        compute_loss(img(0, 8, 8), img(0, 8, 9))


class TestPerceptualExtractor:
    def test_identical_inputs_identical_features(self):
        a = img(5)
        f1 = perceptual_features(a)
        f2 = perceptual_features(a)
        assert all(np.array_equal(x.data, y.data) for x, y in zip(f1, f2))

    def test_weights_frozen(self):
        ext = PerceptualExtractor()
        before = ext.weight_hash()
        x = T.Tensor(rng(6).uniform(0, 1, (16, 16, 3)).astype(np.float32),
                     requires_grad=True)
        with T.GradTape() as tape:
            feats = ext(x)
            tape.backward(T.mean(T.abs_(feats[0])))
        assert x.grad is not None
        assert all(not w.requires_grad for w in ext.weights)
        assert ext.weight_hash() == before

    def test_single_pixel_difference_detected(self):
        a = img(7)
        b = a.radiance.copy()
        b[3, 3, 1] += 0.25
        fa = perceptual_features(a)
        fb = perceptual_features(HdrImage(np.clip(b, 0, 1)))
        dist = sum(float(np.abs(x.data - y.data).sum()) for x, y in zip(fa, fb))
        assert dist > 0.0

    def test_two_scales(self):
        feats = perceptual_features(img(8, 32, 32))
        assert len(feats) == 2
        assert feats[0].shape[0] == 16 and feats[1].shape[0] == 8

    def test_deterministic_construction(self):
        assert PerceptualExtractor().weight_hash() == PerceptualExtractor().weight_hash()


def test_loss_differentiable_gradcheck():
    g = rng(9)
    pred_raw = T.Tensor(g.normal(size=(8, 8, 3)), requires_grad=True,
                        dtype=np.float64)
    target = T.Tensor(g.uniform(0, 1, (8, 8, 3)), dtype=np.float64)
    ext = PerceptualExtractor(dtype=np.float64)

    def f():
        total, _ = compute_loss(T.sigmoid(pred_raw), target, extractor=ext)
        return total

    report = T.grad_check(f, {"pred": pred_raw}, tol=1e-4, max_entries=10)
    report.raise_on_failure()
