"""Synthetic scene generator: determinism, motion, radiometric round trips."""

import numpy as np
import pytest

from hyhdr.datagen import (SceneObject, SceneSpec, crop_patches, expose_ldr,
                           random_scene, render_radiance, synth_scene)
from hyhdr.errors import ConfigError
from hyhdr.radiometry import gamma_correct

from conftest import rng


def moving_disk_spec(h=48, w=48, velocity=(4.0, 0.0)):
    return SceneSpec(height=h, width=w, objects=[
        SceneObject(kind="disk", center=(h / 2, w / 2), size=6.0,
                    radiance=(0.9, 0.9, 0.9), velocity=velocity)])


def centroid(mask):
    ys, xs = np.nonzero(mask)
    return ys.mean(), xs.mean()


class TestSynthScene:
    def test_zero_displacement_identical_frames(self):
        spec = moving_disk_spec(velocity=(0.0, 0.0))
        sample = synth_scene(spec, seed=3)
        rad = render_radiance(spec, seed=3, offset_steps=0.0)
        assert np.allclose(sample.gt.radiance, rad, atol=1e-6)
        # all frames depict the same scene: lifting any frame recovers the
        # radiance wherever that frame is unsaturated
        for f in sample.stack.frames:
            t = f.exposure_time
            lifted = gamma_correct(f)
            unsat = sample.gt.radiance * t < 0.99
            bound = 2.2 / t * (0.5 / 255) * 1.2
            assert np.abs(lifted - sample.gt.radiance)[unsat].max() <= bound

    def test_same_seed_bit_identical(self):
        spec = random_scene(32, 32, seed=9)
        a = synth_scene(spec, seed=5)
        b = synth_scene(spec, seed=5)
        assert a.gt.radiance.tobytes() == b.gt.radiance.tobytes()
        for fa, fb in zip(a.stack.frames, b.stack.frames):
            assert fa.pixels.tobytes() == fb.pixels.tobytes()

    def test_disk_centroids_displaced_by_velocity(self):
        spec = moving_disk_spec(velocity=(4.0, 0.0))
        bright = [render_radiance(spec, seed=1, offset_steps=o)[..., 0] > 0.8
                  for o in (-1.0, 0.0, 1.0)]
        c1, cr, c3 = (centroid(m) for m in bright)
        assert c1[0] == pytest.approx(cr[0] - 4.0, abs=0.3)
        assert c3[0] == pytest.approx(cr[0] + 4.0, abs=0.3)
        assert c1[1] == pytest.approx(cr[1], abs=0.3)

    def test_gt_uses_reference_positions(self):
        spec = moving_disk_spec(velocity=(5.0, 3.0))
        sample = synth_scene(spec, seed=2)
        ref = render_radiance(spec, seed=2, offset_steps=0.0)
        assert np.allclose(sample.gt.radiance, ref, atol=1e-6)

    def test_off_canvas_objects_clip(self):
        spec = SceneSpec(height=16, width=16, objects=[
            SceneObject(kind="rect", center=(1.0, 1.0), size=4.0,
                        radiance=(0.5, 0.5, 0.5), velocity=(-8.0, -8.0))])
        sample = synth_scene(spec, seed=0)  # must not raise
        assert sample.gt.radiance.shape == (16, 16, 3)


class TestExposeLdr:
    def test_zero_radiance(self):
        frame = expose_ldr(np.zeros((4, 4, 3)), t=1.0)
        assert np.array_equal(frame.pixels, np.zeros((4, 4, 3), np.float32))

    def test_saturation_clips_to_one(self):
        frame = expose_ldr(np.full((4, 4, 3), 0.5), t=4.0)
        assert np.array_equal(frame.pixels, np.ones((4, 4, 3), np.float32))

    def test_inverse_of_gamma_correct(self):
        # radiance 0.21764 at t=1 exposes to 0.5 before quantization
        frame = expose_ldr(np.full((2, 2, 3), 0.217637640824031), t=1.0)
        assert frame.pixels[0, 0, 0] == pytest.approx(0.5, abs=1 / 255)

    def test_round_trip_within_quantization(self):
        rad = rng(4).uniform(0, 1, (16, 16, 3))
        for t in (0.25, 1.0, 4.0):
            frame = expose_ldr(rad, t=t)
            back = gamma_correct(frame)
            unsat = rad * t < 1.0
            bound = 2.2 / t * (0.5 / 255) * 1.1
            assert np.abs(back - rad)[unsat].max() <= bound

    def test_bad_exposure(self):
        with pytest.raises(ValueError):
            expose_ldr(np.zeros((2, 2, 3)), t=0.0)


class TestCropPatches:
    def test_grid_arithmetic_9_crops(self):
        spec = random_scene(256, 256, seed=1, n_objects=2)
        sample = synth_scene(spec, seed=1)
        crops = crop_patches(sample, size=128, stride=64)
        assert len(crops) == 9

    def test_full_size_single_crop(self):
        spec = random_scene(32, 32, seed=2)
        sample = synth_scene(spec, seed=2)
        crops = crop_patches(sample, size=32, stride=32)
        assert len(crops) == 1
        assert np.array_equal(crops[0].gt.radiance, sample.gt.radiance)

    def test_crops_match_windows_bitwise(self):
        spec = random_scene(48, 48, seed=3)
        sample = synth_scene(spec, seed=3)
        crops = crop_patches(sample, size=16, stride=16)
        k = 0
        for y in range(0, 33, 16):
            for x in range(0, 33, 16):
                assert np.array_equal(crops[k].gt.radiance,
                                      sample.gt.radiance[y:y + 16, x:x + 16])
                assert np.array_equal(crops[k].stack.frames[0].pixels,
                                      sample.stack.frames[0].pixels[y:y + 16, x:x + 16])
                k += 1

    def test_oversized_crop_rejected(self):
        spec = random_scene(32, 32, seed=4)
        sample = synth_scene(spec, seed=4)
        with pytest.raises(ConfigError):
            crop_patches(sample, size=64, stride=32)


def test_random_scene_is_seed_deterministic():
    a = random_scene(64, 64, seed=11)
    b = random_scene(64, 64, seed=11)
    assert a == b
    assert a != random_scene(64, 64, seed=12)


def test_velocity_limit_enforced():
    with pytest.raises(ConfigError):
        SceneObject(kind="disk", center=(0, 0), size=2.0,
                    radiance=(0.5, 0.5, 0.5), velocity=(50.0, 0.0))
