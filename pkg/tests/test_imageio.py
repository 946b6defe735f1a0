"""PPM/PFM readers and writers."""

import numpy as np
import pytest

from hyhdr.errors import FormatError
from hyhdr.imageio import read_pfm, read_ppm, write_pfm, write_ppm

from conftest import rng


def test_ppm_round_trip(tmp_path):
    img = rng(0).uniform(0, 1, (9, 7, 3)).astype(np.float32)
    q = np.round(img * 255) / 255  # writer quantizes
    path = tmp_path / "a.ppm"
    write_ppm(path, img)
    back = read_ppm(path)
    assert back.shape == (9, 7, 3)
    assert np.allclose(back, q, atol=1e-7)


def test_ppm_quantized_values_exact(tmp_path):
    img = np.round(rng(1).uniform(0, 1, (4, 4, 3)) * 255).astype(np.float32) / 255
    path = tmp_path / "b.ppm"
    write_ppm(path, img)
    assert np.array_equal(read_ppm(path), img.astype(np.float32))


def test_pfm_round_trip_bitwise(tmp_path):
    img = rng(2).uniform(0, 1, (11, 6, 3)).astype(np.float32)
    path = tmp_path / "c.pfm"
    write_pfm(path, img)
    back = read_pfm(path)
    assert back.tobytes() == img.tobytes()


def test_ppm_bad_magic(tmp_path):
    path = tmp_path / "bad.ppm"
    path.write_bytes(b"P5\n2 2\n255\n" + b"\0" * 12)
    with pytest.raises(FormatError):
        read_ppm(path)


def test_ppm_truncated(tmp_path):
    path = tmp_path / "trunc.ppm"
    path.write_bytes(b"P6\n4 4\n255\n" + b"\0" * 10)
    with pytest.raises(FormatError):
        read_ppm(path)


def test_ppm_with_comment(tmp_path):
    path = tmp_path / "comment.ppm"
    path.write_bytes(b"P6\n# a comment\n2 1\n255\n" + bytes([10, 20, 30, 40, 50, 60]))
    img = read_ppm(path)
    assert img.shape == (1, 2, 3)
    assert img[0, 0, 0] == pytest.approx(10 / 255)


def test_pfm_bad_magic(tmp_path):
    path = tmp_path / "bad.pfm"
    path.write_bytes(b"Pf\n2 2\n-1.0\n" + b"\0" * 16)
    with pytest.raises(FormatError):
        read_pfm(path)


def test_pfm_truncated(tmp_path):
    path = tmp_path / "trunc.pfm"
    path.write_bytes(b"PF\n4 4\n-1.0\n" + b"\0" * 20)
    with pytest.raises(FormatError):
        read_pfm(path)


def test_pfm_row_order_bottom_up(tmp_path):
    img = np.zeros((2, 1, 3), np.float32)
    img[0] = 1.0  # top row bright
    path = tmp_path / "rows.pfm"
    write_pfm(path, img)
    raw = path.read_bytes()
    payload = np.frombuffer(raw.split(b"-1.0\n", 1)[1], dtype="<f4")
    assert payload[0] == 0.0  # file starts with the bottom row
    assert np.array_equal(read_pfm(path), img)
