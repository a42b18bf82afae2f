import numpy as np
import pytest
from PIL import Image

from svdwdr.errors import CorruptFile, IoFailure, NonFiniteInput, UnsupportedFormat
from svdwdr.image_io import GrayImage, format_pgm, load_image, parse_pgm, to_gray, to_real, write_image


def test_pgm_round_trip_is_byte_exact(tmp_path, rng):
    img = GrayImage(rng.integers(0, 256, (17, 23), dtype=np.uint8))
    path = tmp_path / "x.pgm"
    write_image(img, path)
    assert load_image(path) == img
    assert path.read_bytes() == format_pgm(img)


def test_header_comments_are_skipped():
    body = bytes(range(6))
    data = b"P5\n# made by hand\n3 2\n# another\n255\n" + body
    img = parse_pgm(data)
    assert img.shape == (2, 3)
    assert img.samples.ravel().tolist() == list(body)


def test_sixteen_bit_pgm_rejected():
    with pytest.raises(UnsupportedFormat):
        parse_pgm(b"P5\n2 2\n65535\n" + b"\0" * 8)


def test_truncated_pgm_is_corrupt():
    with pytest.raises(CorruptFile):
        parse_pgm(b"P5\n4 4\n255\n" + b"\0" * 10)


def test_png_grayscale_loads(tmp_path, rng):
    arr = rng.integers(0, 256, (9, 5), dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(tmp_path / "g.png")
    assert np.array_equal(load_image(tmp_path / "g.png").samples, arr)


def test_png_rgb_rejected(tmp_path):
    Image.new("RGB", (4, 4)).save(tmp_path / "c.png")
    with pytest.raises(UnsupportedFormat):
        load_image(tmp_path / "c.png")


def test_missing_file_names_path(tmp_path):
    path = tmp_path / "nope.pgm"
    with pytest.raises(IoFailure, match="nope.pgm"):
        load_image(path)


def test_to_gray_clamps_and_rounds_half_up():
    out = to_gray(np.array([[-3.0, 0.5, 1.49, 254.5, 300.0]]))
    assert out.samples.tolist() == [[0, 1, 1, 255, 255]]


def test_to_gray_rejects_nan():
    with pytest.raises(NonFiniteInput):
        to_gray(np.array([[1.0, np.nan]]))


def test_to_real_then_to_gray_is_identity(rng):
    img = GrayImage(rng.integers(0, 256, (8, 8), dtype=np.uint8))
    assert to_gray(to_real(img)) == img
