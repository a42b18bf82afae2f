"""8-bit grayscale image loading/saving and the real-valued working view.

Binary PGM (P5, maxval 255) is the native format and round-trips byte for
byte. 8-bit grayscale PNG can be read through Pillow.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import CorruptFile, IoFailure, NonFiniteInput, UnsupportedFormat

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
# magic, width, height, maxval separated by whitespace and optional comments,
# followed by exactly one whitespace byte before the raster.
_PNM_TOKEN = re.compile(rb"(?:\s|#[^\n\r]*[\n\r])*([^\s#]+)")


@dataclass(eq=False)
class GrayImage:
    """An m x n matrix of 8-bit luma samples (row-major, ``uint8``)."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D sample matrix, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("samples must lie in [0, 255]")
            if not np.array_equal(arr, np.round(arr)):
                raise ValueError("samples must be integers")
            arr = arr.astype(np.uint8)
        self.samples = np.ascontiguousarray(arr)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    def __repr__(self):
        return f"GrayImage({self.height}x{self.width})"


def parse_pgm(data: bytes) -> GrayImage:
    """Decode the bytes of a binary PGM file."""
    tokens = []
    pos = 0
    for _ in range(4):
        match = _PNM_TOKEN.match(data, pos)
        if match is None:
            raise CorruptFile("truncated PNM header")
        tokens.append(match.group(1))
        pos = match.end()
    magic = tokens[0]
    if magic in (b"P6", b"P3", b"P4", b"P1", b"P7"):
        raise UnsupportedFormat(f"not a grayscale PGM (magic {magic.decode(errors='replace')})")
    if magic == b"P2":
        raise UnsupportedFormat("ASCII PGM (P2) is not supported; use binary P5")
    if magic != b"P5":
        raise UnsupportedFormat("not a PGM file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise CorruptFile("non-numeric PGM header field") from None
    if maxval != 255:
        raise UnsupportedFormat(f"only 8-bit PGM with maxval 255 is supported (got {maxval})")
    if width < 1 or height < 1:
        raise CorruptFile("PGM dimensions must be positive")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise CorruptFile("missing whitespace after PGM header")
    pos += 1
    need = width * height
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise CorruptFile(f"truncated PGM payload: expected {need} bytes, got {len(raster)}")
    samples = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(samples.copy())


def format_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.samples.tobytes()


def _load_png(path) -> GrayImage:
    from PIL import Image

    try:
        with Image.open(path) as im:
            im.load()
            if im.mode != "L":
                raise UnsupportedFormat(f"PNG must be 8-bit grayscale (mode L), got mode {im.mode}")
            return GrayImage(np.array(im, dtype=np.uint8))
    except (OSError, SyntaxError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc


def load_image(path) -> GrayImage:
    """Load a binary PGM or 8-bit grayscale PNG without rescaling samples."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {os.fspath(path)}: {exc.strerror or exc}") from exc
    if data.startswith(_PNG_MAGIC):
        return _load_png(path)
    return parse_pgm(data)


def write_image(img: GrayImage, path) -> None:
    """Write ``img`` as a binary PGM with maxval 255."""
    try:
        with open(path, "wb") as fh:
            fh.write(format_pgm(img))
    except OSError as exc:
        raise IoFailure(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc


def to_real(img: GrayImage) -> np.ndarray:
    return img.samples.astype(np.float64)


def to_gray(mat) -> GrayImage:
    """Clamp to [0, 255] and round half away from zero.

    After clamping every value is nonnegative, so ``floor(x + 0.5)`` is the
    half-away-from-zero rule.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise NonFiniteInput("matrix contains NaN or infinite values")
    clamped = np.clip(mat, 0.0, 255.0)
    return GrayImage(np.floor(clamped + 0.5).astype(np.uint8))
