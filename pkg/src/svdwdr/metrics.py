"""MSE, PSNR and SSIM between two 8-bit grayscale images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ImageTooSmall

MAX_VALUE = 255.0
SSIM_WINDOW = 8
SSIM_C1 = (0.01 * MAX_VALUE) ** 2
SSIM_C2 = (0.03 * MAX_VALUE) ** 2


@dataclass(frozen=True)
class QualityScores:
    mse: float
    psnr: float
    ssim: float


def _pair(a, b):
    a = np.asarray(getattr(a, "samples", a))
    b = np.asarray(getattr(b, "samples", b))
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr_from_mse(value: float) -> float:
    if value == 0:
        return math.inf
    return 10.0 * math.log10(MAX_VALUE**2 / value)


def psnr(a, b) -> float:
    """``10 log10(255^2 / MSE)`` in dB; ``inf`` for identical images."""
    return psnr_from_mse(mse(a, b))


def _box_sums(x: np.ndarray, w: int) -> np.ndarray:
    c = np.zeros((x.shape[0] + 1, x.shape[1] + 1), dtype=x.dtype)
    c[1:, 1:] = x.cumsum(0).cumsum(1)
    return c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]


def ssim_map(a, b, window: int = SSIM_WINDOW) -> np.ndarray:
    """Per-window SSIM over every ``window x window`` block at stride 1.

    Statistics use 1/N normalization. For integer images every window sum is
    an exact integer, so the index is exactly symmetric in its arguments.
    """
    a, b = _pair(a, b)
    if min(a.shape) < window:
        raise ImageTooSmall(f"image {a.shape} is smaller than the {window}x{window} window")
    integral = np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer)
    dt = np.int64 if integral else np.float64
    x = a.astype(dt)
    y = b.astype(dt)
    N = window * window
    sx = _box_sums(x, window)
    sy = _box_sums(y, window)
    sxx = _box_sums(x * x, window)
    syy = _box_sums(y * y, window)
    sxy = _box_sums(x * y, window)
    scale = float(N * N)
    # each term is (integer) / N^2, so the division is exact for 8-bit input
    mu_xy2 = (2 * sx * sy) / scale
    mu_sq = (sx * sx + sy * sy) / scale
    cov2 = (2 * (N * sxy - sx * sy)) / scale
    var_sum = ((N * sxx - sx * sx) + (N * syy - sy * sy)) / scale
    return ((mu_xy2 + SSIM_C1) * (cov2 + SSIM_C2)) / ((mu_sq + SSIM_C1) * (var_sum + SSIM_C2))


def ssim(a, b, window: int = SSIM_WINDOW) -> float:
    return float(np.mean(ssim_map(a, b, window)))


def quality(a, b) -> QualityScores:
    value = mse(a, b)
    return QualityScores(value, psnr_from_mse(value), ssim(a, b))
