"""Multi-level separable 2-D DWT (Haar, CDF 5/3) and coefficient linearization.

Odd-length signals are first extended by one repeated sample (half-sample
symmetric extension), so every subband has ``ceil(N / 2)`` entries per axis
and the synthesis step crops the extra sample away again. The CDF 5/3
lifting steps mirror across the even/odd lattice ends, which is the
whole-sample symmetric rule used by JPEG 2000; lifting makes the inverse
exact regardless.

Subband naming: ``H`` is high-pass along the horizontal axis (columns), so
it responds to vertical edges; ``V`` is high-pass along the vertical axis
(rows) and responds to horizontal edges; ``D`` is high-pass along both.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DepthTooLarge, ShapeMismatch

WAVELETS = ("haar", "cdf53")
_SQRT2 = np.sqrt(2.0)


def _ceil_half(n: int) -> int:
    return (n + 1) // 2


def level_shapes(shape: tuple[int, int], levels: int) -> list[tuple[int, int]]:
    """Image shape at levels 0..L under ceil halving."""
    m, n = shape
    out = [(m, n)]
    for _ in range(levels):
        m, n = _ceil_half(m), _ceil_half(n)
        out.append((m, n))
    return out


# -- 1-D kernels, operating along axis 0 ---------------------------------------

def _split(x):
    if x.shape[0] % 2:
        x = np.concatenate([x, x[-1:]], axis=0)
    return x[0::2], x[1::2]


def _merge(even, odd, length):
    out = np.empty((even.shape[0] * 2,) + even.shape[1:], dtype=np.float64)
    out[0::2] = even
    out[1::2] = odd
    return out[:length]


def _haar_fwd(x):
    even, odd = _split(x)
    return (even + odd) / _SQRT2, (even - odd) / _SQRT2


def _haar_inv(lo, hi, length):
    return _merge((lo + hi) / _SQRT2, (lo - hi) / _SQRT2, length)


def _next(a):
    # a[i + 1] with the last entry mirrored onto itself
    return np.concatenate([a[1:], a[-1:]], axis=0)


def _prev(a):
    return np.concatenate([a[:1], a[:-1]], axis=0)


def _cdf53_fwd(x):
    s, d = _split(x)
    d = d - 0.5 * (s + _next(s))
    s = s + 0.25 * (_prev(d) + d)
    return s, d


def _cdf53_inv(s, d, length):
    s = s - 0.25 * (_prev(d) + d)
    d = d + 0.5 * (s + _next(s))
    return _merge(s, d, length)


_KERNELS = {
    "haar": (_haar_fwd, _haar_inv),
    "cdf53": (_cdf53_fwd, _cdf53_inv),
}


def _kernels(wavelet):
    try:
        return _KERNELS[wavelet]
    except KeyError:
        raise ValueError(f"unknown wavelet {wavelet!r}; choose from {WAVELETS}") from None


# -- pyramid ---------------------------------------------------------------------

@dataclass(eq=False)
class CoeffPyramid:
    """Approximation band plus detail triples ``(H, V, D)`` ordered coarsest level first."""

    approx: np.ndarray
    details: list
    shape: tuple[int, int]
    wavelet: str = "haar"

    @property
    def levels(self) -> int:
        return len(self.details)

    def bands(self):
        """Yield ``(band_id, array)`` in scan order, approximation first."""
        L = self.levels
        yield f"A{L}", self.approx
        for i, triple in enumerate(self.details):
            level = L - i
            for name, band in zip("HVD", triple):
                yield f"{name}{level}", band

    def copy(self) -> "CoeffPyramid":
        return CoeffPyramid(
            self.approx.copy(),
            [tuple(b.copy() for b in t) for t in self.details],
            self.shape,
            self.wavelet,
        )

    def __eq__(self, other):
        if not isinstance(other, CoeffPyramid):
            return NotImplemented
        if (self.shape, self.wavelet, self.levels) != (other.shape, other.wavelet, other.levels):
            return False
        return all(
            a_id == b_id and np.array_equal(a, b)
            for (a_id, a), (b_id, b) in zip(self.bands(), other.bands())
        )


def dwt2(mat, levels: int = 3, wavelet: str = "haar") -> CoeffPyramid:
    fwd, _ = _kernels(wavelet)
    x = np.asarray(mat, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
    if levels < 1:
        raise DepthTooLarge("levels must be >= 1")
    if 2**levels > min(x.shape):
        raise DepthTooLarge(f"{levels} levels need 2**{levels} <= min{x.shape}")
    details = []
    approx = x
    for _ in range(levels):
        lo_c, hi_c = fwd(approx.T)  # along columns (horizontal axis)
        lo_c, hi_c = lo_c.T, hi_c.T
        ll, lh = fwd(lo_c)  # along rows (vertical axis)
        hl, hh = fwd(hi_c)
        details.append((hl, lh, hh))
        approx = ll
    details.reverse()
    return CoeffPyramid(approx, details, tuple(x.shape), wavelet)


def _check_structure(p: CoeffPyramid):
    shapes = level_shapes(p.shape, p.levels)
    if p.approx.shape != shapes[-1]:
        raise ShapeMismatch(f"approx band is {p.approx.shape}, expected {shapes[-1]}")
    for i, triple in enumerate(p.details):
        want = shapes[p.levels - i]
        if len(triple) != 3 or any(b.shape != want for b in triple):
            raise ShapeMismatch(f"detail bands at level {p.levels - i} must be {want}")


def idwt2(p: CoeffPyramid) -> np.ndarray:
    _, inv = _kernels(p.wavelet)
    _check_structure(p)
    shapes = level_shapes(p.shape, p.levels)
    x = np.asarray(p.approx, dtype=np.float64)
    for i, (hl, lh, hh) in enumerate(p.details):
        rows, cols = shapes[p.levels - i - 1]
        lo_c = inv(x, lh, rows)
        hi_c = inv(hl, hh, rows)
        x = inv(lo_c.T, hi_c.T, cols).T
    return np.ascontiguousarray(x)


# -- linearization ---------------------------------------------------------------

@dataclass(eq=False)
class CoeffVector:
    """Flat coefficient vector plus the ordered band layout needed to invert it."""

    values: np.ndarray
    shape_map: tuple = field(default_factory=tuple)
    includes_approx: bool = False

    def __len__(self):
        return self.values.shape[0]


def _shape_map(p: CoeffPyramid, include_approx: bool):
    bands = list(p.bands())
    if not include_approx:
        bands = bands[1:]
    return tuple((band_id, *band.shape) for band_id, band in bands)


def linearize(p: CoeffPyramid, include_approx: bool = False) -> CoeffVector:
    """Concatenate bands coarsest first, (H, V, D) within a level, row-major within a band."""
    bands = [b for _, b in p.bands()]
    if not include_approx:
        bands = bands[1:]
    values = np.concatenate([b.ravel() for b in bands]) if bands else np.zeros(0)
    return CoeffVector(values.astype(np.float64), _shape_map(p, include_approx), include_approx)


def delinearize(v: CoeffVector, template: CoeffPyramid) -> CoeffPyramid:
    """Inverse of :func:`linearize`; the approximation band comes from ``template`` when absent."""
    expected = _shape_map(template, v.includes_approx)
    if tuple(tuple(e) for e in v.shape_map) != expected:
        raise ShapeMismatch("shape map does not match the template pyramid layout")
    total = sum(r * c for _, r, c in expected)
    values = np.asarray(v.values, dtype=np.float64)
    if values.shape != (total,):
        raise ShapeMismatch(f"vector has {values.shape[0]} values, layout needs {total}")
    pos = 0
    arrays = []
    for _, r, c in expected:
        arrays.append(values[pos : pos + r * c].reshape(r, c).copy())
        pos += r * c
    if v.includes_approx:
        approx = arrays.pop(0)
    else:
        approx = template.approx.copy()
    details = [tuple(arrays[3 * i : 3 * i + 3]) for i in range(template.levels)]
    return CoeffPyramid(approx, details, template.shape, template.wavelet)


def pyramid_template(shape: tuple[int, int], levels: int, wavelet: str, approx=None) -> CoeffPyramid:
    """Zero pyramid with the layout ``dwt2`` would produce for ``shape``."""
    shapes = level_shapes(shape, levels)
    if approx is None:
        approx = np.zeros(shapes[-1])
    details = [tuple(np.zeros(shapes[lvl]) for _ in range(3)) for lvl in range(levels, 0, -1)]
    return CoeffPyramid(np.asarray(approx, dtype=np.float64), details, tuple(shape), wavelet)
