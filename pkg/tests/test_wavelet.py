import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svdwdr.errors import DepthTooLarge, ShapeMismatch
from svdwdr.wavelet import (
    WAVELETS,
    CoeffVector,
    delinearize,
    dwt2,
    idwt2,
    level_shapes,
    linearize,
    pyramid_template,
)


@pytest.mark.parametrize("wavelet", WAVELETS)
@pytest.mark.parametrize("levels", [1, 2, 3])
def test_perfect_reconstruction(rng, wavelet, levels):
    A = rng.uniform(0, 255, (64, 64))
    assert np.max(np.abs(idwt2(dwt2(A, levels, wavelet)) - A)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(
    rows=st.integers(8, 40),
    cols=st.integers(8, 40),
    levels=st.integers(1, 3),
    wavelet=st.sampled_from(WAVELETS),
    seed=st.integers(0, 2**32 - 1),
)
def test_reconstruction_on_odd_shapes(rows, cols, levels, wavelet, seed):
    A = np.random.default_rng(seed).normal(size=(rows, cols))
    p = dwt2(A, levels, wavelet)
    assert p.approx.shape == level_shapes((rows, cols), levels)[-1]
    assert np.allclose(idwt2(p), A, atol=1e-9)


def test_haar_conserves_energy(rng):
    A = rng.normal(size=(64, 64))
    p = dwt2(A, 3, "haar")
    energy = sum(float(np.sum(b**2)) for _, b in p.bands())
    assert abs(energy - np.sum(A**2)) / np.sum(A**2) < 1e-6


def test_haar_constant_image_has_no_detail():
    p = dwt2(np.full((16, 16), 7.0), 2, "haar")
    for _, band in list(p.bands())[1:]:
        assert np.allclose(band, 0)
    assert np.allclose(p.approx, 7.0 * 4)  # two orthonormal levels scale DC by 2 each


def _single_level_bands(A):
    p = dwt2(A, 1, "haar")
    return dict(p.bands())


def test_vertical_edge_lands_in_h_band():
    A = np.zeros((16, 16))
    A[:, 5:] = 100.0  # edge between columns 4 and 5 straddles a Haar pair
    b = _single_level_bands(A)
    assert np.abs(b["H1"]).max() > 0
    assert np.allclose(b["V1"], 0) and np.allclose(b["D1"], 0)


def test_horizontal_edge_lands_in_v_band():
    A = np.zeros((16, 16))
    A[5:, :] = 100.0
    b = _single_level_bands(A)
    assert np.abs(b["V1"]).max() > 0
    assert np.allclose(b["H1"], 0) and np.allclose(b["D1"], 0)


def test_depth_limit():
    with pytest.raises(DepthTooLarge):
        dwt2(np.zeros((8, 12)), 4)
    dwt2(np.zeros((8, 12)), 3)


@pytest.mark.parametrize("include_approx", [False, True])
def test_linearize_round_trip_is_exact(rng, include_approx):
    p = dwt2(rng.normal(size=(40, 36)), 3, "cdf53")
    v = linearize(p, include_approx)
    expected = sum(b.size for _, b in p.bands()) - (0 if include_approx else p.approx.size)
    assert len(v) == expected
    template = pyramid_template(p.shape, p.levels, p.wavelet, None if include_approx else p.approx)
    assert delinearize(v, template) == p


def test_scan_order_is_coarsest_first():
    p = dwt2(np.arange(64.0).reshape(8, 8), 2)
    ids = [entry[0] for entry in linearize(p, True).shape_map]
    assert ids == ["A2", "H2", "V2", "D2", "H1", "V1", "D1"]


def test_shuffled_shape_map_rejected(rng):
    p = dwt2(rng.normal(size=(16, 16)), 2)
    v = linearize(p)
    shuffled = CoeffVector(v.values, (v.shape_map[1], v.shape_map[0], *v.shape_map[2:]), False)
    with pytest.raises(ShapeMismatch):
        delinearize(shuffled, p)


def test_idwt_rejects_wrong_band_shape(rng):
    p = dwt2(rng.normal(size=(16, 16)), 2)
    p.approx = np.zeros((3, 3))
    with pytest.raises(ShapeMismatch):
        idwt2(p)
