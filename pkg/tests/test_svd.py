from fractions import Fraction

import numpy as np
import pytest

from svdwdr.errors import NonFiniteInput, RankOutOfRange
from svdwdr.svd_lowrank import rank_for_ratio, svd_compression_ratio, svd_decompose, truncate_reconstruct


def test_factors_reproduce_matrix(rng):
    A = rng.normal(size=(30, 20))
    f = svd_decompose(A)
    assert np.allclose((f.U * f.sigma) @ f.V.T, A, atol=1e-10)
    assert np.all(np.diff(f.sigma) <= 0)


@pytest.mark.parametrize("shape", [(12, 12), (15, 9), (9, 15)])
def test_jacobi_agrees_with_lapack(rng, shape):
    A = rng.normal(size=shape)
    a = svd_decompose(A, method="lapack")
    b = svd_decompose(A, method="jacobi")
    assert np.allclose(a.sigma, b.sigma, atol=1e-10)
    # after the sign convention the singular vectors coincide (distinct sigmas)
    assert np.allclose(np.abs(a.U.T @ b.U), np.eye(min(shape)), atol=1e-8)
    assert np.allclose((b.U * b.sigma) @ b.V.T, A, atol=1e-10)


def test_jacobi_handles_rank_deficiency(rng):
    A = np.outer(rng.normal(size=10), rng.normal(size=7))
    f = svd_decompose(A, method="jacobi")
    assert np.allclose(f.U.T @ f.U, np.eye(7), atol=1e-10)
    assert np.allclose(f.V.T @ f.V, np.eye(7), atol=1e-10)
    assert np.count_nonzero(f.sigma > 1e-10) == 1


def test_sign_convention_first_nonzero_positive(rng):
    f = svd_decompose(rng.normal(size=(8, 6)))
    for i in range(f.U.shape[1]):
        col = f.U[:, i]
        assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0


def test_diagonal_matrix():
    f = svd_decompose(np.diag([1.0, 5.0, 3.0]))
    assert np.allclose(f.sigma, [5, 3, 1])


def test_truncation_bounds():
    f = svd_decompose(np.eye(4))
    with pytest.raises(RankOutOfRange):
        truncate_reconstruct(f, 0)
    with pytest.raises(RankOutOfRange):
        truncate_reconstruct(f, 5)


def test_nonfinite_rejected():
    with pytest.raises(NonFiniteInput):
        svd_decompose(np.array([[1.0, np.inf], [0.0, 1.0]]))


def test_compression_ratio_formula():
    assert Fraction(svd_compression_ratio(512, 512, 12)).limit_denominator(10**6) == Fraction(262144, 12300)
    assert svd_compression_ratio(100, 50, 1) == pytest.approx(5000 / 151)


@pytest.mark.parametrize("target", [2.0, 4.47, 20.0, 100.0])
def test_rank_for_ratio_is_largest_meeting_target(target):
    k, unreachable = rank_for_ratio(512, 512, target)
    assert not unreachable
    assert svd_compression_ratio(512, 512, k) >= target
    assert svd_compression_ratio(512, 512, k + 1) < target


def test_rank_for_ratio_unreachable():
    assert rank_for_ratio(8, 8, 1000.0) == (1, True)
