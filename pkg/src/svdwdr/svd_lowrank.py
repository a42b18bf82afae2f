"""Singular value decomposition, rank-k truncation and SVD-stage ratio accounting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, NonFiniteInput, RankOutOfRange


@dataclass(eq=False)
class SvdFactors:
    """``A = U @ diag(sigma) @ V.T`` with ``r = min(m, n)`` columns in U and V."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank_bound(self) -> int:
        return self.sigma.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]


class RankChoice(NamedTuple):
    k: int
    unreachable: bool


def _canonical_signs(U, V):
    # first entry of each u_i that is clearly nonzero becomes positive
    for i in range(U.shape[1]):
        col = U[:, i]
        scale = np.max(np.abs(col))
        if scale == 0.0:
            continue
        j = np.flatnonzero(np.abs(col) > 1e-12 * scale)[0]
        if col[j] < 0:
            U[:, i] = -col
            V[:, i] = -V[:, i]
    return U, V


def _complete_basis(Q, filled):
    """Replace the columns of ``Q`` not flagged in ``filled`` with an orthonormal completion."""
    m = Q.shape[0]
    basis = [Q[:, i] for i in range(Q.shape[1]) if filled[i]]
    fresh = []
    for e in np.eye(m):
        if len(basis) + len(fresh) == Q.shape[1]:
            break
        v = e.copy()
        for _ in range(2):  # re-orthogonalise once for stability
            for b in basis + fresh:
                v -= (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            fresh.append(v / norm)
    out = Q.copy()
    it = iter(fresh)
    for i in range(Q.shape[1]):
        if not filled[i]:
            out[:, i] = next(it)
    return out


def _jacobi_svd(A, max_sweeps, tol=1e-15):
    """One-sided (Hestenes) Jacobi SVD for m >= n."""
    m, n = A.shape
    W = A.copy()
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp = W[:, p]
                wq = W[:, q]
                alpha = wp @ wp
                beta = wq @ wq
                gamma = wp @ wq
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                W[:, [p, q]] = np.column_stack((c * wp - s * wq, s * wp + c * wq))
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, [p, q]] = np.column_stack((c * vp - s * vq, s * vp + c * vq))
        if not rotated:
            break
    else:
        raise ConvergenceFailure(f"Jacobi SVD did not converge within {max_sweeps} sweeps")

    sigma = np.linalg.norm(W, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    W = W[:, order]
    V = V[:, order]
    cutoff = max(m, n) * np.finfo(float).eps * (sigma[0] if sigma.size else 0.0)
    filled = sigma > cutoff
    U = np.zeros((m, n))
    U[:, filled] = W[:, filled] / sigma[filled]
    if not np.all(filled):
        U = _complete_basis(U, filled)
    return U, sigma, V


def svd_decompose(mat, method: str = "lapack", max_sweeps: int | None = None) -> SvdFactors:
    """Thin SVD of a finite real matrix, singular values in nonincreasing order.

    ``method="lapack"`` calls :func:`numpy.linalg.svd`; ``method="jacobi"`` runs
    a pure-numpy one-sided Jacobi iteration capped at ``max_sweeps`` sweeps
    (default ``100 * min(m, n)``). Either way each left singular vector is
    flipped so its first nonzero entry is positive.
    """
    A = np.asarray(mat, dtype=np.float64)
    if A.ndim != 2 or min(A.shape) < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteInput("matrix contains NaN or infinite values")
    m, n = A.shape
    if method == "lapack":
        try:
            U, sigma, Vt = np.linalg.svd(A, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(str(exc)) from exc
        V = Vt.T.copy()
    elif method == "jacobi":
        sweeps = max_sweeps if max_sweeps is not None else 100 * min(m, n)
        if m >= n:
            U, sigma, V = _jacobi_svd(A, sweeps)
        else:
            V, sigma, U = _jacobi_svd(A.T.copy(), sweeps)
    else:
        raise ValueError(f"unknown SVD method {method!r}")
    U, V = _canonical_signs(np.array(U), np.array(V))
    return SvdFactors(U=U, sigma=np.asarray(sigma, dtype=np.float64), V=V)


def truncate_reconstruct(f: SvdFactors, k: int) -> np.ndarray:
    """Sum of the leading ``k`` rank-one terms ``sigma_i * u_i * v_i^T``."""
    r = f.rank_bound
    if not 1 <= k <= r:
        raise RankOutOfRange(f"rank {k} outside [1, {r}]")
    return (f.U[:, :k] * f.sigma[:k]) @ f.V[:, :k].T


def svd_compression_ratio(m: int, n: int, k: int) -> float:
    """Pixels over stored values: ``m*n / (k*(1 + m + n))``."""
    if not 1 <= k <= min(m, n):
        raise RankOutOfRange(f"rank {k} outside [1, {min(m, n)}]")
    return (m * n) / (k * (1 + m + n))


def rank_for_ratio(m: int, n: int, target: float) -> RankChoice:
    """Largest k whose SVD ratio still meets ``target``.

    Falls back to ``k = 1`` flagged ``unreachable`` when even rank one is
    too expensive.
    """
    if target <= 0:
        raise ValueError("target ratio must be positive")
    r = min(m, n)
    k = min(r, int((m * n) // (target * (1 + m + n))))
    # guard the float division at the boundary
    while k < r and svd_compression_ratio(m, n, k + 1) >= target:
        k += 1
    while k >= 1 and svd_compression_ratio(m, n, k) < target:
        k -= 1
    if k < 1:
        return RankChoice(1, True)
    return RankChoice(k, False)
