"""Dense matrix primitives: SVD, pseudoinverse, numerical rank and norms.

Every rank decision is relative to the largest singular value: a singular
value ``s`` counts toward the rank when ``s >= tol * sigma_max`` and ``s > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10
JACOBI_MAX_SWEEPS = 60

_EPS = np.finfo(np.float64).eps


class SvdConvergenceError(np.linalg.LinAlgError):
    """Raised when an SVD iteration exhausts its budget without converging."""


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Validate ``A`` and return it as a read-only float64 2-D array (a copy)."""
    M = np.array(A, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={M.ndim}")
    if M.shape[0] == 0 or M.shape[1] == 0:
        raise ValueError(f"{name} must have positive dimensions, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    M.flags.writeable = False
    return M


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _rank_from_sigma(sigma: np.ndarray, tol: float) -> int:
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero((sigma >= tol * sigma[0]) & (sigma > 0.0)))


def _check_tol(tol: float) -> None:
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``A = W @ diag(sigma) @ V.T``.

    ``W`` is m x p, ``V`` is n x p with ``p = min(m, n)`` (or ``k`` for a
    truncated factorization); ``rank`` is the numerical rank under the
    tolerance the factors were computed with.
    """

    W: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    rank: int

    def reconstruct(self) -> np.ndarray:
        return (self.W * self.sigma) @ self.V.T


def _complete_columns(Q: np.ndarray, total: int) -> np.ndarray:
    """Extend orthonormal columns ``Q`` (m x r) to ``total`` orthonormal columns."""
    m, r = Q.shape
    if r >= total:
        return Q
    full, _ = np.linalg.qr(np.hstack([Q, np.eye(m)]))
    return np.hstack([Q, full[:, r:total]])


def _jacobi_svd(A: np.ndarray):
    """One-sided (Hestenes) Jacobi SVD of a matrix with rows >= cols."""
    G = A.copy()
    cols = G.shape[1]
    V = np.eye(cols)
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(cols - 1):
            for j in range(i + 1, cols):
                gi = G[:, i]
                gj = G[:, j]
                alpha = float(gi @ gi)
                beta = float(gj @ gj)
                gamma = float(gi @ gj)
                if gamma == 0.0 or abs(gamma) <= _EPS * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                rot = np.array([[c, s], [-s, c]])
                G[:, [i, j]] = G[:, [i, j]] @ rot
                V[:, [i, j]] = V[:, [i, j]] @ rot
        if not rotated:
            break
    else:
        raise SvdConvergenceError(
            f"Jacobi SVD did not converge within {JACOBI_MAX_SWEEPS} sweeps"
        )

    sigma = np.linalg.norm(G, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    G = G[:, order]
    V = V[:, order]
    nonzero = int(np.count_nonzero(sigma > 0.0))
    W = G[:, :nonzero] / sigma[:nonzero]
    W = _complete_columns(W, cols)
    return W, sigma, V


def svd(A, tol: float = DEFAULT_TOL, method: str = "lapack") -> SvdFactors:
    """Thin singular value decomposition with numerical rank.

    Parameters
    ----------
    A : array_like, shape (m, n)
    tol : float
        Relative rank threshold.
    method : {"lapack", "jacobi"}
        ``"lapack"`` calls the LAPACK driver behind :func:`numpy.linalg.svd`;
        ``"jacobi"`` runs the bundled one-sided Jacobi iteration.

    Raises
    ------
    SvdConvergenceError
        If the chosen algorithm fails to converge.
    """
    A = as_matrix(A)
    _check_tol(tol)
    if method == "lapack":
        try:
            W, sigma, Vt = np.linalg.svd(A, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise SvdConvergenceError(str(exc)) from exc
        V = Vt.T
    elif method == "jacobi":
        if A.shape[0] >= A.shape[1]:
            W, sigma, V = _jacobi_svd(A)
        else:
            V, sigma, W = _jacobi_svd(A.T)
    else:
        raise ValueError(f"unknown SVD method {method!r}")
    return SvdFactors(
        W=_frozen(np.ascontiguousarray(W)),
        sigma=_frozen(sigma),
        V=_frozen(np.ascontiguousarray(V)),
        rank=_rank_from_sigma(sigma, tol),
    )


def pinv_with_rank(A, tol: float = DEFAULT_TOL, method: str = "lapack") -> tuple[np.ndarray, int]:
    """Pseudoinverse and numerical rank from a single SVD."""
    f = svd(A, tol, method)
    r = f.rank
    if r == 0:
        return _frozen(np.zeros((f.V.shape[0], f.W.shape[0]))), 0
    with np.errstate(over="ignore", invalid="ignore"):
        P = (f.V[:, :r] / f.sigma[:r]) @ f.W[:, :r].T
    if not np.all(np.isfinite(P)):
        raise OverflowError(
            f"pseudoinverse overflows float64 (smallest kept singular value {f.sigma[r - 1]:.3g})"
        )
    return _frozen(P), r


def pinv(A, tol: float = DEFAULT_TOL, method: str = "lapack") -> np.ndarray:
    """Moore-Penrose pseudoinverse, reciprocating singular values above the rank threshold.

    The zero matrix maps to the zero matrix of transposed shape. Raises
    ``OverflowError`` when the result is not representable in float64.
    """
    return pinv_with_rank(A, tol, method)[0]


def truncated_svd(A, k: int, tol: float = DEFAULT_TOL, method: str = "lapack") -> SvdFactors:
    """Top-``k`` singular triples; ``reconstruct()`` gives the best rank-``k`` approximation."""
    A = as_matrix(A)
    p = min(A.shape)
    if not 1 <= k <= p:
        raise ValueError(f"k must lie in [1, {p}], got {k}")
    f = svd(A, tol, method)
    return SvdFactors(
        W=_frozen(f.W[:, :k].copy()),
        sigma=_frozen(f.sigma[:k].copy()),
        V=_frozen(f.V[:, :k].copy()),
        rank=min(k, f.rank),
    )


def numerical_rank(A, tol: float = DEFAULT_TOL, method: str = "lapack") -> int:
    """Number of singular values at or above ``tol * sigma_max`` (0 for the zero matrix)."""
    return svd(A, tol, method).rank


def singular_values(A, method: str = "lapack") -> np.ndarray:
    A = as_matrix(A)
    if method == "lapack":
        try:
            return np.linalg.svd(A, compute_uv=False)
        except np.linalg.LinAlgError as exc:
            raise SvdConvergenceError(str(exc)) from exc
    return svd(A, method=method).sigma


def norm(A, kind="fro") -> float:
    """Matrix norm.

    ``kind`` is ``"fro"`` (entrywise), ``"spectral"`` (largest singular value)
    or a real ``p >= 1`` for the Schatten p-norm. ``p = 2`` is routed to the
    entrywise Frobenius norm and ``p = inf`` to the spectral norm.
    """
    A = as_matrix(A)
    if isinstance(kind, str):
        if kind == "fro":
            return float(np.linalg.norm(A, "fro"))
        if kind == "spectral":
            return float(singular_values(A)[0])
        raise ValueError(f"unknown norm kind {kind!r}")
    p = float(kind)
    if not p >= 1:
        raise ValueError(f"Schatten p must be >= 1, got {p}")
    if p == 2:
        return float(np.linalg.norm(A, "fro"))
    s = singular_values(A)
    if math.isinf(p):
        return float(s[0])
    if s[0] == 0.0:
        return 0.0
    # scale by sigma_max to keep s**p in range
    return float(s[0] * np.sum((s / s[0]) ** p) ** (1.0 / p))


def relative_gap(X, Y) -> float:
    """``||X - Y||_F / max(1, ||Y||_F)``: the equality measure used throughout."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return float(np.linalg.norm(X - Y, "fro") / max(1.0, np.linalg.norm(Y, "fro")))


def approx_equal(X, Y, tol: float) -> bool:
    """Tolerance-relative matrix equality: ``||X - Y||_F <= tol * max(1, ||Y||_F)``."""
    return relative_gap(X, Y) <= tol
