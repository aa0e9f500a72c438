"""CUR factor extraction, exact and projection-based approximations, and the
five-way exactness characterization.

Index sets are 0-based sequences of integers; repeated indices are allowed and
preserved in order. Row and column selection is done by gathering, never by
building 0/1 selection matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .matcore import DEFAULT_TOL, as_matrix, norm, numerical_rank, pinv, pinv_with_rank, relative_gap


class IndexOutOfBoundsError(IndexError):
    """An index set refers to a row or column the matrix does not have."""


def as_index_set(indices, bound: int, name: str = "index set") -> tuple[int, ...]:
    """Validate a 0-based index multiset against ``bound`` and return it as a tuple."""
    if isinstance(indices, (int, np.integer)):
        indices = [indices]
    out = []
    for i in indices:
        if isinstance(i, (bool, np.bool_)) or not isinstance(i, (int, np.integer)):
            raise TypeError(f"{name} entries must be integers, got {i!r}")
        i = int(i)
        if not 0 <= i < bound:
            raise IndexOutOfBoundsError(f"{name} entry {i} outside [0, {bound})")
        out.append(i)
    if not out:
        raise ValueError(f"{name} must be nonempty")
    return tuple(out)


@dataclass(frozen=True)
class CurFactors:
    """Column submatrix ``C = A[:, J]``, row submatrix ``R = A[I, :]`` and
    their intersection ``U = A[I, J]``."""

    C: np.ndarray
    U: np.ndarray
    R: np.ndarray
    I: tuple[int, ...]
    J: tuple[int, ...]

    def __post_init__(self):
        I, J = list(self.I), list(self.J)
        if self.U.shape != (len(I), len(J)):
            raise ValueError("U shape does not match (|I|, |J|)")
        if not (np.array_equal(self.U, self.R[:, J]) and np.array_equal(self.U, self.C[I, :])):
            raise ValueError("U must be the intersection of C and R")


def extract(A, I, J) -> CurFactors:
    """Gather ``C``, ``U`` and ``R`` from ``A`` (repeats kept in the given order)."""
    A = as_matrix(A)
    m, n = A.shape
    I = as_index_set(I, m, "row index set")
    J = as_index_set(J, n, "column index set")
    rows, cols = list(I), list(J)
    C = A[:, cols]
    R = A[rows, :]
    U = C[rows, :]
    for M in (C, U, R):
        M.flags.writeable = False
    return CurFactors(C=C, U=U, R=R, I=I, J=J)


class CurResult(NamedTuple):
    approx: np.ndarray
    factors: CurFactors
    exact: bool


def cur_exact(A, I, J, tol: float = DEFAULT_TOL) -> CurResult:
    """``C @ pinv(U) @ R``.

    ``exact`` is decided by the rank test ``rank(U) == rank(A)``, not by the
    residual.
    """
    A = as_matrix(A)
    f = extract(A, I, J)
    approx = f.C @ pinv(f.U, tol) @ f.R
    exact = numerical_rank(f.U, tol) == numerical_rank(A, tol)
    return CurResult(approx, f, exact)


def mixing_u_dagger(f: CurFactors, tol: float = DEFAULT_TOL) -> np.ndarray:
    return pinv(f.U, tol)


def mixing_optimal(A, f: CurFactors, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Frobenius-optimal mixing matrix ``pinv(C) @ A @ pinv(R)``."""
    A = as_matrix(A)
    return pinv(f.C, tol) @ A @ pinv(f.R, tol)


def cur_projection(A, I, J, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``C C^+ A R^+ R``, the best approximation of the form ``C Z R`` in Frobenius norm."""
    A = as_matrix(A)
    f = extract(A, I, J)
    return f.C @ mixing_optimal(A, f, tol) @ f.R


def cur_error(A, f: CurFactors, Z, kind="fro") -> float:
    """``||A - C Z R||`` in the requested norm."""
    A = as_matrix(A)
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    return norm(A - f.C @ Z @ f.R, kind)


def u_from_global(A, f: CurFactors, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``R @ pinv(A) @ C``, which reproduces ``U`` for any selection."""
    A = as_matrix(A)
    return f.R @ pinv(A, tol) @ f.C


def pinv_via_cur(f: CurFactors, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``pinv(R) @ U @ pinv(C)``; equals ``pinv(A)`` exactly in the exact case."""
    return pinv(f.R, tol) @ f.U @ pinv(f.C, tol)


def mixing_udagger_identity(A, f: CurFactors, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Test ``pinv(U) == pinv(C) @ A @ pinv(R)``; returns ``(holds, relative residual)``."""
    Ud = pinv(f.U, tol)
    gap = relative_gap(mixing_optimal(A, f, tol), Ud)
    return gap <= tol, gap


class ProjectorResiduals(NamedTuple):
    """Frobenius gaps between projector pairs that coincide in the exact case."""

    domain_C_U: float  # ||C^+C - U^+U||
    range_R_U: float  # ||RR^+ - UU^+||
    range_A_C: float  # ||AA^+ - CC^+||
    domain_A_R: float  # ||A^+A - R^+R||


def projector_identities(A, f: CurFactors, tol: float = DEFAULT_TOL) -> ProjectorResiduals:
    A = as_matrix(A)
    Ad, Cd, Ud, Rd = (pinv(M, tol) for M in (A, f.C, f.U, f.R))
    fro = lambda X: float(np.linalg.norm(X, "fro"))  # noqa: E731
    return ProjectorResiduals(
        fro(Cd @ f.C - Ud @ f.U),
        fro(f.R @ Rd - f.U @ Ud),
        fro(A @ Ad - f.C @ Cd),
        fro(Ad @ A - Rd @ f.R),
    )


class Ranks(NamedTuple):
    A: int
    C: int
    U: int
    R: int


CONDITIONS = ("rank_condition", "exact_cur", "exact_projection", "pinv_identity", "rank_cr")


@dataclass(frozen=True)
class CharacterizationReport:
    """Verdicts for the five equivalent exactness conditions.

    ``residuals`` holds, in condition order: ``|rank U - rank A|``, the
    relative gaps ``A`` vs ``C U^+ R``, ``A`` vs ``C C^+ A R^+ R``,
    ``A^+`` vs ``R^+ U C^+``, and ``max(|rank C - rank A|, |rank R - rank A|)``.
    The constructor records the verdicts as computed; it does not force them
    to agree.
    """

    rank_condition: bool
    exact_cur: bool
    exact_projection: bool
    pinv_identity: bool
    rank_cr: bool
    residuals: tuple[float, float, float, float, float]
    ranks: Ranks

    @property
    def verdicts(self) -> tuple[bool, ...]:
        return tuple(getattr(self, name) for name in CONDITIONS)

    @property
    def consistent(self) -> bool:
        return len(set(self.verdicts)) == 1


def characterize(A, I, J, tol: float = DEFAULT_TOL) -> CharacterizationReport:
    """Evaluate each exactness condition independently (no short-circuiting)."""
    A = as_matrix(A)
    f = extract(A, I, J)
    (Ad, rA), (Cd, rC), (Ud, rU), (Rd, rR) = (pinv_with_rank(M, tol) for M in (A, f.C, f.U, f.R))
    ranks = Ranks(rA, rC, rU, rR)

    res_rank = float(abs(ranks.U - ranks.A))
    res_cur = relative_gap(f.C @ Ud @ f.R, A)
    res_proj = relative_gap(f.C @ (Cd @ A @ Rd) @ f.R, A)
    res_pinv = relative_gap(Rd @ f.U @ Cd, Ad)
    res_span = float(max(abs(ranks.C - ranks.A), abs(ranks.R - ranks.A)))

    return CharacterizationReport(
        rank_condition=ranks.U == ranks.A,
        exact_cur=res_cur <= tol,
        exact_projection=res_proj <= tol,
        pinv_identity=res_pinv <= tol,
        rank_cr=ranks.C == ranks.A and ranks.R == ranks.A,
        residuals=(res_rank, res_cur, res_proj, res_pinv, res_span),
        ranks=ranks,
    )


def block_counterexample() -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    """The 4 x 4 matrix ``[[0, I], [I, 0]]`` with ``I = J = (0, 1)``.

    Here ``U = pinv(U) = 0 = pinv(C) A pinv(R)`` although ``rank A = 4``.
    """
    Z, E = np.zeros((2, 2)), np.eye(2)
    A = np.block([[Z, E], [E, Z]])
    A.flags.writeable = False
    return A, (0, 1), (0, 1)
