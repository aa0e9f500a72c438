"""Column subset selection.

Rows are handled by transposition: ``select_rows(A, ...)`` is
``select_columns(A.T, ...)``.

Randomized strategies draw from :class:`numpy.random.Generator` seeded through
``numpy.random.default_rng(seed)``, i.e. the PCG64 bit generator, so a given
seed yields the same selection on every platform for a fixed NumPy version.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .cur import as_index_set
from .matcore import DEFAULT_TOL, as_matrix, norm, svd, truncated_svd

DEFAULT_BUDGET = 10**6
GREEDY_STOP = 1e-12
# subsets whose error is within this relative margin of the incumbent count as ties
_TIE_RTOL = 1e-12


class BudgetExceededError(RuntimeError):
    """Exhaustive enumeration would visit more subsets than allowed."""


class Strategy(str, enum.Enum):
    EXHAUSTIVE = "exhaustive"
    GREEDY = "greedy"
    UNIFORM = "uniform"
    LEVERAGE = "leverage"

    @property
    def randomized(self) -> bool:
        return self in (Strategy.UNIFORM, Strategy.LEVERAGE)


@dataclass(frozen=True)
class SelectionResult:
    """Selected indices (0-based) with their projection errors.

    ``subsets_evaluated`` is only set by exhaustive search.
    """

    J: tuple[int, ...]
    error_frobenius: float
    error_spectral: float
    subsets_evaluated: int | None = None


def _column_basis(C: np.ndarray, tol: float) -> np.ndarray:
    f = svd(C, tol)
    return f.W[:, : f.rank]


def projection_residual(A, J, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``A - C C^+ A`` for ``C = A[:, J]``."""
    A = as_matrix(A)
    J = as_index_set(J, A.shape[1], "column index set")
    Q = _column_basis(A[:, list(J)], tol)
    return A - Q @ (Q.T @ A)


def cssp_error(A, J, kind="fro", tol: float = DEFAULT_TOL) -> float:
    """``||A - C C^+ A||`` in the requested norm, ``C = A[:, J]``."""
    E = projection_residual(A, J, tol)
    if not np.any(E):
        return 0.0
    return norm(E, kind)


def _result(A: np.ndarray, J, tol: float, evaluated: int | None = None) -> SelectionResult:
    J = tuple(int(j) for j in J)
    E = projection_residual(A, J, tol)
    if np.any(E):
        fro, spec = norm(E, "fro"), norm(E, "spectral")
    else:
        fro = spec = 0.0
    return SelectionResult(J, fro, spec, evaluated)


def exhaustive_cssp(A, k: int, kind="fro", budget: int = DEFAULT_BUDGET,
                    tol: float = DEFAULT_TOL) -> SelectionResult:
    """Globally optimal set of ``k`` distinct columns.

    Subsets are visited in lexicographic order and an incumbent is only
    replaced by a strictly (beyond round-off) smaller error, so ties resolve
    to the lexicographically smallest subset.
    """
    A = as_matrix(A)
    n = A.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    total = math.comb(n, k)
    if total > budget:
        raise BudgetExceededError(f"C({n}, {k}) = {total} subsets exceeds budget {budget}")

    margin = _TIE_RTOL * max(1.0, norm(A, "fro"))
    best_J, best_err = None, math.inf
    for J in itertools.combinations(range(n), k):
        err = cssp_error(A, J, kind, tol)
        if err < best_err - margin:
            best_J, best_err = J, err
    return _result(A, best_J, tol, evaluated=total)


def greedy_pivot(A, k: int, tol: float = DEFAULT_TOL) -> SelectionResult:
    """Pick, ``k`` times, the column with the largest residual norm after
    projecting out the columns already chosen (lowest index wins ties).

    Stops early, returning fewer than ``k`` indices, once every residual
    column norm drops below ``GREEDY_STOP`` relative to the largest column of
    ``A``.
    """
    A = as_matrix(A)
    n = A.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    E = A.copy()
    scale = float(np.max(np.linalg.norm(A, axis=0)))
    chosen: list[int] = []
    for _ in range(k):
        norms = np.linalg.norm(E, axis=0)
        j = int(np.argmax(norms))
        if scale == 0.0 or norms[j] < GREEDY_STOP * scale:
            break
        chosen.append(j)
        q = E[:, j] / norms[j]
        # two Gram-Schmidt passes keep the residual orthogonal to q
        for _ in range(2):
            E -= np.outer(q, q @ E)
        E[:, chosen] = 0.0
    if not chosen:
        raise ValueError("greedy selection on the zero matrix selects nothing")
    return _result(A, chosen, tol)


def leverage_scores(A, k: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Rank-``k`` column leverage scores ``||V_k[j, :]||^2``; they sum to ``k``."""
    A = as_matrix(A)
    f = svd(A, tol)
    if not 1 <= k <= f.rank:
        raise ValueError(f"k must lie in [1, rank(A) = {f.rank}], got {k}")
    Vk = f.V[:, :k]
    return np.sum(Vk * Vk, axis=1)


def sampling_probabilities(A, k: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Column probabilities for leverage-score sampling.

    The top-``k`` right singular subspace is not unique when ``sigma_k`` ties
    with ``sigma_{k+1}``; the scores are then taken over the whole tied cluster
    so the distribution does not depend on the SVD basis. ``k`` above the
    numerical rank is capped at the rank.
    """
    A = as_matrix(A)
    f = svd(A, tol)
    if f.rank == 0:
        raise ValueError("leverage-score sampling is undefined for the zero matrix")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    k = min(k, f.rank)
    s = f.sigma[: f.rank]
    k = int(np.sum(s >= s[k - 1] - tol * s[0]))
    scores = np.sum(f.V[:, :k] ** 2, axis=1)
    return scores / scores.sum()


def select_columns(A, k: int, strategy="greedy", seed: int = 0, kind="fro",
                   budget: int = DEFAULT_BUDGET, tol: float = DEFAULT_TOL) -> SelectionResult:
    """Choose ``k`` columns of ``A`` with the given strategy.

    ``kind`` is the objective norm for exhaustive search; ``seed`` only
    affects the randomized strategies, which sample with replacement.
    """
    A = as_matrix(A)
    strategy = Strategy(strategy)
    n = A.shape[1]
    if strategy is Strategy.EXHAUSTIVE:
        return exhaustive_cssp(A, k, kind, budget, tol)
    if strategy is Strategy.GREEDY:
        return greedy_pivot(A, k, tol)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(seed)
    if strategy is Strategy.UNIFORM:
        J = rng.integers(0, n, size=k)
    else:
        p = sampling_probabilities(A, k, tol)
        J = rng.choice(n, size=k, replace=True, p=p)
    return _result(A, J, tol)


def select_rows(A, k: int, strategy="greedy", seed: int = 0, kind="fro",
                budget: int = DEFAULT_BUDGET, tol: float = DEFAULT_TOL) -> SelectionResult:
    """Row selection: column selection applied to ``A.T``.

    Errors are those of ``A.T``, i.e. ``||A - A R^+ R||``.
    """
    A = as_matrix(A)
    return select_columns(A.T, k, strategy, seed, kind, budget, tol)


def truncated_svd_error(A, k: int, kind="fro") -> float:
    """``||A - A_k||``, the lower bound for any ``k``-column selection."""
    A = as_matrix(A)
    return norm(A - truncated_svd(A, k).reconstruct(), kind)
