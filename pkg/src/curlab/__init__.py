"""CUR (skeleton) decompositions of dense real matrices."""

from .cssp import (
    BudgetExceededError,
    SelectionResult,
    Strategy,
    cssp_error,
    exhaustive_cssp,
    leverage_scores,
    sampling_probabilities,
    select_columns,
    select_rows,
)
from .cur import (
    CharacterizationReport,
    CurFactors,
    IndexOutOfBoundsError,
    characterize,
    cur_exact,
    cur_projection,
    extract,
    mixing_optimal,
    mixing_u_dagger,
    mixing_udagger_identity,
    pinv_via_cur,
    projector_identities,
    u_from_global,
)
from .matcore import (
    DEFAULT_TOL,
    SvdConvergenceError,
    SvdFactors,
    norm,
    numerical_rank,
    pinv,
    svd,
    truncated_svd,
)

__version__ = "0.1.0"
