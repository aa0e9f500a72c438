"""Randomized experiments over the CUR characterization.

Every trial draws from its own generator ``numpy.random.default_rng([seed,
trial])``, so a report depends only on the configuration, never on trial
order or on how trials are spread over worker processes.

Sweep trial distribution
    Half of the trials take rank-capturing selections (``k`` distinct generic
    rows and columns plus random extras); the other half under-sample the
    rows, the columns or both (fewer than ``k`` distinct indices). ``m``, ``n``
    are uniform on ``[lo, max_rows]`` / ``[lo, max_cols]`` and the planted rank
    ``k`` on ``[lo, min(max_rank, m, n)]``, with ``lo = 2`` for under-sampled
    trials (rank 1 cannot be under-sampled) and ``lo = 1`` otherwise;
    ``A = G @ H.T`` with standard normal ``G`` (m x k), ``H`` (n x k). With
    ``max_rank = 1`` every trial captures. Each index is then duplicated with
    probability ``repeat_prob`` and the set shuffled.

Open-question trial families (weights in ``OPEN_QUESTION_FAMILIES``)
    ``exact``        rank-capturing selection of a planted-rank matrix.
    ``undersampled`` planted-rank or full-rank matrix, fewer distinct rows or
                     columns than its rank.
    ``block_zero``   ``[[0, X], [Y, 0]]`` (rows/columns permuted) with ``I``,
                     ``J`` inside the zero block, so ``U = 0``.
    ``direct_sum``   ``diag(B1, B2)`` (permuted) with ``I``, ``J`` capturing
                     ``B1`` only; ``A != C U^+ R`` yet the premise holds.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, NamedTuple

import numpy as np

from .cur import CurFactors, characterize, extract, mixing_optimal, u_from_global
from .matcore import as_matrix, pinv, relative_gap

OPEN_QUESTION_FAMILIES = {
    "exact": 0.25,
    "undersampled": 0.45,
    "block_zero": 0.15,
    "direct_sum": 0.15,
}


@dataclass(frozen=True)
class SweepConfig:
    trials: int = 1000
    max_rows: int = 15
    max_cols: int = 15
    max_rank: int = 5
    repeat_prob: float = 0.2
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        for name in ("max_rows", "max_cols", "max_rank"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.max_rank > min(self.max_rows, self.max_cols):
            raise ValueError("max_rank must not exceed min(max_rows, max_cols)")
        if not 0.0 <= self.repeat_prob <= 1.0:
            raise ValueError(f"repeat_prob must lie in [0, 1], got {self.repeat_prob}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def _witness(seed, trial, A, I, J, **extra) -> dict:
    return {
        "seed": seed,
        "trial": trial,
        "shape": list(A.shape),
        "I": [int(i) for i in I],
        "J": [int(j) for j in J],
        "A": np.asarray(A).tolist(),
        **extra,
    }


def _planted(rng, m: int, n: int, k: int) -> np.ndarray:
    return rng.standard_normal((m, k)) @ rng.standard_normal((n, k)).T


def _capturing(rng, dim: int, k: int, max_size: int) -> list[int]:
    base = rng.choice(dim, size=k, replace=False).tolist()
    extra = int(rng.integers(0, max(0, max_size - k) + 1))
    return base + rng.integers(0, dim, size=extra).tolist()


def _undersampled(rng, dim: int, k: int, max_size: int) -> list[int]:
    d = int(rng.integers(1, k))  # distinct indices, d < k
    base = rng.choice(dim, size=d, replace=False).tolist()
    extra = int(rng.integers(0, max(0, max_size - d) + 1))
    return base + rng.choice(base, size=extra).tolist()


def _duplicate(rng, idx: list[int], repeat_prob: float) -> list[int]:
    out = []
    for i in idx:
        out.append(i)
        if rng.random() < repeat_prob:
            out.append(i)
    return [out[p] for p in rng.permutation(len(out))]


# ----------------------------------------------------------------------------
# equivalence sweep


@dataclass
class SweepReport:
    config: dict
    trials_run: int
    capturing_trials: int
    all_true: int
    all_false: int
    agreement_failures: list = field(default_factory=list)
    identity_failures: list = field(default_factory=list)
    max_residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _sweep_trial(cfg: SweepConfig, t: int) -> dict:
    rng = trial_rng(cfg.seed, t)
    # under-sampling needs a planted rank of at least 2
    capture = rng.random() < 0.5 or cfg.max_rank == 1
    lo = 1 if capture else 2
    m = int(rng.integers(lo, cfg.max_rows + 1))
    n = int(rng.integers(lo, cfg.max_cols + 1))
    k = int(rng.integers(lo, min(cfg.max_rank, m, n) + 1))
    A = _planted(rng, m, n, k)
    size = cfg.max_rank + 2
    if capture:
        I = _capturing(rng, m, k, size)
        J = _capturing(rng, n, k, size)
    else:
        side = int(rng.integers(3))  # 0: rows, 1: cols, 2: both
        I = (_undersampled if side in (0, 2) else _capturing)(rng, m, k, size)
        J = (_undersampled if side in (1, 2) else _capturing)(rng, n, k, size)
    I = _duplicate(rng, I, cfg.repeat_prob)
    J = _duplicate(rng, J, cfg.repeat_prob)

    rep = characterize(A, I, J, cfg.tol)
    f = extract(A, I, J)
    u_gap = relative_gap(u_from_global(A, f, cfg.tol), f.U)
    return {
        "trial": t,
        "A": A,
        "I": I,
        "J": J,
        "capture": capture,
        "verdicts": rep.verdicts,
        "residuals": rep.residuals,
        "u_gap": u_gap,
    }


def _run_trials(fn, trials: int, workers: int) -> list:
    if workers <= 1:
        return [fn(t) for t in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials), chunksize=max(1, trials // (4 * workers))))


def equivalence_sweep(cfg: SweepConfig, workers: int = 1) -> SweepReport:
    """Check that the five exactness conditions agree and that ``U = R A^+ C``
    on every randomized trial. Disagreements are recorded, not raised."""
    records = _run_trials(partial(_sweep_trial, cfg), cfg.trials, workers)
    report = SweepReport(
        config=asdict(cfg),
        trials_run=len(records),
        capturing_trials=sum(r["capture"] for r in records),
        all_true=sum(all(r["verdicts"]) for r in records),
        all_false=sum(not any(r["verdicts"]) for r in records),
    )
    true_res = [r["residuals"][1:4] for r in records if all(r["verdicts"])]
    false_res = [r["residuals"][1:4] for r in records if not any(r["verdicts"])]
    for r in records:
        if len(set(r["verdicts"])) != 1:
            report.agreement_failures.append(
                _witness(cfg.seed, r["trial"], r["A"], r["I"], r["J"],
                         verdicts=list(r["verdicts"]), residuals=list(r["residuals"]))
            )
        if r["u_gap"] > cfg.tol:
            report.identity_failures.append(
                _witness(cfg.seed, r["trial"], r["A"], r["I"], r["J"], residual=r["u_gap"])
            )
    report.max_residuals = {
        "u_identity": max(r["u_gap"] for r in records),
        "exact_when_true": max((max(x) for x in true_res), default=0.0),
        "min_gap_when_false": min((min(x) for x in false_res), default=None),
    }
    return report


# ----------------------------------------------------------------------------
# open question: does C U^+ R = C C^+ A R^+ R force U^+ = C^+ A R^+ ?


def udagger_matches(Ud: np.ndarray, M: np.ndarray, tol: float, scale: float = 1.0) -> bool:
    """Conclusion test ``||pinv(U) - pinv(C) A pinv(R)||_F <= tol * max(1, ||pinv(U)||_F, scale)``."""
    return _scaled_gap(M, Ud, scale) <= tol


def _scaled_gap(X, Y, scale: float) -> float:
    return float(np.linalg.norm(X - Y) / max(1.0, float(np.linalg.norm(Y)), scale))


class _Evaluation(NamedTuple):
    Ud: np.ndarray
    M: np.ndarray
    premise_gap: float
    conclusion_scale: float


def _oq_evaluate(A: np.ndarray, f: CurFactors, tol: float, scale_aware: bool = True) -> _Evaluation:
    """Compute both sides of premise and conclusion.

    With ``scale_aware`` each gap is normalized by the size of the factors that
    form the computed products (``||C|| ||U^+|| ||R||`` and ``||C^+|| ||A||
    ||R^+||``) as well as by the compared value, so rounding error amplified
    by an ill-conditioned ``C`` or ``R`` is not mistaken for a failure.
    """
    fro = np.linalg.norm
    Cd, Rd = pinv(f.C, tol), pinv(f.R, tol)
    Ud = pinv(f.U, tol)
    M = Cd @ A @ Rd
    cur = f.C @ Ud @ f.R
    proj = f.C @ M @ f.R
    if scale_aware:
        cr = float(fro(f.C) * fro(f.R))
        premise_scale = max(cr * float(fro(Ud)), cr * float(fro(M)))
        conclusion_scale = float(fro(Cd) * fro(A) * fro(Rd))
    else:
        premise_scale = conclusion_scale = 1.0
    return _Evaluation(Ud, M, _scaled_gap(cur, proj, premise_scale), conclusion_scale)


def _permute(rng, A, I, J):
    pr = rng.permutation(A.shape[0])
    pc = rng.permutation(A.shape[1])
    inv_r = np.argsort(pr)
    inv_c = np.argsort(pc)
    # new row p holds old row pr[p]; old row i now sits at inv_r[i]
    return A[pr][:, pc], [int(inv_r[i]) for i in I], [int(inv_c[j]) for j in J]


def _block_dims(rng, cap: int) -> tuple[int, int]:
    half = max(1, cap // 2)
    a, b = rng.integers(1, half + 1, size=2)
    return int(a), int(b)


def _oq_sample(rng, cfg: SweepConfig):
    names = list(OPEN_QUESTION_FAMILIES)
    weights = np.array([OPEN_QUESTION_FAMILIES[f] for f in names])
    family = names[int(rng.choice(len(names), p=weights / weights.sum()))]
    size = cfg.max_rank + 2

    if family in ("exact", "undersampled"):
        m = int(rng.integers(1, cfg.max_rows + 1))
        n = int(rng.integers(1, cfg.max_cols + 1))
        lo = 1
        if family == "undersampled":
            # under-sampling needs rank >= 2
            m, n, lo = max(m, 2), max(n, 2), 2
        p = min(m, n)
        if rng.random() < 0.3:
            k = p
            A = rng.standard_normal((m, n))
        else:
            k = int(rng.integers(lo, max(lo, min(cfg.max_rank, p)) + 1))
            A = _planted(rng, m, n, k)
        if family == "exact":
            I = _capturing(rng, m, k, max(size, k))
            J = _capturing(rng, n, k, max(size, k))
        else:
            side = int(rng.integers(3))
            I = (_undersampled if side in (0, 2) else _capturing)(rng, m, k, size)
            J = (_undersampled if side in (1, 2) else _capturing)(rng, n, k, size)
        return family, A, I, J

    m1, m2 = _block_dims(rng, cfg.max_rows)
    n1, n2 = _block_dims(rng, cfg.max_cols)
    A = np.zeros((m1 + m2, n1 + n2))
    if family == "block_zero":
        A[:m1, n1:] = rng.standard_normal((m1, n2))
        A[m1:, :n1] = rng.standard_normal((m2, n1))
        I = rng.integers(0, m1, size=int(rng.integers(1, m1 + 1))).tolist()
        J = rng.integers(0, n1, size=int(rng.integers(1, n1 + 1))).tolist()
    else:  # direct_sum
        k1 = int(rng.integers(1, min(m1, n1, cfg.max_rank) + 1))
        k2 = int(rng.integers(1, min(m2, n2, cfg.max_rank) + 1))
        A[:m1, :n1] = _planted(rng, m1, n1, k1)
        A[m1:, n1:] = _planted(rng, m2, n2, k2)
        I = _capturing(rng, m1, k1, max(size, k1))
        J = _capturing(rng, n1, k1, max(size, k1))
    A, I, J = _permute(rng, A, I, J)
    return family, A, I, J


def _oq_trial(cfg: SweepConfig, t: int, conclusion: Callable | None = None,
              scale_aware: bool = True) -> dict:
    rng = trial_rng(cfg.seed, t)
    family, A, I, J = _oq_sample(rng, cfg)
    I = _duplicate(rng, I, cfg.repeat_prob)
    J = _duplicate(rng, J, cfg.repeat_prob)
    f = extract(A, I, J)
    ev = _oq_evaluate(A, f, cfg.tol, scale_aware)
    premise = ev.premise_gap <= cfg.tol
    rec = {"trial": t, "family": family, "premise": premise, "counterexample": None}
    if premise:
        exact = characterize(A, I, J, cfg.tol).rank_condition
        rec["exact"] = exact
        test = conclusion or udagger_matches
        if not test(ev.Ud, ev.M, cfg.tol, ev.conclusion_scale):
            rec["counterexample"] = _witness(
                cfg.seed, t, A, I, J, family=family, exact=exact,
                premise_residual=ev.premise_gap,
                conclusion_residual=_scaled_gap(ev.M, ev.Ud, ev.conclusion_scale),
            )
    return rec


@dataclass
class OpenQuestionReport:
    """Evidence only: counts and self-contained witnesses, no verdict field."""

    config: dict
    trials_run: int
    premise_count: int
    exact_premise_count: int
    nonexact_premise_count: int
    family_counts: dict
    counterexamples: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def open_question_experiment(cfg: SweepConfig, conclusion: Callable | None = None,
                             workers: int = 1, scale_aware: bool = True) -> OpenQuestionReport:
    """Whenever ``C U^+ R == C C^+ A R^+ R`` holds, test ``U^+ == C^+ A R^+``.

    Premise and conclusion share ``cfg.tol``. ``conclusion(Ud, M, tol, scale)
    -> bool`` replaces the conclusion test (see :func:`udagger_matches`); it
    must be picklable when ``workers > 1``. ``scale_aware=False`` falls back to
    plain ``max(1, ||Y||_F)`` normalization.
    """
    fn = partial(_oq_trial, cfg, conclusion=conclusion, scale_aware=scale_aware)
    records = _run_trials(fn, cfg.trials, workers)
    premised = [r for r in records if r["premise"]]
    return OpenQuestionReport(
        config={**asdict(cfg), "scale_aware": scale_aware},
        trials_run=len(records),
        premise_count=len(premised),
        exact_premise_count=sum(r["exact"] for r in premised),
        nonexact_premise_count=sum(not r["exact"] for r in premised),
        family_counts=dict(sorted(Counter(r["family"] for r in records).items())),
        counterexamples=[r["counterexample"] for r in records if r["counterexample"]],
    )


def open_question_case(A, I, J, tol: float = 1e-8, scale_aware: bool = True) -> tuple[bool, bool]:
    """``(premise, conclusion)`` for one selection: ``C U^+ R == C C^+ A R^+ R``
    and ``U^+ == C^+ A R^+``, both at ``tol``."""
    A = as_matrix(A)
    ev = _oq_evaluate(A, extract(A, I, J), tol, scale_aware)
    return ev.premise_gap <= tol, udagger_matches(ev.Ud, ev.M, tol, ev.conclusion_scale)


def reverify_counterexample(witness: dict, tol: float, conclusion: Callable | None = None,
                            scale_aware: bool = True) -> bool:
    """Recompute a stored counterexample from its witness alone; ``True`` when
    the premise still holds and the conclusion still fails."""
    A = as_matrix(witness["A"])
    f = extract(A, witness["I"], witness["J"])
    ev = _oq_evaluate(A, f, tol, scale_aware)
    test = conclusion or udagger_matches
    return ev.premise_gap <= tol and not test(ev.Ud, ev.M, tol, ev.conclusion_scale)


def reverify_sweep_failure(witness: dict, tol: float) -> dict:
    """Recompute verdicts and ``U = R A^+ C`` gap for a stored sweep witness."""
    A = as_matrix(witness["A"])
    rep = characterize(A, witness["I"], witness["J"], tol)
    f = extract(A, witness["I"], witness["J"])
    return {
        "verdicts": list(rep.verdicts),
        "u_gap": relative_gap(u_from_global(A, f, tol), f.U),
    }


# ----------------------------------------------------------------------------
# optimality of the mixing matrices


def _candidates(rng, Zstar: np.ndarray, trials: int):
    scale = max(1.0, float(np.abs(Zstar).max()))
    for i in range(trials):
        kind = i % 3
        if kind == 0:
            yield scale * rng.standard_normal(Zstar.shape)
        elif kind == 1:
            yield rng.uniform(-2.0, 3.0) * Zstar
        else:
            eps = 10.0 ** rng.uniform(-8, 0)
            yield Zstar + eps * scale * rng.standard_normal(Zstar.shape)


def optimality_margin(A, f: CurFactors, Z, tol: float = 1e-10) -> float:
    """``||A - C Z R||_F - ||A - C Z* R||_F`` with ``Z* = C^+ A R^+``."""
    A = as_matrix(A)
    Zstar = mixing_optimal(A, f, tol)
    best = np.linalg.norm(A - f.C @ Zstar @ f.R)
    return float(np.linalg.norm(A - f.C @ np.atleast_2d(Z) @ f.R) - best)


def optimality_check(A, f: CurFactors, trials: int = 100, seed: int = 0,
                     tol: float = 1e-10, slack: float = 1e-9) -> tuple[bool, float]:
    """Sample ``trials`` competitors ``Z`` (Gaussian, rescaled and perturbed
    copies of ``C^+ A R^+``) and return ``(passed, worst margin)``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    A = as_matrix(A)
    Zstar = mixing_optimal(A, f, tol)
    best = np.linalg.norm(A - f.C @ Zstar @ f.R)
    rng = np.random.default_rng(seed)
    worst = min(
        float(np.linalg.norm(A - f.C @ Z @ f.R) - best) for Z in _candidates(rng, Zstar, trials)
    )
    return worst >= -slack, worst


def projection_check(A, J, trials: int = 100, seed: int = 0,
                     tol: float = 1e-10, slack: float = 1e-9) -> tuple[bool, float]:
    """Same as :func:`optimality_check` for ``min_X ||A - C X||_F`` at ``X = C^+ A``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    A = as_matrix(A)
    C = A[:, list(J)]
    Xstar = pinv(C, tol) @ A
    best = np.linalg.norm(A - C @ Xstar)
    rng = np.random.default_rng(seed)
    worst = min(
        float(np.linalg.norm(A - C @ X) - best) for X in _candidates(rng, Xstar, trials)
    )
    return worst >= -slack, worst
