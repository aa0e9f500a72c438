"""``curlab`` command-line interface.

Subcommands ``decompose``, ``check``, ``select`` and ``verify``. Reports are
JSON on standard output; short human-readable summaries go to standard error.
Row and column indices are 1-based on the command line and in reports.

Exit codes: 0 success, 2 usage or invalid configuration, 3 unreadable or
malformed matrix file, 4 SVD failure or overflow, 5 exhaustive-search budget exceeded,
6 index out of bounds.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import cssp, cur, matcore, verify
from .matio import MatrixParseError, load_matrix
from .report import dumps, make_report, one_based

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NUMERIC = 4
EXIT_BUDGET = 5
EXIT_INDEX = 6


class UsageError(Exception):
    pass


def _index_list(text: str) -> list[int]:
    """Parse ``"1,3,3"`` into 0-based indices ``[0, 2, 2]``."""
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("index list is empty")
    bad = [v for v in values if v < 1]
    if bad:
        # report with the 1-based value the user typed
        raise cur.IndexOutOfBoundsError(f"indices are 1-based; got {bad[0]}")
    return [v - 1 for v in values]


def _norm_kind(text: str):
    if text in ("fro", "spectral"):
        return text
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"norm must be fro, spectral or a Schatten p, got {text!r}")
    if p < 1:
        raise argparse.ArgumentTypeError("Schatten p must be >= 1")
    return p


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _add_matrix_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("file", help="matrix file (.csv or .mtx)")
    p.add_argument("--format", choices=("csv", "mtx"), help="override format detection")
    p.add_argument("--tol", type=_positive_float, default=matcore.DEFAULT_TOL,
                   help="relative rank / equality tolerance (default %(default)g)")


def _add_selection_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rows", type=_index_list, help="1-based row indices, e.g. 1,2,2")
    p.add_argument("--cols", type=_index_list, help="1-based column indices")
    p.add_argument("--k", type=int, help="select k rows and k columns automatically instead")
    p.add_argument("--strategy", choices=[s.value for s in cssp.Strategy], default="greedy",
                   help="selection strategy used with --k")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--output", "-o", help="write the JSON report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="CUR factors and approximations for given rows/columns")
    _add_matrix_args(p)
    _add_selection_args(p)
    p.add_argument("--mode", choices=("exact", "project", "both"), default="both")

    p = sub.add_parser("check", help="evaluate the five exactness conditions")
    _add_matrix_args(p)
    _add_selection_args(p)

    p = sub.add_parser("select", help="column or row subset selection")
    _add_matrix_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--strategy", choices=[s.value for s in cssp.Strategy], default="greedy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--axis", choices=("cols", "rows"), default="cols")
    p.add_argument("--norm", type=_norm_kind, default="fro",
                   help="objective for exhaustive search: fro, spectral or a Schatten p")
    p.add_argument("--budget", type=int, default=cssp.DEFAULT_BUDGET,
                   help="maximum subsets for exhaustive search")

    p = sub.add_parser("verify", help="randomized experiments")
    p.add_argument("experiment", choices=("sweep", "open-question"))
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-rows", type=int, default=15)
    p.add_argument("--max-cols", type=int, default=15)
    p.add_argument("--max-rank", type=int, default=5)
    p.add_argument("--repeat-prob", type=float, default=0.2)
    p.add_argument("--workers", type=int, default=1)
    return parser


def _selection(args, A: np.ndarray) -> tuple[list[int], list[int]]:
    explicit = args.rows is not None or args.cols is not None
    if explicit and args.k is not None:
        raise UsageError("--k conflicts with --rows/--cols")
    if args.k is not None:
        rows = cssp.select_rows(A, args.k, args.strategy, args.seed, tol=args.tol).J
        cols = cssp.select_columns(A, args.k, args.strategy, args.seed, tol=args.tol).J
        return list(rows), list(cols)
    if args.rows is None or args.cols is None:
        raise UsageError("give both --rows and --cols, or --k")
    for label, idx, bound in (("row", args.rows, A.shape[0]), ("column", args.cols, A.shape[1])):
        bad = [i + 1 for i in idx if i >= bound]
        if bad:
            raise cur.IndexOutOfBoundsError(f"{label} index {bad[0]} exceeds {bound}")
    return args.rows, args.cols


def _matrix_inputs(args, I, J) -> dict:
    return {
        "file": args.file,
        "format": args.format,
        "tol": args.tol,
        "rows": one_based(I),
        "cols": one_based(J),
        "k": args.k,
        "strategy": args.strategy if args.k is not None else None,
        "seed": args.seed,
    }


def _residuals(A, approx) -> dict:
    E = A - approx
    return {"frobenius": matcore.norm(E, "fro"), "spectral": matcore.norm(E, "spectral")}


def cmd_decompose(args) -> tuple[dict, str]:
    A = load_matrix(args.file, args.format)
    I, J = _selection(args, A)
    res = cur.cur_exact(A, I, J, args.tol)
    f = res.factors
    results = {
        "shape": list(A.shape),
        "I": one_based(f.I),
        "J": one_based(f.J),
        "C": f.C,
        "U": f.U,
        "R": f.R,
        "exact": res.exact,
        "ranks": dict(zip(("A", "C", "U", "R"),
                          (matcore.numerical_rank(M, args.tol) for M in (A, f.C, f.U, f.R)))),
    }
    if args.mode in ("exact", "both"):
        results["cur"] = {
            "mixing": cur.mixing_u_dagger(f, args.tol),
            "approx": res.approx,
            "residual": _residuals(A, res.approx),
        }
    if args.mode in ("project", "both"):
        Z = cur.mixing_optimal(A, f, args.tol)
        approx = f.C @ Z @ f.R
        results["projection"] = {
            "mixing": Z,
            "approx": approx,
            "residual": _residuals(A, approx),
        }
    inputs = {**_matrix_inputs(args, I, J), "mode": args.mode}
    summary = f"exact={res.exact}"
    for key in ("cur", "projection"):
        if key in results:
            summary += f" {key}_residual_fro={results[key]['residual']['frobenius']:.6g}"
    return make_report("decompose", inputs, results), summary


def cmd_check(args) -> tuple[dict, str]:
    A = load_matrix(args.file, args.format)
    I, J = _selection(args, A)
    rep = cur.characterize(A, I, J, args.tol)
    results = {
        "shape": list(A.shape),
        "I": one_based(I),
        "J": one_based(J),
        "conditions": {name: v for name, v in zip(cur.CONDITIONS, rep.verdicts)},
        "residuals": {name: v for name, v in zip(cur.CONDITIONS, rep.residuals)},
        "ranks": rep.ranks._asdict(),
        "consistent": rep.consistent,
    }
    summary = " ".join(f"{n}={v}" for n, v in zip(cur.CONDITIONS, rep.verdicts))
    return make_report("check", _matrix_inputs(args, I, J), results), summary


def cmd_select(args) -> tuple[dict, str]:
    A = load_matrix(args.file, args.format)
    fn = cssp.select_columns if args.axis == "cols" else cssp.select_rows
    sel = fn(A, args.k, args.strategy, args.seed, args.norm, args.budget, args.tol)
    results = {
        "indices": one_based(sel.J),
        "error_frobenius": sel.error_frobenius,
        "error_spectral": sel.error_spectral,
        "subsets_evaluated": sel.subsets_evaluated,
    }
    inputs = {
        "file": args.file, "format": args.format, "tol": args.tol, "k": args.k,
        "strategy": args.strategy, "seed": args.seed, "axis": args.axis,
        "norm": args.norm, "budget": args.budget,
    }
    summary = f"{args.axis}={results['indices']} error_fro={sel.error_frobenius:.6g}"
    return make_report("select", inputs, results), summary


def _external_witness(w: dict) -> dict:
    return {**w, "I": one_based(w["I"]), "J": one_based(w["J"])}


def cmd_verify(args) -> tuple[dict, str]:
    cfg = verify.SweepConfig(
        trials=args.trials, max_rows=args.max_rows, max_cols=args.max_cols,
        max_rank=args.max_rank, repeat_prob=args.repeat_prob, tol=args.tol, seed=args.seed,
    )
    if args.workers < 1:
        raise ValueError("workers must be >= 1")
    if args.experiment == "sweep":
        rep = verify.equivalence_sweep(cfg, workers=args.workers).to_dict()
        rep["agreement_failures"] = [_external_witness(w) for w in rep["agreement_failures"]]
        rep["identity_failures"] = [_external_witness(w) for w in rep["identity_failures"]]
        summary = (f"trials={rep['trials_run']} agreement_failures={len(rep['agreement_failures'])}"
                   f" identity_failures={len(rep['identity_failures'])}")
        command = "verify-sweep"
    else:
        rep = verify.open_question_experiment(cfg, workers=args.workers).to_dict()
        rep["counterexamples"] = [_external_witness(w) for w in rep["counterexamples"]]
        summary = (f"trials={rep['trials_run']} premise={rep['premise_count']}"
                   f" counterexamples={len(rep['counterexamples'])}")
        command = "verify-open-question"
    inputs = {**rep.pop("config"), "workers": args.workers}
    return make_report(command, inputs, rep), summary


COMMANDS = {"decompose": cmd_decompose, "check": cmd_check, "select": cmd_select,
            "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report, summary = COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except cur.IndexOutOfBoundsError as exc:
        print(f"error: index out of bounds: {exc}", file=sys.stderr)
        return EXIT_INDEX
    except (MatrixParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (matcore.SvdConvergenceError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except cssp.BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    text = dumps(report)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
