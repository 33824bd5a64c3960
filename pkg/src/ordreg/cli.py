"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 unparseable
input, 3 dimension mismatch, 4 solver or generator failure.

Commands that write files also write a key=value manifest next to their
output. ``ordreg replay MANIFEST --out PATH`` re-runs the recorded command
(after checking the input digests) and reproduces the outputs byte for byte.
"""
from __future__ import annotations

import argparse
import os
import shlex
import sys
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from . import __version__
from .core import DataSet, row_kendall
from .csvio import read_manifest, read_matrix, sha256, write_manifest, write_matrix
from .errors import (
    AllRestartsDegenerate,
    DegenerateMatrix,
    DimensionMismatch,
    GenerationFailed,
    InsufficientData,
    NotAPermutation,
    ParseError,
)
from .solver import FitConfig, cross_validate_lambda, fit, predict
from .synth import ExperimentConfig, run_consistency_experiment

SEED_ENV = "ORDREG_SEED"

EXIT_USAGE, EXIT_PARSE, EXIT_DIMENSION, EXIT_SOLVER = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _join(values):
    return ",".join(repr(v) if isinstance(v, float) else str(v) for v in values)


def _manifest(command, argv, config, inputs):
    entries = {"ordreg_version": __version__, "command": command, "argv": shlex.join(argv)}
    entries.update({f"config.{k}": v for k, v in config.items()})
    for name, path in inputs.items():
        entries[f"input.{name}.path"] = str(path)
        entries[f"input.{name}.sha256"] = sha256(path)
    return entries


def _load_data(x_path, y_path) -> DataSet:
    X, Y = read_matrix(x_path), read_matrix(y_path)
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"{x_path} has {X.shape[0]} rows, {y_path} has {Y.shape[0]}")
    return DataSet(X, Y)


# --- commands -----------------------------------------------------------------

def cmd_fit(args):
    x_path, y_path = Path(args.x).resolve(), Path(args.y).resolve()
    data = _load_data(x_path, y_path)
    config = FitConfig(restarts=args.restarts, lam=args.lam, max_sweeps=args.max_sweeps, seed=args.seed)
    res = fit(data, config, n_jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "B.csv", res.B_hat.B)
    summary = {
        "objective_value": repr(res.objective.value),
        "concordant_count": res.objective.concordant_count,
        "normalizer": res.objective.normalizer,
        "penalized_value": repr(res.penalized),
        "lambda": repr(res.lam),
        "nonzeros": res.nnz,
        "chosen_restart": res.restart_index,
        "sweeps_per_restart": _join(o.sweeps for o in res.restarts),
        "sweep_cap_hit": _join(int(o.hit_cap) for o in res.restarts),
        "degenerate_restarts": _join(o.index for o in res.restarts if o.penalized is None),
    }
    write_manifest(out / "summary.txt", summary)
    argv = ["fit", str(x_path), str(y_path), "--lambda", repr(args.lam), "--restarts", str(args.restarts),
            "--max-sweeps", str(args.max_sweeps), "--seed", str(args.seed)]
    cfg = {"lambda": repr(args.lam), "restarts": args.restarts, "max_sweeps": args.max_sweeps, "seed": args.seed}
    write_manifest(out / "manifest.txt", _manifest("fit", argv, cfg, {"x": x_path, "y": y_path}))
    print(f"objective {res.objective.value:.6f} ({res.objective.concordant_count}/{res.objective.normalizer}), "
          f"restart {res.restart_index}, wrote {out}")


def row_ranks(S) -> np.ndarray:
    """Within-row ranks, 1 = largest; tied entries share the smallest rank of their block."""
    return rankdata(-np.asarray(S), method="min", axis=1)


def cmd_predict(args):
    b_path, x_path = Path(args.b).resolve(), Path(args.x).resolve()
    S = predict(read_matrix(b_path), read_matrix(x_path))
    out = row_ranks(S) if args.emit == "ranks" else S
    write_matrix(args.out, out)
    argv = ["predict", str(b_path), str(x_path), "--emit", args.emit]
    write_manifest(f"{args.out}.manifest.txt",
                   _manifest("predict", argv, {"emit": args.emit}, {"b": b_path, "x": x_path}))


def cmd_evaluate(args):
    P, T = read_matrix(args.pred), read_matrix(args.truth)
    taus = row_kendall(P, T)
    if args.verbose:
        for i, t in enumerate(taus, start=1):
            print(f"row {i}: {float(t)!r}")
    print(repr(float(np.mean(taus))))


def ratings_from_ordering(O) -> np.ndarray:
    """Map rank rows (a permutation of 1..q, 1 = most preferred) to ratings ``(q - rank + 1)/(q + 1)``."""
    O = np.asarray(O, dtype=np.float64)
    q = O.shape[1]
    expected = np.arange(1, q + 1)
    for i, row in enumerate(O, start=1):
        if not np.array_equal(np.sort(row), expected):
            raise NotAPermutation(f"row {i} is not a permutation of 1..{q}")
    return (q - O + 1) / (q + 1)


def cmd_ratings(args):
    in_path = Path(args.input).resolve()
    M = read_matrix(in_path)
    out = ratings_from_ordering(M) if args.mode == "to-ratings" else row_ranks(M)
    write_matrix(args.out, out)
    argv = ["ratings", str(in_path), "--mode", args.mode]
    write_manifest(f"{args.out}.manifest.txt", _manifest("ratings", argv, {"mode": args.mode}, {"input": in_path}))


def cmd_cv(args):
    data = _load_data(args.x, args.y)
    config = FitConfig(restarts=args.restarts, max_sweeps=args.max_sweeps, seed=args.seed)
    res = cross_validate_lambda(data, args.grid, folds=args.folds, config=config)
    for lam, score in res.scores.items():
        print(f"lambda {lam!r}: mean held-out tau {score!r}")
    print(f"best lambda {res.best_lambda!r}")


def cmd_simulate(args):
    fit_cfg = FitConfig(restarts=args.restarts, lam=args.lam, max_sweeps=args.max_sweeps, seed=args.seed)
    cfg = ExperimentConfig(p=args.p, q=args.q, density=args.density, noise=args.noise, utility=args.utility,
                           noise_ratio=args.noise_ratio, runs=args.runs, fit=fit_cfg, support=args.support)
    rows, runs = run_consistency_experiment(cfg, args.n_grid, n_jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["n", "noise", "utility", "median_m1", "median_m2"]
    selection = args.lam > 0
    if selection:
        header += ["median_sensitivity", "median_specificity"]
    lines = [",".join(header)]
    for r in rows:
        vals = [str(r.n), r.noise, r.utility, repr(r.median_m1), repr(r.median_m2)]
        if selection:
            vals += [repr(r.median_sensitivity), repr(r.median_specificity)]
        lines.append(",".join(vals))
    (out / "results.csv").write_text("\n".join(lines) + "\n")
    run_lines = ["n,run,m1,m2,sensitivity,specificity,objective"]
    run_lines += [",".join([str(m.n), str(m.run)] + [repr(float(v)) for v in
                           (m.m1, m.m2, m.sensitivity, m.specificity, m.objective)]) for m in runs]
    (out / "runs.csv").write_text("\n".join(run_lines) + "\n")
    config = {
        "n_grid": _join(args.n_grid), "p": args.p, "q": args.q, "noise": args.noise, "utility": args.utility,
        "density": repr(args.density), "noise_ratio": repr(args.noise_ratio), "support": args.support,
        "lambda": repr(args.lam), "runs": args.runs, "restarts": args.restarts,
        "max_sweeps": args.max_sweeps, "seed": args.seed,
    }
    argv = ["simulate"] + [a for k, v in config.items() for a in (f"--{k.replace('_', '-')}", str(v))]
    write_manifest(out / "manifest.txt", _manifest("simulate", argv, config, {}))
    for r in rows:
        print(f"n={r.n}: median M1 {r.median_m1:.4f}, median M2 {r.median_m2:.4f}")


def cmd_replay(args):
    entries = read_manifest(args.manifest)
    for key, value in entries.items():
        if key.startswith("input.") and key.endswith(".path"):
            digest = entries[key[:-len(".path")] + ".sha256"]
            if not Path(value).exists() or sha256(value) != digest:
                raise UsageError(f"input {value} is missing or differs from the recorded digest")
    if entries.get("ordreg_version") != __version__:
        print(f"warning: manifest written by ordreg {entries.get('ordreg_version')}, running {__version__}",
              file=sys.stderr)
    argv = shlex.split(entries["argv"]) + ["--out", args.out]
    return main(argv)


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ordreg", description="Order-based multivariate regression by rank-concordance maximization.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_flags(p, lam=True):
        if lam:
            p.add_argument("--lambda", dest="lam", type=float, default=0.0,
                           help="L0 penalty per non-zero entry, in concordant-pair units")
        p.add_argument("--restarts", type=int, default=10)
        p.add_argument("--max-sweeps", type=int, default=100)
        p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")

    p = sub.add_parser("fit", help="estimate B from predictor and response CSVs")
    p.add_argument("x")
    p.add_argument("y")
    solver_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="restarts run in this many processes")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score (or rank) responses for new instances")
    p.add_argument("b")
    p.add_argument("x")
    p.add_argument("--emit", choices=["scores", "ranks"], default="scores")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="average row-wise Kendall tau between two CSVs")
    p.add_argument("pred")
    p.add_argument("truth")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="synthetic consistency / variable-selection experiment")
    p.add_argument("--n-grid", type=_int_list, default=[2**k for k in range(3, 13)])
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--noise", choices=["E1", "E2", "E3"], default="E1")
    p.add_argument("--utility", choices=["U1", "U2", "U3"], default="U2")
    p.add_argument("--density", type=float, default=0.75)
    p.add_argument("--noise-ratio", type=float, default=0.2)
    p.add_argument("--support", choices=["all", "free"], default="all",
                   help="where the non-zeros of B* are drawn before canonicalization")
    p.add_argument("--runs", type=int, default=10)
    solver_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ratings", help="convert preference orderings to ratings, or ratings to ranks")
    p.add_argument("input")
    p.add_argument("--mode", choices=["to-ratings", "to-ranks"], default="to-ratings")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ratings)

    p = sub.add_parser("cv", help="choose the L0 penalty by k-fold cross-validation")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--grid", type=_float_list, required=True)
    p.add_argument("--folds", type=int, default=5)
    solver_flags(p, lam=False)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if args.command == "cv" and not args.grid:
            raise UsageError("--grid must list at least one value")
        result = args.func(args)
        return result or 0
    except UsageError as exc:
        print(f"ordreg: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, NotAPermutation) as exc:
        print(f"ordreg: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionMismatch as exc:
        print(f"ordreg: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (AllRestartsDegenerate, DegenerateMatrix, GenerationFailed, InsufficientData) as exc:
        print(f"ordreg: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"ordreg: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
