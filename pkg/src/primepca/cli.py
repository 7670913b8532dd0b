"""Command-line interface.

Subcommands::

    simulate   draw one dataset + mask from a config and write them as files
    fit        run one estimator on a stored partial matrix
    bench      run a Monte Carlo experiment config, write report/trace CSVs
    scores     per-row scores and covariance spectrum for a stored frame
    eval       subspace distances between two stored frames

Exit status: 0 on success, 2 for usage or malformed-config errors, 1 for
runtime failures (each with a diagnostic line on stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ImputeConfig, hard_impute, soft_impute
from .data import (
    DataFormatError,
    PartialMatrix,
    load_partial,
    save_partial,
)
from .estimators import (
    PrimeConfig,
    estimate_scores,
    init_estimator,
    prime_pca,
    reconstruct_covariance,
)
from .linalg import require_frame, sin_theta_loss, two_to_inf_distance
from .harness import experiment_from_dict, run_experiment, write_report_files
from .simulate import (
    data_model_from_dict,
    generate_data,
    generate_mask,
    missingness_from_dict,
    rng_split,
)


class UsageError(Exception):
    """Bad invocation or malformed configuration (exit status 2)."""


def write_matrix_csv(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in a:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    return a


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from None


def _cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    try:
        data_spec = data_model_from_dict(cfg["data"])
        miss_spec = missingness_from_dict(cfg["missingness"])
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad simulate config: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    y, v, u = generate_data(data_spec, rng_split(args.seed, 0))
    mask = generate_mask(miss_spec, data_spec.n, data_spec.d, rng_split(args.seed, 1))
    pm = PartialMatrix.from_dense(y, mask)
    write_matrix_csv(out / "y_full.csv", y)
    save_partial(pm, out / "observed.csv", "dense-csv")
    np.savetxt(out / "mask.csv", mask.astype(int), fmt="%d", delimiter=",")
    write_matrix_csv(out / "v_truth.csv", v)
    write_matrix_csv(out / "u_truth.csv", u)
    print(f"wrote dataset ({data_spec.n} x {data_spec.d}) to {out}")
    return 0


def _cmd_fit(args) -> int:
    pm = load_partial(args.input, args.format)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    k = args.k
    if args.method == "init":
        frame, _ = init_estimator(pm, k)
    elif args.method == "primepca":
        v0, _ = init_estimator(pm, k)
        cfg = PrimeConfig(
            k=k,
            n_iter=args.n_iter,
            sigma_star=args.sigma_star,
            kappa_star=args.kappa_star,
            center=args.center,
        )
        report = prime_pca(cfg, v0, pm)
        frame = report.frame
        print(f"stopped after {report.iterations} iterations ({report.stop_reason})")
    elif args.method == "soft_impute":
        cfg = ImputeConfig(
            lam=args.lam,
            rank_max=args.rank_max,
            thresh=args.thresh,
            max_iter=args.max_iter,
        )
        _, frame = soft_impute(pm, cfg, k)
    elif args.method == "hard_impute":
        cfg = ImputeConfig(thresh=args.thresh, max_iter=args.max_iter)
        _, frame = hard_impute(pm, k, cfg)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown method {args.method}")
    write_matrix_csv(out / "frame.csv", frame)
    scores = estimate_scores(frame, pm, k)
    write_matrix_csv(out / "scores.csv", scores.scores)
    np.savetxt(out / "scores_rows.txt", scores.rows + 1, fmt="%d")
    print(f"wrote frame.csv and scores.csv ({scores.rows.size} rows) to {out}")
    return 0


def _cmd_bench(args) -> int:
    cfg_dict = _load_json(args.config)
    if args.seed is not None:
        cfg_dict["base_seed"] = args.seed
    try:
        cfg = experiment_from_dict(cfg_dict)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad experiment config: {exc}") from None
    out_dir = args.out or cfg.out_dir
    if out_dir is None:
        raise UsageError("no output directory: pass --out or set out_dir in the config")
    start = time.perf_counter()
    report = run_experiment(cfg, threads=args.threads)
    wall = time.perf_counter() - start
    paths = write_report_files(report, out_dir, wall)
    for mr in report.methods:
        extra = f", {mr.n_failed} failed" if mr.n_failed else ""
        print(
            f"{mr.label}: mean loss {mr.mean_loss:.6f} "
            f"(se {mr.se_loss:.6f}, reps {cfg.reps}{extra})"
        )
    print(f"report written to {paths['report'].parent}")
    return 0


def _cmd_scores(args) -> int:
    pm = load_partial(args.input, args.format)
    frame = require_frame(load_matrix_csv(args.frame), "frame")
    if frame.shape[0] != pm.d:
        raise UsageError(
            f"frame has {frame.shape[0]} rows but the matrix has {pm.d} columns"
        )
    k = frame.shape[1]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scores = estimate_scores(frame, pm, k)
    _, spectrum = reconstruct_covariance(frame, scores, pm.n)
    write_matrix_csv(out / "scores.csv", scores.scores)
    np.savetxt(out / "scores_rows.txt", scores.rows + 1, fmt="%d")
    np.savetxt(out / "spectrum.csv", spectrum, fmt="%.17g", delimiter=",")
    print(
        f"wrote scores for {scores.rows.size} rows and top-{k} spectrum to {out}"
    )
    return 0


def _cmd_eval(args) -> int:
    a = require_frame(load_matrix_csv(args.frame_a), "frame-a")
    b = require_frame(load_matrix_csv(args.frame_b), "frame-b")
    print(f"sin_theta_loss {sin_theta_loss(a, b):.12e}")
    print(f"two_to_inf_distance {two_to_inf_distance(a, b):.12e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="primepca",
        description="PCA for heterogeneously missing data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a dataset + mask and write files")
    p.add_argument("--config", required=True, help="JSON with 'data' and 'missingness'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="run one estimator on a stored matrix")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--format", choices=["dense-csv", "coordinate-triplet"], default="dense-csv"
    )
    p.add_argument(
        "--method",
        choices=["primepca", "init", "soft_impute", "hard_impute"],
        default="primepca",
    )
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-iter", type=int, default=1000)
    p.add_argument("--sigma-star", type=float, default=3.0)
    p.add_argument("--kappa-star", type=float, default=1e-6)
    p.add_argument("--center", action="store_true")
    p.add_argument("--lam", type=float, default=0.0, help="soft_impute shrinkage")
    p.add_argument("--rank-max", type=int, default=20)
    p.add_argument("--thresh", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("bench", help="run a Monte Carlo experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override base_seed")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("scores", help="row scores + spectrum for a stored frame")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--format", choices=["dense-csv", "coordinate-triplet"], default="dense-csv"
    )
    p.add_argument("--frame", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_scores)

    p = sub.add_parser("eval", help="distances between two stored frames")
    p.add_argument("--frame-a", required=True)
    p.add_argument("--frame-b", required=True)
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:  # console-script wrapper
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
