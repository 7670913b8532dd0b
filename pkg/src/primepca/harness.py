"""Configuration-driven Monte Carlo experiment runner.

An :class:`ExperimentConfig` bundles a data model, a missingness mechanism,
and a list of methods.  Every repetition derives its own random streams from
``(base_seed, rep)``, so results are independent of execution order and of
the number of worker threads.  Per-repetition failures (e.g. an empty
screening set) are recorded and excluded from the aggregates rather than
aborting the batch.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .baselines import ImputeConfig, hard_impute, oracle_lambda, soft_impute
from .data import PartialMatrix
from .estimators import (
    PrimeConfig,
    TrajectoryReport,
    init_estimator,
    prime_pca,
)
from .linalg import sin_theta_loss
from .simulate import (
    DataModelSpec,
    MissingnessSpec,
    data_model_from_dict,
    data_model_to_dict,
    generate_data,
    generate_mask,
    missingness_from_dict,
    missingness_to_dict,
    rng_split,
)

__all__ = [
    "PrimePcaMethod",
    "InitMethod",
    "HardImputeMethod",
    "SoftImputeOracleMethod",
    "ExperimentConfig",
    "MethodReport",
    "ExperimentReport",
    "run_experiment",
    "experiment_from_dict",
    "experiment_to_dict",
    "write_report_csv",
    "write_trace_csv",
    "write_metadata",
]


@dataclass(frozen=True)
class PrimePcaMethod:
    """Iterative refinement started from the co-observation initializer."""

    k: int | None = None  # defaults to the data model's k
    n_iter: int = 2000
    sigma_star: float = 3.0
    kappa_star: float = 1e-6
    center: bool = False
    label: str = "primepca"


@dataclass(frozen=True)
class InitMethod:
    """The one-shot co-observation-weighted spectral estimator."""

    k: int | None = None
    label: str = "init"


@dataclass(frozen=True)
class HardImputeMethod:
    k: int | None = None
    thresh: float = 1e-5
    max_iter: int = 100
    label: str = "hard_impute"


@dataclass(frozen=True)
class SoftImputeOracleMethod:
    """Soft completion with per-repetition shrinkage chosen against the truth."""

    k: int | None = None
    grid: tuple | None = None  # None -> default log-spaced grid
    rank_max: int = 20
    thresh: float = 1e-5
    max_iter: int = 100
    label: str = "soft_impute_oracle"


MethodSpec = Union[PrimePcaMethod, InitMethod, HardImputeMethod, SoftImputeOracleMethod]


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataModelSpec
    missingness: MissingnessSpec
    methods: tuple
    reps: int = 20
    base_seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError(f"method labels must be unique, got {labels}")


@dataclass
class MethodReport:
    """Per-method results across repetitions.

    ``losses`` holds NaN for failed repetitions; ``failures`` maps the
    repetition index to the error message.  Aggregates are computed from the
    recorded per-repetition losses of the successful runs.
    """

    label: str
    k: int
    losses: np.ndarray
    runtimes: np.ndarray
    failures: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)

    @property
    def n_failed(self) -> int:
        return len(self.failures)

    @property
    def mean_loss(self) -> float:
        ok = self.losses[~np.isnan(self.losses)]
        return float(ok.mean()) if ok.size else math.nan

    @property
    def se_loss(self) -> float:
        ok = self.losses[~np.isnan(self.losses)]
        if ok.size < 2:
            return math.nan
        return float(ok.std(ddof=1) / np.sqrt(ok.size))


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    methods: list

    def method(self, label: str) -> MethodReport:
        for m in self.methods:
            if m.label == label:
                return m
        raise KeyError(f"no method labelled {label!r} in report")


def _method_k(method: MethodSpec, data: DataModelSpec) -> int:
    k = method.k if method.k is not None else data.k
    if not 1 <= k <= data.d:
        raise ValueError(f"method {method.label!r}: k={k} outside [1, {data.d}]")
    return k


def _run_method(method: MethodSpec, pm: PartialMatrix, truth: np.ndarray, k: int):
    """Returns (loss, trajectory-or-None)."""
    if isinstance(method, InitMethod):
        frame, _ = init_estimator(pm, k)
        return sin_theta_loss(frame, truth), None
    if isinstance(method, PrimePcaMethod):
        v0, _ = init_estimator(pm, k)
        cfg = PrimeConfig(
            k=k,
            n_iter=method.n_iter,
            sigma_star=method.sigma_star,
            kappa_star=method.kappa_star,
            center=method.center,
        )
        report = prime_pca(cfg, v0, pm, truth=truth)
        return float(report.losses[-1]), report
    if isinstance(method, HardImputeMethod):
        cfg = ImputeConfig(thresh=method.thresh, max_iter=method.max_iter)
        _, frame = hard_impute(pm, k, cfg)
        return sin_theta_loss(frame, truth), None
    if isinstance(method, SoftImputeOracleMethod):
        cfg = ImputeConfig(
            rank_max=method.rank_max,
            thresh=method.thresh,
            max_iter=method.max_iter,
        )
        grid = None if method.grid is None else np.asarray(method.grid, dtype=float)
        _, loss = oracle_lambda(pm, truth, k, grid=grid, cfg=cfg)
        return loss, None
    raise TypeError(f"unknown method spec {method!r}")


def _run_rep(cfg: ExperimentConfig, rep: int):
    """One repetition: fresh data and mask, then every method on them."""
    y, v_true, _ = generate_data(cfg.data, rng_split(cfg.base_seed, rep, 0))
    mask = generate_mask(
        cfg.missingness, cfg.data.n, cfg.data.d, rng_split(cfg.base_seed, rep, 1)
    )
    pm = PartialMatrix.from_dense(y, mask)
    out = []
    for method in cfg.methods:
        k = _method_k(method, cfg.data)
        truth = v_true[:, :k]
        start = time.perf_counter()
        try:
            loss, traj = _run_method(method, pm, truth, k)
            out.append((method.label, loss, time.perf_counter() - start, None, traj))
        except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            out.append(
                (method.label, math.nan, time.perf_counter() - start, str(exc), None)
            )
    return rep, out


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Run all repetitions, optionally across a thread pool.

    Aggregation is keyed by repetition index, so any thread count produces
    identical numbers.
    """
    reports = {
        m.label: MethodReport(
            label=m.label,
            k=_method_k(m, cfg.data),
            losses=np.full(cfg.reps, math.nan),
            runtimes=np.full(cfg.reps, math.nan),
        )
        for m in cfg.methods
    }
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: _run_rep(cfg, r), range(cfg.reps)))
    else:
        results = [_run_rep(cfg, r) for r in range(cfg.reps)]
    for rep, method_results in results:
        for label, loss, runtime, error, traj in method_results:
            mr = reports[label]
            mr.losses[rep] = loss
            mr.runtimes[rep] = runtime
            if error is not None:
                mr.failures[rep] = error
            if traj is not None:
                mr.trajectories[rep] = traj
    return ExperimentReport(config=cfg, methods=[reports[m.label] for m in cfg.methods])


# ---------------------------------------------------------------------------
# JSON config schema
# ---------------------------------------------------------------------------

_METHOD_PARSERS = {
    "primepca": PrimePcaMethod,
    "init": InitMethod,
    "hard_impute": HardImputeMethod,
    "soft_impute_oracle": SoftImputeOracleMethod,
}


def _method_from_dict(obj: dict) -> MethodSpec:
    obj = dict(obj)
    name = obj.pop("name", None)
    if name not in _METHOD_PARSERS:
        raise ValueError(
            f"unknown method name {name!r}; expected one of {sorted(_METHOD_PARSERS)}"
        )
    cls = _METHOD_PARSERS[name]
    obj.setdefault("label", name)
    if name == "soft_impute_oracle" and obj.get("grid") is not None:
        obj["grid"] = tuple(float(x) for x in obj["grid"])
    try:
        return cls(**obj)
    except TypeError as exc:
        raise ValueError(f"bad parameters for method {name!r}: {exc}") from None


def _method_to_dict(method: MethodSpec) -> dict:
    for name, cls in _METHOD_PARSERS.items():
        if isinstance(method, cls):
            out = {"name": name}
            for f in method.__dataclass_fields__:
                val = getattr(method, f)
                if isinstance(val, tuple):
                    val = list(val)
                out[f] = val
            return out
    raise TypeError(f"unknown method spec {method!r}")


def experiment_from_dict(obj: dict) -> ExperimentConfig:
    try:
        data = data_model_from_dict(obj["data"])
        missingness = missingness_from_dict(obj["missingness"])
        methods = tuple(_method_from_dict(m) for m in obj["methods"])
    except KeyError as exc:
        raise ValueError(f"experiment config is missing key {exc}") from None
    return ExperimentConfig(
        data=data,
        missingness=missingness,
        methods=methods,
        reps=int(obj.get("reps", 20)),
        base_seed=int(obj.get("base_seed", 0)),
        out_dir=obj.get("out_dir"),
    )


def experiment_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "data": data_model_to_dict(cfg.data),
        "missingness": missingness_to_dict(cfg.missingness),
        "methods": [_method_to_dict(m) for m in cfg.methods],
        "reps": cfg.reps,
        "base_seed": cfg.base_seed,
        "out_dir": cfg.out_dir,
    }


# ---------------------------------------------------------------------------
# Report files: CSV tables plus a JSON sidecar
# ---------------------------------------------------------------------------


def write_report_csv(report: ExperimentReport, path) -> None:
    """One row per (method, rep): loss empty for failed repetitions."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "rep", "loss", "runtime_s"])
        for mr in report.methods:
            for rep in range(report.config.reps):
                loss = mr.losses[rep]
                writer.writerow(
                    [
                        mr.label,
                        rep,
                        "" if math.isnan(loss) else f"{loss:.17g}",
                        f"{mr.runtimes[rep]:.6f}",
                    ]
                )


def write_trace_csv(report: ExperimentReport, path) -> None:
    """Per-iteration trajectories of the iterative methods."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "rep", "iter", "step_change", "loss_vs_truth", "screened_rows"]
        )
        for mr in report.methods:
            for rep in sorted(mr.trajectories):
                traj: TrajectoryReport = mr.trajectories[rep]
                for t in range(traj.iterations):
                    loss = "" if traj.losses is None else f"{traj.losses[t]:.17g}"
                    writer.writerow(
                        [
                            mr.label,
                            rep,
                            t + 1,
                            f"{traj.step_changes[t]:.17g}",
                            loss,
                            traj.screened_sizes[t],
                        ]
                    )


def write_metadata(report: ExperimentReport, path, wall_time_s: float | None = None) -> None:
    meta = {
        "config": experiment_to_dict(report.config),
        "methods": {
            mr.label: {
                "k": mr.k,
                "mean_loss": mr.mean_loss,
                "se_loss": mr.se_loss,
                "n_failed": mr.n_failed,
                "failures": {str(r): msg for r, msg in sorted(mr.failures.items())},
                "total_runtime_s": float(np.nansum(mr.runtimes)),
            }
            for mr in report.methods
        },
    }
    if wall_time_s is not None:
        meta["wall_time_s"] = wall_time_s
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_files(
    report: ExperimentReport, out_dir, wall_time_s: float | None = None
) -> dict:
    """Write report.csv / trace.csv / metadata.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.csv",
        "trace": out / "trace.csv",
        "metadata": out / "metadata.json",
    }
    write_report_csv(report, paths["report"])
    write_trace_csv(report, paths["trace"])
    write_metadata(report, paths["metadata"], wall_time_s)
    return paths
