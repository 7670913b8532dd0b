import csv
import json
import math

import numpy as np
import pytest

from primepca.harness import (
    ExperimentConfig,
    HardImputeMethod,
    InitMethod,
    PrimePcaMethod,
    SoftImputeOracleMethod,
    experiment_from_dict,
    experiment_to_dict,
    run_experiment,
    write_report_files,
)
from primepca.simulate import DataModelSpec, ExplicitProbs, Homogeneous


def small_config(**overrides):
    base = dict(
        data=DataModelSpec(n=60, d=16, k=2, sigma_u=(25.0, 9.0), noise=True),
        missingness=Homogeneous(0.5),
        methods=(
            InitMethod(),
            PrimePcaMethod(n_iter=5, kappa_star=0.0),
            HardImputeMethod(max_iter=5),
        ),
        reps=4,
        base_seed=123,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_init_only_fully_observed_noiseless_is_exact():
    cfg = ExperimentConfig(
        data=DataModelSpec(n=40, d=10, k=2, sigma_u=(16.0, 4.0), noise=False),
        missingness=Homogeneous(1.0),
        methods=(InitMethod(),),
        reps=1,
        base_seed=7,
    )
    report = run_experiment(cfg)
    assert report.method("init").losses[0] <= 1e-8


def test_thread_count_does_not_change_results():
    cfg = small_config()
    r1 = run_experiment(cfg, threads=1)
    r2 = run_experiment(cfg, threads=2)
    for m1, m2 in zip(r1.methods, r2.methods):
        assert np.array_equal(m1.losses, m2.losses)


def test_rerun_is_bit_reproducible():
    cfg = small_config()
    r1 = run_experiment(cfg)
    r2 = run_experiment(cfg)
    for m1, m2 in zip(r1.methods, r2.methods):
        assert np.array_equal(m1.losses, m2.losses)


def test_standard_error_matches_recomputation():
    report = run_experiment(small_config())
    for m in report.methods:
        ok = m.losses[~np.isnan(m.losses)]
        assert m.mean_loss == pytest.approx(ok.mean())
        assert m.se_loss == pytest.approx(ok.std(ddof=1) / np.sqrt(ok.size))


def test_per_rep_failures_are_recorded_not_fatal():
    # every row reveals exactly k entries, so screening rejects everything
    # and the iterative method fails; the one-shot initializer still runs
    probs = np.zeros((12, 8))
    probs[:, :2] = 1.0
    cfg = ExperimentConfig(
        data=DataModelSpec(n=12, d=8, k=2, sigma_u=(9.0, 4.0), noise=False),
        missingness=ExplicitProbs(probs),
        methods=(InitMethod(), PrimePcaMethod(n_iter=3)),
        reps=3,
        base_seed=1,
    )
    report = run_experiment(cfg)
    prime = report.method("primepca")
    assert prime.n_failed == 3
    assert all("iteration 1" in msg for msg in prime.failures.values())
    assert math.isnan(prime.mean_loss)
    init = report.method("init")
    assert init.n_failed == 0
    assert np.isfinite(init.losses).all()


def test_method_rank_defaults_to_data_rank_and_can_override():
    cfg = small_config(methods=(InitMethod(), InitMethod(k=1, label="init_k1")))
    report = run_experiment(cfg)
    assert report.method("init").k == 2
    assert report.method("init_k1").k == 1


def test_duplicate_labels_rejected():
    with pytest.raises(ValueError, match="unique"):
        small_config(methods=(InitMethod(), InitMethod()))


def test_config_json_round_trip():
    cfg = small_config(
        methods=(
            InitMethod(),
            PrimePcaMethod(n_iter=7, sigma_star=2.5, kappa_star=1e-9),
            SoftImputeOracleMethod(grid=(0.1, 1.0)),
        )
    )
    back = experiment_from_dict(experiment_to_dict(cfg))
    assert back == cfg


def test_config_rejects_unknown_method():
    obj = experiment_to_dict(small_config())
    obj["methods"][0]["name"] = "magic"
    with pytest.raises(ValueError, match="unknown method"):
        experiment_from_dict(obj)


def test_report_files(tmp_path):
    report = run_experiment(small_config(reps=2))
    paths = write_report_files(report, tmp_path / "out", wall_time_s=1.0)
    with open(paths["report"]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["method", "rep", "loss", "runtime_s"]
    assert len(rows) == 1 + 3 * 2  # header + methods x reps
    losses = {
        (r[0], int(r[1])): float(r[2]) for r in rows[1:] if r[2] != ""
    }
    assert losses[("init", 0)] == pytest.approx(report.method("init").losses[0])

    with open(paths["trace"]) as fh:
        trows = list(csv.reader(fh))
    assert trows[0] == [
        "method",
        "rep",
        "iter",
        "step_change",
        "loss_vs_truth",
        "screened_rows",
    ]
    prime_rows = [r for r in trows[1:] if r[0] == "primepca"]
    assert len(prime_rows) == 5 * 2  # n_iter x reps
    assert [int(r[2]) for r in prime_rows[:5]] == [1, 2, 3, 4, 5]

    meta = json.loads(paths["metadata"].read_text())
    assert meta["config"]["reps"] == 2
    assert "primepca" in meta["methods"]
    assert meta["methods"]["init"]["n_failed"] == 0
