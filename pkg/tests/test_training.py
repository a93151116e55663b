import numpy as np
import pytest

from uwloc.dataset import build_step_one, build_step_two
from uwloc.errors import ConfigError, DivergenceDetected, DivisionByZero, ShapeMismatch
from uwloc.models import build_cae, plan_encoder
from uwloc.training import (
    ExperimentReport,
    TimingRun,
    TrainConfig,
    config_fingerprint,
    evaluate_mse,
    residual_report,
    timing_report,
    train_cae,
    train_localizer,
    train_supervised,
)

PLAN = plan_encoder(116, "structure2")


@pytest.fixture(scope="module")
def rows():
    rng = np.random.default_rng(0)
    return rng.uniform(size=(16, 116)), rng.uniform(0.05, 0.95, size=16)


@pytest.mark.parametrize("without,with_,res,pct", [
    (0.58, 0.48, 0.10, 17.24),
    (0.85, 0.47, 0.38, 44.71),
    (1.0, 1.0, 0.0, 0.0),
])
def test_residual_report(without, with_, res, pct):
    r, p = residual_report(without, with_)
    assert round(r, 2) == res and round(p, 2) == pct


def test_residual_zero_denominator():
    with pytest.raises(DivisionByZero):
        residual_report(0.0, 0.1)


def test_timing_reduction():
    (row,) = timing_report([TimingRun("step1", 10.0, 0.5)])
    assert row[3] == pytest.approx(95.0)


@pytest.mark.parametrize("kw", [dict(lr_step_one=-1), dict(epochs=0), dict(precision="f16")])
def test_bad_train_config(kw):
    with pytest.raises(ConfigError):
        TrainConfig(**kw)


def test_zero_learning_rate_keeps_weights(rows):
    X, _ = rows
    cfg = TrainConfig(lr_step_one=0.0, epochs=1, batch_size=8)
    res = train_cae(build_step_one(X), PLAN, cfg)
    fresh = build_cae(PLAN, seed=0)
    for n, v in fresh.store.params.items():
        assert np.array_equal(res.model.store.params[n], v)


def test_training_is_deterministic(tmp_path, rows):
    X, _ = rows
    cfg = TrainConfig(lr_step_one=1e-3, epochs=2, batch_size=8, seed=4)
    a = train_cae(build_step_one(X), PLAN, cfg, tmp_path / "a.uwnn")
    b = train_cae(build_step_one(X), PLAN, cfg, tmp_path / "b.uwnn")
    assert a.losses == b.losses and a.steps == 4
    assert (tmp_path / "a.uwnn").read_bytes() == (tmp_path / "b.uwnn").read_bytes()


def test_step_one_ignores_labels(tmp_path, rows):
    X, y = rows
    cfg = TrainConfig(lr_step_one=1e-3, epochs=1, batch_size=8)
    train_cae(build_step_one(X), PLAN, cfg, tmp_path / "cae.uwnn")
    poisoned = y.copy()
    poisoned[1::2] = np.nan
    two = build_step_two(X, poisoned, 2)  # test labels are NaN, train labels are not
    res = train_localizer(two, PLAN, tmp_path / "cae.uwnn", cfg)
    assert np.all(np.isfinite(res.losses))
    assert np.isnan(res.test_mse)


def test_localizer_keeps_frozen_encoder(tmp_path, rows):
    X, y = rows
    cfg = TrainConfig(lr_step_one=1e-3, lr_step_two=1e-3, epochs=1, batch_size=4)
    cae = train_cae(build_step_one(X), PLAN, cfg, tmp_path / "cae.uwnn")
    res = train_localizer(build_step_two(X, y, 2), PLAN, tmp_path / "cae.uwnn", cfg)
    for n in res.model.param_names("encoder"):
        assert np.array_equal(res.model.store.params[n], cae.model.store.params[n])
    sup = train_supervised(build_step_two(X, y, 2), PLAN, cfg)
    assert sup.test_mse >= 0 and sup.steps == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reported(rows):
    X, _ = rows
    bad = X.copy()
    bad[0, 0] = np.inf
    with pytest.raises(DivergenceDetected):
        train_cae(build_step_one(bad), PLAN, TrainConfig(epochs=1, batch_size=16))


def test_evaluate_length_check(rows):
    X, y = rows
    res = train_supervised(build_step_two(X, y, 2), PLAN, TrainConfig(epochs=1, max_steps=1))
    with pytest.raises(ShapeMismatch):
        evaluate_mse(res.model, X, y[:-1])


def test_experiment_report(tmp_path):
    rep = ExperimentReport({"R1": 0.48, "R2": 0.47}, {"R1": 0.58, "R2": 0.85},
                           fingerprint=config_fingerprint({"a": 1}), label_range_km=(1.0, 9.0))
    rows = rep.residual_rows()
    assert [round(p, 2) for _, _, p in rows] == [17.24, 44.71]
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0].endswith("framework_mse_km2,supervised_mse_km2")
    assert lines[1].startswith("R1,0.48,0.58,30.72")
    assert lines[-1].startswith("mean,0.475,0.715")
    assert config_fingerprint({"a": 1}) == config_fingerprint({"a": 1})
    assert len(rep.fingerprint) == 16
