import json

import pytest

from uwloc.cli import EXIT_ARTIFACT, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main

FAST = """\
[model]
variant = structure2
leaky_slope = 0.2
[train]
lr_step_one = 5e-3
lr_step_two = 1e-3
epochs = 1
batch_size = 32
[synth]
duration_s = 600
"""


def test_describe_without_fs(capsys):
    assert main(["describe", "--without-fs", "--width", "750", "--model", "plan"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "n_Conv1D: 738" in out and "k_Conv1D: 13" in out and "n_Dense1: 24843" in out


def test_describe_layer_table(capsys, tmp_path):
    assert main(["describe", "--width", "121", "--model", "localizer", "--workdir", str(tmp_path / "w")]) == 0
    out = capsys.readouterr().out
    assert "head.dense_1" in out and "(507, 256)" not in out
    assert "total parameters:" in out


def test_unknown_config_key_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("selecton.eps = 0.1\n")
    assert main(["describe", "--config", str(cfg), "--model", "plan"]) == EXIT_CONFIG
    assert "selection.epsilon" in capsys.readouterr().err


def test_missing_upstream_artifact(tmp_path):
    assert main(["select", "--workdir", str(tmp_path)]) == EXIT_ARTIFACT
    assert main(["train-localizer", "--workdir", str(tmp_path)]) == EXIT_ARTIFACT


def test_bad_kernel_width_is_config_error(tmp_path):
    assert main(["describe", "--width", "50", "--model", "plan", "--workdir", str(tmp_path)]) == EXIT_CONFIG


def test_gradcheck_tolerance_failure(capsys):
    assert main(["gradcheck", "--variant", "structure2", "--width", "116", "--tol", "1e-30"]) == EXIT_NUMERICAL
    out = capsys.readouterr().out
    assert out.count("FAIL") >= 1 and "Conv1D" in out


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "fast.cfg"
    cfg.write_text(FAST)
    wd = root / "w"
    common = ["--config", str(cfg), "--workdir", str(wd), "--seed", "1"]
    codes = {cmd: main([cmd] + common) for cmd in
             ["synth", "preprocess", "select", "train-cae", "train-localizer",
              "train-supervised", "evaluate", "report"]}
    return wd, codes, common


def test_pipeline_runs(pipeline):
    wd, codes, _ = pipeline
    assert set(codes.values()) == {EXIT_OK}
    for name in ["selection.csv", "selected.idx", "loadings.svg", "cae.uwnn", "localizer.uwnn",
                 "supervised.uwnn", "evaluation.csv", "report.csv", "summary.json", "predictions.svg"]:
        assert (wd / name).exists(), name
    manifest = json.loads((wd / "manifest.json").read_text())
    assert "paths.workdir" not in manifest["config"]
    assert set(manifest["commands"]) == set(codes)


def test_tampered_artifact_detected(pipeline):
    wd, _, common = pipeline
    p = wd / "selected.idx"
    original = p.read_bytes()
    try:
        p.write_bytes(original + b"\x00")
        assert main(["train-cae"] + common) == EXIT_ARTIFACT
    finally:
        p.write_bytes(original)
