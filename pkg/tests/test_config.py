import pytest
from hypothesis import given
from hypothesis import strategies as st

from uwloc.config import DEFAULTS, VALID_KEYS, coerce, deviations, parse_config_text, resolve_config
from uwloc.errors import ConfigTypeError, UnknownKey


def test_defaults():
    flat = DEFAULTS.flat()
    assert flat["selection.epsilon"] == 0.02
    assert flat["selection.components"] == 3
    assert flat["train.lr_step_one"] == 1e-4 and flat["train.lr_step_two"] == 5e-5
    assert flat["train.batch_size"] == 64 and flat["train.epochs"] == 100
    assert flat["split.modulus"] == 2
    assert deviations(DEFAULTS) == []


def test_unknown_key_suggests_nearest():
    with pytest.raises(UnknownKey) as info:
        parse_config_text("selecton.eps = 0.1")
    assert info.value.suggestion == "selection.epsilon"
    assert "did you mean 'selection.epsilon'" in str(info.value)


def test_sections_and_comments():
    values = parse_config_text("# comment\n[train]\nepochs = 5  # short\nmodel.variant = structure1\n")
    assert values == {"train.epochs": 5, "model.variant": "structure1"}


def test_precedence_flags_over_file():
    cfg = resolve_config("train.seed = 3\ntrain.epochs = 7\n", {"train.seed": "9"})
    assert cfg.train.seed == 9 and cfg.train.epochs == 7
    assert {k for k, _, _ in deviations(cfg)} == {"train.seed", "train.epochs"}


@pytest.mark.parametrize("key,raw", [("train.epochs", "ten"), ("model.with_fs", "maybe"), ("train.seed", 1.5)])
def test_type_errors(key, raw):
    with pytest.raises(ConfigTypeError):
        coerce(key, raw)


def test_tuple_and_bool_parsing():
    assert coerce("model.mlp_widths", "32, 8") == (32, 8)
    assert coerce("synth.receivers", "R1,R2") == ("R1", "R2")
    assert coerce("model.with_fs", "no") is False


@given(st.sampled_from(VALID_KEYS))
def test_text_roundtrip(key):
    cfg = resolve_config(DEFAULTS.to_text())
    assert cfg.flat()[key] == DEFAULTS.flat()[key]
