import numpy as np
import pytest

from uwloc.errors import SizeTooLarge, ToneAboveNyquist
from uwloc.synth import (
    DEFAULT_TONES,
    SynthConfig,
    Tone,
    brute_force_feature_ranking,
    generate,
    generate_receivers,
    gram_eigen_oracle,
    parse_tones,
    planted_columns,
)


def test_default_preset_has_thirteen_tones():
    cfg = SynthConfig()
    assert len(cfg.tones) == 13
    assert planted_columns(cfg).tolist() == [f - 1 for f in DEFAULT_TONES]


def test_dense_preset():
    cfg = SynthConfig.dense(seed=4)
    assert len(cfg.tones) == 121 and cfg.seed == 4
    assert cfg.tones[0].frequency_hz == 40 and cfg.tones[-1].frequency_hz == 400


def test_text_roundtrip():
    cfg = SynthConfig(duration_s=30, tones=(Tone(50.0, 0.5, "shallow"), Tone(75.0)), seed=3)
    assert SynthConfig.from_text(cfg.to_text()) == cfg


def test_parse_tones_defaults():
    assert parse_tones("10, 20:2") == (Tone(10.0), Tone(20.0, 2.0))


def test_tone_above_nyquist():
    with pytest.raises(ToneAboveNyquist):
        generate(SynthConfig(sample_rate=500))


def test_generation_is_seeded():
    cfg = SynthConfig(duration_s=5, sample_rate=800, seed=2)
    a, la, _ = generate(cfg)
    b, lb, _ = generate(cfg)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(la, lb)
    assert la.size == 5 and np.all(np.diff(la) > 0)


def test_receivers_differ():
    recs = generate_receivers(SynthConfig(duration_s=4, sample_rate=800), ["R1", "R2"])
    assert not np.array_equal(recs["R1"][0].samples, recs["R2"][0].samples)
    assert np.array_equal(recs["R1"][1], recs["R2"][1])


def test_brute_force_ranking():
    rng = np.random.default_rng(0)
    y = rng.normal(size=50)
    X = np.column_stack([rng.normal(size=50), y + 0.1 * rng.normal(size=50), np.ones(50), -y])
    order, scores = brute_force_feature_ranking(X, y)
    assert order.tolist()[:2] == [3, 1]
    assert scores[2] == 0.0


@pytest.mark.parametrize("shape", [(8, 5), (5, 8), (20, 20)])
def test_oracle_is_an_svd(shape):
    X = np.random.default_rng(1).normal(size=shape)
    U, s, V = gram_eigen_oracle(X)
    np.testing.assert_allclose(U * s @ V.T, X, atol=1e-12)
    np.testing.assert_allclose(s, np.linalg.svd(X, compute_uv=False), rtol=1e-12)


def test_oracle_size_limit():
    with pytest.raises(SizeTooLarge):
        gram_eigen_oracle(np.ones((100, 70)))
