import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwloc.errors import DegenerateRange, EmptySignal, LabelLengthMismatch, OddFrameLength
from uwloc.spectral import (
    TimeSeries,
    apply_scale,
    build_feature_matrix,
    frame_signal,
    inverse_scale,
    inverse_scale_labels,
    magnitude_spectrum,
    min_max_scale,
)


def test_frames_drop_trailing_partial():
    ts = TimeSeries(np.arange(2500.0), 1000)
    frames = frame_signal(ts, 1.0)
    assert frames.shape == (2, 1000)
    assert frames[1, 0] == 1000.0


def test_signal_shorter_than_frame():
    with pytest.raises(EmptySignal):
        frame_signal(TimeSeries(np.ones(10), 100), 1.0)


@pytest.mark.parametrize("rate", [0, -5, 2.5])
def test_bad_sample_rate(rate):
    with pytest.raises(ValueError):
        TimeSeries(np.ones(4), rate)


@pytest.mark.parametrize("length,bin_", [(64, 1), (64, 32), (100, 17), (1500, 388)])
def test_tone_lands_on_its_column(length, bin_):
    n = np.arange(length)
    frame = np.cos(2 * np.pi * bin_ * n / length)
    mag = magnitude_spectrum(frame)
    assert mag.shape == (length // 2,)
    assert np.argmax(mag) == bin_ - 1
    expected = length if bin_ == length // 2 else length / 2
    assert mag[bin_ - 1] == pytest.approx(expected, rel=1e-9)


def test_spectrum_matches_direct_dft():
    rng = np.random.default_rng(0)
    frame = rng.normal(size=40)
    k = np.arange(1, 21)[:, None]
    direct = np.abs(np.exp(-2j * np.pi * k * np.arange(40) / 40) @ frame)
    np.testing.assert_allclose(magnitude_spectrum(frame), direct, rtol=1e-10, atol=1e-12)


def test_odd_frame_rejected():
    with pytest.raises(OddFrameLength):
        magnitude_spectrum(np.ones(33))


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_vector_scaling_bounds_and_inverse(values):
    v = np.array(values)
    scaled, lo, hi = min_max_scale(v)
    assert scaled.min() >= 0.0 and scaled.max() <= 1.0
    if hi > lo:
        np.testing.assert_allclose(inverse_scale(scaled, lo, hi), v, atol=1e-9 * max(1.0, hi - lo))


def test_constant_column_maps_to_zero():
    X = np.column_stack([np.arange(5.0), np.full(5, 3.0)])
    scaled, lo, hi = min_max_scale(X)
    assert np.all(scaled[:, 1] == 0.0)
    np.testing.assert_array_equal(apply_scale(X, lo, hi), scaled)


def test_degenerate_label_range():
    with pytest.raises(DegenerateRange):
        inverse_scale_labels(np.zeros(3), 2.0, 2.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.integers(1, 6).map(lambda h: 2 * h))
def test_feature_matrix_shape(n_frames, rate):
    rng = np.random.default_rng(n_frames)
    ts = TimeSeries(rng.normal(size=n_frames * rate + 1), rate)
    fm, labels = build_feature_matrix(ts, np.linspace(1, 2, n_frames))
    assert fm.values.shape == (n_frames, rate // 2)
    assert labels.values.min() == 0.0 and labels.values.max() == 1.0
    np.testing.assert_allclose(labels.to_km(), np.linspace(1, 2, n_frames))


def test_label_count_mismatch():
    ts = TimeSeries(np.ones(400), 100)
    with pytest.raises(LabelLengthMismatch):
        build_feature_matrix(ts, np.ones(3))


def test_frequencies_follow_bins(small_recording):
    cfg, fm, _, bins = small_recording
    hz = fm.frequencies_hz(bins - 1)
    np.testing.assert_allclose(hz, [t.frequency_hz for t in cfg.tones])


@pytest.mark.parametrize("length", [2, 10, 64, 1500])
def test_parseval_with_dc_and_nyquist(length):
    x = np.random.default_rng(length).normal(size=length)
    mag = magnitude_spectrum(x)
    dc = abs(x.sum())
    # interior bins appear twice in the full spectrum, Nyquist once
    energy = dc**2 + 2 * np.sum(mag[:-1] ** 2) + mag[-1] ** 2
    assert energy == pytest.approx(length * np.sum(x**2), rel=1e-9)
