"""Framing, magnitude spectra and min-max scaling.

A single-receiver recording is cut into non-overlapping frames; each frame
becomes one row of one-sided DFT magnitudes with the DC bin dropped, so a
frame of ``L`` samples yields ``L/2`` features and column ``j`` holds bin
``j + 1`` (frequency ``(j + 1) / frame_seconds`` Hz).
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRange, EmptySignal, LabelLengthMismatch, OddFrameLength

#: recorded in feature metadata so downstream code knows the bin layout
BIN_CONVENTION = "one-sided, DC dropped, bins 1..L/2"


@dataclass
class TimeSeries:
    samples: np.ndarray
    sample_rate: int
    receiver_id: str = "R1"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)
        if self.samples.size == 0:
            raise EmptySignal("time series has no samples")

    @property
    def seconds(self):
        return self.samples.size / self.sample_rate


@dataclass
class FeatureMatrix:
    """Scaled N x K spectral features with the parameters that produced them."""

    values: np.ndarray
    column_min: np.ndarray
    column_max: np.ndarray
    label_min: float
    label_max: float
    frame_seconds: float = 1.0
    receiver_id: str = "R1"

    @property
    def n_frames(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    @property
    def degenerate(self):
        """Columns whose raw min equals raw max (scaled to 0)."""
        return self.column_max == self.column_min

    def frequencies_hz(self, columns=None):
        cols = np.arange(self.n_features) if columns is None else np.asarray(columns)
        return (cols + 1) / self.frame_seconds


@dataclass
class LabelVector:
    values: np.ndarray
    label_min: float
    label_max: float
    raw_unit: str = field(default="km")

    def to_km(self):
        return inverse_scale_labels(self.values, self.label_min, self.label_max)


def frame_signal(ts, frame_seconds=1.0):
    """Split ``ts`` into consecutive non-overlapping frames.

    Returns an ``(n_frames, frame_len)`` view-free copy; the trailing partial
    frame is discarded.
    """
    frame_len = int(round(frame_seconds * ts.sample_rate))
    if frame_len <= 0:
        raise ValueError(f"frame length must be positive, got {frame_len}")
    n_frames = ts.samples.size // frame_len
    if n_frames == 0:
        raise EmptySignal(
            f"{ts.samples.size} samples is shorter than one frame of {frame_len}"
        )
    return ts.samples[: n_frames * frame_len].reshape(n_frames, frame_len).copy()


def magnitude_spectrum(frames):
    """|DFT| at bins 1..L/2 for one frame (1-D) or a stack of frames (2-D).

    Unnormalized: a unit sinusoid on bin ``j`` has magnitude ``L/2`` there.
    """
    frames = np.asarray(frames, dtype=np.float64)
    length = frames.shape[-1]
    if length % 2:
        raise OddFrameLength(f"frame length {length} is odd")
    return np.abs(np.fft.rfft(frames, axis=-1))[..., 1:]


def min_max_scale(values):
    """Scale to [0, 1]: per column for a matrix, globally for a vector.

    Constant columns (max == min) map to 0.  Returns ``(scaled, mins, maxs)``;
    for a vector ``mins``/``maxs`` are floats.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot scale an empty array")
    if values.ndim == 1:
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:
            return np.zeros_like(values), lo, hi
        return (values - lo) / (hi - lo), lo, hi
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    return apply_scale(values, lo, hi), lo, hi


def apply_scale(values, mins, maxs):
    """Apply stored min-max parameters (degenerate columns map to 0)."""
    values = np.asarray(values, dtype=np.float64)
    span = np.asarray(maxs, dtype=np.float64) - np.asarray(mins, dtype=np.float64)
    safe = np.where(span == 0, 1.0, span)
    out = (values - mins) / safe
    return np.where(span == 0, 0.0, out)


def inverse_scale(scaled, mins, maxs):
    return np.asarray(scaled, dtype=np.float64) * (np.asarray(maxs) - mins) + mins


def inverse_scale_labels(scaled, label_min, label_max):
    """Map scaled labels back to kilometres."""
    if not label_max > label_min:
        raise DegenerateRange(f"label range [{label_min}, {label_max}] is empty")
    return np.asarray(scaled, dtype=np.float64) * (label_max - label_min) + label_min


def build_feature_matrix(ts, labels_km, frame_seconds=1.0):
    """Frame, transform and scale a recording and its per-frame ranges.

    Returns ``(FeatureMatrix, LabelVector)``.
    """
    frames = frame_signal(ts, frame_seconds)
    labels_km = np.asarray(labels_km, dtype=np.float64).ravel()
    if labels_km.size != frames.shape[0]:
        raise LabelLengthMismatch(
            f"{labels_km.size} labels for {frames.shape[0]} frames"
        )
    raw = magnitude_spectrum(frames)
    scaled, lo, hi = min_max_scale(raw)
    y, ylo, yhi = min_max_scale(labels_km)
    fm = FeatureMatrix(scaled, lo, hi, ylo, yhi, float(frame_seconds), ts.receiver_id)
    return fm, LabelVector(y, ylo, yhi)
