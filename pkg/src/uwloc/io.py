"""On-disk formats for signals, labels and feature matrices.

Signals
    16-bit PCM mono WAV, or raw little-endian float32 with a JSON sidecar
    ``<file>.json`` holding ``sample_rate`` and ``receiver_id``.
Labels
    CSV with header ``index,range_km``; ``index`` is the 0-based frame index.
Feature matrix (``.uwfm``)
    ``b"UWFM"``, u16 version, u64 N, u64 K, N*K float64 row-major, then the
    K column minima, K column maxima, the label minimum and the label maximum
    (all float64, little-endian).
"""
import csv
import json
import struct
import wave
from pathlib import Path

import numpy as np

from .errors import FormatError
from .spectral import FeatureMatrix, TimeSeries

UWFM_MAGIC = b"UWFM"
UWFM_VERSION = 1


def read_wav(path, receiver_id=None):
    path = Path(path)
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise FormatError(f"{path}: expected mono, got {w.getnchannels()} channels")
        if w.getsampwidth() != 2:
            raise FormatError(f"{path}: expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return TimeSeries(samples, rate, receiver_id or path.stem)


def write_wav(path, ts):
    """Write 16-bit PCM, peak-normalized to 0.9 of full scale."""
    peak = float(np.max(np.abs(ts.samples))) or 1.0
    pcm = np.round(ts.samples / peak * 0.9 * 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(ts.sample_rate)
        w.writeframes(pcm.tobytes())


def read_raw_f32(path):
    path = Path(path)
    sidecar = Path(str(path) + ".json")
    if not sidecar.exists():
        raise FormatError(f"{path}: missing sidecar {sidecar.name}")
    meta = json.loads(sidecar.read_text())
    try:
        rate = int(meta["sample_rate"])
        rid = str(meta["receiver_id"])
    except KeyError as exc:
        raise FormatError(f"{sidecar}: missing key {exc}") from None
    samples = np.fromfile(path, dtype="<f4").astype(np.float64)
    return TimeSeries(samples, rate, rid)


def write_raw_f32(path, ts):
    np.asarray(ts.samples, dtype="<f4").tofile(path)
    meta = {"sample_rate": ts.sample_rate, "receiver_id": ts.receiver_id}
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2) + "\n")


def read_signal(path, receiver_id=None):
    path = Path(path)
    if path.suffix.lower() == ".wav":
        return read_wav(path, receiver_id)
    ts = read_raw_f32(path)
    if receiver_id:
        ts.receiver_id = receiver_id
    return ts


def read_labels_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "range_km"]:
            raise FormatError(f"{path}: header must be 'index,range_km', got {header}")
        rows = [(int(i), float(r)) for i, r in reader]
    rows.sort()
    idx = [i for i, _ in rows]
    if idx != list(range(len(idx))):
        raise FormatError(f"{path}: indices must cover 0..{len(idx) - 1} exactly once")
    return np.array([r for _, r in rows])


def write_labels_csv(path, labels_km):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "range_km"])
        for i, r in enumerate(labels_km):
            w.writerow([i, repr(float(r))])


def save_feature_matrix(path, fm):
    n, k = fm.values.shape
    with open(path, "wb") as fh:
        fh.write(UWFM_MAGIC)
        fh.write(struct.pack("<HQQ", UWFM_VERSION, n, k))
        fh.write(np.ascontiguousarray(fm.values, dtype="<f8").tobytes())
        fh.write(np.asarray(fm.column_min, dtype="<f8").tobytes())
        fh.write(np.asarray(fm.column_max, dtype="<f8").tobytes())
        fh.write(struct.pack("<dd", fm.label_min, fm.label_max))


def load_feature_matrix(path, frame_seconds=1.0, receiver_id=None):
    data = Path(path).read_bytes()
    if data[:4] != UWFM_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    version, n, k = struct.unpack_from("<HQQ", data, 4)
    if version != UWFM_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    off = 4 + struct.calcsize("<HQQ")
    expected = off + 8 * (n * k + 2 * k + 2)
    if len(data) != expected:
        raise FormatError(f"{path}: size {len(data)} != expected {expected}")
    values = np.frombuffer(data, "<f8", n * k, off).reshape(n, k).astype(np.float64)
    off += 8 * n * k
    cmin = np.frombuffer(data, "<f8", k, off).astype(np.float64)
    cmax = np.frombuffer(data, "<f8", k, off + 8 * k).astype(np.float64)
    lmin, lmax = struct.unpack_from("<dd", data, off + 16 * k)
    rid = receiver_id or Path(path).stem
    return FeatureMatrix(values, cmin, cmax, lmin, lmax, frame_seconds, rid)


def export_feature_csv(path, fm):
    """Lossless text export: one row per frame, ``repr`` floats round-trip exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame"] + [f"f{hz:g}" for hz in fm.frequencies_hz()])
        for i, row in enumerate(fm.values):
            w.writerow([i] + [repr(float(v)) for v in row])
        w.writerow(["column_min"] + [repr(float(v)) for v in fm.column_min])
        w.writerow(["column_max"] + [repr(float(v)) for v in fm.column_max])
        w.writerow(["label_min", repr(float(fm.label_min))])
        w.writerow(["label_max", repr(float(fm.label_max))])


def read_feature_csv(path, frame_seconds=1.0, receiver_id="R1"):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = [r for r in rows[1:] if r[0].isdigit()]
    meta = {r[0]: r[1:] for r in rows[1:] if not r[0].isdigit()}
    values = np.array([[float(v) for v in r[1:]] for r in body])
    return FeatureMatrix(
        values,
        np.array([float(v) for v in meta["column_min"]]),
        np.array([float(v) for v in meta["column_max"]]),
        float(meta["label_min"][0]),
        float(meta["label_max"][0]),
        frame_seconds,
        receiver_id,
    )
