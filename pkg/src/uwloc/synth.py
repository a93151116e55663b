"""Synthetic single-receiver recordings with planted informative bins.

Each tone sits exactly on a DFT bin centre.  Its amplitude follows a
spreading law ``r(t)^-exponent`` with a slow sinusoidal modulation standing in
for modal interference, so only the tone bins carry range information.  The
module also holds the brute-force oracles used to check selection and SVD.
"""
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, SizeTooLarge, ToneAboveNyquist
from .spectral import TimeSeries

# deep-source tone set of the first transmission level, Hz
DEFAULT_TONES = (49, 64, 79, 94, 112, 130, 148, 166, 201, 235, 283, 338, 388)


@dataclass(frozen=True)
class Tone:
    frequency_hz: float
    amplitude: float = 1.0
    tag: str = "deep"


def _default_tones():
    return tuple(Tone(float(f)) for f in DEFAULT_TONES)


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float = 600.0
    sample_rate: int = 1500
    frame_seconds: float = 1.0
    tones: tuple = field(default_factory=_default_tones)
    range_start_km: float = 1.0
    range_end_km: float = 9.0
    spreading_exponent: float = 1.0
    modulation_depth: float = 0.3
    modulation_period_s: float = 120.0
    noise_std: float = 1.0
    seed: int = 0

    def validate(self):
        nyquist = self.sample_rate / 2
        for t in self.tones:
            if not 0 < t.frequency_hz < nyquist:
                raise ToneAboveNyquist(f"tone {t.frequency_hz} Hz outside (0, {nyquist}) Hz")
        if min(self.range_start_km, self.range_end_km) <= 0:
            raise ConfigError("ranges must stay positive")
        if self.duration_s < self.frame_seconds:
            raise ConfigError("duration shorter than one frame")
        return self

    # key = value text, one field per line; tones as freq:amp:tag, comma separated
    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "tones":
                value = ",".join(f"{t.frequency_hz!r}:{t.amplitude!r}:{t.tag}" for t in value)
            else:
                value = repr(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        kinds = {f.name: f.type for f in fields(cls)}
        values = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in kinds:
                raise ConfigError(f"unknown synth key {key!r}")
            values[key] = parse_tones(value) if key == "tones" else _coerce(kinds[key], value)
        return cls(**values)

    @classmethod
    def dense(cls, **overrides):
        """Many-tone preset used for network training at desk scale.

        121 tones from 40 to 400 Hz every 3 Hz; with the default noise level a
        selection at epsilon 0.02 keeps roughly that many columns.
        """
        tones = tuple(Tone(float(f)) for f in range(40, 401, 3))
        base = dict(tones=tones, spreading_exponent=0.5, noise_std=12.0)
        base.update(overrides)
        return cls(**base)


def _coerce(kind, value):
    kind = kind if isinstance(kind, str) else kind.__name__
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    return value


def parse_tones(text):
    tones = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        freq = float(parts[0])
        amp = float(parts[1]) if len(parts) > 1 and parts[1] else 1.0
        tag = parts[2] if len(parts) > 2 else "deep"
        tones.append(Tone(freq, amp, tag))
    return tuple(tones)


def range_trajectory(cfg, t):
    frac = np.asarray(t, dtype=np.float64) / cfg.duration_s
    return cfg.range_start_km + (cfg.range_end_km - cfg.range_start_km) * frac


def planted_columns(cfg):
    """Feature-matrix columns of the tones (bin ``f * frame_seconds``, DC dropped)."""
    bins = np.array([round(t.frequency_hz * cfg.frame_seconds) for t in cfg.tones], dtype=np.int64)
    return np.unique(bins) - 1


def generate(cfg, receiver_id="R1", gains=None):
    """Render the recording.

    Returns ``(TimeSeries, labels_km, planted_bins)`` where ``planted_bins``
    are DFT bin numbers; ``planted_columns`` gives the matching feature
    columns.  ``gains`` optionally rescales each tone (receiver variants).
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = int(round(cfg.duration_s * cfg.sample_rate))
    t = np.arange(n) / cfg.sample_rate
    r = range_trajectory(cfg, t)
    spread = r ** (-cfg.spreading_exponent)
    phases = rng.uniform(0.0, 2 * np.pi, size=len(cfg.tones))
    gains = np.ones(len(cfg.tones)) if gains is None else np.asarray(gains, dtype=np.float64)

    signal = np.zeros(n)
    for tone, phi, g in zip(cfg.tones, phases, gains):
        envelope = 1.0 + cfg.modulation_depth * np.sin(2 * np.pi * t / cfg.modulation_period_s + phi)
        signal += g * tone.amplitude * spread * envelope * np.sin(2 * np.pi * tone.frequency_hz * t + phi)
    signal += rng.normal(0.0, cfg.noise_std, size=n)

    n_frames = int(cfg.duration_s // cfg.frame_seconds)
    centres = (np.arange(n_frames) + 0.5) * cfg.frame_seconds
    labels = range_trajectory(cfg, centres)
    bins = planted_columns(cfg) + 1
    return TimeSeries(signal, cfg.sample_rate, receiver_id), labels, bins


def generate_receivers(cfg, receiver_ids, gain_jitter=0.3):
    """One recording per receiver: shared track, per-receiver tone gains and noise."""
    out = {}
    for i, rid in enumerate(receiver_ids):
        rng = np.random.default_rng([cfg.seed, i])
        gains = np.exp(gain_jitter * rng.standard_normal(len(cfg.tones))) if i else None
        out[rid] = generate(replace(cfg, seed=cfg.seed + 1000 * i), rid, gains)
    return out


# ---------------------------------------------------------------- oracles


def brute_force_feature_ranking(X, y):
    """Rank columns by |Pearson correlation with y|, one column at a time.

    Constant columns score 0.  Ties go to the lower index.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, k = X.shape
    yd = y - y.sum() / n
    ynorm = np.sqrt(np.dot(yd, yd))
    scores = np.zeros(k)
    for j in range(k):
        col = X[:, j]
        cd = col - col.sum() / n
        cnorm = np.sqrt(np.dot(cd, cd))
        if cnorm > 0 and ynorm > 0:
            scores[j] = abs(np.dot(cd, yd)) / (cnorm * ynorm)
    order = sorted(range(k), key=lambda j: (-scores[j], j))
    return np.array(order, dtype=np.int64), scores


def gram_eigen_oracle(Xc, tol=1e-14, max_sweeps=100, max_size=64):
    """Full SVD reference by one-sided (Hestenes) Jacobi sweeps.

    One-sided Jacobi diagonalizes the Gram matrix implicitly, so trailing
    singular values come out at rounding level.  Sweeps continue until every
    column pair is orthogonal to ``tol`` (relative).  Returns ``(U, s, V)``
    with ``s`` descending and ``min(N, K)`` columns.
    """
    Xc = np.asarray(Xc, dtype=np.float64)
    n, k = Xc.shape
    if min(n, k) > max_size:
        raise SizeTooLarge(f"oracle limited to min(N, K) <= {max_size}, got {min(n, k)}")
    transposed = k > n
    W = (Xc.T if transposed else Xc).copy()
    cols = W.shape[1]
    V = np.eye(cols)
    for _ in range(max_sweeps):
        worst = 0.0
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                alpha = float(W[:, p] @ W[:, p])
                beta = float(W[:, q] @ W[:, q])
                gamma = float(W[:, p] @ W[:, q])
                if alpha == 0.0 or beta == 0.0:
                    continue
                ratio = abs(gamma) / np.sqrt(alpha * beta)
                worst = max(worst, ratio)
                if ratio <= tol:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta)) if zeta != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wp = W[:, p].copy()
                W[:, p] = c * wp - s * W[:, q]
                W[:, q] = s * wp + c * W[:, q]
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
        if worst <= tol:
            break
    sv = np.sqrt(np.sum(W * W, axis=0))
    order = sorted(range(cols), key=lambda j: (-sv[j], j))
    sv = sv[order]
    W = W[:, order]
    V = V[:, order]
    U = np.zeros_like(W)
    nz = sv > 0
    U[:, nz] = W[:, nz] / sv[nz]
    if transposed:
        return V, sv, U
    return U, sv, V


def config_dict(cfg):
    d = asdict(cfg)
    d["tones"] = [asdict(t) for t in cfg.tones]
    return d
