"""Step-one and step-two training loops, evaluation and report tables."""
import csv
import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import DEFAULT_BATCH, batch_iterator
from .errors import ConfigError, DivergenceDetected, DivisionByZero, ShapeMismatch
from .models import HEAD, build_cae, build_localizer, encode
from .nn import mse_loss, save_checkpoint

LR_STEP_ONE = 1e-4
LR_STEP_TWO = 5e-5
EPOCHS = 100

DTYPES = {"f64": np.float64, "f32": np.float32}


@dataclass(frozen=True)
class TrainConfig:
    lr_step_one: float = LR_STEP_ONE
    lr_step_two: float = LR_STEP_TWO
    epochs: int = EPOCHS
    batch_size: int = DEFAULT_BATCH
    seed: int = 0
    precision: str = "f64"
    max_steps: int | None = None  # stop early after this many optimizer steps

    def __post_init__(self):
        if self.lr_step_one < 0 or self.lr_step_two < 0:
            raise ConfigError("learning rates must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be at least 1")
        if self.precision not in DTYPES:
            raise ConfigError(f"precision must be one of {sorted(DTYPES)}")

    @property
    def dtype(self):
        return DTYPES[self.precision]


@dataclass
class TrainResult:
    model: object
    losses: list  # mean training loss per epoch
    seconds: float  # wall clock of the optimization loop only
    steps: int
    test_mse: float | None = None


def _fit(model, inputs, targets, lr, cfg, start=0, stream=1):
    """Mini-batch Adam on MSE.  ``inputs`` are fed to layer ``start`` onward."""
    rng = np.random.default_rng([cfg.seed, stream])
    losses = []
    steps = 0
    n = inputs.shape[0]
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        total = 0.0
        for idx in batch_iterator(n, cfg.batch_size, cfg.seed, epoch):
            y, caches = model.forward(inputs[idx], "train", rng, start=start)
            loss, g = mse_loss(y, targets[idx])
            if not np.isfinite(loss):
                raise DivergenceDetected(
                    f"loss became {loss} at epoch {epoch + 1}, step {steps + 1}; lower the learning rate")
            model.backward(caches, g, start=start)
            model.store.adam_step(lr)
            total += loss * idx.size
            steps += 1
            if cfg.max_steps is not None and steps >= cfg.max_steps:
                break
        losses.append(total / n)
        if cfg.max_steps is not None and steps >= cfg.max_steps:
            break
    return losses, time.perf_counter() - t0, steps


def _rows3d(rows, dtype):
    rows = np.asarray(rows, dtype=dtype)
    return rows[:, None, :]


def train_cae(step_one, plan, cfg=TrainConfig(), checkpoint_path=None, model=None):
    """Reconstruction training on every row; labels are never touched."""
    rows = getattr(step_one, "rows", step_one)
    if rows.shape[0] == 0:
        raise ShapeMismatch("empty step-one dataset")
    model = model or build_cae(plan, seed=cfg.seed, dtype=cfg.dtype)
    x = _rows3d(rows, cfg.dtype)
    losses, seconds, steps = _fit(model, x, x, cfg.lr_step_one, cfg, stream=1)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, model.store)
    return TrainResult(model, losses, seconds, steps)


def _labels2d(labels, dtype):
    return np.asarray(labels, dtype=dtype).reshape(-1, 1)


def train_localizer(step_two, plan, encoder_checkpoint, cfg=TrainConfig(), frozen=True, **model_kw):
    """Encoder-MLP with a pretrained encoder; frozen encoders are run once.

    ``model_kw`` goes to :func:`build_localizer` (slope, widths, dropout).
    """
    model = build_localizer(plan, encoder_checkpoint, frozen=frozen, seed=cfg.seed, dtype=cfg.dtype, **model_kw)
    x = _rows3d(step_two.train_rows, cfg.dtype)
    y = _labels2d(step_two.train_labels, cfg.dtype)
    start = 0
    if frozen:
        start = model.segment_range(HEAD)[0]
        x = encode(model, x)
    losses, seconds, steps = _fit(model, x, y, cfg.lr_step_two, cfg, start=start, stream=2)
    result = TrainResult(model, losses, seconds, steps)
    result.test_mse = evaluate_mse(model, step_two.test_rows, step_two.test_labels)
    return result


def train_supervised(step_two, plan, cfg=TrainConfig(), **model_kw):
    """Same localizer graph from random initialization, everything trainable."""
    model = build_localizer(plan, None, frozen=False, seed=cfg.seed, dtype=cfg.dtype, **model_kw)
    x = _rows3d(step_two.train_rows, cfg.dtype)
    y = _labels2d(step_two.train_labels, cfg.dtype)
    losses, seconds, steps = _fit(model, x, y, cfg.lr_step_two, cfg, stream=3)
    result = TrainResult(model, losses, seconds, steps)
    result.test_mse = evaluate_mse(model, step_two.test_rows, step_two.test_labels)
    return result


def predict(model, rows, batch_size=256):
    x = _rows3d(rows, model.store.dtype)
    out = [model.forward(x[i : i + batch_size], "eval")[0] for i in range(0, x.shape[0], batch_size)]
    return np.concatenate(out).reshape(-1).astype(np.float64)


def evaluate_mse(model, rows, labels, predictions_path=None):
    """Eval-mode MSE in scaled-label units; optionally writes ``index,true,predicted``."""
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if np.asarray(rows).shape[0] != labels.size:
        raise ShapeMismatch(f"{np.asarray(rows).shape[0]} rows vs {labels.size} labels")
    pred = predict(model, rows)
    if predictions_path is not None:
        write_predictions(predictions_path, labels, pred)
    return float(np.mean((pred - labels) ** 2))


def write_predictions(path, labels, pred, index=None):
    index = np.arange(labels.size) if index is None else index
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "true", "predicted"])
        for i, t, p in zip(np.asarray(index).tolist(), labels.tolist(), pred.tolist()):
            w.writerow([i, repr(t), repr(p)])


# ---------------------------------------------------------------- reports


def residual_report(mse_without_fs, mse_with_fs):
    """``(residual, percentage)`` with percentage in percent of the without-FS value."""
    if mse_without_fs == 0:
        raise DivisionByZero("without-FS MSE is zero; the percentage is undefined")
    residual = mse_without_fs - mse_with_fs
    return residual, 100.0 * residual / mse_without_fs


@dataclass(frozen=True)
class TimingRun:
    step: str
    seconds_without_fs: float
    seconds_with_fs: float

    @property
    def reduction(self):
        return 1.0 - self.seconds_with_fs / self.seconds_without_fs


def timing_report(runs):
    """Rows ``(step, without, with, reduction_percent)``."""
    return [(r.step, r.seconds_without_fs, r.seconds_with_fs, 100.0 * r.reduction) for r in runs]


def write_timing_csv(path, runs):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "seconds_without_fs", "seconds_with_fs", "reduction_percent"])
        for step, a, b, red in timing_report(runs):
            w.writerow([step, f"{a:.3f}", f"{b:.3f}", f"{red:.2f}"])


def config_fingerprint(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class ExperimentReport:
    """Per-receiver test MSE of the framework and the supervised baseline.

    Wall-clock seconds are kept apart from the reproducible tables.
    """

    framework: dict = field(default_factory=dict)  # receiver -> mse
    supervised: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)
    fingerprint: str = ""
    label_range_km: tuple | None = None

    def mean(self, table):
        values = list(table.values())
        return float(sum(values) / len(values)) if values else float("nan")

    def residual_rows(self):
        """Framework vs supervised per receiver, as residual and percentage."""
        rows = []
        for rec in sorted(self.framework):
            if rec in self.supervised and self.supervised[rec] != 0:
                res, pct = residual_report(self.supervised[rec], self.framework[rec])
                rows.append((rec, res, pct))
        return rows

    def write_csv(self, path):
        km2 = None
        if self.label_range_km is not None:
            km2 = (self.label_range_km[1] - self.label_range_km[0]) ** 2
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            head = ["receiver", "framework_mse", "supervised_mse"]
            if km2 is not None:
                head += ["framework_mse_km2", "supervised_mse_km2"]
            w.writerow(head)
            for rec in sorted(set(self.framework) | set(self.supervised)):
                f, s = self.framework.get(rec), self.supervised.get(rec)
                row = [rec, _fmt(f), _fmt(s)]
                if km2 is not None:
                    row += [_fmt(None if f is None else f * km2), _fmt(None if s is None else s * km2)]
                w.writerow(row)
            w.writerow(["mean", _fmt(self.mean(self.framework)), _fmt(self.mean(self.supervised))]
                       + (["", ""] if km2 is not None else []))

    def summary(self):
        return {
            "fingerprint": self.fingerprint,
            "framework_mse": {k: self.framework[k] for k in sorted(self.framework)},
            "supervised_mse": {k: self.supervised[k] for k in sorted(self.supervised)},
            "mean_framework_mse": self.mean(self.framework),
            "mean_supervised_mse": self.mean(self.supervised),
            "residuals": [{"receiver": r, "residual": a, "percentage": p} for r, a, p in self.residual_rows()],
        }

    def write_json(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _fmt(v):
    return "" if v is None else f"{v:.10g}"


def prediction_svg(labels, pred, size=420):
    """Predicted vs true scaled range, one dot per sample, with the identity line."""
    pad = 30
    span = size - 2 * pad

    def px(v):
        return pad + float(np.clip(v, 0, 1)) * span

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="#999"/>',
        f'<line x1="{pad}" y1="{size - pad}" x2="{size - pad}" y2="{pad}" stroke="#999" stroke-dasharray="4 3"/>',
        f'<text x="{size / 2:.0f}" y="{size - 6}" font-size="12" text-anchor="middle">true (scaled)</text>',
        f'<text x="10" y="{size / 2:.0f}" font-size="12" transform="rotate(-90 10 {size / 2:.0f})" '
        'text-anchor="middle">predicted</text>',
    ]
    for t, p in zip(np.asarray(labels).ravel().tolist(), np.asarray(pred).ravel().tolist()):
        parts.append(f'<circle cx="{px(t):.2f}" cy="{size - px(p):.2f}" r="1.5" fill="#2c3e50"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
