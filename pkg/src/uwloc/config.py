"""Experiment configuration: dotted ``section.key = value`` text.

Precedence is command-line flags, then the file, then the built-in
defaults.  ``[section]`` headers are accepted as shorthand for a key prefix.
"""
import difflib
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigTypeError, UnknownKey


@dataclass(frozen=True)
class PathsSection:
    signal: str = ""
    labels: str = ""
    workdir: str = "work"


@dataclass(frozen=True)
class PreprocessSection:
    frame_seconds: float = 1.0  # 1 s non-overlapping frames


@dataclass(frozen=True)
class SelectionSection:
    components: int = 3  # A, principal components kept for the regression
    epsilon: float = 0.02  # coefficient threshold


@dataclass(frozen=True)
class ModelSection:
    variant: str = "original"
    with_fs: bool = True
    mlp_widths: tuple = (256, 64, 16)
    dropout: float = 0.2
    leaky_slope: float = 0.01


@dataclass(frozen=True)
class TrainSection:
    lr_step_one: float = 1e-4  # CAE pretraining
    lr_step_two: float = 5e-5  # localizer
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    precision: str = "f64"


@dataclass(frozen=True)
class SplitSection:
    modulus: int = 2  # 50 % labeled


@dataclass(frozen=True)
class SynthSection:
    preset: str = "dense"
    duration_s: float = 600.0
    sample_rate: int = 1500
    noise_std: float = -1.0  # negative keeps the preset's own level
    receivers: tuple = ("R1",)


@dataclass(frozen=True)
class ReportSection:
    svg: bool = True
    km2_column: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    paths: PathsSection = field(default_factory=PathsSection)
    preprocess: PreprocessSection = field(default_factory=PreprocessSection)
    selection: SelectionSection = field(default_factory=SelectionSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    split: SplitSection = field(default_factory=SplitSection)
    synth: SynthSection = field(default_factory=SynthSection)
    report: ReportSection = field(default_factory=ReportSection)

    def flat(self):
        """``{dotted_key: value}`` for every setting."""
        out = {}
        for sec in fields(self):
            section = getattr(self, sec.name)
            for f in fields(section):
                out[f"{sec.name}.{f.name}"] = getattr(section, f.name)
        return out

    def to_text(self):
        return "".join(f"{k} = {format_value(v)}\n" for k, v in self.flat().items())

    def with_values(self, values):
        """New config with dotted keys replaced by already-typed values."""
        sections = {}
        for key, value in values.items():
            sec, name = key.split(".", 1)
            sections.setdefault(sec, {})[name] = value
        return replace(self, **{s: replace(getattr(self, s), **kv) for s, kv in sections.items()})


DEFAULTS = ExperimentConfig()
VALID_KEYS = tuple(DEFAULTS.flat())


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


def _nearest(key):
    match = difflib.get_close_matches(key, VALID_KEYS, n=1, cutoff=0.0)
    return match[0] if match else None


def coerce(key, raw):
    """Parse ``raw`` into the type of the default for ``key``."""
    if key not in DEFAULTS.flat():
        raise UnknownKey(key, _nearest(key))
    default = DEFAULTS.flat()[key]
    if not isinstance(raw, str):
        if isinstance(default, bool) and not isinstance(raw, bool):
            raise ConfigTypeError(key, "bool", raw)
        if isinstance(default, float) and isinstance(raw, int) and not isinstance(raw, bool):
            return float(raw)
        if isinstance(default, tuple) and isinstance(raw, list):
            return tuple(raw)
        if type(raw) is not type(default):
            raise ConfigTypeError(key, type(default).__name__, raw)
        return raw
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return lowered in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            items = [t.strip() for t in text.split(",") if t.strip()]
            if default and isinstance(default[0], int):
                return tuple(int(t) for t in items)
            return tuple(items)
    except ValueError:
        raise ConfigTypeError(key, type(default).__name__, raw) from None
    return text


def parse_config_text(text):
    """``{dotted_key: typed_value}`` from config text; unknown keys raise."""
    values = {}
    section = ""
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigTypeError(line, "'key = value'", raw)
        key = key.strip()
        if section and "." not in key:
            key = f"{section}.{key}"
        values[key] = coerce(key, value)
    return values


def resolve_config(file_text=None, overrides=None):
    """Defaults, then the file, then ``overrides`` (dotted key to value)."""
    values = parse_config_text(file_text) if file_text else {}
    for key, value in (overrides or {}).items():
        values[key] = coerce(key, value)
    return DEFAULTS.with_values(values)


def deviations(cfg):
    """``(key, value, default)`` for every setting that differs from the defaults."""
    base = DEFAULTS.flat()
    return [(k, v, base[k]) for k, v in cfg.flat().items() if v != base[k]]
