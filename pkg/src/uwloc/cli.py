"""``uwloc`` command line: one subcommand per pipeline stage.

Every stage reads and writes inside ``--workdir`` and records what it did in
``manifest.json`` (resolved config, seed, SHA-256 of inputs and outputs).
Inputs are checked against their recorded checksums before reuse.

Exit codes: 0 success, 2 configuration error, 3 missing or modified
artifact, 4 numerical failure.
"""
import argparse
import csv
import hashlib
import json
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from filelock import FileLock
from threadpoolctl import threadpool_limits

from . import config as cfgmod
from .dataset import build_step_one, build_step_two, split_indices, write_split_manifest
from .errors import ArtifactError, ConfigError, MissingCheckpoint, NumericalError, UwlocError
from .io import (load_feature_matrix, read_labels_csv, read_signal, save_feature_matrix,
                 write_labels_csv, write_raw_f32)
from .models import (build_cae, build_encoder, build_localizer, describe, describe_plan,
                     plan_encoder)
from .nn import gradient_check, load_into, save_checkpoint
from .nn.gradcheck import layer_cases
from .selection import (build_selected_matrix, interpretation_loadings, loadings_svg,
                        read_index_list, select_pipeline, write_index_list, write_loadings_csv,
                        write_selection_csv)
from .spectral import build_feature_matrix
from .synth import SynthConfig, generate_receivers, planted_columns
from .training import (ExperimentReport, TrainConfig, config_fingerprint, predict, prediction_svg,
                       train_cae, train_localizer, train_supervised, write_predictions)

EXIT_OK, EXIT_CONFIG, EXIT_ARTIFACT, EXIT_NUMERICAL = 0, 2, 3, 4
MANIFEST = "manifest.json"


# ---------------------------------------------------------------- workdir


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Workdir:
    """Artifact directory with a locked checksum manifest."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.lock = FileLock(str(self.root / (MANIFEST + ".lock")))

    def path(self, name):
        return self.root / name

    def _load(self):
        p = self.path(MANIFEST)
        return json.loads(p.read_text(encoding="utf-8")) if p.exists() else {"artifacts": {}, "commands": {}}

    def require(self, name):
        """Path of an upstream artifact after verifying it is unchanged."""
        p = self.path(name)
        if not p.exists():
            exc = MissingCheckpoint if name.endswith(".uwnn") else ArtifactError
            raise exc(f"missing artifact {p}; run the stage that produces it first")
        recorded = self._load()["artifacts"].get(name)
        if recorded is not None and recorded != sha256(p):
            raise ArtifactError(f"{p} changed since it was written (checksum mismatch)")
        return p

    def record(self, command, cfg, inputs, outputs):
        with self.lock:
            manifest = self._load()
            for name in outputs:
                manifest["artifacts"][name] = sha256(self.path(name))
            # the workdir is where the manifest lives, so it is left out
            text = "".join(line for line in cfg.to_text().splitlines(True)
                           if not line.startswith("paths.workdir "))
            manifest["config"] = text
            manifest["commands"][command] = {
                "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
                "seed": cfg.train.seed,
                "inputs": {n: manifest["artifacts"].get(n) for n in sorted(inputs)},
                "outputs": sorted(outputs),
            }
            tmp = self.path(MANIFEST + ".tmp")
            tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            tmp.replace(self.path(MANIFEST))

    def write_text(self, name, text):
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------- helpers


def _receivers(cfg):
    return list(cfg.synth.receivers)


def _train_receiver(args, cfg):
    return getattr(args, "receiver", None) or cfg.synth.receivers[0]


def _load_features(wd, rid, cfg):
    fm = load_feature_matrix(wd.require(f"features_{rid}.uwfm"), cfg.preprocess.frame_seconds, rid)
    km = read_labels_csv(wd.require(f"labels_{rid}.csv"))
    if km.size < fm.n_frames:
        raise ConfigError(f"labels_{rid}.csv has {km.size} rows for {fm.n_frames} frames")
    span = fm.label_max - fm.label_min
    y = (km[: fm.n_frames] - fm.label_min) / span if span > 0 else np.zeros(fm.n_frames)
    return fm, y


def _model_input(wd, cfg, fm):
    """Feature rows fed to the networks and the encoder plan for them."""
    if cfg.model.with_fs:
        idx, k = read_index_list(wd.require("selected.idx"))
        if k != fm.n_features:
            raise ConfigError(f"selection was made on {k} columns, matrix has {fm.n_features}")
        X = build_selected_matrix(fm.values, idx)
    else:
        X = fm.values
    return X, plan_encoder(X.shape[1], cfg.model.variant, cfg.model.with_fs)


def _train_config(cfg):
    t = cfg.train
    return TrainConfig(t.lr_step_one, t.lr_step_two, t.epochs, t.batch_size, t.seed, t.precision)


def _write_losses(wd, name, losses):
    with open(wd.path(name), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        for i, v in enumerate(losses, start=1):
            w.writerow([i, repr(float(v))])


def _append_timing(wd, step, seconds):
    """Wall-clock log of training loops; kept out of the manifest since it never reproduces."""
    p = wd.path("timing_log.csv")
    new = not p.exists()
    with open(p, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(["step", "seconds"])
        w.writerow([step, f"{seconds:.3f}"])


def _synth_config(cfg):
    s = cfg.synth
    base = SynthConfig.dense if s.preset == "dense" else SynthConfig
    if s.preset not in ("dense", "default"):
        raise ConfigError(f"synth.preset must be 'dense' or 'default', got {s.preset!r}")
    kw = dict(duration_s=s.duration_s, sample_rate=s.sample_rate, seed=cfg.train.seed,
              frame_seconds=cfg.preprocess.frame_seconds)
    if s.noise_std >= 0:
        kw["noise_std"] = s.noise_std
    return base(**kw)


# ---------------------------------------------------------------- commands


def cmd_synth(args, cfg, wd):
    scfg = _synth_config(cfg)
    outputs = ["synth.cfg", "planted.csv"]
    wd.write_text("synth.cfg", scfg.to_text())
    for rid, (ts, labels, _) in generate_receivers(scfg, _receivers(cfg)).items():
        write_raw_f32(wd.path(f"signal_{rid}.f32"), ts)
        write_labels_csv(wd.path(f"labels_{rid}.csv"), labels)
        outputs += [f"signal_{rid}.f32", f"signal_{rid}.f32.json", f"labels_{rid}.csv"]
    with open(wd.path("planted.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column_index", "frequency_hz"])
        for c in planted_columns(scfg).tolist():
            w.writerow([c, repr((c + 1) / scfg.frame_seconds)])
    wd.record("synth", cfg, [], outputs)
    print(f"synthesized {len(cfg.synth.receivers)} receiver(s) into {wd.root}")


def cmd_preprocess(args, cfg, wd):
    outputs, inputs = [], []
    if cfg.paths.signal:
        ts = read_signal(cfg.paths.signal, getattr(args, "receiver", None))
        if not cfg.paths.labels:
            raise ConfigError("paths.labels is required together with paths.signal")
        km = read_labels_csv(cfg.paths.labels)
        write_labels_csv(wd.path(f"labels_{ts.receiver_id}.csv"), km)
        sources = [(ts, km)]
        outputs.append(f"labels_{ts.receiver_id}.csv")
    else:
        sources = []
        for rid in _receivers(cfg):
            sig, lab = f"signal_{rid}.f32", f"labels_{rid}.csv"
            ts = read_signal(wd.require(sig))
            sources.append((ts, read_labels_csv(wd.require(lab))))
            inputs += [sig, lab]
    for ts, km in sources:
        fm, _ = build_feature_matrix(ts, km, cfg.preprocess.frame_seconds)
        name = f"features_{ts.receiver_id}.uwfm"
        save_feature_matrix(wd.path(name), fm)
        outputs.append(name)
        print(f"{ts.receiver_id}: {fm.n_frames} frames x {fm.n_features} bins")
    wd.record("preprocess", cfg, inputs, outputs)


def cmd_select(args, cfg, wd):
    rid = _train_receiver(args, cfg)
    fm, y = _load_features(wd, rid, cfg)
    res = select_pipeline(fm.values, y, cfg.selection.components, cfg.selection.epsilon)
    fs = fm.frame_seconds
    write_selection_csv(wd.path("selection.csv"), res, fs)
    write_index_list(wd.path("selected.idx"), res.selected_indices, fm.n_features)
    n_pc = min(3, res.selected_count, fm.n_frames - 1)
    outputs = ["selection.csv", "selected.idx"]
    if n_pc >= 1:
        _, loadings = interpretation_loadings(build_selected_matrix(fm.values, res), n_pc)
        pair = (1, 3) if n_pc >= 3 else (1, n_pc)
        write_loadings_csv(wd.path("loadings.csv"), loadings, res.selected_indices, fs, pair)
        wd.write_text("loadings.svg", loadings_svg(loadings, res.selected_indices, fs, pair))
        outputs += ["loadings.csv", "loadings.svg"]
    wd.record("select", cfg, [f"features_{rid}.uwfm", f"labels_{rid}.csv"], outputs)
    print(f"selected {res.selected_count} of {fm.n_features} columns at epsilon={res.threshold:g}")


def cmd_train_cae(args, cfg, wd):
    rid = _train_receiver(args, cfg)
    fm, _ = _load_features(wd, rid, cfg)
    X, plan = _model_input(wd, cfg, fm)
    tcfg = _train_config(cfg)
    model = build_cae(plan, seed=tcfg.seed, dtype=tcfg.dtype, alpha=cfg.model.leaky_slope)
    result = train_cae(build_step_one(X), plan, tcfg, wd.path("cae.uwnn"), model=model)
    _write_losses(wd, "cae_loss.csv", result.losses)
    _append_timing(wd, "train-cae", result.seconds)
    inputs = [f"features_{rid}.uwfm"] + (["selected.idx"] if cfg.model.with_fs else [])
    wd.record("train-cae", cfg, inputs, ["cae.uwnn", "cae_loss.csv"])
    print(f"CAE trained: {result.steps} steps, final loss {result.losses[-1]:.6g}")


def _model_kw(cfg):
    m = cfg.model
    return dict(alpha=m.leaky_slope, mlp_widths=m.mlp_widths, dropout=m.dropout)


def _step_two(wd, cfg, rid):
    fm, y = _load_features(wd, rid, cfg)
    X, plan = _model_input(wd, cfg, fm)
    ds = build_step_two(X, y, cfg.split.modulus)
    write_split_manifest(wd.path("split.csv"), ds)
    return ds, plan


def cmd_train_localizer(args, cfg, wd):
    rid = _train_receiver(args, cfg)
    ckpt = wd.require("cae.uwnn")
    ds, plan = _step_two(wd, cfg, rid)
    tcfg = _train_config(cfg)
    result = train_localizer(ds, plan, ckpt, tcfg, frozen=True, **_model_kw(cfg))
    save_checkpoint(wd.path("localizer.uwnn"), result.model.store)
    _write_losses(wd, "localizer_loss.csv", result.losses)
    _append_timing(wd, "train-localizer", result.seconds)
    inputs = ["cae.uwnn", f"features_{rid}.uwfm", f"labels_{rid}.csv"]
    wd.record("train-localizer", cfg, inputs, ["localizer.uwnn", "localizer_loss.csv", "split.csv"])
    print(f"localizer test MSE {result.test_mse:.6g} ({ds.label_fraction} labeled)")


def cmd_train_supervised(args, cfg, wd):
    rid = _train_receiver(args, cfg)
    ds, plan = _step_two(wd, cfg, rid)
    tcfg = _train_config(cfg)
    result = train_supervised(ds, plan, tcfg, **_model_kw(cfg))
    save_checkpoint(wd.path("supervised.uwnn"), result.model.store)
    _write_losses(wd, "supervised_loss.csv", result.losses)
    _append_timing(wd, "train-supervised", result.seconds)
    inputs = [f"features_{rid}.uwfm", f"labels_{rid}.csv"]
    wd.record("train-supervised", cfg, inputs, ["supervised.uwnn", "supervised_loss.csv", "split.csv"])
    print(f"supervised test MSE {result.test_mse:.6g} ({ds.label_fraction} labeled)")


def cmd_evaluate(args, cfg, wd):
    """Test-split MSE of both models on every receiver, using the training selection."""
    tcfg = _train_config(cfg)
    rows_out = []
    inputs, outputs = [], ["evaluation.csv"]
    models = {}
    for kind in ("framework", "supervised"):
        name = "localizer.uwnn" if kind == "framework" else "supervised.uwnn"
        if not wd.path(name).exists():
            continue
        models[kind] = name
        inputs.append(name)
    if not models:
        raise MissingCheckpoint("no trained model found; run train-localizer or train-supervised first")
    for rid in _receivers(cfg):
        fm, y = _load_features(wd, rid, cfg)
        X, plan = _model_input(wd, cfg, fm)
        _, test = split_indices(X.shape[0], cfg.split.modulus)
        inputs += [f"features_{rid}.uwfm", f"labels_{rid}.csv"]
        for kind, name in models.items():
            model = build_localizer(plan, None, frozen=False, dtype=tcfg.dtype, **_model_kw(cfg))
            load_into(model.store, wd.require(name), with_adam=False)
            pred = predict(model, X[test])
            out = f"predictions_{kind}_{rid}.csv"
            write_predictions(wd.path(out), y[test], pred, test)
            outputs.append(out)
            rows_out.append((rid, kind, float(np.mean((pred - y[test]) ** 2))))
    with open(wd.path("evaluation.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["receiver", "model", "test_mse"])
        for rid, kind, mse in rows_out:
            w.writerow([rid, kind, repr(mse)])
    wd.record("evaluate", cfg, inputs, outputs)
    for rid, kind, mse in rows_out:
        print(f"{rid} {kind}: {mse:.6g}")


def cmd_report(args, cfg, wd):
    ev = wd.require("evaluation.csv")
    settings = {k: v for k, v in cfg.flat().items() if not k.startswith("paths.")}
    report = ExperimentReport(fingerprint=config_fingerprint(settings))
    with open(ev, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            table = report.framework if row["model"] == "framework" else report.supervised
            table[row["receiver"]] = float(row["test_mse"])
    rid = _train_receiver(args, cfg)
    if cfg.report.km2_column:
        fm = load_feature_matrix(wd.require(f"features_{rid}.uwfm"))
        report.label_range_km = (fm.label_min, fm.label_max)
    report.write_csv(wd.path("report.csv"))
    report.write_json(wd.path("summary.json"))
    outputs = ["report.csv", "summary.json"]
    with open(wd.path("residual.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["receiver", "residual", "percentage"])
        for r, res, pct in report.residual_rows():
            w.writerow([r, f"{res:.6f}", f"{pct:.2f}"])
    outputs.append("residual.csv")
    pred_file = wd.path(f"predictions_framework_{rid}.csv")
    if cfg.report.svg and pred_file.exists():
        with open(pred_file, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        svg = prediction_svg([float(r["true"]) for r in rows], [float(r["predicted"]) for r in rows])
        wd.write_text("predictions.svg", svg)
        outputs.append("predictions.svg")
    wd.record("report", cfg, ["evaluation.csv"], outputs)
    print(wd.path("report.csv").read_text(encoding="utf-8"), end="")


def cmd_describe(args, cfg, wd):
    with_fs = cfg.model.with_fs
    width = args.width
    if width is None:
        width = 750 if not with_fs else _selected_width(wd) or 121
    plan = plan_encoder(width, cfg.model.variant, with_fs)
    print(describe_plan(plan))
    if args.model == "plan":
        return
    tcfg = _train_config(cfg)
    if args.model == "cae":
        model = build_cae(plan, seed=tcfg.seed, alpha=cfg.model.leaky_slope)
    else:
        model = build_localizer(plan, None, frozen=False, seed=tcfg.seed, **_model_kw(cfg))
    print()
    print(describe(model))


def _selected_width(wd):
    if wd is None or not wd.path("selected.idx").exists():
        return None
    return read_index_list(wd.path("selected.idx"))[0].size


def cmd_gradcheck(args, cfg, wd):
    rng = np.random.default_rng(cfg.train.seed)
    rows = []
    for name, graph, x in layer_cases(rng):
        rows.append((name, gradient_check(graph, x, seed=cfg.train.seed)))
    plan = plan_encoder(args.width, cfg.model.variant, True)
    enc = build_encoder(plan, seed=cfg.train.seed)
    x = rng.uniform(size=(1, 1, args.width))
    rows.append((f"encoder[{cfg.model.variant},M={args.width}]", gradient_check(enc, x, seed=cfg.train.seed)))
    failed = False
    for name, rep in rows:
        ok = rep.passed(args.tol)
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'} {name:<28} max_rel_err={rep.max_rel_error:.3e} "
              f"coords={rep.n_coords} kinked={rep.n_kinked}")
    if failed:
        raise NumericalError(f"gradient check above tolerance {args.tol:g}")


COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "select": cmd_select,
    "train-cae": cmd_train_cae,
    "train-localizer": cmd_train_localizer,
    "train-supervised": cmd_train_supervised,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "describe": cmd_describe,
    "gradcheck": cmd_gradcheck,
}

# flag destination -> dotted config key
FLAG_KEYS = {
    "seed": "train.seed",
    "workdir": "paths.workdir",
    "precision": "train.precision",
    "epsilon": "selection.epsilon",
    "components": "selection.components",
    "variant": "model.variant",
    "modulus": "split.modulus",
    "epochs": "train.epochs",
    "batch_size": "train.batch_size",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="seed for data, initialization and batching")
    common.add_argument("--workdir", help="artifact directory")
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--precision", choices=["f64", "f32"])
    common.add_argument("--threads", type=int, help="BLAS thread limit")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    common.add_argument("--receiver", help="training receiver id (default: first configured)")

    parser = argparse.ArgumentParser(prog="uwloc", parents=[common],
                                     description="Feature selection and semi-supervised range estimation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS)
        if name == "select":
            p.add_argument("--epsilon", type=float)
            p.add_argument("--components", type=int)
        if name in ("train-cae", "train-localizer", "train-supervised", "describe", "evaluate", "gradcheck"):
            p.add_argument("--variant", choices=["original", "structure1", "structure2"])
        if name in ("train-cae", "train-localizer", "train-supervised"):
            p.add_argument("--epochs", type=int)
            p.add_argument("--batch-size", dest="batch_size", type=int)
        if name in ("train-localizer", "train-supervised", "evaluate"):
            p.add_argument("--modulus", type=int)
        if name in ("train-cae", "train-localizer", "train-supervised", "describe", "evaluate"):
            p.add_argument("--without-fs", dest="without_fs", action="store_true")
        if name == "describe":
            p.add_argument("--width", type=int, default=None, help="input width (K or M)")
            p.add_argument("--model", choices=["plan", "cae", "localizer"], default="cae")
        if name == "gradcheck":
            p.add_argument("--width", type=int, default=121)
            p.add_argument("--tol", type=float, default=1e-4)
    return parser


def resolve(args):
    text = None
    if getattr(args, "config", None):
        p = Path(args.config)
        if not p.exists():
            raise ConfigError(f"config file {p} not found")
        text = p.read_text(encoding="utf-8")
    overrides = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    for dest, key in FLAG_KEYS.items():
        if hasattr(args, dest):
            overrides[key] = getattr(args, dest)
    if getattr(args, "without_fs", False):
        overrides["model.with_fs"] = False
    return cfgmod.resolve_config(text, overrides)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        changed = [f"{k}={cfgmod.format_value(v)} (default {cfgmod.format_value(d)})"
                   for k, v, d in cfgmod.deviations(cfg) if not k.startswith("paths.")]
        if changed:
            print("note: non-default settings: " + ", ".join(changed), file=sys.stderr)
        wd = Workdir(cfg.paths.workdir) if args.command not in ("describe", "gradcheck") else (
            Workdir(cfg.paths.workdir) if Path(cfg.paths.workdir).exists() else None)
        threads = getattr(args, "threads", None)
        if threads is not None:
            limiter = threadpool_limits(limits=threads)
        else:
            limiter = nullcontext()
        with limiter:
            COMMANDS[args.command](args, cfg, wd)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except UwlocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
