"""Command-line entry point: ``nonresp <command> [options]``.

Every command reads an optional flat ``key=value`` config file
(``--config``), then applies ``--set key=value`` overrides and the
dedicated flags, which win. Outputs are written to temporary files and
renamed into place only after the whole command has succeeded.

Config keys
-----------
data            ``synth`` (default) or a CSV path
schema          schema file for a CSV source (default: the bundled schema)
n_rows, positive_rate, missing_rate, synth_seed
                synthetic generator settings (``synth_seed`` defaults to ``seed``)
model           null | knn | cart | rf | adaboost | logreg | svc | mlp
model.<param>   model hyperparameter, e.g. ``model.k=8``
impute, encoder, drop_first, scaler
                preprocessing recipe; ``scaler=auto`` picks the model default
test_fraction, n_splits, stratified
                split plan
seed            master seed (default: $NONRESP_SEED or 0)
out             output directory
metric          accuracy | balanced_accuracy (model selection)
param, values   validation-curve parameter and comma-separated values
grid.<param>    comma-separated grid values for grid-search
n_repeats       permutation-importance repeats
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, NonrespError, NumericFailure, UsageError
from .evaluate import confusion, grid_search, metrics, roc_curve, validation_curve
from .interpret import permutation_importance
from .models import MODEL_NAMES, build, coerce, default_recipe, entry, model_params
from .preprocess import pipeline_fit_predict
from .synth import SyntheticConfig, synth_generate
from .tabular import SplitPlan, bundled_schema, format_csv, format_schema, read_csv, read_schema, train_test_split

COMMANDS = ("synth", "train-eval", "validation-curve", "grid-search", "importance")

DEFAULTS = {
    "data": "synth",
    "schema": "",
    "n_rows": 5820,
    "positive_rate": 0.083,
    "missing_rate": 0.01,
    "synth_seed": -1,
    "model": "rf",
    "impute": True,
    "encoder": "ordinal",
    "drop_first": True,
    "scaler": "auto",
    "test_fraction": 0.25,
    "n_splits": 5,
    "stratified": False,
    "seed": 0,
    "out": "out",
    "metric": "accuracy",
    "param": "",
    "values": "",
    "n_repeats": 10,
}
REPORT_KEYS = ("model", "seed", "tp", "tn", "fp", "fn", "accuracy", "balanced_accuracy",
               "misclassification", "precision", "recall", "specificity", "fpr", "auc",
               "train_accuracy", "wall_ms")


# --------------------------------------------------------------------- config

def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def resolve_config(file_values: dict, overrides: dict) -> dict:
    """Merge defaults, file values and overrides; coerce known keys."""
    env_seed = os.environ.get("NONRESP_SEED")
    cfg = dict(DEFAULTS)
    if env_seed is not None and env_seed.strip():
        cfg["seed"] = coerce(env_seed.strip(), 0)
    merged = {**file_values, **overrides}
    for key, value in merged.items():
        if key in DEFAULTS:
            cfg[key] = coerce(value, DEFAULTS[key])
        elif key.startswith(("model.", "grid.")):
            cfg[key] = value
        else:
            raise UsageError(f"unknown config key {key!r}")
    if cfg["seed"] < 0:
        raise UsageError("seed must be non-negative")
    entry(cfg["model"])
    return cfg


def model_overrides(cfg: dict) -> dict:
    return {k[len("model."):]: v for k, v in cfg.items() if k.startswith("model.")}


# ------------------------------------------------------------------ data/runs

def load_table(cfg: dict):
    if cfg["data"] == "synth":
        seed = cfg["seed"] if cfg["synth_seed"] < 0 else cfg["synth_seed"]
        return synth_generate(SyntheticConfig(cfg["n_rows"], cfg["positive_rate"], seed=seed,
                                              missing_rate=cfg["missing_rate"]))
    schema = read_schema(cfg["schema"]) if cfg["schema"] else bundled_schema()
    return read_csv(cfg["data"], schema)


def _plan(cfg):
    return SplitPlan(cfg["test_fraction"], cfg["n_splits"], cfg["seed"], cfg["stratified"])


def _recipe(cfg):
    scaler = None if cfg["scaler"] == "auto" else cfg["scaler"]
    return default_recipe(cfg["model"], impute=cfg["impute"], encoder=cfg["encoder"],
                          drop_first=cfg["drop_first"], scaler=scaler)


def _split(table, cfg):
    return train_test_split(table.n_rows, _plan(cfg), table.labels() if cfg["stratified"] else None)


def _factory(cfg):
    name = cfg["model"]
    base = model_overrides(cfg)

    def make(**params):
        return build(name, {**base, **params}, cfg["seed"])
    return make


def _meta(cfg, command):
    return json.dumps({"command": command, "version": __version__, "config": cfg}, indent=2, sort_keys=True) + "\n"


def run_train_eval(cfg: dict) -> dict:
    """Fit on the train split and evaluate on the test split.

    Returns ``{filename: text}`` for report.json, roc.csv and run_meta.json.
    """
    start = time.perf_counter()
    table = load_table(cfg)
    train_idx, test_idx = _split(table, cfg)
    model = build(cfg["model"], model_overrides(cfg), cfg["seed"])
    pipe, pred, scores = pipeline_fit_predict(table, train_idx, test_idx, _recipe(cfg), model)
    y = table.labels()
    y_test = y[test_idx]
    cm = confusion(y_test, pred)
    rep = metrics(cm, y_test, scores)
    train_acc = float(np.mean(pipe.predict(table.take(train_idx)) == y[train_idx]))
    wall_ms = (time.perf_counter() - start) * 1000.0
    values = {"model": cfg["model"], "seed": cfg["seed"], "tp": cm.tp, "tn": cm.tn, "fp": cm.fp,
              "fn": cm.fn, **rep.as_dict(), "train_accuracy": train_acc, "wall_ms": round(wall_ms, 3)}
    report = {k: values[k] for k in REPORT_KEYS if k in values}
    if cfg["model"] == "svc":
        report["kkt_feasible"] = bool(pipe.classifier.kkt_feasible())
    files = {"report.json": json.dumps(report, indent=2) + "\n", "run_meta.json": _meta(cfg, "train-eval")}
    if len(np.unique(y_test)) == 2:
        curve = roc_curve(y_test, scores)
        files["roc.csv"] = curve.to_csv()
        files["roc.svg"] = svg_polyline(curve.fpr, curve.tpr, "false positive rate", "true positive rate")
    return files


def run_validation_curve(cfg: dict) -> dict:
    if not cfg["param"] or not cfg["values"]:
        raise UsageError("validation-curve needs param= and values=")
    table = load_table(cfg)
    train_idx, _ = _split(table, cfg)
    defaults = model_params(cfg["model"])
    if cfg["param"] not in defaults:
        raise UsageError(f"model {cfg['model']!r} has no parameter {cfg['param']!r}")
    values = [coerce(v.strip(), defaults[cfg["param"]]) for v in cfg["values"].split(",") if v.strip()]
    res = validation_curve(_factory(cfg), cfg["param"], values, table.take(train_idx), _plan(cfg),
                           _recipe(cfg), metric=cfg["metric"])
    xs = np.arange(len(values), dtype=np.float64)
    return {
        "validation_curve.csv": res.to_csv(),
        "validation_curve.svg": svg_polyline(xs, res.val_mean, cfg["param"], cfg["metric"], second=res.train_mean),
        "run_meta.json": _meta(cfg, "validation-curve"),
    }


def _grid(cfg):
    defaults = model_params(cfg["model"])
    grid = {}
    for key, text in cfg.items():
        if key.startswith("grid."):
            name = key[len("grid."):]
            if name not in defaults:
                raise UsageError(f"model {cfg['model']!r} has no parameter {name!r}")
            grid[name] = [coerce(v.strip(), defaults[name]) for v in str(text).split(",") if v.strip()]
    if not grid:
        raise UsageError("grid-search needs at least one grid.<param>= entry")
    return grid


def run_grid_search(cfg: dict) -> tuple[dict, str]:
    table = load_table(cfg)
    train_idx, _ = _split(table, cfg)
    res = grid_search(_factory(cfg), _grid(cfg), table.take(train_idx), _plan(cfg), _recipe(cfg),
                      metric=cfg["metric"])
    lines = ["param,train_mean,train_std,val_mean,val_std"]
    for params, vm, vs, tm, ts in res.cells:
        label = ";".join(f"{k}={v}" for k, v in params.items())
        lines.append(f"{label},{tm!r},{ts!r},{vm!r},{vs!r}")
    best = json.dumps({"best": res.best, "val_mean": res.best_score}, sort_keys=True)
    files = {"grid_search.csv": "\n".join(lines) + "\n", "best_params.json": best + "\n",
             "run_meta.json": _meta(cfg, "grid-search")}
    return files, best


def run_importance(cfg: dict) -> dict:
    table = load_table(cfg)
    train_idx, test_idx = _split(table, cfg)
    model = build(cfg["model"], model_overrides(cfg), cfg["seed"])
    pipe, _, _ = pipeline_fit_predict(table, train_idx, test_idx, _recipe(cfg), model)
    res = permutation_importance(pipe, table.take(test_idx), cfg["n_repeats"], cfg["seed"])
    return {"importance.csv": res.to_csv(), "run_meta.json": _meta(cfg, "importance")}


def run_synth(cfg: dict) -> dict:
    table = load_table({**cfg, "data": "synth"})
    return {"data.csv": format_csv(table), "schema.txt": format_schema(table.schema)}


# --------------------------------------------------------------------- output

def svg_polyline(xs, ys, xlabel, ylabel, second=None, size=320) -> str:
    """Minimal standalone SVG line chart on the unit-scaled data range."""
    def scale(v):
        v = np.asarray(v, dtype=np.float64)
        lo, hi = float(np.nanmin(v)), float(np.nanmax(v))
        return (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)

    pad = 40
    span = size - 2 * pad
    sx = scale(xs)
    series = [ys] if second is None else [ys, second]
    both = scale(np.concatenate([np.asarray(s, dtype=np.float64) for s in series]))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
             f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black"/>']
    colors = ("#1f4e9c", "#b04020")
    for k in range(len(series)):
        sy = both[k * len(sx):(k + 1) * len(sx)]
        pts = " ".join(f"{pad + x * span:.2f},{pad + (1 - y) * span:.2f}" for x, y in zip(sx, sy))
        parts.append(f'<polyline fill="none" stroke="{colors[k]}" points="{pts}"/>')
    parts.append(f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="12" y="{size / 2}" transform="rotate(-90 12 {size / 2})" '
                 f'text-anchor="middle">{ylabel}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_outputs(out_dir, files: dict) -> None:
    """Write every file to a temporary name first, then rename them all."""
    out = Path(out_dir)
    staged = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
            staged.append((tmp, out / name))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, final in staged:
            os.replace(tmp, final)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise DataError(f"cannot write to {out_dir}: {exc.strerror or exc}") from exc


# ----------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonresp", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--data", help="'synth' or a CSV path")
        if name != "synth":
            p.add_argument("--model", choices=MODEL_NAMES)
            p.add_argument("--svg", action="store_true", help="also write SVG figures")
    return parser


def _overrides(args) -> dict:
    out = parse_config_text("\n".join(args.set), "--set")
    for key in ("seed", "out", "data", "model"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return UsageError.exit_code if exc.code else 0
    try:
        file_values = {}
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from exc
            file_values = parse_config_text(text, args.config)
        cfg = resolve_config(file_values, _overrides(args))
        stdout = None
        if args.command == "synth":
            files = run_synth(cfg)
        elif args.command == "train-eval":
            files = run_train_eval(cfg)
        elif args.command == "validation-curve":
            files = run_validation_curve(cfg)
        elif args.command == "grid-search":
            files, stdout = run_grid_search(cfg)
        else:
            files = run_importance(cfg)
        if not getattr(args, "svg", False):
            files = {k: v for k, v in files.items() if not k.endswith(".svg")}
        write_outputs(cfg["out"], files)
        if stdout:
            print(stdout)
        return 0
    except NonrespError as exc:
        print(f"nonresp: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FloatingPointError as exc:
        print(f"nonresp: numeric failure: {exc}", file=sys.stderr)
        return NumericFailure.exit_code
    except OSError as exc:
        print(f"nonresp: error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
