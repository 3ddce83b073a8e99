"""Command-line front end: ``train``, ``grid``, ``analyze``, ``verify``.

Configuration is plain ``key = value`` text (``#`` comments allowed).  Every
key has a built-in default; a ``--config FILE`` overrides defaults, and an
explicit command-line flag overrides both, key by key.  ``train`` and
``grid`` create a fresh run directory ``<out>/<subcommand>-NNN`` and write a
``manifest.cfg`` holding the fully resolved configuration; feeding that file
back via ``--config`` reproduces the run exactly.  The output root is taken
from ``--out``, else the ``GRADTAMPER_OUT`` environment variable, else
``./runs``.

List-valued options accept either comma lists (``0.1,0.3,1.0``) or inclusive
ranges ``start:stop:step`` (``0:1:0.25`` -> 0, 0.25, 0.5, 0.75, 1.0).

Exit codes:
    0  success
    2  command-line usage error (from argparse)
    3  invalid configuration or input values
    4  output directory or file could not be created/written
    5  training diverged (NaN loss)
    6  verification found at least one failing property
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .harness import (
    DataSpec,
    DivergenceError,
    TrainConfig,
    analyze_transform,
    format_verify_report,
    grid_search,
    train,
    verify_claims,
    write_metrics_csv,
    write_transform_csv,
)
from .net import save_checkpoint
from .schedule import ScheduleSpec
from .transform import TamperSpec


class ConfigError(ValueError):
    """A configuration key or value that cannot be used; exits with code 3."""


_TRAIN_DEFAULTS: dict[str, str] = {
    # data source
    "data": "blobs",
    "classes": "10",
    "per_class": "100",
    "features": "20",
    "spread": "1.0",
    "data_seed": "7",
    "train_images": "none",
    "train_labels": "none",
    "test_images": "none",
    "test_labels": "none",
    # model
    "hidden": "64",
    "activation": "relu",
    # optimisation
    "epochs": "30",
    "batch_size": "32",
    "momentum": "0.9",
    "weight_decay": "0.0005",
    "nesterov": "true",
    "label_smoothing": "0.0",
    "clip_lambda": "none",
    "seed": "0",
    # learning-rate schedule
    "schedule": "warmup_cosine_cooldown",
    "base_lr": "0.0001",
    "peak_lr": "0.1",
    "warmup_epochs": "2",
    "total_epochs": "none",  # none -> same as epochs
    "cooldown_epochs": "4",
    "step_milestones": "",
    "step_factor": "0.1",
    # gradient tampering
    "alpha": "1.0",
    "start_epoch": "0",
}

_GRID_DEFAULTS: dict[str, str] = {
    "grid_alphas": "0.25,0.5,0.75,1.0",
    "grid_seeds": "0,1,2",
}


# ---------------------------------------------------------------------------
# value parsing
# ---------------------------------------------------------------------------


def _float_of(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _int_of(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _bool_of(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {raw!r}")


def _is_none(raw: str) -> bool:
    return raw.strip().lower() in ("", "none", "null")


def _int_tuple_of(key: str, raw: str) -> tuple[int, ...]:
    if not raw.strip():
        return ()
    return tuple(_int_of(key, tok.strip()) for tok in raw.split(",") if tok.strip())


def parse_value_list(text: str, what: str, integral: bool = False) -> list[float]:
    """Comma list or inclusive ``start:stop:step`` range."""
    text = text.strip()
    if not text:
        raise ConfigError(f"{what}: empty list")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{what}: range syntax is start:stop:step, got {text!r}")
        start, stop, step = (_float_of(what, p) for p in parts)
        if step <= 0:
            raise ConfigError(f"{what}: range step must be positive")
        if stop < start:
            raise ConfigError(f"{what}: range stop must be >= start")
        values = []
        i = 0
        while True:
            value = round(start + i * step, 10)
            if value > stop + 1e-9:
                break
            values.append(value)
            i += 1
    else:
        values = [_float_of(what, tok.strip()) for tok in text.split(",") if tok.strip()]
        if not values:
            raise ConfigError(f"{what}: empty list")
    if integral:
        bad = [v for v in values if v != int(v)]
        if bad:
            raise ConfigError(f"{what}: expected integers, got {bad}")
    return values


def parse_config_file(path: str) -> dict[str, str]:
    """Read ``key = value`` lines; '#' starts a comment, blanks are ignored."""
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def resolve_config(args: argparse.Namespace, defaults: dict[str, str]) -> dict[str, str]:
    """Defaults, then config-file entries, then explicit flags — per key."""
    kv = dict(defaults)
    if getattr(args, "config", None):
        file_kv = parse_config_file(args.config)
        unknown = sorted(set(file_kv) - set(kv))
        if unknown:
            raise ConfigError(f"{args.config}: unknown config keys: {', '.join(unknown)}")
        kv.update(file_kv)
    for key in kv:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            kv[key] = str(flag_value)
    return kv


def build_train_config(kv: dict[str, str]) -> TrainConfig:
    """Turn resolved key=value strings into a validated TrainConfig."""
    if kv["data"] == "idx":
        paths = {}
        for name in ("train_images", "train_labels", "test_images", "test_labels"):
            if _is_none(kv[name]):
                raise ConfigError(f"data = idx requires {name} to be a file path")
            paths[name] = kv[name]
        data = DataSpec(kind="idx", **paths)
    else:
        data = DataSpec(
            kind=kv["data"],
            classes=_int_of("classes", kv["classes"]),
            per_class=_int_of("per_class", kv["per_class"]),
            features=_int_of("features", kv["features"]),
            spread=_float_of("spread", kv["spread"]),
            seed=_int_of("data_seed", kv["data_seed"]),
        )
    epochs = _int_of("epochs", kv["epochs"])
    total = epochs if _is_none(kv["total_epochs"]) else _int_of("total_epochs", kv["total_epochs"])
    schedule = ScheduleSpec(
        kind=kv["schedule"],
        base_lr=_float_of("base_lr", kv["base_lr"]),
        peak_lr=_float_of("peak_lr", kv["peak_lr"]),
        warmup_epochs=_int_of("warmup_epochs", kv["warmup_epochs"]),
        total_epochs=total,
        cooldown_epochs=_int_of("cooldown_epochs", kv["cooldown_epochs"]),
        step_milestones=_int_tuple_of("step_milestones", kv["step_milestones"]),
        step_factor=_float_of("step_factor", kv["step_factor"]),
    )
    clip = None if _is_none(kv["clip_lambda"]) else _float_of("clip_lambda", kv["clip_lambda"])
    return TrainConfig(
        hidden=_int_tuple_of("hidden", kv["hidden"]),
        activation=kv["activation"],
        epochs=epochs,
        batch_size=_int_of("batch_size", kv["batch_size"]),
        schedule=schedule,
        momentum=_float_of("momentum", kv["momentum"]),
        weight_decay=_float_of("weight_decay", kv["weight_decay"]),
        nesterov=_bool_of("nesterov", kv["nesterov"]),
        tamper=TamperSpec(
            alpha=_float_of("alpha", kv["alpha"]),
            start_epoch=_int_of("start_epoch", kv["start_epoch"]),
        ),
        label_smoothing=_float_of("label_smoothing", kv["label_smoothing"]),
        clip_lambda=clip,
        seed=_int_of("seed", kv["seed"]),
        data=data,
    )


# ---------------------------------------------------------------------------
# run directories and manifests
# ---------------------------------------------------------------------------


def _output_root(args: argparse.Namespace) -> str:
    if getattr(args, "out", None):
        return args.out
    return os.environ.get("GRADTAMPER_OUT", "runs")


def _make_run_dir(root: str, subcommand: str) -> str:
    os.makedirs(root, exist_ok=True)
    for i in range(1000):
        candidate = os.path.join(root, f"{subcommand}-{i:03d}")
        try:
            os.mkdir(candidate)
        except FileExistsError:
            continue
        return candidate
    raise OSError(f"no free {subcommand}-NNN directory under {root}")


def write_manifest(path: str, subcommand: str, kv: dict[str, str]) -> None:
    lines = [
        f"# gradtamper {__version__} run manifest",
        f"# subcommand: {subcommand}",
        f"# reproduce with: gradtamper {subcommand} --config {os.path.basename(path)}",
    ]
    lines += [f"{key} = {kv[key]}" for key in sorted(kv)]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_train(args: argparse.Namespace) -> int:
    kv = resolve_config(args, _TRAIN_DEFAULTS)
    config = build_train_config(kv)
    run_dir = _make_run_dir(_output_root(args), "train")
    write_manifest(os.path.join(run_dir, "manifest.cfg"), "train", kv)

    net, records = train(config)

    metrics_path = os.path.join(run_dir, "metrics.csv")
    write_metrics_csv(records, metrics_path)
    save_checkpoint(net, os.path.join(run_dir, "net.ckpt"))
    last = records[-1]
    print(f"run directory: {run_dir}")
    print(
        f"epoch {last.epoch}: train_loss={last.train_loss:.4f} "
        f"train_acc={last.train_acc:.4f} test_acc={last.test_acc:.4f} "
        f"gap={last.gap:+.4f} mean_logit_norm={last.mean_logit_norm:.4f}"
    )
    print(f"metrics: {metrics_path}")
    return 0


def _cmd_grid(args: argparse.Namespace) -> int:
    defaults = dict(_TRAIN_DEFAULTS)
    defaults.update(_GRID_DEFAULTS)
    kv = resolve_config(args, defaults)
    alphas = parse_value_list(kv["grid_alphas"], "grid_alphas")
    seeds = [int(s) for s in parse_value_list(kv["grid_seeds"], "grid_seeds", integral=True)]
    base = build_train_config(kv)

    if args.resume:
        csv_path = args.resume
        if not os.path.exists(csv_path):
            raise ConfigError(f"--resume: {csv_path} does not exist")
        run_dir = os.path.dirname(os.path.abspath(csv_path))
    else:
        run_dir = _make_run_dir(_output_root(args), "grid")
        csv_path = os.path.join(run_dir, "grid.csv")
    write_manifest(os.path.join(run_dir, "manifest.cfg"), "grid", kv)

    rows = grid_search(base, alphas, seeds, csv_path)

    print(f"run directory: {run_dir}")
    ok = [r for r in rows if r.status == "ok"]
    for alpha in alphas:
        cell = [r for r in ok if r.alpha == alpha]
        if cell:
            print(
                f"alpha={alpha}: mean final train_acc "
                f"{np.mean([r.final_train_acc for r in cell]):.4f}, "
                f"test_acc {np.mean([r.final_test_acc for r in cell]):.4f}, "
                f"gap {np.mean([r.gap for r in cell]):+.4f} "
                f"({len(cell)} seeds)"
            )
        else:
            print(f"alpha={alpha}: no completed cells")
    diverged = len(rows) - len(ok)
    if diverged:
        print(f"{diverged} cell(s) diverged")
    print(f"grid csv: {csv_path}")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        p = [float(tok) for tok in args.p.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--p: expected comma-separated numbers, got {args.p!r}") from None
    alphas = parse_value_list(args.alphas, "--alphas")
    try:
        rows = analyze_transform(p, alphas)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    print("alpha      threshold    transformed")
    for row in rows:
        tau = "-" if row.threshold is None else f"{row.threshold:.9f}"
        body = " ".join(f"{v:.9f}" for v in row.transformed)
        print(f"{row.alpha:<10.4g} {tau:<12} {body}")
    if args.csv:
        write_transform_csv(rows, args.csv)
        print(f"wrote {args.csv}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    classes = [int(c) for c in parse_value_list(args.classes, "--classes", integral=True)]
    try:
        report = verify_claims(
            seed=args.seed,
            trials=args.trials,
            class_counts=tuple(classes),
            include_trend=args.trend,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(format_verify_report(report))
    return 0 if report.passed else 6


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------


def _add_config_flags(sub: argparse.ArgumentParser, keys: dict[str, str]) -> None:
    sub.add_argument("--config", metavar="FILE", help="key = value file overriding defaults")
    for key, default in keys.items():
        flag = "--" + key.replace("_", "-")
        sub.add_argument(flag, dest=key, metavar="V", default=None,
                         help=f"override config key {key} (default {default or repr('')})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradtamper",
        description="Dense-net training with power-law gradient tampering, "
        "plus sweep, analysis, and verification tools.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p_train = subs.add_parser("train", help="run one training job")
    _add_config_flags(p_train, _TRAIN_DEFAULTS)
    p_train.add_argument("--out", metavar="DIR", help="output root (default $GRADTAMPER_OUT or ./runs)")

    p_grid = subs.add_parser("grid", help="sweep tampering strengths x seeds")
    merged = dict(_TRAIN_DEFAULTS)
    merged.update(_GRID_DEFAULTS)
    _add_config_flags(p_grid, merged)
    p_grid.add_argument("--out", metavar="DIR", help="output root (default $GRADTAMPER_OUT or ./runs)")
    p_grid.add_argument("--resume", metavar="CSV", help="append to an existing grid CSV, skipping finished cells")

    p_an = subs.add_parser("analyze", help="tabulate the transform on one distribution")
    p_an.add_argument("--p", required=True, metavar="P0,P1,...", help="probability vector")
    p_an.add_argument("--alphas", default="0:1:0.1", metavar="LIST",
                      help="strengths: comma list or start:stop:step (default 0:1:0.1)")
    p_an.add_argument("--csv", metavar="FILE", help="also write rows to this CSV")

    p_ver = subs.add_parser("verify", help="check the analytic claims on random inputs")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--trials", type=int, default=1000, help="random vectors per class count")
    p_ver.add_argument("--classes", default="2,10,100", metavar="LIST", help="class counts to sample")
    p_ver.add_argument("--trend", action="store_true",
                       help="also run the (slow, informational) logit-norm trend comparison")

    return parser


_HANDLERS = {
    "train": _cmd_train,
    "grid": _cmd_grid,
    "analyze": _cmd_analyze,
    "verify": _cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.subcommand](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # Validation raised by the dataclasses themselves.
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
