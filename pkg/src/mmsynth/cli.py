"""Command line entry point.

Subcommands cover the full pipeline: ``preprocess`` (dataset -> shards),
``train`` (shards -> checkpoints), ``synth`` (checkpoint -> NIfTI volumes
for every scenario), ``eval-metrics`` / ``eval-dice`` (tables), ``report``
(comparison tables and plots).

Parameter precedence: command line flag > MMSYNTH_SEED (seed only) >
``--config`` TOML file > built-in default. Every command writes the fully
resolved parameters to ``run_config.json`` in its output directory, and
rerunning a command with the same inputs and parameters reproduces its
outputs byte for byte.

Exit codes: 0 success, 1 domain error (single-line message on stderr),
2 usage error, 3 unexpected internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .checkpoint import build_models
from .errors import ConfigError, DataError, MmsynthError
from .evaluation import (
    evaluate_segmentation,
    evaluate_synthesis,
    export_for_backend,
    import_backend_labels,
    import_synthesized_volumes,
    reassemble_volumes,
    synth_sweep,
)
from .evaluation.backend_io import _as_labels
from .niftiio import read_nifti
from .preprocess import ShardManifest, read_shard, scan_dataset, shard_path, write_shards
from .published import published_dice, published_metrics
from .reporting import render_comparison, render_dice_comparison
from .scenarios import parse_scenario_list
from .tables import (
    read_dice_csv,
    read_dice_json,
    read_metrics_csv,
    read_metrics_json,
    write_dice_csv,
    write_dice_json,
    write_metrics_csv,
    write_metrics_json,
)
from .training import TrainConfig, train

PROG = "mmsynth"


@dataclass(frozen=True)
class _Param:
    kind: str  # str | int | float | bool | path | strlist
    default: object = None
    required: bool = False
    choices: tuple = ()
    help: str = ""


_TRAIN_DEFAULTS = TrainConfig()
_TRAIN_FIELDS = (
    "epochs",
    "batch_size",
    "lr",
    "beta1",
    "beta2",
    "lambda_rec",
    "lambda_adv",
    "seed",
    "base_width",
    "disc_width",
    "checkpoint_every",
    "max_batches",
    "val_batches",
)

SPECS: dict[str, dict[str, _Param]] = {
    "preprocess": {
        "root": _Param("path", required=True, help="dataset root (one directory per patient)"),
        "out": _Param("path", required=True, help="output directory for shards + manifest"),
        "shards": _Param("int", required=True, help="number of shard files to write"),
        "seed": _Param("int", default=0, help="shuffle seed"),
        "mode": _Param("str", default="padding", choices=("padding", "crop"),
                       help="canvas geometry: zero-pad or crop-and-resize"),
        "pooled_normalization": _Param("bool", default=False,
                                       help="normalize by the pooled 4-modality mean"),
        "drop_empty": _Param("bool", default=False, help="drop all-background slices"),
        "workers": _Param("int", default=1, help="parallel patient loaders"),
        "roles": _Param("str", help="comma list of per-shard roles, e.g. train,train,val,test"),
    },
    "train": {
        "data": _Param("path", required=True, help="shard directory from preprocess"),
        "out": _Param("path", required=True, help="output directory for checkpoints + log"),
        "resume": _Param("path", help="checkpoint to resume from"),
        "device": _Param("str", default="cpu", help="torch device"),
        "epochs": _Param("int", default=_TRAIN_DEFAULTS.epochs),
        "batch_size": _Param("int", default=_TRAIN_DEFAULTS.batch_size),
        "lr": _Param("float", default=_TRAIN_DEFAULTS.lr),
        "beta1": _Param("float", default=_TRAIN_DEFAULTS.beta1),
        "beta2": _Param("float", default=_TRAIN_DEFAULTS.beta2),
        "lambda_rec": _Param("float", default=_TRAIN_DEFAULTS.lambda_rec),
        "lambda_adv": _Param("float", default=_TRAIN_DEFAULTS.lambda_adv),
        "seed": _Param("int", default=_TRAIN_DEFAULTS.seed),
        "base_width": _Param("int", default=_TRAIN_DEFAULTS.base_width),
        "disc_width": _Param("int", default=_TRAIN_DEFAULTS.disc_width),
        "checkpoint_every": _Param("int", default=_TRAIN_DEFAULTS.checkpoint_every),
        "max_batches": _Param("int", default=_TRAIN_DEFAULTS.max_batches),
        "val_batches": _Param("int", default=_TRAIN_DEFAULTS.val_batches),
        "phase_boundaries": _Param("str", help="curriculum phase starts as 'e1,e2'"),
    },
    "synth": {
        "checkpoint": _Param("path", required=True, help="trained checkpoint (.npz)"),
        "data": _Param("path", required=True, help="shard directory from preprocess"),
        "out": _Param("path", required=True, help="output directory for NIfTI volumes"),
        "fold": _Param("str", default="test", choices=("train", "val", "test")),
        "scenarios": _Param("str", default="all",
                            help="'all' or comma list of masks like 0111,1011"),
        "include_full": _Param("bool", default=False,
                               help="with scenarios=all, also pass through 1111"),
        "batch_size": _Param("int", default=8),
    },
    "eval-metrics": {
        "synth_dir": _Param("path", required=True, help="directory written by synth"),
        "data": _Param("path", required=True, help="shard directory from preprocess"),
        "out": _Param("path", required=True),
        "fold": _Param("str", default="test", choices=("train", "val", "test")),
        "scenarios": _Param("str", default="all"),
        "average": _Param("str", default="slices", choices=("slices", "volumes"),
                          help="pool slice scores, or average per patient first"),
    },
    "eval-dice": {
        "pred_dir": _Param("path", required=True,
                           help="directory of backend label maps (*_seg.nii.gz)"),
        "gt_root": _Param("path", required=True,
                          help="dataset root holding ground-truth *_seg files"),
        "data": _Param("path", required=True, help="shard directory (defines the fold)"),
        "out": _Param("path", required=True),
        "fold": _Param("str", default="test", choices=("train", "val", "test")),
        "scenarios": _Param("str", default="all",
                            help="'all' includes the full-input scenario 1111"),
        "method": _Param("str", default="mmDM", help="method tag for the output rows"),
        "empty_value": _Param("float", default=100.0,
                              help="score when prediction and truth are both empty"),
    },
    "report": {
        "out": _Param("path", required=True),
        "metrics": _Param("str", help="our synthesis table: CSV/JSON path or published:<tag>"),
        "baseline": _Param("str", help="baseline synthesis table: path or published:<tag>"),
        "dice": _Param("strlist", help="dice table (repeatable): path or published:<tag>"),
    },
}

_COMMAND_HELP = {
    "preprocess": "normalize a dataset into shuffled slice shards",
    "train": "run the curriculum GAN training loop",
    "synth": "synthesize missing modalities for every scenario",
    "eval-metrics": "score synthesized volumes against the shards' ground truth",
    "eval-dice": "score backend segmentations against ground-truth labels",
    "report": "render comparison tables and plots",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command, spec in SPECS.items():
        sub = subs.add_parser(command, help=_COMMAND_HELP[command])
        sub.add_argument("--config", default=None, metavar="FILE",
                         help="TOML file of flat key = value parameters")
        for dest, p in spec.items():
            flag = "--" + dest.replace("_", "-")
            if p.kind == "bool":
                sub.add_argument(flag, dest=dest, action="store_const", const=True,
                                 default=None, help=p.help or None)
            elif p.kind == "strlist":
                sub.add_argument(flag, dest=dest, action="append", default=None,
                                 help=p.help or None)
            else:
                kwargs = {
                    "dest": dest,
                    "type": {"int": int, "float": float}.get(p.kind, str),
                    "default": None,
                    "help": p.help or None,
                }
                if p.choices:
                    kwargs["choices"] = list(p.choices)
                sub.add_argument(flag, **kwargs)
    return parser


def _load_config(path: Path) -> dict:
    try:
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"no config file at {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"unreadable config {path}: {exc}") from None
    for key, value in doc.items():
        if isinstance(value, dict):
            raise ConfigError(
                f"config {path}: nested table {key!r} not supported, use flat keys"
            )
    return doc


def _cast(dest: str, param: _Param, value, origin: str):
    kind = param.kind
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{origin}: {dest} must be a boolean, got {value!r}")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{origin}: {dest} must be an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{origin}: {dest} must be a number, got {value!r}")
        return float(value)
    if kind == "strlist":
        if isinstance(value, str):
            return [value]
        if isinstance(value, list) and all(isinstance(v, str) for v in value):
            return list(value)
        raise ConfigError(f"{origin}: {dest} must be a string or list of strings")
    if not isinstance(value, str):
        raise ConfigError(f"{origin}: {dest} must be a string, got {value!r}")
    if param.choices and value not in param.choices:
        raise ConfigError(
            f"{origin}: {dest} must be one of {', '.join(param.choices)}, got {value!r}"
        )
    return Path(value) if kind == "path" else value


def _resolve(command: str, args: argparse.Namespace) -> dict:
    spec = SPECS[command]
    resolved = {dest: p.default for dest, p in spec.items()}
    if args.config is not None:
        doc = _load_config(Path(args.config))
        unknown = sorted(set(doc) - set(spec))
        if unknown:
            raise ConfigError(
                f"unknown config keys for {command}: {', '.join(unknown)}"
            )
        for key, value in doc.items():
            resolved[key] = _cast(key, spec[key], value, f"config {args.config}")
    env_seed = os.environ.get("MMSYNTH_SEED")
    if env_seed is not None and "seed" in spec:
        try:
            resolved["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(
                f"MMSYNTH_SEED must be an integer, got {env_seed!r}"
            ) from None
    for dest, p in spec.items():
        value = getattr(args, dest)
        if value is None:
            continue
        resolved[dest] = Path(value) if p.kind == "path" else value
    for dest, p in spec.items():
        if p.required and resolved[dest] is None:
            raise ConfigError(
                f"{command}: missing required --{dest.replace('_', '-')}"
            )
    return resolved


def _write_run_config(out_dir: Path, command: str, resolved: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    params = {
        k: str(v) if isinstance(v, Path) else list(v) if isinstance(v, tuple) else v
        for k, v in resolved.items()
    }
    path = out_dir / "run_config.json"
    path.write_text(json.dumps({"command": command, "parameters": params},
                               indent=2, sort_keys=True) + "\n")
    return path


def _parse_scenarios(spec: str, include_full: bool):
    try:
        masks = parse_scenario_list(spec, include_full=include_full)
    except ValueError as exc:
        raise ConfigError(f"bad scenario list {spec!r}: {exc}") from None
    if any(m.present_count == 0 for m in masks):
        raise ConfigError(f"bad scenario list {spec!r}: 0000 has no present modality")
    return masks


def _fold_shard_ids(data_dir: Path, fold: str):
    manifest = ShardManifest.load(data_dir)
    shard_ids = manifest.shards_for_role(fold)
    if not shard_ids:
        raise ConfigError(f"manifest has no {fold} shards")
    return manifest, shard_ids


def _fold_samples(data_dir: Path, fold: str) -> list:
    manifest, shard_ids = _fold_shard_ids(data_dir, fold)
    samples = []
    for index in shard_ids:
        samples.extend(read_shard(shard_path(manifest, data_dir, index)))
    if not samples:
        raise DataError(f"{fold} shards contain no slices")
    return samples


def _fold_patients(data_dir: Path, fold: str) -> list[str]:
    manifest, shard_ids = _fold_shard_ids(data_dir, fold)
    return sorted({p for i in shard_ids for p in manifest.patients_in_shard(i)})


def _load_gt_labels(gt_root: Path, patients: list[str]) -> dict:
    labels = {}
    missing = []
    for patient_id in patients:
        patient_dir = gt_root / patient_id
        matches = sorted(patient_dir.glob("*_seg.nii*")) if patient_dir.is_dir() else []
        if not matches:
            missing.append(patient_id)
            continue
        if len(matches) > 1:
            names = ", ".join(p.name for p in matches)
            raise DataError(f"{patient_id}: multiple segmentation files: {names}")
        data, _ = read_nifti(matches[0])
        labels[patient_id] = _as_labels(data, matches[0])
    if missing:
        raise DataError(
            f"{len(missing)} ground-truth segmentation(s) missing under {gt_root}: "
            + ", ".join(missing)
        )
    return labels


def _parse_phases(spec):
    if spec is None:
        return None
    try:
        parts = tuple(int(tok) for tok in spec.split(","))
    except ValueError:
        raise ConfigError(f"phase boundaries must be integers, got {spec!r}") from None
    if len(parts) != 2:
        raise ConfigError(f"phase boundaries must be exactly two epochs, got {spec!r}")
    return parts


def cmd_preprocess(resolved: dict) -> int:
    cases = scan_dataset(resolved["root"])
    if not cases:
        raise DataError(f"no complete patients found under {resolved['root']}")
    roles = None
    if resolved["roles"] is not None:
        roles = [tok for tok in resolved["roles"].split(",") if tok]
    manifest = write_shards(
        cases,
        resolved["shards"],
        resolved["seed"],
        roles,
        resolved["out"],
        mode=resolved["mode"],
        pooled=resolved["pooled_normalization"],
        drop_empty=resolved["drop_empty"],
        workers=resolved["workers"],
    )
    _write_run_config(Path(resolved["out"]), "preprocess", resolved)
    total = sum(manifest.record_counts.values())
    print(
        f"wrote {manifest.shard_count} shard(s), {total} slices "
        f"from {len(cases)} patients -> {resolved['out']}"
    )
    return 0


def cmd_train(resolved: dict) -> int:
    mapping = {name: resolved[name] for name in _TRAIN_FIELDS}
    mapping["phase_boundaries"] = _parse_phases(resolved["phase_boundaries"])
    config = TrainConfig.from_mapping(mapping)
    out_dir = Path(resolved["out"])
    _write_run_config(out_dir, "train", resolved)
    result = train(
        resolved["data"],
        out_dir,
        config,
        resume_from=resolved["resume"],
        device=resolved["device"],
    )
    print(
        f"trained epochs {result.start_epoch}..{config.epochs - 1}; "
        f"final checkpoint {result.final_checkpoint}"
    )
    return 0


def cmd_synth(resolved: dict) -> int:
    generator, _, _ = build_models(resolved["checkpoint"])
    samples = _fold_samples(Path(resolved["data"]), resolved["fold"])
    scenarios = _parse_scenarios(resolved["scenarios"], resolved["include_full"])
    out_dir = Path(resolved["out"])
    _write_run_config(out_dir, "synth", resolved)
    cases = synth_sweep(generator, samples, scenarios, batch_size=resolved["batch_size"])
    written = export_for_backend(cases, out_dir)
    patients = {p.name.split("__", 1)[0] for p in written}
    print(
        f"wrote {len(written)} volume file(s) for {len(patients)} patient(s) "
        f"x {len(scenarios)} scenario(s) -> {out_dir}"
    )
    return 0


def cmd_eval_metrics(resolved: dict) -> int:
    samples = _fold_samples(Path(resolved["data"]), resolved["fold"])
    ground_truth = reassemble_volumes(samples)
    scenarios = _parse_scenarios(resolved["scenarios"], include_full=False)
    expected = [(pid, str(m)) for pid in sorted(ground_truth) for m in scenarios]
    cases = import_synthesized_volumes(resolved["synth_dir"], expected)
    records = evaluate_synthesis(
        cases, ground_truth, scenarios, average=resolved["average"]
    )
    out_dir = Path(resolved["out"])
    _write_run_config(out_dir, "eval-metrics", resolved)
    write_metrics_csv(records, out_dir / "metrics.csv")
    write_metrics_json(records, out_dir / "metrics.json")
    mean = records[-1]
    print(
        f"mean (n={mean.n}): mse={mean.mse:.6f} psnr={mean.psnr:.4f} "
        f"ssim={mean.ssim:.4f}"
    )
    print(f"wrote {out_dir / 'metrics.csv'} and {out_dir / 'metrics.json'}")
    return 0


def cmd_eval_dice(resolved: dict) -> int:
    patients = _fold_patients(Path(resolved["data"]), resolved["fold"])
    scenarios = _parse_scenarios(resolved["scenarios"], include_full=True)
    expected = [(pid, str(m)) for pid in patients for m in scenarios]
    predictions = import_backend_labels(resolved["pred_dir"], expected)
    ground_truth = _load_gt_labels(Path(resolved["gt_root"]), patients)
    records = evaluate_segmentation(
        predictions,
        ground_truth,
        scenarios,
        method=resolved["method"],
        empty_value=resolved["empty_value"],
    )
    out_dir = Path(resolved["out"])
    _write_run_config(out_dir, "eval-dice", resolved)
    write_dice_csv(records, out_dir / "dice.csv")
    write_dice_json(records, out_dir / "dice.json")
    avg = records[-1]
    print(
        f"avg dice ({avg.method}): et={avg.dice_et:.2f} tc={avg.dice_tc:.2f} "
        f"wt={avg.dice_wt:.2f}"
    )
    print(f"wrote {out_dir / 'dice.csv'} and {out_dir / 'dice.json'}")
    return 0


def _metrics_source(src: str):
    if src.startswith("published:"):
        return published_metrics(src.split(":", 1)[1])
    path = Path(src)
    if not path.exists():
        raise ConfigError(f"no such metrics table: {src}")
    return read_metrics_json(path) if path.suffix == ".json" else read_metrics_csv(path)


def _dice_source(src: str):
    if src.startswith("published:"):
        return published_dice(src.split(":", 1)[1])
    path = Path(src)
    if not path.exists():
        raise ConfigError(f"no such dice table: {src}")
    return read_dice_json(path) if path.suffix == ".json" else read_dice_csv(path)


def cmd_report(resolved: dict) -> int:
    metrics, baseline = resolved["metrics"], resolved["baseline"]
    if (metrics is None) != (baseline is None):
        raise ConfigError("a synthesis comparison needs both --metrics and --baseline")
    if metrics is None and not resolved["dice"]:
        raise ConfigError(
            "nothing to report: pass --metrics with --baseline, or two --dice sources"
        )
    out_dir = Path(resolved["out"])
    _write_run_config(out_dir, "report", resolved)
    written = []
    if metrics is not None:
        paths = render_comparison(_metrics_source(metrics), _metrics_source(baseline), out_dir)
        written.extend(paths.values())
    if resolved["dice"]:
        records = []
        for src in resolved["dice"]:
            records.extend(_dice_source(src))
        paths = render_dice_comparison(records, out_dir)
        written.extend(paths.values())
    for path in sorted(str(p) for p in written):
        print(f"wrote {path}")
    return 0


_HANDLERS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "synth": cmd_synth,
    "eval-metrics": cmd_eval_metrics,
    "eval-dice": cmd_eval_dice,
    "report": cmd_report,
}


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split())


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage or help
        return exc.code if isinstance(exc.code, int) else 2
    try:
        resolved = _resolve(args.command, args)
        return _HANDLERS[args.command](resolved)
    except MmsynthError as exc:
        print(f"{PROG}: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"{PROG}: internal: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
