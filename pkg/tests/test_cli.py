import json
import shutil
import subprocess
import sys
from types import SimpleNamespace

import numpy as np
import pytest

from mmsynth import cli
from mmsynth.evaluation import entry_name
from mmsynth.niftiio import read_nifti, write_nifti
from mmsynth.scenarios import enumerate_scenarios
from mmsynth.tables import read_dice_csv, read_metrics_csv


def run_cli(capsys, *argv):
    rc = cli.main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def test_no_command_is_usage_error(capsys):
    assert cli.main([]) == 2


def test_unknown_flag_is_usage_error(capsys):
    assert cli.main(["preprocess", "--no-such-flag", "1"]) == 2


def test_bad_choice_is_usage_error(capsys):
    assert cli.main(["synth", "--fold", "weird"]) == 2


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    assert cli.main(["preprocess", "--help"]) == 0


def test_missing_required_flag(capsys):
    rc, _, err = run_cli(capsys, "preprocess", "--root", "/nowhere")
    assert rc == 1
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("mmsynth: ConfigError:")
    assert "--out" in lines[0]


def test_error_output_is_single_line(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('root = "/a"\nmystery = 3\n')
    rc, _, err = run_cli(capsys, "preprocess", "--config", str(cfg))
    assert rc == 1
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert "unknown config keys for preprocess: mystery" in lines[0]


def test_config_nested_table_rejected(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[train]\nepochs = 1\n")
    rc, _, err = run_cli(capsys, "train", "--config", str(cfg))
    assert rc == 1 and "flat keys" in err


def test_config_type_mismatch_rejected(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('shards = "three"\n')
    rc, _, err = run_cli(capsys, "preprocess", "--config", str(cfg))
    assert rc == 1 and "must be an integer" in err


def test_config_missing_file(capsys, tmp_path):
    rc, _, err = run_cli(capsys, "preprocess", "--config", str(tmp_path / "none.toml"))
    assert rc == 1 and "no config file" in err


def test_bad_env_seed(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("MMSYNTH_SEED", "lots")
    rc, _, err = run_cli(capsys, "preprocess", "--root", "x", "--out", "y", "--shards", "1")
    assert rc == 1 and "MMSYNTH_SEED" in err


def test_internal_error_exits_three(capsys, monkeypatch, tmp_path):
    def boom(resolved):
        raise RuntimeError("wires crossed")

    monkeypatch.setitem(cli._HANDLERS, "report", boom)
    rc, _, err = run_cli(
        capsys, "report", "--out", str(tmp_path),
        "--metrics", "published:mmgan-ours", "--baseline", "published:mmgan-original",
    )
    assert rc == 3
    assert err.strip() == "mmsynth: internal: RuntimeError: wires crossed"


def test_report_published_only(capsys, tmp_path):
    out = tmp_path / "rep"
    rc, stdout, _ = run_cli(
        capsys, "report", "--out", str(out),
        "--metrics", "published:mmgan-ours",
        "--baseline", "published:mmgan-original",
        "--dice", "published:mmDM", "--dice", "published:ACN-published",
    )
    assert rc == 0
    assert (out / "comparison.csv").exists()
    assert (out / "comparison.png").exists()
    assert (out / "dice_et.csv").exists()
    doc = json.loads((out / "run_config.json").read_text())
    assert doc["command"] == "report"
    assert doc["parameters"]["dice"] == ["published:mmDM", "published:ACN-published"]
    for line in stdout.strip().splitlines():
        assert line.startswith("wrote ")


def test_report_requires_both_sides(capsys, tmp_path):
    rc, _, err = run_cli(
        capsys, "report", "--out", str(tmp_path), "--metrics", "published:mmgan-ours"
    )
    assert rc == 1 and "--baseline" in err


def test_report_requires_some_source(capsys, tmp_path):
    rc, _, err = run_cli(capsys, "report", "--out", str(tmp_path))
    assert rc == 1 and "nothing to report" in err


def test_report_unknown_published_tag(capsys, tmp_path):
    rc, _, err = run_cli(
        capsys, "report", "--out", str(tmp_path),
        "--metrics", "published:nope", "--baseline", "published:mmgan-original",
    )
    assert rc == 1 and "nope" in err


def test_report_missing_table_path(capsys, tmp_path):
    rc, _, err = run_cli(
        capsys, "report", "--out", str(tmp_path),
        "--metrics", str(tmp_path / "gone.csv"), "--baseline", "published:mmgan-original",
    )
    assert rc == 1 and "no such metrics table" in err


def test_console_entry_point(tmp_path):
    rc = subprocess.run(
        [sys.executable, "-m", "mmsynth.cli", "report", "--out", str(tmp_path / "r"),
         "--metrics", "published:mmgan-ours", "--baseline", "published:mmgan-original"],
        capture_output=True, text=True,
    )
    assert rc.returncode == 0, rc.stderr
    assert (tmp_path / "r" / "comparison.csv").exists()


def test_seed_precedence(capsys, tmp_path, monkeypatch, brats_root):
    cfg = tmp_path / "pre.toml"
    cfg.write_text(
        f'root = "{brats_root}"\nshards = 1\nseed = 11\n'
    )

    def seed_of(out):
        return json.loads((out / "run_config.json").read_text())["parameters"]["seed"]

    out1 = tmp_path / "o1"
    rc, _, _ = run_cli(capsys, "preprocess", "--config", str(cfg), "--out", str(out1))
    assert rc == 0 and seed_of(out1) == 11

    monkeypatch.setenv("MMSYNTH_SEED", "22")
    out2 = tmp_path / "o2"
    rc, _, _ = run_cli(capsys, "preprocess", "--config", str(cfg), "--out", str(out2))
    assert rc == 0 and seed_of(out2) == 22

    out3 = tmp_path / "o3"
    rc, _, _ = run_cli(
        capsys, "preprocess", "--config", str(cfg), "--out", str(out3), "--seed", "33"
    )
    assert rc == 0 and seed_of(out3) == 33


def test_preprocess_bad_roles(capsys, tmp_path, brats_root):
    rc, _, err = run_cli(
        capsys, "preprocess", "--root", str(brats_root), "--out", str(tmp_path / "o"),
        "--shards", "3", "--roles", "train,val",
    )
    assert rc == 1 and "roles" in err


def test_preprocess_empty_root(capsys, tmp_path):
    rc, _, err = run_cli(
        capsys, "preprocess", "--root", str(tmp_path / "void"), "--out",
        str(tmp_path / "o"), "--shards", "1",
    )
    assert rc == 1 and "no complete patients" in err


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory, brats_root):
    """preprocess -> train -> synth on the synthetic dataset, via the CLI."""
    base = tmp_path_factory.mktemp("cli_pipeline")
    data, run, synth = base / "shards", base / "run", base / "synth"
    assert cli.main([
        "preprocess", "--root", str(brats_root), "--out", str(data),
        "--shards", "3", "--seed", "5",
    ]) == 0
    assert cli.main([
        "train", "--data", str(data), "--out", str(run),
        "--epochs", "1", "--batch-size", "2", "--base-width", "4",
        "--disc-width", "4", "--checkpoint-every", "1", "--max-batches", "2",
        "--val-batches", "1", "--seed", "3",
    ]) == 0
    checkpoint = sorted(run.glob("checkpoint_*.npz"))[-1]
    assert cli.main([
        "synth", "--checkpoint", str(checkpoint), "--data", str(data),
        "--out", str(synth),
    ]) == 0
    return SimpleNamespace(base=base, data=data, run=run, synth=synth,
                           checkpoint=checkpoint)


def test_pipeline_outputs(pipeline):
    manifest = json.loads((pipeline.data / "manifest.json").read_text())
    assert manifest["shard_count"] == 3
    assert (pipeline.run / "run_config.json").exists()
    test_patients = [p for p, s in manifest["assignment"].items()
                     if manifest["fold_roles"][str(s)] == "test"]
    files = sorted(p.name for p in pipeline.synth.glob("*.nii.gz"))
    assert len(files) == len(test_patients) * 14 * 4
    doc = json.loads((pipeline.synth / "run_config.json").read_text())
    assert doc["command"] == "synth" and doc["parameters"]["fold"] == "test"


def test_synth_rerun_is_byte_identical(pipeline, capsys):
    again = pipeline.base / "synth_again"
    rc, _, _ = run_cli(
        capsys, "synth", "--checkpoint", str(pipeline.checkpoint),
        "--data", str(pipeline.data), "--out", str(again),
    )
    assert rc == 0
    names = sorted(p.name for p in pipeline.synth.glob("*.nii.gz"))
    assert names == sorted(p.name for p in again.glob("*.nii.gz"))
    for name in names[:8]:
        assert (pipeline.synth / name).read_bytes() == (again / name).read_bytes()


def test_eval_metrics_end_to_end(pipeline, capsys):
    out1, out2 = pipeline.base / "m1", pipeline.base / "m2"
    for out in (out1, out2):
        rc, stdout, _ = run_cli(
            capsys, "eval-metrics", "--synth-dir", str(pipeline.synth),
            "--data", str(pipeline.data), "--out", str(out),
        )
        assert rc == 0
        assert "mean (n=" in stdout
    records = read_metrics_csv(out1 / "metrics.csv")
    assert [r.scenario for r in records[:-1]] == [
        str(m) for m in enumerate_scenarios()
    ]
    assert records[-1].scenario == "mean"
    assert records[-1].n == sum(r.n for r in records[:-1])
    assert all(r.n > 0 for r in records[:-1])
    assert (out1 / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()
    assert (out1 / "metrics.json").read_bytes() == (out2 / "metrics.json").read_bytes()


def test_eval_metrics_missing_volume(pipeline, capsys, tmp_path):
    partial = tmp_path / "partial"
    shutil.copytree(pipeline.synth, partial)
    removed = sorted(partial.glob("*_t1.nii.gz"))[0]
    removed.unlink()
    rc, _, err = run_cli(
        capsys, "eval-metrics", "--synth-dir", str(partial),
        "--data", str(pipeline.data), "--out", str(tmp_path / "m"),
    )
    assert rc == 1
    assert "missing" in err and removed.name in err


def test_eval_dice_end_to_end(pipeline, capsys, brats_root):
    manifest = json.loads((pipeline.data / "manifest.json").read_text())
    patients = sorted(p for p, s in manifest["assignment"].items()
                      if manifest["fold_roles"][str(s)] == "test")
    preds = pipeline.base / "preds"
    preds.mkdir()
    for pid in patients:
        seg, affine = read_nifti(brats_root / pid / f"{pid}_seg.nii.gz")
        for mask in enumerate_scenarios(include_full=True):
            write_nifti(preds / entry_name(pid, mask, "seg"), seg, affine)
    out = pipeline.base / "dice"
    rc, stdout, _ = run_cli(
        capsys, "eval-dice", "--pred-dir", str(preds), "--gt-root", str(brats_root),
        "--data", str(pipeline.data), "--out", str(out), "--method", "perfect",
    )
    assert rc == 0
    assert "avg dice (perfect)" in stdout
    records = read_dice_csv(out / "dice.csv")
    assert len(records) == 16
    assert all(r.method == "perfect" for r in records)
    for r in records:
        assert r.dice_et == 100.0 and r.dice_tc == 100.0 and r.dice_wt == 100.0


def test_eval_dice_missing_prediction(pipeline, capsys, brats_root, tmp_path):
    rc, _, err = run_cli(
        capsys, "eval-dice", "--pred-dir", str(tmp_path), "--gt-root", str(brats_root),
        "--data", str(pipeline.data), "--out", str(tmp_path / "d"),
    )
    assert rc == 1 and "label file(s) missing" in err


def test_report_with_computed_metrics(pipeline, capsys):
    metrics_dir = pipeline.base / "m_for_report"
    rc, _, _ = run_cli(
        capsys, "eval-metrics", "--synth-dir", str(pipeline.synth),
        "--data", str(pipeline.data), "--out", str(metrics_dir),
    )
    assert rc == 0
    out = pipeline.base / "report"
    rc, stdout, _ = run_cli(
        capsys, "report", "--out", str(out),
        "--metrics", str(metrics_dir / "metrics.json"),
        "--baseline", "published:mmgan-original",
    )
    assert rc == 0
    assert (out / "comparison.csv").exists()
    assert (out / "comparison_diff.csv").exists()


def test_train_rejects_unknown_config_key(capsys, tmp_path, pipeline):
    cfg = tmp_path / "t.toml"
    cfg.write_text(f'data = "{pipeline.data}"\nmomentum = 0.9\n')
    rc, _, err = run_cli(capsys, "train", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert rc == 1 and "momentum" in err


def test_train_bad_phase_boundaries(capsys, tmp_path, pipeline):
    rc, _, err = run_cli(
        capsys, "train", "--data", str(pipeline.data), "--out", str(tmp_path / "o"),
        "--phase-boundaries", "10",
    )
    assert rc == 1 and "exactly two" in err


def test_synth_bad_scenarios(capsys, tmp_path, pipeline):
    rc, _, err = run_cli(
        capsys, "synth", "--checkpoint", str(pipeline.checkpoint),
        "--data", str(pipeline.data), "--out", str(tmp_path / "o"),
        "--scenarios", "0000",
    )
    assert rc == 1 and "bad scenario list" in err
