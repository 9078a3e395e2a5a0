"""Comparison tables and difference plots over metrics and Dice rows.

render_comparison lines two synthesis-metrics tables up side by side and
emits per-metric difference series oriented so that positive always means
the "ours" side is better (MSE: baseline - ours; PSNR/SSIM: ours -
baseline).  render_dice_comparison lines up >= 2 methods' Dice rows per
region.  Supplied aggregate ("mean"/"avg") rows are carried through as
given; they are recomputed only when an input lacks one.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import DataError
from .tables import (
    DICE_AVG_LABEL,
    METRICS_MEAN_LABEL,
    DiceRecord,
    MetricsRecord,
    format_cell,
)

_PNG_METADATA = {"Software": "mmsynth"}


def count_low_scores(values, threshold: float = 50.0) -> int:
    """How many values fall strictly below the threshold."""
    return int(sum(1 for v in values if float(v) < threshold))


def _split_aggregate(records, label, side):
    rows = [r for r in records if r.scenario != label]
    aggregates = [r for r in records if r.scenario == label]
    if len(aggregates) > 1:
        raise DataError(f"{side}: multiple {label!r} rows")
    seen = set()
    for r in rows:
        if r.scenario in seen:
            raise DataError(f"{side}: duplicate scenario {r.scenario}")
        seen.add(r.scenario)
    if not rows:
        raise DataError(f"{side}: no scenario rows")
    return rows, aggregates[0] if aggregates else None


def _mean_metrics(rows) -> MetricsRecord:
    return MetricsRecord(
        METRICS_MEAN_LABEL,
        float(np.mean([r.mse for r in rows])),
        float(np.mean([r.psnr for r in rows])),
        float(np.mean([r.ssim for r in rows])),
        sum(r.n for r in rows),
    )


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def render_comparison(ours, baseline, out_dir) -> dict[str, Path]:
    """Side-by-side metrics table plus difference series and a plot.

    Differences are oriented positive = ours better and are antisymmetric
    under swapping the two inputs.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ours_rows, ours_mean = _split_aggregate(ours, METRICS_MEAN_LABEL, "ours")
    base_rows, base_mean = _split_aggregate(baseline, METRICS_MEAN_LABEL, "baseline")

    ours_set = {r.scenario for r in ours_rows}
    base_set = {r.scenario for r in base_rows}
    if ours_set != base_set:
        raise DataError(
            "scenario sets differ:"
            f" missing from baseline {sorted(ours_set - base_set)},"
            f" missing from ours {sorted(base_set - ours_set)}"
        )
    base_by = {r.scenario: r for r in base_rows}

    if ours_mean is None:
        ours_mean = _mean_metrics(ours_rows)
    if base_mean is None:
        base_mean = _mean_metrics(base_rows)

    pairs = [(base_by[r.scenario], r) for r in ours_rows] + [(base_mean, ours_mean)]

    table_path = out_dir / "comparison.csv"
    _write_rows(
        table_path,
        ("scenario", "mse_baseline", "mse_ours", "psnr_baseline", "psnr_ours",
         "ssim_baseline", "ssim_ours"),
        [
            (o.scenario, b.mse, o.mse, b.psnr, o.psnr, b.ssim, o.ssim)
            for b, o in pairs
        ],
    )

    diffs = [
        (o.scenario, b.mse - o.mse, o.psnr - b.psnr, o.ssim - b.ssim)
        for b, o in pairs
    ]
    diff_path = out_dir / "comparison_diff.csv"
    _write_rows(diff_path, ("scenario", "mse_diff", "psnr_diff", "ssim_diff"), diffs)

    plot_path = out_dir / "comparison.png"
    labels = [d[0] for d in diffs]
    x = np.arange(len(labels))
    fig, axes = plt.subplots(3, 1, figsize=(10, 8), sharex=True)
    for ax, title, idx in zip(axes, ("MSE (baseline - ours)", "PSNR (ours - baseline)",
                                     "SSIM (ours - baseline)"), (1, 2, 3)):
        ax.bar(x, [d[idx] for d in diffs], color="#4878d0")
        ax.axhline(0.0, color="black", linewidth=0.8)
        ax.set_ylabel(title, fontsize=9)
    axes[-1].set_xticks(x)
    axes[-1].set_xticklabels(labels, rotation=45, ha="right")
    axes[0].set_title("difference per scenario (positive = ours better)")
    fig.tight_layout()
    fig.savefig(plot_path, dpi=110, metadata=_PNG_METADATA)
    plt.close(fig)

    return {"table": table_path, "differences": diff_path, "plot": plot_path}


_REGION_FIELDS = (("dice_et", "ET"), ("dice_tc", "TC"), ("dice_wt", "WT"))


def _mean_dice(rows, method) -> DiceRecord:
    return DiceRecord(
        DICE_AVG_LABEL,
        float(np.mean([r.dice_et for r in rows])),
        float(np.mean([r.dice_tc for r in rows])),
        float(np.mean([r.dice_wt for r in rows])),
        method,
    )


def render_dice_comparison(records, out_dir) -> dict[str, Path]:
    """Table-2-shaped comparison of >= 2 methods' Dice rows plus plots.

    `records` is a flat list mixing methods; methods keep their first-seen
    order, scenarios the row order of the first method.  Emits the combined
    wide table, one grouped series file per region, and a grouped bar plot.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    methods: list[str] = []
    by_method: dict[str, list[DiceRecord]] = {}
    for r in records:
        if r.method not in by_method:
            methods.append(r.method)
            by_method[r.method] = []
        by_method[r.method].append(r)
    if len(methods) < 2:
        raise DataError(f"need at least 2 methods to compare, got {methods}")

    split = {
        m: _split_aggregate(by_method[m], DICE_AVG_LABEL, f"method {m!r}")
        for m in methods
    }
    first_rows = split[methods[0]][0]
    scenario_order = [r.scenario for r in first_rows]
    base_set = set(scenario_order)
    for m in methods[1:]:
        got = {r.scenario for r in split[m][0]}
        if got != base_set:
            raise DataError(
                f"method {m!r} scenario set differs:"
                f" missing {sorted(base_set - got)}, extra {sorted(got - base_set)}"
            )

    rows_by = {m: {r.scenario: r for r in split[m][0]} for m in methods}
    avgs = {
        m: (split[m][1] if split[m][1] is not None else _mean_dice(split[m][0], m))
        for m in methods
    }
    ordered = scenario_order + [DICE_AVG_LABEL]

    def cell(method, scenario, field):
        rec = avgs[method] if scenario == DICE_AVG_LABEL else rows_by[method][scenario]
        return getattr(rec, field)

    header = ["scenario"] + [
        f"{field}_{m}" for field, _ in _REGION_FIELDS for m in methods
    ]
    table_path = out_dir / "dice_comparison.csv"
    _write_rows(
        table_path,
        header,
        [
            [s] + [cell(m, s, field) for field, _ in _REGION_FIELDS for m in methods]
            for s in ordered
        ],
    )

    paths = {"table": table_path}
    for field, region in _REGION_FIELDS:
        series_path = out_dir / f"dice_{region.lower()}.csv"
        _write_rows(
            series_path,
            ["scenario"] + methods,
            [[s] + [cell(m, s, field) for m in methods] for s in ordered],
        )
        paths[f"series_{region.lower()}"] = series_path

    plot_path = out_dir / "dice_comparison.png"
    x = np.arange(len(ordered))
    width = 0.8 / len(methods)
    fig, axes = plt.subplots(3, 1, figsize=(11, 9), sharex=True)
    for ax, (field, region) in zip(axes, _REGION_FIELDS):
        for j, m in enumerate(methods):
            offset = (j - (len(methods) - 1) / 2) * width
            ax.bar(x + offset, [cell(m, s, field) for s in ordered], width, label=m)
        ax.set_ylabel(f"{region} Dice (%)", fontsize=9)
        ax.set_ylim(0, 100)
    axes[0].legend(loc="lower right", fontsize=8)
    axes[-1].set_xticks(x)
    axes[-1].set_xticklabels(ordered, rotation=45, ha="right")
    fig.tight_layout()
    fig.savefig(plot_path, dpi=110, metadata=_PNG_METADATA)
    plt.close(fig)
    paths["plot"] = plot_path

    return paths
