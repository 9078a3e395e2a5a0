"""Result tables: per-scenario synthesis metrics and segmentation Dice rows.

Two row types cover the two report shapes: MetricsRecord (MSE/PSNR/SSIM per
scenario, plus a "mean" aggregate row) and DiceRecord (ET/TC/WT Dice per
scenario and method, plus an "avg" aggregate row).  Both serialize to CSV and
JSON with fixed column sets so outputs from different runs diff cleanly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .scenarios import ScenarioMask

METRICS_COLUMNS = ("scenario", "mse", "psnr", "ssim", "n")
DICE_COLUMNS = ("scenario", "dice_et", "dice_tc", "dice_wt", "method")

# Row label for the aggregate line of each table kind.
METRICS_MEAN_LABEL = "mean"
DICE_AVG_LABEL = "avg"


def _check_scenario(value: str, aggregate_label: str) -> str:
    if value == aggregate_label:
        return value
    try:
        mask = ScenarioMask.from_string(value)
    except ValueError as exc:
        raise DataError(f"bad scenario label {value!r}: {exc}") from None
    if mask.present_count == 0:
        raise DataError("scenario 0000 has no present modality and no row")
    return value


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DataError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class MetricsRecord:
    """One synthesis-quality row: scenario plus pooled MSE/PSNR/SSIM.

    `n` counts the pooled (missing channel, slice) samples behind the row.
    Rows ingested from published tables carry n=0: the source reports point
    values without sample counts.  Computed rows always have n >= 1.
    """

    scenario: str
    mse: float
    psnr: float
    ssim: float
    n: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "scenario", _check_scenario(self.scenario, METRICS_MEAN_LABEL)
        )
        object.__setattr__(self, "mse", _check_finite("mse", self.mse))
        object.__setattr__(self, "psnr", _check_finite("psnr", self.psnr))
        object.__setattr__(self, "ssim", _check_finite("ssim", self.ssim))
        if self.mse < 0:
            raise DataError(f"mse must be >= 0, got {self.mse}")
        if self.ssim > 1.0:
            raise DataError(f"ssim must be <= 1, got {self.ssim}")
        object.__setattr__(self, "n", int(self.n))
        if self.n < 0:
            raise DataError(f"n must be >= 0, got {self.n}")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "mse": self.mse,
            "psnr": self.psnr,
            "ssim": self.ssim,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsRecord":
        try:
            return cls(
                scenario=str(d["scenario"]),
                mse=float(d["mse"]),
                psnr=float(d["psnr"]),
                ssim=float(d["ssim"]),
                n=int(d["n"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"bad metrics row {d!r}: {exc}") from None


@dataclass(frozen=True)
class DiceRecord:
    """One segmentation-quality row: scenario plus ET/TC/WT Dice for a method."""

    scenario: str
    dice_et: float
    dice_tc: float
    dice_wt: float
    method: str

    def __post_init__(self):
        object.__setattr__(
            self, "scenario", _check_scenario(self.scenario, DICE_AVG_LABEL)
        )
        for name in ("dice_et", "dice_tc", "dice_wt"):
            value = _check_finite(name, getattr(self, name))
            object.__setattr__(self, name, value)
            if not 0.0 <= value <= 100.0:
                raise DataError(f"{name} must be in [0, 100], got {value}")
        if not self.method or not isinstance(self.method, str):
            raise DataError(f"method tag must be a nonempty string, got {self.method!r}")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "dice_et": self.dice_et,
            "dice_tc": self.dice_tc,
            "dice_wt": self.dice_wt,
            "method": self.method,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiceRecord":
        try:
            return cls(
                scenario=str(d["scenario"]),
                dice_et=float(d["dice_et"]),
                dice_tc=float(d["dice_tc"]),
                dice_wt=float(d["dice_wt"]),
                method=str(d["method"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"bad dice row {d!r}: {exc}") from None


def format_cell(value) -> str:
    # repr of a float is the shortest string that round-trips exactly
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(records, columns, path: Path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            d = rec.to_dict()
            writer.writerow([format_cell(d[c]) for c in columns])


def _read_csv(path: Path, columns, from_dict):
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty table") from None
        if tuple(header) != tuple(columns):
            raise DataError(
                f"{path}: expected columns {','.join(columns)},"
                f" got {','.join(header)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise DataError(f"{path}:{lineno}: expected {len(columns)} cells")
            rows.append(from_dict(dict(zip(columns, row))))
    return rows


def _write_json(records, path: Path) -> None:
    path = Path(path)
    doc = [rec.to_dict() for rec in records]
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path, from_dict):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, list):
        raise DataError(f"{path}: expected a JSON array of rows")
    return [from_dict(d) for d in doc]


def write_metrics_csv(records: list[MetricsRecord], path) -> None:
    _write_csv(records, METRICS_COLUMNS, path)


def read_metrics_csv(path) -> list[MetricsRecord]:
    return _read_csv(path, METRICS_COLUMNS, MetricsRecord.from_dict)


def write_metrics_json(records: list[MetricsRecord], path) -> None:
    _write_json(records, path)


def read_metrics_json(path) -> list[MetricsRecord]:
    return _read_json(path, MetricsRecord.from_dict)


def write_dice_csv(records: list[DiceRecord], path) -> None:
    _write_csv(records, DICE_COLUMNS, path)


def read_dice_csv(path) -> list[DiceRecord]:
    return _read_csv(path, DICE_COLUMNS, DiceRecord.from_dict)


def write_dice_json(records: list[DiceRecord], path) -> None:
    _write_json(records, path)


def read_dice_json(path) -> list[DiceRecord]:
    return _read_json(path, DiceRecord.from_dict)
