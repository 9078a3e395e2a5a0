"""Dice overlap on the nested BraTS tumor regions.

Label values: 0 background, 1 necrotic core, 2 edema, 4 enhancing tumor.
Regions are unions of labels: ET = {4}, TC = {1, 4}, WT = {1, 2, 4}, so
ET <= TC <= WT pointwise.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError

VALID_LABELS = (0, 1, 2, 4)

REGIONS = {
    "ET": (4,),
    "TC": (1, 4),
    "WT": (1, 2, 4),
}


def _check_labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    ok = np.isin(labels, VALID_LABELS)
    if not ok.all():
        voxel = tuple(int(i) for i in np.argwhere(~ok)[0])
        value = labels[voxel]
        bad = sorted(set(np.unique(labels)) - set(VALID_LABELS))
        raise DataError(
            f"unexpected label {value} at voxel {voxel}"
            f" (bad values {bad}, valid: {list(VALID_LABELS)})"
        )
    return labels


def region_mask(labels, region: str) -> np.ndarray:
    if region not in REGIONS:
        raise KeyError(f"unknown region {region!r} (expected one of {list(REGIONS)})")
    return np.isin(_check_labels(labels), REGIONS[region])


def dice(pred_labels, gt_labels, region: str, *, empty_value: float = 100.0) -> float:
    """Dice score in percent (0..100).

    When both masks are empty there is no overlap to measure; such cases
    score `empty_value` (default: perfect agreement).
    """
    p = region_mask(pred_labels, region)
    g = region_mask(gt_labels, region)
    if p.shape != g.shape:
        raise DataError(f"label shape mismatch: {p.shape} vs {g.shape}")
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return float(empty_value)
    return float(100.0 * 2.0 * np.logical_and(p, g).sum() / denom)


def dice_scores(pred_labels, gt_labels, *, empty_value: float = 100.0) -> dict[str, float]:
    """Dice for all three regions, keyed 'ET', 'TC', 'WT'."""
    return {
        r: dice(pred_labels, gt_labels, r, empty_value=empty_value) for r in REGIONS
    }
