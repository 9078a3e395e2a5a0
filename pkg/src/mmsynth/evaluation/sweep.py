"""Scenario sweep over a test fold and pooled per-scenario evaluation.

The sweep drives the generator over canonical slices one patient at a time,
keeps present channels bit-exact, inverts the canvas geometry, and stacks
slices back into native-frame volumes.  evaluate_synthesis pools MSE, PSNR
and SSIM per scenario over the missing channels only; evaluate_segmentation
pools region Dice per scenario over externally produced label volumes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ConfigError, DataError, ShapeError
from ..model import Generator, generate
from ..preprocess import from_canvas
from ..scenarios import ScenarioMask, enumerate_scenarios
from ..tables import DICE_AVG_LABEL, METRICS_MEAN_LABEL, DiceRecord, MetricsRecord
from .dice import dice_scores
from .metrics import dynamic_range, mse, psnr, ssim

log = logging.getLogger(__name__)


@dataclass
class SynthesizedCase:
    """One patient's native-frame volumes under one scenario.

    volumes is (4, h, w, z_count) float32; present-modality channels are
    bit-identical to the inputs, missing ones hold generator output.
    """

    patient_id: str
    scenario: ScenarioMask
    volumes: np.ndarray
    affine: np.ndarray | None = None


def group_slices(samples) -> dict[str, list]:
    """Group slice samples by patient, each list ordered by z."""
    by_patient: dict[str, list] = {}
    for s in samples:
        by_patient.setdefault(s.patient_id, []).append(s)
    for patient_id, group in by_patient.items():
        group.sort(key=lambda s: s.z_index)
        zs = [s.z_index for s in group]
        if len(set(zs)) != len(zs):
            raise DataError(f"duplicate slice z_index for patient {patient_id}")
    return dict(sorted(by_patient.items()))


def _stack_native(samples, canvases) -> tuple[np.ndarray, np.ndarray | None]:
    """Invert each canvas to the native frame and stack along z.

    Slices absent from `samples` (dropped as empty during preprocessing)
    stay zero.
    """
    first = samples[0]
    z_count = first.z_count or max(s.z_index for s in samples) + 1
    native0 = from_canvas(canvases[0], first.geometry)
    volume = np.zeros(native0.shape + (z_count,), dtype=native0.dtype)
    for sample, canvas in zip(samples, canvases):
        if sample.z_index >= z_count:
            raise DataError(
                f"slice z={sample.z_index} outside volume depth {z_count}"
                f" for patient {sample.patient_id}"
            )
        volume[:, :, :, sample.z_index] = from_canvas(canvas, sample.geometry)
    return volume, first.affine


def _one_patient(samples) -> str:
    ids = {s.patient_id for s in samples}
    if not samples:
        raise DataError("no slices given")
    if len(ids) != 1:
        raise DataError(f"slices span multiple patients: {sorted(ids)}")
    return samples[0].patient_id


def _synth_canvases(generator: Generator, samples, mask: ScenarioMask, batch_size: int):
    out = []
    with torch.no_grad():
        for i in range(0, len(samples), batch_size):
            chunk = samples[i : i + batch_size]
            x = torch.from_numpy(np.stack([s.channels for s in chunk]))
            y = generate(generator, x, mask)
            out.extend(y[j].numpy() for j in range(len(chunk)))
    return out


def reassemble_volumes(samples) -> dict[str, tuple[np.ndarray, np.ndarray | None]]:
    """Stack each patient's stored slices back into a native (volume, affine).

    Bit-exact for padding geometry; this is the ground-truth reference for
    evaluate_synthesis when the original dataset is not at hand.
    """
    out = {}
    for patient_id, group in group_slices(samples).items():
        out[patient_id] = _stack_native(group, [s.channels for s in group])
    return out


def synthesize_volume(
    generator: Generator, samples, mask: ScenarioMask, *, batch_size: int = 8
) -> SynthesizedCase:
    """Run one patient's slices through the generator under one scenario."""
    patient_id = _one_patient(samples)
    samples = sorted(samples, key=lambda s: s.z_index)
    canvases = _synth_canvases(generator, samples, mask, batch_size)
    volume, affine = _stack_native(samples, canvases)
    return SynthesizedCase(patient_id, mask, volume, affine)


def synth_sweep(generator: Generator, samples, scenarios=None, *, batch_size: int = 8):
    """Yield a SynthesizedCase per (patient, scenario).

    Patients are visited in sorted order, scenarios in the given order
    (canonical 14-scenario order by default), so consumers see a
    deterministic stream.
    """
    masks = list(scenarios) if scenarios is not None else enumerate_scenarios()
    groups = group_slices(samples)
    if not groups:
        raise DataError("no slices to sweep")
    for patient_id, group in groups.items():
        for mask in masks:
            yield synthesize_volume(generator, group, mask, batch_size=batch_size)


def _volume_pair_samples(pred_vol, gt_vol, mask: ScenarioMask, skip_empty: bool):
    """Per (missing channel, slice) metric triples for one volume pair.

    Slices with an empty ground-truth brain region are skipped, as are
    channels whose ground-truth slice is constant (undefined PSNR/SSIM).
    """
    pred_vol = np.asarray(pred_vol)
    gt_vol = np.asarray(gt_vol)
    if pred_vol.shape != gt_vol.shape:
        raise ShapeError(f"volume shapes differ: {pred_vol.shape} vs {gt_vol.shape}")
    triples = []
    for z in range(gt_vol.shape[3]):
        gt_slice4 = gt_vol[:, :, :, z]
        if skip_empty and not gt_slice4.any():
            continue
        for c in mask.missing_indices:
            gt_slice = gt_slice4[c]
            if dynamic_range(gt_slice) == 0.0:
                continue
            pred_slice = pred_vol[c, :, :, z]
            triples.append(
                (mse(pred_slice, gt_slice), psnr(pred_slice, gt_slice), ssim(pred_slice, gt_slice))
            )
    return triples


def _mean_triple(triples) -> tuple[float, float, float]:
    arr = np.asarray(triples, dtype=np.float64)
    return tuple(float(v) for v in arr.mean(axis=0))


def evaluate_synthesis(
    pred_cases,
    gt_volumes,
    scenarios=None,
    *,
    average: str = "slices",
    skip_empty: bool = True,
) -> list[MetricsRecord]:
    """Pool per-scenario MSE/PSNR/SSIM over the missing channels only.

    pred_cases: SynthesizedCase iterable; gt_volumes: patient -> (4, h, w, z)
    array (reassemble_volumes output also fits).  PSNR/SSIM dynamic range is
    taken per ground-truth slice.  average="slices" pools every (missing
    channel, slice) sample with equal weight; average="volumes" averages per
    patient first.  A final "mean" row averages the scenario rows unweighted;
    scenarios with no missing channel are excluded with a warning.
    """
    if average not in ("slices", "volumes"):
        raise ConfigError(f"average must be 'slices' or 'volumes', got {average!r}")
    masks = list(scenarios) if scenarios is not None else enumerate_scenarios()

    by_scenario: dict[str, dict[str, np.ndarray]] = {}
    for case in pred_cases:
        by_scenario.setdefault(str(case.scenario), {})[case.patient_id] = case.volumes
    gt_volumes = {
        pid: (vol[0] if isinstance(vol, tuple) else vol) for pid, vol in gt_volumes.items()
    }

    records = []
    for mask in masks:
        key = str(mask)
        if mask.missing_count == 0:
            log.warning("scenario %s has no missing channels; excluded", key)
            continue
        per_patient = by_scenario.get(key)
        if not per_patient:
            raise DataError(f"no synthesized volumes for scenario {key}")
        patient_triples = []
        for patient_id in sorted(per_patient):
            if patient_id not in gt_volumes:
                raise DataError(f"no ground truth for patient {patient_id}")
            triples = _volume_pair_samples(
                per_patient[patient_id], gt_volumes[patient_id], mask, skip_empty
            )
            patient_triples.append(triples)
        if average == "slices":
            pooled = [t for triples in patient_triples for t in triples]
            if not pooled:
                raise DataError(f"scenario {key}: every slice was skipped")
            m, p, s = _mean_triple(pooled)
            n = len(pooled)
        else:
            per_patient_means = [
                _mean_triple(triples) for triples in patient_triples if triples
            ]
            if not per_patient_means:
                raise DataError(f"scenario {key}: every slice was skipped")
            m, p, s = _mean_triple(per_patient_means)
            n = len(per_patient_means)
        records.append(MetricsRecord(key, m, p, s, n))

    if not records:
        raise DataError("no scenario produced a metrics row")
    m, p, s = _mean_triple([(r.mse, r.psnr, r.ssim) for r in records])
    records.append(MetricsRecord(METRICS_MEAN_LABEL, m, p, s, sum(r.n for r in records)))
    return records


def evaluate_segmentation(
    pred_labels,
    gt_labels,
    scenarios=None,
    *,
    method: str,
    empty_value: float = 100.0,
) -> list[DiceRecord]:
    """Per-scenario mean region Dice over patients, plus an "avg" row.

    pred_labels: (patient_id, scenario string) -> label volume, as produced
    by import_backend_labels; gt_labels: patient_id -> label volume.  Each
    scenario must cover exactly the ground-truth patient set.
    """
    masks = list(scenarios) if scenarios is not None else enumerate_scenarios(include_full=True)
    gt_patients = set(gt_labels)
    if not gt_patients:
        raise DataError("no ground-truth label volumes")

    by_scenario: dict[str, dict[str, np.ndarray]] = {}
    for (patient_id, key), vol in pred_labels.items():
        by_scenario.setdefault(str(key), {})[patient_id] = vol

    records = []
    for mask in masks:
        key = str(mask)
        per_patient = by_scenario.get(key, {})
        if set(per_patient) != gt_patients:
            missing = sorted(gt_patients - set(per_patient))
            extra = sorted(set(per_patient) - gt_patients)
            raise DataError(
                f"scenario {key}: patient mismatch"
                f" (missing predictions for {missing}, unmatched {extra})"
            )
        rows = []
        for patient_id in sorted(gt_patients):
            scores = dice_scores(
                per_patient[patient_id], gt_labels[patient_id], empty_value=empty_value
            )
            rows.append((scores["ET"], scores["TC"], scores["WT"]))
        et, tc, wt = _mean_triple(rows)
        records.append(DiceRecord(key, et, tc, wt, method))

    if not records:
        raise DataError("no scenario produced a dice row")
    et, tc, wt = _mean_triple([(r.dice_et, r.dice_tc, r.dice_wt) for r in records])
    records.append(DiceRecord(DICE_AVG_LABEL, et, tc, wt, method))
    return records
