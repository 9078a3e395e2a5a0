"""NIfTI hand-off to external segmentation backends.

Synthesized native-frame volumes are written one file per modality under the
naming scheme `<patient>__<scenario>_<token>.nii.gz` (token: t1, t2, t1ce,
flair); the backend's label maps come back as `<patient>__<scenario>_seg`
files keyed the same way.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ContractError, DataError
from ..niftiio import read_nifti, write_nifti
from ..scenarios import MODALITY_FILE_TOKENS, ScenarioMask
from .sweep import SynthesizedCase

SEG_TOKEN = "seg"


def _find_entry(in_dir: Path, name: str) -> Path | None:
    path = in_dir / name
    if path.exists():
        return path
    alt = path.with_suffix("")  # .nii.gz -> .nii
    return alt if alt.exists() else None


def _check_entries(expected) -> list[tuple[str, str]]:
    entries = [(patient_id, str(scenario)) for patient_id, scenario in expected]
    if len(set(entries)) != len(entries):
        raise DataError("duplicate (patient, scenario) pairs in expected entries")
    return entries


def entry_name(patient_id: str, scenario, token: str) -> str:
    return f"{patient_id}__{scenario}_{token}.nii.gz"


def export_for_backend(cases, out_dir) -> list[Path]:
    """Write each SynthesizedCase as per-modality NIfTI volumes.

    Refuses cases whose native geometry (affine) was lost: the backend
    needs spatially meaningful files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    seen = set()
    for case in cases:
        if "__" in case.patient_id:
            raise DataError(f"patient id {case.patient_id!r} would break '__' naming")
        if case.affine is None:
            raise ContractError(
                f"{case.patient_id}/{case.scenario}: native geometry missing,"
                " export refused"
            )
        key = (case.patient_id, str(case.scenario))
        if key in seen:
            raise DataError(f"duplicate case {key[0]}/{key[1]} in export stream")
        seen.add(key)
        for channel, token in enumerate(MODALITY_FILE_TOKENS):
            path = out_dir / entry_name(case.patient_id, case.scenario, token)
            write_nifti(path, case.volumes[channel], case.affine)
            written.append(path)
    return written


def _as_labels(data: np.ndarray, path: Path) -> np.ndarray:
    if np.issubdtype(data.dtype, np.integer):
        return data.astype(np.int16, copy=False)
    rounded = np.rint(data)
    if not np.array_equal(rounded, data):
        raise DataError(f"{path}: label volume holds non-integer values")
    return rounded.astype(np.int16)


def import_backend_labels(in_dir, expected) -> dict[tuple[str, str], np.ndarray]:
    """Read backend label maps for every expected (patient, scenario) pair.

    Missing files are collected and reported together; a partial directory
    never silently shrinks the evaluation.
    """
    in_dir = Path(in_dir)
    entries = _check_entries(expected)

    missing = []
    found = {}
    for patient_id, key in entries:
        name = entry_name(patient_id, key, SEG_TOKEN)
        path = _find_entry(in_dir, name)
        if path is None:
            missing.append(name)
        else:
            found[(patient_id, key)] = path
    if missing:
        raise DataError(
            f"{len(missing)} label file(s) missing from {in_dir}: {', '.join(missing)}"
        )

    labels = {}
    for key, path in found.items():
        labels[key] = _as_labels(_read_checked(path)[0], path)
    return labels


def _read_checked(path: Path):
    try:
        return read_nifti(path)
    except DataError as exc:
        message = str(exc)
        if str(path) in message:
            raise
        raise DataError(f"{path}: {message}") from None


def import_synthesized_volumes(in_dir, expected) -> list[SynthesizedCase]:
    """Read exported modality volumes back as full synthesized cases.

    Every expected (patient, scenario) pair needs all four modality files;
    missing files are collected and reported together.
    """
    in_dir = Path(in_dir)
    entries = _check_entries(expected)

    missing = []
    paths = {}
    for patient_id, key in entries:
        for token in MODALITY_FILE_TOKENS:
            name = entry_name(patient_id, key, token)
            path = _find_entry(in_dir, name)
            if path is None:
                missing.append(name)
            else:
                paths[(patient_id, key, token)] = path
    if missing:
        raise DataError(
            f"{len(missing)} volume file(s) missing from {in_dir}: {', '.join(missing)}"
        )

    cases = []
    for patient_id, key in entries:
        channels = []
        affine = None
        for token in MODALITY_FILE_TOKENS:
            path = paths[(patient_id, key, token)]
            data, file_affine = _read_checked(path)
            if affine is None:
                affine = file_affine
            channel = np.asarray(data, dtype=np.float32)
            if channels and channel.shape != channels[0].shape:
                raise DataError(
                    f"{path}: shape {channel.shape} does not match "
                    f"{channels[0].shape} from the other modalities"
                )
            channels.append(channel)
        cases.append(
            SynthesizedCase(
                patient_id=patient_id,
                scenario=ScenarioMask.from_string(key),
                volumes=np.stack(channels),
                affine=affine,
            )
        )
    return cases
