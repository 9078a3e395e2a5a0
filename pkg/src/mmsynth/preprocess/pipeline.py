"""Patient discovery, loading, normalization, and slicing.

Input is a BraTS-layout directory: one folder per patient containing NIfTI
volumes suffixed _t1 / _t2 / _t1ce / _flair plus an optional _seg label
volume. Everything downstream works on the fixed modality order
(T1, T2, T1c, T2f), so _t1ce maps to channel 2 and _flair to channel 3.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DegenerateInputError, ShapeError
from ..niftiio import read_nifti
from ..scenarios import MODALITY_FILE_TOKENS
from .geometry import to_canvas

log = logging.getLogger(__name__)

_NIFTI_EXTS = (".nii.gz", ".nii")


@dataclass(frozen=True)
class CaseFiles:
    """Paths-only descriptor of one patient (no voxel data loaded)."""

    patient_id: str
    modality_paths: tuple[Path, Path, Path, Path]
    seg_path: Path | None = None


@dataclass
class PatientCase:
    """One patient's four co-registered volumes plus optional labels."""

    patient_id: str
    volumes: np.ndarray  # (4, H, W, D) float32
    labels: np.ndarray | None = None  # (H, W, D) integer, values {0,1,2,4}
    affine: np.ndarray | None = None

    @property
    def shape(self):
        return self.volumes.shape[1:]


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive per-axis voxel index bounds."""

    mins: tuple[int, int, int]
    maxs: tuple[int, int, int]

    def __post_init__(self):
        for lo, hi in zip(self.mins, self.maxs):
            if lo > hi:
                raise ValueError(f"degenerate box {self.mins}..{self.maxs}")

    def slices(self):
        return tuple(slice(lo, hi + 1) for lo, hi in zip(self.mins, self.maxs))

    def box2d(self) -> tuple[int, int, int, int]:
        """Projection onto the in-plane axes (rows, cols) of an axial slice."""
        return (self.mins[0], self.maxs[0], self.mins[1], self.maxs[1])


def _find_suffix_file(patient_dir: Path, token: str) -> Path | None:
    for ext in _NIFTI_EXTS:
        matches = sorted(patient_dir.glob(f"*_{token}{ext}"))
        if matches:
            return matches[0]
    return None


def scan_dataset(root) -> list[CaseFiles]:
    """Discover complete patients under a BraTS-layout root.

    Returns descriptors in lexicographic patient order. Patients missing any
    modality file are excluded with a warning. An empty or missing root
    yields an empty list.
    """
    root = Path(root)
    cases = []
    if not root.is_dir():
        return cases
    for patient_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        paths = [_find_suffix_file(patient_dir, tok) for tok in MODALITY_FILE_TOKENS]
        missing = [tok for tok, p in zip(MODALITY_FILE_TOKENS, paths) if p is None]
        if missing:
            log.warning(
                "excluding incomplete patient %s: missing %s",
                patient_dir.name,
                ",".join(f"_{m}" for m in missing),
            )
            continue
        seg = _find_suffix_file(patient_dir, "seg")
        cases.append(CaseFiles(patient_dir.name, tuple(paths), seg))
    return cases


def load_case(files: CaseFiles) -> PatientCase:
    """Load a patient's volumes (and labels, if present) into memory."""
    vols = []
    affine = None
    shape = None
    for path in files.modality_paths:
        data, aff = read_nifti(path)
        data = np.asarray(data, dtype=np.float32)
        if shape is None:
            shape, affine = data.shape, aff
        elif data.shape != shape:
            raise ShapeError(
                f"{files.patient_id}: volume shape {data.shape} != {shape} ({path.name})"
            )
        vols.append(data)
    labels = None
    if files.seg_path is not None:
        labels, _ = read_nifti(files.seg_path)
        labels = np.asarray(labels).astype(np.int16)
        if labels.shape != shape:
            raise ShapeError(
                f"{files.patient_id}: label shape {labels.shape} != {shape}"
            )
    volumes = np.stack(vols)
    if not np.all(np.isfinite(volumes)):
        raise DegenerateInputError(f"{files.patient_id}: non-finite intensities")
    return PatientCase(files.patient_id, volumes, labels, affine)


def brain_bounding_box(case: PatientCase) -> BoundingBox:
    """Tightest box containing every voxel where any modality is nonzero."""
    union = np.any(case.volumes != 0, axis=0)
    if not union.any():
        raise DegenerateInputError(f"{case.patient_id}: all-zero volumes")
    mins, maxs = [], []
    for axis in range(3):
        other = tuple(a for a in range(3) if a != axis)
        profile = union.any(axis=other)
        idx = np.flatnonzero(profile)
        mins.append(int(idx[0]))
        maxs.append(int(idx[-1]))
    return BoundingBox(tuple(mins), tuple(maxs))


def normalize_case(
    case: PatientCase, box: BoundingBox, *, pooled: bool = False
) -> PatientCase:
    """Standardize intensities by the mean over the brain box.

    Default: each modality is divided by its own in-box mean (zero voxels
    inside the box included). With pooled=True a single mean over all four
    modalities is used instead; the choice is recorded in the shard
    manifest. Labels are unchanged.
    """
    region = case.volumes[(slice(None),) + box.slices()]
    if pooled:
        mean = float(region.mean())
        if mean <= 0:
            raise DegenerateInputError(f"{case.patient_id}: nonpositive pooled in-box mean")
        means = np.full(4, mean)
    else:
        means = region.reshape(4, -1).mean(axis=1)
        for c, m in enumerate(means):
            if m <= 0:
                raise DegenerateInputError(
                    f"{case.patient_id}: nonpositive in-box mean for modality ordinal {c}"
                )
    volumes = case.volumes / means.astype(np.float32)[:, None, None, None]
    return PatientCase(case.patient_id, volumes, case.labels, case.affine)


NORMALIZATION_VERSIONS = {False: "mean-v1", True: "mean-v1-pooled"}


@dataclass
class SliceSample:
    """One axial slice mapped onto the model canvas.

    channels is (4, 256, 256) float32 in production; geometry suffices to
    invert back to the native frame. z_count is the patient's slice count so
    volumes can be reassembled even when empty slices were dropped.
    """

    patient_id: str
    z_index: int
    channels: np.ndarray
    geometry: object
    has_tumor: bool = False
    z_count: int = 0
    affine: np.ndarray | None = None


def case_to_slices(
    case: PatientCase,
    box: BoundingBox,
    mode: str,
    *,
    drop_empty: bool = False,
) -> list[SliceSample]:
    """Cut a normalized case into canonical axial SliceSamples.

    With drop_empty=True, slices outside the brain box's z extent are
    skipped; by default every slice is kept.
    """
    depth = case.volumes.shape[3]
    z_range = range(depth)
    if drop_empty:
        z_range = range(box.mins[2], box.maxs[2] + 1)
    box2d = box.box2d() if mode == "crop" else None
    samples = []
    for z in z_range:
        native = case.volumes[:, :, :, z]
        canvas, geom = to_canvas(native, mode, box2d)
        has_tumor = bool(case.labels is not None and (case.labels[:, :, z] > 0).any())
        samples.append(
            SliceSample(
                patient_id=case.patient_id,
                z_index=z,
                channels=canvas,
                geometry=geom,
                has_tumor=has_tumor,
                z_count=depth,
                affine=case.affine,
            )
        )
    return samples
