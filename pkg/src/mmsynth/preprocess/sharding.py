"""Patient-to-shard assignment, shard writing, and the dataset manifest.

Patients are randomly partitioned into shards by seed; each shard file holds
its patients' slices in a globally shuffled (cross-patient) order. Workers
hold at most one patient's volumes in memory: each patient is preprocessed
into a temporary record file, and shard assembly copies raw record bytes
one record at a time.
"""

from __future__ import annotations

import json
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError
from .pipeline import (
    NORMALIZATION_VERSIONS,
    CaseFiles,
    brain_bounding_box,
    case_to_slices,
    load_case,
    normalize_case,
)
from .records import ShardWriter, encode_record

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
ROLES = ("train", "val", "test")


@dataclass
class ShardManifest:
    """Record of how a dataset was sharded and preprocessed."""

    seed: int
    shard_count: int
    assignment: dict[str, int]          # patient_id -> shard index
    fold_roles: dict[int, str]          # shard index -> train/val/test
    preprocessing: dict
    record_counts: dict[int, int] = field(default_factory=dict)
    shard_files: dict[int, str] = field(default_factory=dict)
    version: int = MANIFEST_VERSION

    def shards_for_role(self, role: str) -> list[int]:
        return sorted(i for i, r in self.fold_roles.items() if r == role)

    def patients_in_shard(self, index: int) -> list[str]:
        return sorted(p for p, s in self.assignment.items() if s == index)

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "seed": self.seed,
            "shard_count": self.shard_count,
            "assignment": self.assignment,
            "fold_roles": {str(k): v for k, v in self.fold_roles.items()},
            "preprocessing": self.preprocessing,
            "record_counts": {str(k): v for k, v in self.record_counts.items()},
            "shard_files": {str(k): v for k, v in self.shard_files.items()},
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def save(self, directory) -> Path:
        path = Path(directory) / MANIFEST_NAME
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "ShardManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise DataError(f"no manifest at {path}")
        except json.JSONDecodeError as e:
            raise DataError(f"unreadable manifest {path}: {e}")
        return cls(
            seed=doc["seed"],
            shard_count=doc["shard_count"],
            assignment=doc["assignment"],
            fold_roles={int(k): v for k, v in doc["fold_roles"].items()},
            preprocessing=doc["preprocessing"],
            record_counts={int(k): v for k, v in doc["record_counts"].items()},
            shard_files={int(k): v for k, v in doc["shard_files"].items()},
            version=doc["version"],
        )


def shard_filename(index: int) -> str:
    return f"shard_{index:03d}.mms"


def default_roles(shard_count: int) -> dict[int, str]:
    """All-train for tiny datasets; otherwise last two shards are val/test."""
    if shard_count < 3:
        return {i: "train" for i in range(shard_count)}
    roles = {i: "train" for i in range(shard_count - 2)}
    roles[shard_count - 2] = "val"
    roles[shard_count - 1] = "test"
    return roles


def _normalize_roles(roles, shard_count: int) -> dict[int, str]:
    if roles is None:
        return default_roles(shard_count)
    if isinstance(roles, (list, tuple)):
        roles = {i: r for i, r in enumerate(roles)}
    roles = {int(k): str(v) for k, v in roles.items()}
    if sorted(roles) != list(range(shard_count)):
        raise ConfigError(
            f"roles must cover shards 0..{shard_count - 1}, got {sorted(roles)}"
        )
    for i, r in roles.items():
        if r not in ROLES:
            raise ConfigError(f"shard {i}: unknown role {r!r} (expected {ROLES})")
    return roles


def _preprocess_patient(files: CaseFiles, tmp_dir: Path, mode, pooled, drop_empty, loader):
    """Load one patient, slice it, and spill encoded records to a temp file.

    Returns (patient_id, temp path, [(offset, length)] in z order). Only one
    PatientCase is alive inside this call.
    """
    case = loader(files)
    box = brain_bounding_box(case)
    case = normalize_case(case, box, pooled=pooled)
    tmp_path = tmp_dir / f"{files.patient_id}.rec"
    index = []
    offset = 0
    with open(tmp_path, "wb") as f:
        for sample in case_to_slices(case, box, mode, drop_empty=drop_empty):
            blob = encode_record(sample)
            f.write(blob)
            index.append((offset, len(blob)))
            offset += len(blob)
    return files.patient_id, tmp_path, index


def write_shards(
    cases: list[CaseFiles],
    shard_count: int,
    seed: int,
    roles,
    out_dir,
    *,
    mode: str = "padding",
    pooled: bool = False,
    drop_empty: bool = False,
    workers: int = 1,
    loader=load_case,
) -> ShardManifest:
    """Preprocess patients into compressed shards plus a manifest.

    Deterministic in (seed, cases): the patient partition, each shard's
    record order, and the manifest bytes are all pure functions of them.
    """
    if shard_count < 1:
        raise ConfigError(f"shard_count must be >= 1, got {shard_count}")
    if shard_count > len(cases):
        raise ConfigError(
            f"shard_count {shard_count} exceeds patient count {len(cases)}"
        )
    roles = _normalize_roles(roles, shard_count)
    if mode not in ("padding", "crop"):
        raise ConfigError(f"geometry mode must be padding or crop, got {mode!r}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cases = sorted(cases, key=lambda c: c.patient_id)
    ids = [c.patient_id for c in cases]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate patient ids in case list")

    assign_rng = np.random.default_rng(np.random.SeedSequence(seed))
    order = assign_rng.permutation(len(cases))
    groups = np.array_split(order, shard_count)
    assignment = {}
    for shard_idx, group in enumerate(groups):
        for case_idx in group:
            assignment[ids[int(case_idx)]] = shard_idx

    tmp_dir = out_dir / ".tmp-records"
    tmp_dir.mkdir(exist_ok=True)
    manifest = ShardManifest(
        seed=seed,
        shard_count=shard_count,
        assignment=assignment,
        fold_roles=roles,
        preprocessing={
            "geometry_mode": mode,
            "normalization": NORMALIZATION_VERSIONS[pooled],
            "drop_empty": drop_empty,
        },
    )
    try:
        def run(files):
            return _preprocess_patient(files, tmp_dir, mode, pooled, drop_empty, loader)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run, cases))
        else:
            results = [run(c) for c in cases]
        spilled = {pid: (path, index) for pid, path, index in results}

        for shard_idx in range(shard_count):
            entries = []
            for pid in manifest.patients_in_shard(shard_idx):
                path, index = spilled[pid]
                entries.extend((pid, off, length) for off, length in index)
            shuffle_rng = np.random.default_rng(
                np.random.SeedSequence(seed, spawn_key=(1, shard_idx))
            )
            perm = shuffle_rng.permutation(len(entries))
            fname = shard_filename(shard_idx)
            handles = {}
            try:
                with ShardWriter(out_dir / fname) as writer:
                    for k in perm:
                        pid, off, length = entries[int(k)]
                        fh = handles.get(pid)
                        if fh is None:
                            fh = handles[pid] = open(spilled[pid][0], "rb")
                        fh.seek(off)
                        writer.write_bytes(fh.read(length))
            finally:
                for fh in handles.values():
                    fh.close()
            manifest.record_counts[shard_idx] = len(entries)
            manifest.shard_files[shard_idx] = fname
    finally:
        shutil.rmtree(tmp_dir, ignore_errors=True)

    manifest.save(out_dir)
    return manifest


def shard_path(manifest: ShardManifest, data_dir, index: int) -> Path:
    return Path(data_dir) / manifest.shard_files[index]
