"""Length-prefixed slice records and the compressed .mms shard container.

Record framing (all integers little-endian uint32):

    [header_len][header JSON (utf-8)][payload: channel values, float32 LE]

The header carries patient_id, z, z_count, has_tumor, geometry, the channel
shape, and the patient's NIfTI affine for re-export. A shard file is the
magic bytes ``MMS1`` followed by a single gzip stream of such records
(gzip mtime pinned to 0 so equal inputs give byte-identical shards).
"""

from __future__ import annotations

import gzip
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError
from .geometry import geometry_from_dict
from .pipeline import SliceSample

SHARD_MAGIC = b"MMS1"
_LEN = struct.Struct("<I")


def encode_record(sample: SliceSample) -> bytes:
    channels = np.ascontiguousarray(sample.channels, dtype="<f4")
    header = {
        "patient_id": sample.patient_id,
        "z": int(sample.z_index),
        "z_count": int(sample.z_count),
        "has_tumor": bool(sample.has_tumor),
        "geometry": sample.geometry.to_dict() if sample.geometry is not None else None,
        "shape": list(channels.shape),
    }
    if sample.affine is not None:
        header["affine"] = np.asarray(sample.affine, dtype=float).tolist()
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    return _LEN.pack(len(blob)) + blob + channels.tobytes()


def decode_record(read) -> SliceSample | None:
    """Decode one record from a `read(n)` callable; None at end of stream."""
    prefix = read(_LEN.size)
    if not prefix:
        return None
    if len(prefix) != _LEN.size:
        raise DataError("truncated record length prefix")
    (hlen,) = _LEN.unpack(prefix)
    blob = read(hlen)
    if len(blob) != hlen:
        raise DataError("truncated record header")
    header = json.loads(blob)
    shape = tuple(header["shape"])
    nbytes = int(np.prod(shape)) * 4
    payload = read(nbytes)
    if len(payload) != nbytes:
        raise DataError("truncated record payload")
    channels = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    geometry = header["geometry"]
    affine = header.get("affine")
    return SliceSample(
        patient_id=header["patient_id"],
        z_index=int(header["z"]),
        channels=channels,
        geometry=geometry_from_dict(geometry) if geometry is not None else None,
        has_tumor=bool(header["has_tumor"]),
        z_count=int(header["z_count"]),
        affine=np.asarray(affine) if affine is not None else None,
    )


class ShardWriter:
    """Streams records into a compressed shard file."""

    def __init__(self, path):
        self.path = Path(path)
        self._raw = open(self.path, "wb")
        self._raw.write(SHARD_MAGIC)
        # filename="" keeps the gzip FNAME field empty so shard bytes depend
        # only on content, never on the output path
        self._gz = gzip.GzipFile(
            filename="", fileobj=self._raw, mode="wb", compresslevel=6, mtime=0
        )
        self.count = 0

    def write_sample(self, sample: SliceSample) -> None:
        self.write_bytes(encode_record(sample))

    def write_bytes(self, record: bytes) -> None:
        self._gz.write(record)
        self.count += 1

    def close(self) -> None:
        self._gz.close()
        self._raw.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def iter_shard(path):
    """Yield SliceSamples from a shard file, streaming decompression."""
    path = Path(path)
    with open(path, "rb") as raw:
        magic = raw.read(len(SHARD_MAGIC))
        if magic != SHARD_MAGIC:
            raise DataError(f"{path}: not a shard file (magic {magic!r})")
        with gzip.GzipFile(fileobj=raw, mode="rb") as gz:
            while True:
                sample = decode_record(gz.read)
                if sample is None:
                    return
                yield sample


def read_shard(path) -> list[SliceSample]:
    return list(iter_shard(path))
