"""Minimal NIfTI-1 volume I/O (.nii / .nii.gz).

Covers the subset needed for BraTS-style data: single-file NIfTI-1, the
common scalar dtypes, scl_slope/scl_inter scaling, and sform/qform affines.
Written in-house because no NIfTI package is available in the target
environment; the format is a fixed 348-byte header followed by raw
Fortran-ordered voxels.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import DataError

_HDR_SIZE = 348
_MAGIC_SINGLE = (b"n+1\x00", b"n+2\x00")

# NIfTI datatype code -> numpy dtype
_DTYPES = {
    2: np.uint8,
    4: np.int16,
    8: np.int32,
    16: np.float32,
    64: np.float64,
    256: np.int8,
    512: np.uint16,
    768: np.uint32,
    1024: np.int64,
    1280: np.uint64,
}
_DTYPE_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}


def _open_maybe_gzip(path: Path, mode: str):
    if str(path).endswith(".gz"):
        if "w" in mode:
            # mtime pinned so identical volumes produce identical bytes
            return gzip.GzipFile(filename=str(path), mode=mode, mtime=0)
        return gzip.open(path, mode)
    return open(path, mode)


def _quaternion_affine(hdr: dict) -> np.ndarray:
    b, c, d = hdr["quatern_b"], hdr["quatern_c"], hdr["quatern_d"]
    a = np.sqrt(max(0.0, 1.0 - (b * b + c * c + d * d)))
    R = np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ]
    )
    pixdim = hdr["pixdim"]
    qfac = -1.0 if pixdim[0] < 0 else 1.0
    scales = np.array([pixdim[1], pixdim[2], pixdim[3] * qfac])
    aff = np.eye(4)
    aff[:3, :3] = R * scales
    aff[:3, 3] = (hdr["qoffset_x"], hdr["qoffset_y"], hdr["qoffset_z"])
    return aff


def _parse_header(raw: bytes) -> dict:
    if len(raw) < _HDR_SIZE:
        raise DataError(f"truncated NIfTI header ({len(raw)} bytes)")
    for endian in ("<", ">"):
        (sizeof_hdr,) = struct.unpack(endian + "i", raw[0:4])
        if sizeof_hdr == _HDR_SIZE:
            break
    else:
        raise DataError("not a NIfTI-1 file (bad sizeof_hdr)")

    def unpack(fmt, off):
        return struct.unpack_from(endian + fmt, raw, off)

    hdr = {"endian": endian}
    hdr["dim"] = unpack("8h", 40)
    hdr["datatype"] = unpack("h", 70)[0]
    hdr["bitpix"] = unpack("h", 72)[0]
    hdr["pixdim"] = unpack("8f", 76)
    hdr["vox_offset"] = unpack("f", 108)[0]
    hdr["scl_slope"] = unpack("f", 112)[0]
    hdr["scl_inter"] = unpack("f", 116)[0]
    hdr["qform_code"] = unpack("h", 252)[0]
    hdr["sform_code"] = unpack("h", 254)[0]
    hdr["quatern_b"], hdr["quatern_c"], hdr["quatern_d"] = unpack("3f", 256)
    hdr["qoffset_x"], hdr["qoffset_y"], hdr["qoffset_z"] = unpack("3f", 268)
    hdr["srow"] = np.array(
        [unpack("4f", 280), unpack("4f", 296), unpack("4f", 312)]
    )
    hdr["magic"] = raw[344:348]
    return hdr


def read_nifti(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a NIfTI-1 volume. Returns (data, affine).

    Data keeps its on-disk dtype unless scl_slope/scl_inter scaling applies,
    in which case it is promoted to float32.
    """
    path = Path(path)
    try:
        with _open_maybe_gzip(path, "rb") as f:
            raw = f.read()
    except (gzip.BadGzipFile, EOFError, OSError) as exc:
        raise DataError(f"{path}: unreadable: {exc}") from None
    hdr = _parse_header(raw)
    if hdr["magic"] not in _MAGIC_SINGLE:
        raise DataError(f"{path}: unsupported NIfTI magic {hdr['magic']!r}")
    if hdr["datatype"] not in _DTYPES:
        raise DataError(f"{path}: unsupported NIfTI datatype {hdr['datatype']}")
    ndim = hdr["dim"][0]
    if not 1 <= ndim <= 7:
        raise DataError(f"{path}: bad ndim {ndim}")
    shape = tuple(int(d) for d in hdr["dim"][1 : 1 + ndim])
    dtype = np.dtype(_DTYPES[hdr["datatype"]]).newbyteorder(hdr["endian"])
    count = int(np.prod(shape))
    offset = int(hdr["vox_offset"])
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    data = data.reshape(shape, order="F").astype(dtype.newbyteorder("="))
    slope, inter = hdr["scl_slope"], hdr["scl_inter"]
    if np.isfinite(slope) and slope != 0.0 and (slope, inter) != (1.0, 0.0):
        data = data.astype(np.float32) * slope + inter

    if hdr["sform_code"] > 0:
        affine = np.eye(4)
        affine[:3, :] = hdr["srow"]
    elif hdr["qform_code"] > 0:
        affine = _quaternion_affine(hdr)
    else:
        affine = np.diag([hdr["pixdim"][1], hdr["pixdim"][2], hdr["pixdim"][3], 1.0])
    return data, affine


def write_nifti(path, data: np.ndarray, affine: np.ndarray | None = None) -> None:
    """Write a NIfTI-1 volume (sform affine, no scaling, vox_offset 352)."""
    path = Path(path)
    data = np.asarray(data)
    if data.dtype not in _DTYPE_CODES:
        data = data.astype(np.float32)
    if affine is None:
        affine = np.eye(4)
    affine = np.asarray(affine, dtype=np.float64)
    if affine.shape != (4, 4):
        raise DataError(f"affine must be 4x4, got {affine.shape}")

    ndim = data.ndim
    dim = [ndim] + list(data.shape) + [1] * (7 - ndim)
    pixdim = [1.0] + [float(np.linalg.norm(affine[:3, i])) for i in range(3)] + [1.0] * 4
    pixdim = pixdim[:8]
    while len(pixdim) < 8:
        pixdim.append(1.0)

    hdr = bytearray(_HDR_SIZE)
    struct.pack_into("<i", hdr, 0, _HDR_SIZE)
    struct.pack_into("<8h", hdr, 40, *dim)
    struct.pack_into("<h", hdr, 70, _DTYPE_CODES[data.dtype])
    struct.pack_into("<h", hdr, 72, data.dtype.itemsize * 8)
    struct.pack_into("<8f", hdr, 76, *pixdim)
    struct.pack_into("<f", hdr, 108, 352.0)  # vox_offset
    struct.pack_into("<f", hdr, 112, 1.0)  # scl_slope
    struct.pack_into("<f", hdr, 116, 0.0)  # scl_inter
    struct.pack_into("<h", hdr, 252, 0)  # qform_code
    struct.pack_into("<h", hdr, 254, 1)  # sform_code: scanner-aligned
    struct.pack_into("<4f", hdr, 280, *affine[0])
    struct.pack_into("<4f", hdr, 296, *affine[1])
    struct.pack_into("<4f", hdr, 312, *affine[2])
    hdr[344:348] = b"n+1\x00"

    le = data.astype(data.dtype.newbyteorder("<"), copy=False)
    payload = bytes(hdr) + b"\x00" * 4 + np.asfortranarray(le).tobytes(order="F")
    with _open_maybe_gzip(path, "wb") as f:
        f.write(payload)
