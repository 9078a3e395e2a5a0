"""Mapping between native slices and the 256x256 model canvas.

Two modes:

* ``padding`` — the native slice (240x240 for BraTS) is centered on a zero
  canvas; exactly invertible.
* ``crop`` — a 2-D brain bounding box is cut out and resized to the canvas
  with bilinear interpolation; inversion resizes back into a zero native
  frame and is exact only up to interpolation error.

Bilinear resampling uses pixel-center sampling (align-corners disabled):
output pixel i samples source coordinate (i + 0.5) * scale - 0.5, clamped
to the source extent. This is pinned here so round-trips are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, RangeError, ShapeError

CANVAS_SIZE = 256


@dataclass(frozen=True)
class PadGeometry:
    """Native content pasted at `offset` on the canvas; size = native (H, W)."""

    offset: tuple[int, int]
    size: tuple[int, int]

    kind = "pad"

    def to_dict(self) -> dict:
        return {"kind": "pad", "offset": list(self.offset), "size": list(self.size)}


@dataclass(frozen=True)
class CropGeometry:
    """Native box (r0, r1, c0, c1), inclusive, resized to fill the canvas;
    size = native (H, W)."""

    box: tuple[int, int, int, int]
    size: tuple[int, int]

    kind = "crop"

    def to_dict(self) -> dict:
        return {"kind": "crop", "box": list(self.box), "size": list(self.size)}


def geometry_from_dict(d: dict):
    if d["kind"] == "pad":
        return PadGeometry(tuple(d["offset"]), tuple(d["size"]))
    if d["kind"] == "crop":
        return CropGeometry(tuple(d["box"]), tuple(d["size"]))
    raise ContractError(f"unknown geometry kind {d.get('kind')!r}")


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a 2-D image with pixel-center sampling.

    When the output size equals the input size the mapping is the identity
    and values pass through exactly.
    """
    if img.ndim != 2:
        raise ShapeError(f"resize_bilinear expects a 2-D image, got {img.shape}")
    in_h, in_w = img.shape
    img = np.asarray(img, dtype=np.float64)

    def axis_coords(n_out, n_in):
        coords = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        coords = np.clip(coords, 0.0, n_in - 1.0)
        lo = np.floor(coords).astype(np.int64)
        lo = np.minimum(lo, n_in - 2) if n_in > 1 else np.zeros_like(lo)
        frac = coords - lo
        return lo, frac

    r0, rf = axis_coords(out_h, in_h)
    c0, cf = axis_coords(out_w, in_w)
    r1 = np.minimum(r0 + 1, in_h - 1)
    c1 = np.minimum(c0 + 1, in_w - 1)

    rf = rf[:, None]
    cf = cf[None, :]
    top = img[r0][:, c0] * (1 - cf) + img[r0][:, c1] * cf
    bot = img[r1][:, c0] * (1 - cf) + img[r1][:, c1] * cf
    return top * (1 - rf) + bot * rf


def to_canvas(slice4: np.ndarray, mode: str, box2d=None):
    """Place a 4-channel native slice onto the 256x256 canvas.

    Returns (canvas, geometry) where canvas is float32 (4, 256, 256) and
    geometry carries everything `from_canvas` needs for inversion.
    """
    slice4 = np.asarray(slice4)
    if slice4.ndim != 3 or slice4.shape[0] != 4:
        raise ShapeError(f"expected (4, H, W) slice, got {slice4.shape}")
    _, h, w = slice4.shape

    if mode == "padding":
        if h > CANVAS_SIZE or w > CANVAS_SIZE:
            raise RangeError(f"slice {h}x{w} does not fit the {CANVAS_SIZE} canvas")
        off = ((CANVAS_SIZE - h) // 2, (CANVAS_SIZE - w) // 2)
        canvas = np.zeros((4, CANVAS_SIZE, CANVAS_SIZE), dtype=np.float32)
        canvas[:, off[0] : off[0] + h, off[1] : off[1] + w] = slice4
        return canvas, PadGeometry(off, (h, w))

    if mode == "crop":
        if box2d is None:
            raise ContractError("crop mode requires a 2-D bounding box")
        r0, r1, c0, c1 = (int(v) for v in box2d)
        if not (0 <= r0 <= r1 < h and 0 <= c0 <= c1 < w):
            raise RangeError(f"box {box2d} outside slice bounds {h}x{w}")
        canvas = np.empty((4, CANVAS_SIZE, CANVAS_SIZE), dtype=np.float32)
        sub = slice4[:, r0 : r1 + 1, c0 : c1 + 1]
        for c in range(4):
            canvas[c] = resize_bilinear(sub[c], CANVAS_SIZE, CANVAS_SIZE)
        return canvas, CropGeometry((r0, r1, c0, c1), (h, w))

    raise ValueError(f"unknown canvas mode {mode!r}")


def from_canvas(canvas: np.ndarray, geometry) -> np.ndarray:
    """Invert `to_canvas` back to the native frame.

    Exact for padding; bilinear resampling into a zero frame for crop.
    """
    if geometry is None:
        raise ContractError("geometry metadata required to invert a canvas")
    canvas = np.asarray(canvas)
    if canvas.ndim != 3 or canvas.shape[0] != 4:
        raise ShapeError(f"expected (4, {CANVAS_SIZE}, {CANVAS_SIZE}), got {canvas.shape}")

    h, w = geometry.size
    if isinstance(geometry, PadGeometry):
        o0, o1 = geometry.offset
        return canvas[:, o0 : o0 + h, o1 : o1 + w].copy()

    if isinstance(geometry, CropGeometry):
        r0, r1, c0, c1 = geometry.box
        bh, bw = r1 - r0 + 1, c1 - c0 + 1
        out = np.zeros((4, h, w), dtype=canvas.dtype)
        for c in range(4):
            out[c, r0 : r1 + 1, c0 : c1 + 1] = resize_bilinear(canvas[c], bh, bw)
        return out

    raise ContractError(f"unknown geometry {geometry!r}")
