"""Slice-level image quality metrics: MSE, PSNR, SSIM.

All metrics are computed in float64 and take (prediction, reference). The
dynamic range R is always taken from the reference (max - min), never from
the prediction.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import DegenerateInputError, ShapeError

# PSNR of a bit-exact reconstruction is unbounded; reported as this cap.
PSNR_CAP = 99.0
_MSE_FLOOR = 1e-12

# SSIM window: 11x11 Gaussian, sigma 1.5 (Wang et al. constants).
SSIM_SIGMA = 1.5
SSIM_RADIUS = 5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"shape mismatch: prediction {pred.shape} vs reference {gt.shape}")
    return pred, gt


def mse(pred, gt) -> float:
    pred, gt = _pair(pred, gt)
    return float(np.mean((pred - gt) ** 2))


def dynamic_range(gt) -> float:
    gt = np.asarray(gt, dtype=np.float64)
    return float(gt.max() - gt.min())


def psnr(pred, gt) -> float:
    """Peak signal-to-noise ratio in dB against the reference's range.

    A constant reference has no defined range and is rejected; an (almost)
    exact reconstruction returns the 99 dB cap instead of infinity.
    """
    pred, gt = _pair(pred, gt)
    r = dynamic_range(gt)
    if r == 0.0:
        raise DegenerateInputError("constant reference image: PSNR undefined (R = 0)")
    err = mse(pred, gt)
    if err < _MSE_FLOOR:
        return PSNR_CAP
    return float(10.0 * np.log10(r * r / err))


def _ssim_filter(img):
    return gaussian_filter(img, sigma=SSIM_SIGMA, radius=SSIM_RADIUS, mode="reflect")


def ssim(pred, gt, data_range: float | None = None) -> float:
    """Mean structural similarity over the window-valid interior.

    Gaussian-weighted local statistics (population covariance), constants
    C1 = (K1 R)^2 and C2 = (K2 R)^2 with R the reference dynamic range.
    Border pixels whose window leaves the image are excluded from the mean.
    """
    pred, gt = _pair(pred, gt)
    if gt.ndim != 2:
        raise ShapeError(f"ssim expects 2-D slices, got {gt.shape}")
    win = 2 * SSIM_RADIUS + 1
    if min(gt.shape) < win:
        raise ShapeError(f"image {gt.shape} smaller than the {win}x{win} SSIM window")
    if data_range is None:
        data_range = dynamic_range(gt)
    if data_range == 0.0:
        raise DegenerateInputError("constant reference image: SSIM undefined (R = 0)")

    ux = _ssim_filter(gt)
    uy = _ssim_filter(pred)
    uxx = _ssim_filter(gt * gt)
    uyy = _ssim_filter(pred * pred)
    uxy = _ssim_filter(gt * pred)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy

    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / (
        (ux * ux + uy * uy + c1) * (vx + vy + c2)
    )
    interior = s[SSIM_RADIUS:-SSIM_RADIUS, SSIM_RADIUS:-SSIM_RADIUS]
    return float(interior.mean())
