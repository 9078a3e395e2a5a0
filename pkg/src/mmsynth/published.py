"""Published reference results, transcribed for comparison reports.

Two externally published tables are carried as constants: the synthesis
quality of the original mmGAN next to its reproduction ("original" vs
"ours"), and the segmentation Dice comparison between ACN and mmDM (mmGAN
synthesis followed by DeepMedic segmentation), both over the BraTS 2018 HGG
cohort.  Nothing here is computed.  Rows carry n=0 because the sources do
not report sample counts, and aggregate rows are kept exactly as printed
even where they disagree slightly with the mean of their columns.
"""

from __future__ import annotations

from .errors import ConfigError
from .tables import DiceRecord, MetricsRecord

# scenario, mse_org, mse_ours, psnr_org, psnr_ours, ssim_org, ssim_ours
_SYNTHESIS_ROWS = (
    ("0001", 0.0143, 0.0107, 23.196, 23.4940, 0.8973, 0.9007),
    ("0010", 0.0072, 0.0086, 24.524, 24.1919, 0.8984, 0.9052),
    ("0100", 0.0102, 0.0121, 23.469, 22.9292, 0.9074, 0.9033),
    ("1000", 0.0072, 0.0097, 24.879, 23.6690, 0.9091, 0.9018),
    ("0011", 0.0060, 0.0055, 25.863, 26.1124, 0.9166, 0.9332),
    ("0101", 0.0136, 0.0108, 22.900, 23.9051, 0.9156, 0.9211),
    ("0110", 0.0073, 0.0087, 24.792, 24.4054, 0.9140, 0.9182),
    ("1001", 0.0073, 0.0069, 26.189, 25.3669, 0.9264, 0.9259),
    ("1010", 0.0040, 0.0075, 26.150, 24.4325, 0.9107, 0.9069),
    ("1100", 0.0068, 0.0091, 25.242, 24.0843, 0.9175, 0.9103),
    ("0111", 0.0091, 0.0072, 24.173, 25.9732, 0.9228, 0.9436),
    ("1011", 0.0017, 0.0031, 28.678, 27.2154, 0.9349, 0.9404),
    ("1101", 0.0098, 0.0090, 24.372, 24.8936, 0.9239, 0.9241),
    ("1110", 0.0033, 0.0084, 26.397, 23.6391, 0.9150, 0.9016),
    ("mean", 0.0082, 0.0084, 24.789, 24.5937, 0.9120, 0.9169),
)

# scenario, acn_et, mmdm_et, acn_tc, mmdm_tc, acn_wt, mmdm_wt
_DICE_ROWS = (
    ("0001", 42.98, 11.27, 67.94, 20.36, 85.55, 82.78),
    ("0010", 78.07, 77.55, 84.18, 77.75, 80.52, 68.07),
    ("0100", 41.52, 16.50, 71.18, 29.53, 79.34, 76.31),
    ("1000", 42.77, 6.66, 67.72, 17.52, 87.30, 56.66),
    ("0011", 75.65, 80.61, 84.41, 83.21, 86.41, 88.25),
    ("0110", 75.21, 80.82, 84.59, 83.69, 80.05, 83.94),
    ("1100", 43.71, 18.00, 71.30, 34.50, 87.49, 80.71),
    ("0101", 47.39, 17.79, 73.28, 35.27, 85.50, 87.05),
    ("1001", 45.96, 13.45, 71.61, 32.20, 87.75, 86.53),
    ("1010", 77.46, 77.97, 83.35, 79.44, 88.28, 71.23),
    ("1110", 76.16, 80.19, 84.25, 83.34, 88.96, 84.75),
    ("1101", 42.09, 23.30, 67.86, 42.62, 88.35, 87.53),
    ("1011", 75.97, 79.71, 82.85, 84.01, 88.34, 88.64),
    ("0111", 76.10, 81.21, 84.67, 84.49, 86.90, 89.64),
    ("1111", 77.06, 80.12, 85.18, 83.62, 89.22, 89.41),
    ("avg", 61.21, 49.68, 77.62, 58.10, 85.92, 81.43),
)

MMGAN_ORIGINAL = tuple(
    MetricsRecord(scenario, mse, psnr, ssim)
    for scenario, mse, _, psnr, _, ssim, _ in _SYNTHESIS_ROWS
)

MMGAN_OURS = tuple(
    MetricsRecord(scenario, mse, psnr, ssim)
    for scenario, _, mse, _, psnr, _, ssim in _SYNTHESIS_ROWS
)

DICE_ACN = tuple(
    DiceRecord(scenario, et, tc, wt, "ACN-published")
    for scenario, et, _, tc, _, wt, _ in _DICE_ROWS
)

DICE_MMDM = tuple(
    DiceRecord(scenario, et, tc, wt, "mmDM")
    for scenario, _, et, _, tc, _, wt in _DICE_ROWS
)

PUBLISHED_METRICS = {
    "mmgan-original": MMGAN_ORIGINAL,
    "mmgan-ours": MMGAN_OURS,
}

PUBLISHED_DICE = {
    "ACN-published": DICE_ACN,
    "mmDM": DICE_MMDM,
}


def published_metrics(tag: str) -> list[MetricsRecord]:
    try:
        return list(PUBLISHED_METRICS[tag])
    except KeyError:
        raise ConfigError(
            f"unknown published metrics tag {tag!r}"
            f" (known: {sorted(PUBLISHED_METRICS)})"
        ) from None


def published_dice(tag: str) -> list[DiceRecord]:
    try:
        return list(PUBLISHED_DICE[tag])
    except KeyError:
        raise ConfigError(
            f"unknown published dice tag {tag!r} (known: {sorted(PUBLISHED_DICE)})"
        ) from None
