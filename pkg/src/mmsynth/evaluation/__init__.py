"""Synthesis metrics, region Dice, the scenario sweep, and backend hand-off."""

from .backend_io import (
    entry_name,
    export_for_backend,
    import_backend_labels,
    import_synthesized_volumes,
)
from .dice import REGIONS, VALID_LABELS, dice, dice_scores, region_mask
from .metrics import PSNR_CAP, dynamic_range, mse, psnr, ssim
from .sweep import (
    SynthesizedCase,
    evaluate_segmentation,
    evaluate_synthesis,
    group_slices,
    reassemble_volumes,
    synth_sweep,
    synthesize_volume,
)

__all__ = [
    "PSNR_CAP",
    "REGIONS",
    "SynthesizedCase",
    "VALID_LABELS",
    "dice",
    "dice_scores",
    "dynamic_range",
    "entry_name",
    "evaluate_segmentation",
    "evaluate_synthesis",
    "export_for_backend",
    "group_slices",
    "import_backend_labels",
    "import_synthesized_volumes",
    "mse",
    "psnr",
    "reassemble_volumes",
    "region_mask",
    "ssim",
    "synth_sweep",
    "synthesize_volume",
]
