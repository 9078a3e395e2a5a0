import numpy as np
import pytest

from mmsynth.errors import ConfigError
from mmsynth.published import (
    DICE_ACN,
    DICE_MMDM,
    MMGAN_ORIGINAL,
    MMGAN_OURS,
    published_dice,
    published_metrics,
)
from mmsynth.scenarios import enumerate_scenarios, scenario_strings


def test_table_shapes_and_order():
    assert len(MMGAN_ORIGINAL) == len(MMGAN_OURS) == 15  # 14 scenarios + mean
    assert len(DICE_ACN) == len(DICE_MMDM) == 16  # 15 scenarios + avg
    assert MMGAN_OURS[-1].scenario == "mean"
    assert DICE_MMDM[-1].scenario == "avg"
    assert {r.scenario for r in MMGAN_OURS[:-1]} == set(
        scenario_strings(enumerate_scenarios())
    )
    assert {r.scenario for r in DICE_ACN[:-1]} == set(
        scenario_strings(enumerate_scenarios(include_full=True))
    )


def test_methods_and_sample_counts():
    assert all(r.method == "ACN-published" for r in DICE_ACN)
    assert all(r.method == "mmDM" for r in DICE_MMDM)
    assert all(r.n == 0 for r in MMGAN_ORIGINAL + MMGAN_OURS)


def test_ours_mean_row_matches_column_means():
    rows = MMGAN_OURS[:-1]
    mean = MMGAN_OURS[-1]
    assert abs(np.mean([r.mse for r in rows]) - mean.mse) <= 5e-5
    assert abs(np.mean([r.psnr for r in rows]) - mean.psnr) <= 5e-4
    assert abs(np.mean([r.ssim for r in rows]) - mean.ssim) <= 5e-5


@pytest.mark.xfail(
    strict=True,
    reason="the original implementation's printed mean row disagrees with its"
    " own per-scenario values (recomputes to 0.0077 / 25.0589 / 0.9150)",
)
def test_original_mean_row_matches_column_means():
    rows = MMGAN_ORIGINAL[:-1]
    mean = MMGAN_ORIGINAL[-1]
    assert abs(np.mean([r.mse for r in rows]) - mean.mse) <= 5e-5
    assert abs(np.mean([r.psnr for r in rows]) - mean.psnr) <= 5e-4
    assert abs(np.mean([r.ssim for r in rows]) - mean.ssim) <= 5e-5


def test_dice_avg_rows_match_column_means_where_consistent():
    for table in (DICE_ACN, DICE_MMDM):
        rows, avg = table[:-1], table[-1]
        for field in ("dice_et", "dice_tc", "dice_wt"):
            if table is DICE_ACN and field == "dice_wt":
                continue  # see test_acn_wt_printed_avg below
            recomputed = np.mean([getattr(r, field) for r in rows])
            assert abs(recomputed - getattr(avg, field)) <= 0.005, field


@pytest.mark.xfail(
    strict=True,
    reason="published ACN whole-tumor avg (85.92) disagrees with its own"
    " per-scenario values, which recompute to 85.9973",
)
def test_acn_wt_printed_avg():
    recomputed = np.mean([r.dice_wt for r in DICE_ACN[:-1]])
    assert abs(recomputed - DICE_ACN[-1].dice_wt) <= 0.005


def test_acn_wt_recomputed_value_pinned():
    recomputed = np.mean([r.dice_wt for r in DICE_ACN[:-1]])
    np.testing.assert_allclose(recomputed, 85.997333, atol=5e-5)


def test_low_enhancing_tumor_scenario_count():
    # mmDM ET dips below 50 in exactly 7 of the 14 missing-modality scenarios
    rows = [r for r in DICE_MMDM[:-1] if r.scenario != "1111"]
    assert len(rows) == 14
    assert sum(r.dice_et < 50.0 for r in rows) == 7


def test_registry_lookup():
    assert published_metrics("mmgan-ours") == list(MMGAN_OURS)
    assert published_dice("mmDM") == list(DICE_MMDM)
    with pytest.raises(ConfigError, match="unknown published metrics"):
        published_metrics("nope")
    with pytest.raises(ConfigError, match="unknown published dice"):
        published_dice("nope")


def test_spot_values():
    by_scenario = {r.scenario: r for r in MMGAN_OURS}
    assert by_scenario["1110"].mse == 0.0084
    assert by_scenario["1011"].psnr == 27.2154
    assert by_scenario["0111"].ssim == 0.9436
    acn = {r.scenario: r for r in DICE_ACN}
    mmdm = {r.scenario: r for r in DICE_MMDM}
    assert acn["1000"].dice_et == 42.77
    assert mmdm["1000"].dice_et == 6.66
    assert acn["1111"].dice_wt == 89.22
    assert mmdm["0111"].dice_wt == 89.64
