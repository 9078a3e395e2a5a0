import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmsynth.errors import RangeError, ShapeError
from mmsynth.scenarios import (
    FULL_MASK,
    MODALITIES,
    CurriculumSchedule,
    ScenarioMask,
    apply_scenario,
    enumerate_scenarios,
    max_drop,
    parse_scenario_list,
    sample_scenario,
)

# Canonical report order: grouped by number of present modalities (1, 2, 3),
# ascending numerically inside each group.
CANONICAL_ORDER = [
    "0001", "0010", "0100", "1000",
    "0011", "0101", "0110", "1001", "1010", "1100",
    "0111", "1011", "1101", "1110",
]


def test_modality_order_is_fixed():
    assert MODALITIES == ("T1", "T2", "T1c", "T2f")


def test_enumeration_order_frozen():
    assert [str(m) for m in enumerate_scenarios()] == CANONICAL_ORDER


def test_enumeration_with_full_appends_1111():
    masks = enumerate_scenarios(include_full=True)
    assert len(masks) == 15
    assert [str(m) for m in masks[:-1]] == CANONICAL_ORDER
    assert masks[-1] == FULL_MASK


def test_all_missing_never_enumerated():
    assert "0000" not in {str(m) for m in enumerate_scenarios(include_full=True)}


@pytest.mark.parametrize("s", CANONICAL_ORDER + ["0000", "1111"])
def test_mask_string_round_trip(s):
    assert str(ScenarioMask.from_string(s)) == s


def test_mask_indices():
    m = ScenarioMask.from_string("0110")
    assert m.present_indices == (1, 2)
    assert m.missing_indices == (0, 3)
    assert m.present_count == 2
    assert m.missing_count == 2


def test_mask_validity():
    assert not ScenarioMask.from_string("0000").is_valid_synthesis()
    assert not ScenarioMask.from_string("1111").is_valid_synthesis()
    assert all(m.is_valid_synthesis() for m in enumerate_scenarios())


@pytest.mark.parametrize("bad", ["", "011", "01100", "01a0", "0 10"])
def test_mask_rejects_malformed_strings(bad):
    with pytest.raises(ValueError):
        ScenarioMask.from_string(bad)


def test_curriculum_default_boundaries():
    assert CurriculumSchedule(60).phase_boundaries == (20, 40)
    assert CurriculumSchedule(10).phase_boundaries == (3, 6)
    assert CurriculumSchedule(1).phase_boundaries == (0, 0)


def test_curriculum_phase_values():
    sched = CurriculumSchedule(60)
    assert max_drop(sched, 0) == 1
    assert max_drop(sched, 19) == 1
    assert max_drop(sched, 20) == 2
    assert max_drop(sched, 39) == 2
    assert max_drop(sched, 40) == 3
    assert max_drop(sched, 59) == 3


def test_curriculum_epoch_out_of_range():
    sched = CurriculumSchedule(60)
    with pytest.raises(RangeError):
        max_drop(sched, -1)
    with pytest.raises(RangeError):
        max_drop(sched, 60)


def test_curriculum_rejects_bad_boundaries():
    with pytest.raises(ValueError):
        CurriculumSchedule(10, (7, 3))
    with pytest.raises(ValueError):
        CurriculumSchedule(10, (3, 11))
    with pytest.raises(ValueError):
        CurriculumSchedule(0)


@given(
    total=st.integers(min_value=1, max_value=500),
    data=st.data(),
)
def test_curriculum_nondecreasing(total, data):
    b1 = data.draw(st.integers(0, total))
    b2 = data.draw(st.integers(b1, total))
    sched = CurriculumSchedule(total, (b1, b2))
    values = [max_drop(sched, e) for e in range(total)]
    assert all(v in (1, 2, 3) for v in values)
    assert values == sorted(values)


@given(md=st.sampled_from([1, 2, 3]), seed=st.integers(0, 2**32 - 1))
def test_sample_scenario_is_valid_and_bounded(md, seed):
    rng = np.random.default_rng(seed)
    m = sample_scenario(md, rng)
    assert m.is_valid_synthesis()
    assert 1 <= m.missing_count <= md


def test_sample_scenario_deterministic_given_seed():
    a = [str(sample_scenario(3, np.random.default_rng(7))) for _ in range(20)]
    b = [str(sample_scenario(3, np.random.default_rng(7))) for _ in range(20)]
    assert a == b


def test_sample_scenario_covers_all_scenarios():
    rng = np.random.default_rng(0)
    seen = {str(sample_scenario(3, rng)) for _ in range(2000)}
    assert seen == set(CANONICAL_ORDER)


def test_sample_scenario_phase1_only_single_drops():
    rng = np.random.default_rng(1)
    for _ in range(200):
        assert sample_scenario(1, rng).missing_count == 1


def test_sample_scenario_rejects_bad_max_drop():
    rng = np.random.default_rng(0)
    for bad in (0, 4, -1):
        with pytest.raises(ValueError):
            sample_scenario(bad, rng)


@given(
    s=st.sampled_from(CANONICAL_ORDER),
    seed=st.integers(0, 2**16),
)
def test_apply_scenario_properties(s, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(4, 5, 6)).astype(np.float32)
    before = x.copy()
    mask = ScenarioMask.from_string(s)
    out = apply_scenario(x, mask)
    # input untouched, present channels bit-identical, missing zeroed
    assert np.array_equal(x, before)
    for c in mask.present_indices:
        assert np.array_equal(out[c], x[c])
    for c in mask.missing_indices:
        assert np.all(out[c] == 0)


def test_apply_scenario_shape_check():
    with pytest.raises(ShapeError):
        apply_scenario(np.zeros((3, 5, 5)), FULL_MASK)


def test_parse_scenario_list():
    assert [str(m) for m in parse_scenario_list("all")] == CANONICAL_ORDER
    assert len(parse_scenario_list("all", include_full=True)) == 15
    assert [str(m) for m in parse_scenario_list("0110,1000")] == ["0110", "1000"]
    with pytest.raises(ValueError):
        parse_scenario_list("0110,0110")
    with pytest.raises(ValueError):
        parse_scenario_list("")
