import numpy as np
import pytest

from mmsynth.errors import ContractError, DataError
from mmsynth.evaluation import (
    SynthesizedCase,
    entry_name,
    export_for_backend,
    import_backend_labels,
    import_synthesized_volumes,
)
from mmsynth.niftiio import read_nifti, write_nifti
from mmsynth.scenarios import ScenarioMask

AFFINE = np.diag([-0.9375, -0.9375, 1.5, 1.0])


def make_case(pid="P", scenario="0011", seed=0):
    rng = np.random.default_rng(seed)
    vol = rng.uniform(0, 2, size=(4, 10, 12, 3)).astype(np.float32)
    return SynthesizedCase(pid, ScenarioMask.from_string(scenario), vol, AFFINE.copy())


def test_export_naming_and_round_trip(tmp_path):
    case = make_case()
    written = export_for_backend([case], tmp_path)
    names = sorted(p.name for p in written)
    assert names == sorted(
        f"P__0011_{tok}.nii.gz" for tok in ("t1", "t2", "t1ce", "flair")
    )
    for channel, tok in enumerate(("t1", "t2", "t1ce", "flair")):
        data, affine = read_nifti(tmp_path / f"P__0011_{tok}.nii.gz")
        assert np.array_equal(data, case.volumes[channel])
        np.testing.assert_allclose(affine, AFFINE)


def test_export_refuses_lost_geometry(tmp_path):
    case = make_case()
    case.affine = None
    with pytest.raises(ContractError, match="geometry"):
        export_for_backend([case], tmp_path)


def test_export_rejects_duplicates_and_bad_ids(tmp_path):
    with pytest.raises(DataError, match="duplicate"):
        export_for_backend([make_case(), make_case()], tmp_path)
    with pytest.raises(DataError, match="__"):
        export_for_backend([make_case(pid="a__b")], tmp_path)


def test_export_rerun_is_byte_identical(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    export_for_backend([make_case()], out1)
    export_for_backend([make_case()], out2)
    name = entry_name("P", "0011", "t1")
    assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def seg(seed):
    return np.random.default_rng(seed).choice([0, 1, 2, 4], size=(10, 12, 3)).astype(np.int16)


def test_import_round_trip(tmp_path):
    expected = [("P", "0011"), ("P", "1111"), ("Q", "0011")]
    volumes = {}
    for i, (pid, scen) in enumerate(expected):
        volumes[(pid, scen)] = seg(i)
        write_nifti(tmp_path / entry_name(pid, scen, "seg"), volumes[(pid, scen)], AFFINE)
    got = import_backend_labels(tmp_path, expected)
    assert set(got) == set(volumes)
    for key in volumes:
        assert np.array_equal(got[key], volumes[key])
        assert got[key].dtype == np.int16


def test_import_accepts_scenario_masks_and_plain_nii(tmp_path):
    labels = seg(7)
    write_nifti(tmp_path / "P__0110_seg.nii", labels, AFFINE)
    got = import_backend_labels(tmp_path, [("P", ScenarioMask.from_string("0110"))])
    assert np.array_equal(got[("P", "0110")], labels)


def test_import_reports_all_missing_entries(tmp_path):
    write_nifti(tmp_path / entry_name("P", "0011", "seg"), seg(1), AFFINE)
    expected = [("P", "0011"), ("P", "0101"), ("Q", "1111")]
    with pytest.raises(DataError) as err:
        import_backend_labels(tmp_path, expected)
    message = str(err.value)
    assert "2 label file(s) missing" in message
    assert "P__0101_seg.nii.gz" in message and "Q__1111_seg.nii.gz" in message


def test_import_rejects_duplicates_and_junk(tmp_path):
    with pytest.raises(DataError, match="duplicate"):
        import_backend_labels(tmp_path, [("P", "0011"), ("P", "0011")])
    path = tmp_path / entry_name("P", "0011", "seg")
    path.write_bytes(b"not a nifti file at all")
    with pytest.raises(DataError, match="P__0011_seg"):
        import_backend_labels(tmp_path, [("P", "0011")])


def test_import_rejects_fractional_labels(tmp_path):
    data = np.full((4, 4, 2), 0.5, dtype=np.float32)
    write_nifti(tmp_path / entry_name("P", "0011", "seg"), data, AFFINE)
    with pytest.raises(DataError, match="non-integer"):
        import_backend_labels(tmp_path, [("P", "0011")])


def test_import_accepts_integral_floats(tmp_path):
    data = seg(9).astype(np.float32)
    write_nifti(tmp_path / entry_name("P", "0011", "seg"), data, AFFINE)
    got = import_backend_labels(tmp_path, [("P", "0011")])
    assert got[("P", "0011")].dtype == np.int16
    assert np.array_equal(got[("P", "0011")], data.astype(np.int16))


def test_import_volumes_round_trips_export(tmp_path):
    cases = [make_case("P", "0011", seed=0), make_case("Q", "1110", seed=1)]
    export_for_backend(cases, tmp_path)
    got = import_synthesized_volumes(tmp_path, [("P", "0011"), ("Q", "1110")])
    assert [(c.patient_id, str(c.scenario)) for c in got] == [("P", "0011"), ("Q", "1110")]
    for case, back in zip(cases, got):
        assert np.array_equal(back.volumes, case.volumes)
        assert back.volumes.dtype == np.float32
        np.testing.assert_allclose(back.affine, case.affine)


def test_import_volumes_reports_every_missing_file(tmp_path):
    export_for_backend([make_case("P", "0011")], tmp_path)
    (tmp_path / entry_name("P", "0011", "t2")).unlink()
    with pytest.raises(DataError) as err:
        import_synthesized_volumes(tmp_path, [("P", "0011"), ("Q", "0101")])
    message = str(err.value)
    assert "5 volume file(s) missing" in message
    assert "P__0011_t2.nii.gz" in message and "Q__0101_flair.nii.gz" in message


def test_import_volumes_rejects_mismatched_shapes(tmp_path):
    export_for_backend([make_case("P", "0011")], tmp_path)
    write_nifti(tmp_path / entry_name("P", "0011", "t2"), np.zeros((3, 3, 2), np.float32), AFFINE)
    with pytest.raises(DataError, match="does not match"):
        import_synthesized_volumes(tmp_path, [("P", "0011")])
