import numpy as np
import pytest

from mmsynth.niftiio import write_nifti
from mmsynth.scenarios import MODALITY_FILE_TOKENS

# Small non-identity affine so round-trip tests exercise real values.
TEST_AFFINE = np.array(
    [
        [-0.9375, 0.0, 0.0, 117.0],
        [0.0, -0.9375, 0.0, 138.0],
        [0.0, 0.0, 1.5, -72.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)


def make_patient(root, patient_id, shape=(24, 20, 6), seed=0, with_seg=True):
    """Write one synthetic BraTS-layout patient and return its directory.

    Volumes are zero outside a centered brain blob; each modality gets a
    distinct intensity offset so channel mixups are detectable.
    """
    rng = np.random.default_rng(seed)
    h, w, d = shape
    pdir = root / patient_id
    pdir.mkdir(parents=True)
    brain = np.zeros(shape, dtype=bool)
    brain[h // 4 : 3 * h // 4 + 1, w // 4 : 3 * w // 4 + 1, 1 : d - 1] = True
    for c, tok in enumerate(MODALITY_FILE_TOKENS):
        vol = np.zeros(shape, dtype=np.float32)
        vol[brain] = rng.uniform(50.0, 150.0, size=int(brain.sum())) + 100.0 * c
        write_nifti(pdir / f"{patient_id}_{tok}.nii.gz", vol, TEST_AFFINE)
    if with_seg:
        seg = np.zeros(shape, dtype=np.int16)
        r0, c0 = h // 2, w // 2
        seg[r0 : r0 + 2, c0 : c0 + 2, 2 : d - 2] = 1
        seg[r0, c0, 2 : d - 2] = 4
        seg[r0 + 1, c0 + 1, 2 : d - 2] = 2
        write_nifti(pdir / f"{patient_id}_seg.nii.gz", seg, TEST_AFFINE)
    return pdir


@pytest.fixture(scope="session")
def brats_root(tmp_path_factory):
    """Five complete synthetic patients plus one incomplete (no _t2)."""
    root = tmp_path_factory.mktemp("brats")
    for i in range(5):
        make_patient(root, f"sub-{i:03d}", seed=i)
    broken = make_patient(root, "sub-900", seed=9)
    (broken / "sub-900_t2.nii.gz").unlink()
    return root
