"""Modality ordering, scenario masks, and the curriculum drop schedule.

A scenario is a 4-bit presence pattern over the fixed modality order
(T1, T2, T1c, T2f): '1' = available, '0' = missing / to synthesize.
The string form ("0011", ...) is the canonical identifier used in file
names, manifests, reports and CLI flags.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RangeError, ShapeError

# Fixed global modality order; ordinal 0 <-> T1, 3 <-> T2f.
MODALITIES = ("T1", "T2", "T1c", "T2f")
N_MODALITIES = 4

# File-name suffixes used by BraTS-layout datasets, in modality order.
MODALITY_FILE_TOKENS = ("t1", "t2", "t1ce", "flair")


@dataclass(frozen=True)
class ScenarioMask:
    """Presence mask over the 4 modalities (True = present)."""

    bits: tuple[bool, bool, bool, bool]

    def __post_init__(self):
        if len(self.bits) != N_MODALITIES:
            raise ValueError(f"mask needs {N_MODALITIES} bits, got {len(self.bits)}")
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @classmethod
    def from_string(cls, s: str) -> "ScenarioMask":
        if len(s) != N_MODALITIES or any(c not in "01" for c in s):
            raise ValueError(f"scenario string must be 4 chars of 0/1, got {s!r}")
        return cls(tuple(c == "1" for c in s))

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @property
    def present_count(self) -> int:
        return sum(self.bits)

    @property
    def missing_count(self) -> int:
        return N_MODALITIES - self.present_count

    @property
    def present_indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    @property
    def missing_indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if not b)

    def is_valid_synthesis(self) -> bool:
        """True when there is at least one present and one missing modality."""
        return 0 < self.present_count < N_MODALITIES


FULL_MASK = ScenarioMask.from_string("1111")


def enumerate_scenarios(include_full: bool = False) -> list[ScenarioMask]:
    """All 14 valid synthesis scenarios in canonical report order.

    Order groups masks by missing-count descending (present count 1, 2, 3),
    ascending numerically within a group: 0001, 0010, 0100, 1000, 0011, ...
    With include_full=True the all-present mask 1111 is appended (15 total).
    The all-missing mask 0000 is never produced.
    """
    values = sorted(range(1, 2**N_MODALITIES - 1), key=lambda v: (bin(v).count("1"), v))
    masks = [ScenarioMask.from_string(format(v, f"0{N_MODALITIES}b")) for v in values]
    if include_full:
        masks.append(FULL_MASK)
    return masks


@dataclass(frozen=True)
class CurriculumSchedule:
    """Three-phase curriculum: the number of channels that may be dropped
    grows from 1 to 3 as epochs progress.

    phase_boundaries are the first epochs of phases 2 and 3; the default
    splits total_epochs into near-equal thirds.
    """

    total_epochs: int
    phase_boundaries: tuple[int, int] | None = None

    def __post_init__(self):
        if self.total_epochs < 1:
            raise ValueError(f"total_epochs must be >= 1, got {self.total_epochs}")
        if self.phase_boundaries is None:
            b = (self.total_epochs // 3, (2 * self.total_epochs) // 3)
            object.__setattr__(self, "phase_boundaries", b)
        b1, b2 = self.phase_boundaries
        if not (0 <= b1 <= b2 <= self.total_epochs):
            raise ValueError(
                f"phase boundaries must be nondecreasing within [0, {self.total_epochs}], "
                f"got {self.phase_boundaries}"
            )


def max_drop(schedule: CurriculumSchedule, epoch: int) -> int:
    """Maximum number of channels a scenario may drop at this epoch (1..3)."""
    if not 0 <= epoch < schedule.total_epochs:
        raise RangeError(
            f"epoch {epoch} outside [0, {schedule.total_epochs})"
        )
    b1, b2 = schedule.phase_boundaries
    if epoch < b1:
        return 1
    if epoch < b2:
        return 2
    return 3


def sample_scenario(max_drop: int, rng: np.random.Generator) -> ScenarioMask:
    """Draw a random synthesis scenario dropping 1..max_drop channels.

    drop_count is uniform on {1..max_drop}; the dropped subset is a uniform
    choice of that size. The result always keeps at least one present bit.
    Deterministic given the generator state.
    """
    if max_drop not in (1, 2, 3):
        raise ValueError(f"max_drop must be in {{1,2,3}}, got {max_drop}")
    drop_count = int(rng.integers(1, max_drop + 1))
    dropped = rng.choice(N_MODALITIES, size=drop_count, replace=False)
    bits = [True] * N_MODALITIES
    for i in dropped:
        bits[int(i)] = False
    return ScenarioMask(tuple(bits))


def apply_scenario(sample: np.ndarray, mask: ScenarioMask) -> np.ndarray:
    """Zero out the missing channels of a 4-channel image.

    Present channels are returned bit-identical; the input is not modified.
    """
    sample = np.asarray(sample)
    if sample.ndim < 1 or sample.shape[0] != N_MODALITIES:
        raise ShapeError(
            f"expected a 4-channel image (leading axis 4), got shape {sample.shape}"
        )
    out = sample.copy()
    for c in mask.missing_indices:
        out[c] = 0
    return out


def scenario_strings(masks) -> list[str]:
    return [str(m) for m in masks]


def parse_scenario_list(spec: str, include_full: bool = False) -> list[ScenarioMask]:
    """Parse a CLI-style scenario list: 'all' or comma-separated mask strings."""
    if spec == "all":
        return enumerate_scenarios(include_full=include_full)
    masks = [ScenarioMask.from_string(tok) for tok in spec.split(",") if tok]
    if not masks:
        raise ValueError("empty scenario list")
    seen = set()
    for m in masks:
        if str(m) in seen:
            raise ValueError(f"duplicate scenario {m}")
        seen.add(str(m))
    return masks
