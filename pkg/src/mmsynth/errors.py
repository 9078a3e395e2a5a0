"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: anything derived from MmsynthError is a
validation failure (exit 1); unexpected exceptions are internal (exit 3).
"""


class MmsynthError(Exception):
    """Base class for all domain errors raised by mmsynth."""


class ShapeError(MmsynthError):
    """Array shape or channel count does not match the operation's contract."""


class RangeError(MmsynthError):
    """Index or box argument outside its valid range."""


class DegenerateInputError(MmsynthError):
    """Input is valid in shape but degenerate in content (all-zero volume,
    zero in-box mean, zero dynamic range)."""


class ContractError(MmsynthError):
    """A precondition that callers must guarantee was violated (e.g. missing
    geometry metadata, all-missing scenario passed to the generator)."""


class ConfigError(MmsynthError):
    """Invalid configuration: unknown keys, inconsistent roles, bad values."""


class DataError(MmsynthError):
    """Malformed or inconsistent data: unexpected label values, mismatched
    patient sets, unreadable or missing record files."""


class TrainingDiverged(MmsynthError):
    """Raised when a training step produces a non-finite loss.

    Carries the diagnostic context required by the trainer contract.
    """

    def __init__(self, step, scenarios, losses):
        self.step = step
        self.scenarios = scenarios
        self.losses = losses
        super().__init__(
            f"non-finite loss at step {step}: losses={losses} scenarios={scenarios}"
        )
