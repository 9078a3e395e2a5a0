"""Missing-modality MRI synthesis: preprocessing, training, evaluation."""

from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DegenerateInputError,
    MmsynthError,
    RangeError,
    ShapeError,
    TrainingDiverged,
)
from .scenarios import (
    FULL_MASK,
    MODALITIES,
    MODALITY_FILE_TOKENS,
    CurriculumSchedule,
    ScenarioMask,
    apply_scenario,
    enumerate_scenarios,
    max_drop,
    parse_scenario_list,
    sample_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractError",
    "CurriculumSchedule",
    "DataError",
    "DegenerateInputError",
    "FULL_MASK",
    "MODALITIES",
    "MODALITY_FILE_TOKENS",
    "MmsynthError",
    "RangeError",
    "ScenarioMask",
    "ShapeError",
    "TrainingDiverged",
    "apply_scenario",
    "enumerate_scenarios",
    "max_drop",
    "parse_scenario_list",
    "sample_scenario",
    "__version__",
]
