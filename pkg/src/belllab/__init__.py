"""Bell-CHSH laboratory: simulation, inequality estimators, joint-distribution
feasibility and interpretation-of-probability admissibility rules."""

from belllab.core import (
    Angle,
    ChTerms,
    CounterfactualQuadruple,
    DomainError,
    InsufficientDataError,
    Side,
    SettingLabel,
    Slot,
    TrialRecord,
    UnsupportedOperationError,
    ch_value,
    ch_within_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "Angle",
    "ChTerms",
    "CounterfactualQuadruple",
    "DomainError",
    "InsufficientDataError",
    "Side",
    "SettingLabel",
    "Slot",
    "TrialRecord",
    "UnsupportedOperationError",
    "ch_value",
    "ch_within_bounds",
    "__version__",
]
