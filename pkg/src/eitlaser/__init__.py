"""Closed-form cavity-field dynamics of a three-level EIT one-atom laser."""

from .analytic import (
    Branch,
    CatState,
    Ordering,
    SystemParams,
    cat_to_fock,
    conditional_state,
    overlap_q,
    phase,
)
from .config import ScenarioConfig, load_config, parse_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionMismatchError,
    EitLaserError,
    InvalidDimensionError,
    NotNormalizedError,
    ZeroProbabilityError,
)

__version__ = "0.1.0"

__all__ = [
    "Branch", "CatState", "Ordering", "SystemParams", "cat_to_fock", "conditional_state",
    "overlap_q", "phase", "ScenarioConfig", "load_config", "parse_config", "ConfigError",
    "ConvergenceError", "DimensionMismatchError", "EitLaserError", "InvalidDimensionError",
    "NotNormalizedError", "ZeroProbabilityError",
]
