"""Generalized baker's transformations: cut functions, the expanding factor,
the area-preserving 2-D map, its tower partition, and decay-of-correlation
estimators."""

from ._validation import (
    ConvergenceError,
    DomainError,
    JunctionWarning,
    NoiseFloorWarning,
    PreconditionError,
    TruncationWarning,
)
from .baker import BakerMap
from .correlation import (
    correlate_1d,
    correlate_2d,
    lower_bound_check,
    mc_correlations,
    projection_identity_check,
)
from .cut_functions import (
    ConstantCut,
    CutFunction,
    PowerCut,
    TabulatedCut,
    constant,
    eval_Phi,
    eval_phi,
    eval_phi_prime,
    from_config,
    linear,
    make_asymmetric_power,
    symmetric_power,
    tabulated,
)
from .fitting import DecaySeries, InsufficientPointsError, PowerLawFit, fit_power_law
from .one_d_map import ExpandingMap
from .tower import ReturnTimeOverflow, TowerPartition, find_period2
from .transfer_operator import UlamOperator

__version__ = "0.1.0"

__all__ = [
    "BakerMap",
    "ConstantCut",
    "ConvergenceError",
    "CutFunction",
    "DecaySeries",
    "DomainError",
    "ExpandingMap",
    "InsufficientPointsError",
    "JunctionWarning",
    "NoiseFloorWarning",
    "PowerCut",
    "PowerLawFit",
    "PreconditionError",
    "ReturnTimeOverflow",
    "TabulatedCut",
    "TowerPartition",
    "TruncationWarning",
    "UlamOperator",
    "constant",
    "correlate_1d",
    "correlate_2d",
    "eval_Phi",
    "eval_phi",
    "eval_phi_prime",
    "find_period2",
    "fit_power_law",
    "from_config",
    "linear",
    "lower_bound_check",
    "make_asymmetric_power",
    "mc_correlations",
    "projection_identity_check",
    "symmetric_power",
    "tabulated",
]
