"""Modelling toolkit for helium-ion irradiated superconducting nanowire detectors.

Submodules:

* :mod:`snspd_he.core`: film and wire state, fluence curves, closed-form retrapping current
* :mod:`snspd_he.dose`: implantation depth tables and lateral straggle convolution
* :mod:`snspd_he.electrothermal`: 1D heat-flow solver, retrapping search, hotspot lifetime
* :mod:`snspd_he.response`: count-rate fits and plateau metrics
* :mod:`snspd_he.surface`: AFM and TEM image statistics
* :mod:`snspd_he.cli`: command line and scenario runner
"""

from .core import (
    ConductanceCurveParams,
    FilmState,
    FluenceCurveParams,
    WireGeometry,
    film_at_fluence,
    retrapping_current_analytic,
    sheet_resistance_at_fluence,
    sigma_from_retrapping,
    tc_from_sheet_resistance,
)
from .errors import BracketError, ConfigError, DomainError, FitError, SnspdError, StabilityError

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "ConductanceCurveParams",
    "ConfigError",
    "DomainError",
    "FilmState",
    "FitError",
    "FluenceCurveParams",
    "SnspdError",
    "StabilityError",
    "WireGeometry",
    "film_at_fluence",
    "retrapping_current_analytic",
    "sheet_resistance_at_fluence",
    "sigma_from_retrapping",
    "tc_from_sheet_resistance",
]
