"""Film and wire value types plus the closed-form transport relations.

The retrapping-current relation ties the thermal boundary conductance
``coupling_sigma`` (W m^-2 K^-4) to the current at which a self-heated normal
domain collapses:

    J_r = sqrt(coupling_sigma * (Tc^4 - Tsub^4) / (4 d rho))

with ``rho = R_sheet * d``.  All quantities are SI unless a name carries an
explicit unit suffix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .units import NM

# Ivry scaling is written with thickness in nm: d_nm * Tc = A * R_sheet**-B
_IVRY_LENGTH_UNIT = NM


def _require_positive(**values):
    for name, value in values.items():
        if value is None:
            continue
        if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class FilmState:
    """Superconducting film parameters at one fluence.

    ``coupling_sigma`` may be left as ``None`` for a film whose boundary
    conductance is still to be extracted from a measured retrapping current.
    """

    critical_temperature: float
    sheet_resistance: float
    thermal_conductivity: float
    specific_heat_volumetric: float
    thickness: float
    coupling_sigma: float | None = None

    def __post_init__(self):
        _require_positive(
            critical_temperature=self.critical_temperature,
            sheet_resistance=self.sheet_resistance,
            thermal_conductivity=self.thermal_conductivity,
            specific_heat_volumetric=self.specific_heat_volumetric,
            thickness=self.thickness,
            coupling_sigma=self.coupling_sigma,
        )

    @property
    def resistivity(self) -> float:
        """Normal-state resistivity in ohm*m, always derived from R_sheet * d."""
        return self.sheet_resistance * self.thickness

    def with_(self, **changes) -> FilmState:
        return replace(self, **changes)


@dataclass(frozen=True)
class WireGeometry:
    length: float
    width: float
    thickness: float
    substrate_temperature: float

    def __post_init__(self):
        _require_positive(
            length=self.length,
            width=self.width,
            thickness=self.thickness,
            substrate_temperature=self.substrate_temperature,
        )
        if not self.length > self.width:
            raise DomainError("wire length must exceed its width")

    @property
    def cross_section(self) -> float:
        return self.width * self.thickness

    def with_(self, **changes) -> WireGeometry:
        return replace(self, **changes)


@dataclass(frozen=True)
class FluenceCurveParams:
    """Sheet-resistance evolution and Ivry scaling constants.

    ``ivry_prefactor_A`` is in nm * K * ohm**B (thickness expressed in nm).
    """

    r0: float
    defect_rate: float
    saturation_fluence: float
    ivry_prefactor_A: float
    ivry_exponent_B: float

    def __post_init__(self):
        _require_positive(
            r0=self.r0,
            saturation_fluence=self.saturation_fluence,
            ivry_prefactor_A=self.ivry_prefactor_A,
            ivry_exponent_B=self.ivry_exponent_B,
        )
        if not (math.isfinite(self.defect_rate) and self.defect_rate >= 0):
            raise DomainError(f"defect_rate must be >= 0, got {self.defect_rate!r}")


@dataclass(frozen=True)
class ConductanceCurveParams:
    """Saturating decay of the boundary conductance with fluence.

    sigma(F) = sigma_saturated + (sigma0 - sigma_saturated) * exp(-F / decay_fluence)
    """

    sigma0: float
    sigma_saturated: float
    decay_fluence: float

    def __post_init__(self):
        _require_positive(sigma0=self.sigma0, sigma_saturated=self.sigma_saturated,
                          decay_fluence=self.decay_fluence)
        if self.sigma_saturated > self.sigma0:
            raise DomainError("sigma_saturated must not exceed sigma0")


def check_pairing(film: FilmState, geom: WireGeometry) -> None:
    if not math.isclose(film.thickness, geom.thickness, rel_tol=1e-12):
        raise DomainError(
            f"film thickness {film.thickness!r} m differs from wire thickness {geom.thickness!r} m"
        )


def _temperature_headroom(film: FilmState, geom: WireGeometry) -> float:
    tc, tsub = film.critical_temperature, geom.substrate_temperature
    if tsub >= tc:
        raise DomainError(f"substrate temperature {tsub} K is not below Tc = {tc} K")
    return tc**4 - tsub**4


def retrapping_current_analytic(film: FilmState, geom: WireGeometry) -> float:
    """Retrapping current in amperes from the closed-form T^4 balance."""
    check_pairing(film, geom)
    if film.coupling_sigma is None:
        raise DomainError("film has no coupling_sigma")
    headroom = _temperature_headroom(film, geom)
    j_r = math.sqrt(film.coupling_sigma * headroom / (4.0 * film.thickness * film.resistivity))
    return geom.cross_section * j_r


def sigma_from_retrapping(i_r: float, film: FilmState, geom: WireGeometry) -> float:
    """Invert the retrapping relation for the boundary conductance (W m^-2 K^-4).

    Any ``coupling_sigma`` already set on ``film`` is ignored.
    """
    check_pairing(film, geom)
    _require_positive(i_r=i_r)
    headroom = _temperature_headroom(film, geom)
    j_r = i_r / geom.cross_section
    return 4.0 * film.thickness * film.resistivity * j_r**2 / headroom


def sheet_resistance_at_fluence(params: FluenceCurveParams, fluence: float) -> float:
    """Sheet resistance (ohm/sq) after irradiation with ``fluence`` ions/nm^2.

    R(F) = r0 * (1 + defect_rate * F) / (1 - F / saturation_fluence), valid for
    0 <= F < saturation_fluence.
    """
    if not math.isfinite(fluence) or fluence < 0:
        raise DomainError(f"fluence must be >= 0, got {fluence!r}")
    if fluence >= params.saturation_fluence:
        raise DomainError(
            f"fluence {fluence} reaches the saturation fluence {params.saturation_fluence}"
        )
    return params.r0 * (1.0 + params.defect_rate * fluence) / (1.0 - fluence / params.saturation_fluence)


def tc_from_sheet_resistance(params: FluenceCurveParams, r_sheet: float, thickness: float) -> float:
    """Critical temperature from the Ivry scaling d * Tc = A * R_sheet**-B."""
    _require_positive(r_sheet=r_sheet, thickness=thickness)
    if r_sheet < params.r0 * (1.0 - 1e-12):
        raise DomainError(f"r_sheet {r_sheet} is below the pristine value r0 = {params.r0}")
    d_nm = thickness / _IVRY_LENGTH_UNIT
    return params.ivry_prefactor_A * r_sheet ** (-params.ivry_exponent_B) / d_nm


def coupling_sigma_at_fluence(params: ConductanceCurveParams, fluence: float) -> float:
    if not math.isfinite(fluence) or fluence < 0:
        raise DomainError(f"fluence must be >= 0, got {fluence!r}")
    drop = params.sigma0 - params.sigma_saturated
    return params.sigma_saturated + drop * math.exp(-fluence / params.decay_fluence)


def film_at_fluence(
    base: FilmState,
    params: FluenceCurveParams,
    fluence: float,
    conductance: ConductanceCurveParams | None = None,
) -> FilmState:
    """Return ``base`` with R_sheet, Tc (and optionally sigma) evolved to ``fluence``."""
    r_sheet = sheet_resistance_at_fluence(params, fluence)
    tc = tc_from_sheet_resistance(params, r_sheet, base.thickness)
    sigma = base.coupling_sigma if conductance is None else coupling_sigma_at_fluence(conductance, fluence)
    return base.with_(sheet_resistance=r_sheet, critical_temperature=tc, coupling_sigma=sigma)


def ivry_prefactor_for(tc0: float, r0: float, thickness: float, exponent_B: float) -> float:
    """Prefactor A that makes the Ivry law pass through (r0, tc0)."""
    _require_positive(tc0=tc0, r0=r0, thickness=thickness, exponent_B=exponent_B)
    return (thickness / _IVRY_LENGTH_UNIT) * tc0 * r0**exponent_B


def fit_ivry(r_sheet, tc, thickness) -> tuple[float, float]:
    """Least-squares fit of log(d_nm * Tc) = log(A) - B * log(R_sheet).

    ``thickness`` may be a scalar or per-sample array (meters).  Returns (A, B).
    """
    r_sheet = np.asarray(r_sheet, dtype=float)
    tc = np.asarray(tc, dtype=float)
    d_nm = np.broadcast_to(np.asarray(thickness, dtype=float) / _IVRY_LENGTH_UNIT, r_sheet.shape)
    if r_sheet.size < 2 or np.any(r_sheet <= 0) or np.any(tc <= 0):
        raise DomainError("need at least two positive (R_sheet, Tc) samples")
    slope, intercept = np.polyfit(np.log(r_sheet), np.log(d_nm * tc), 1)
    exponent = -slope
    if exponent <= 0:
        raise DomainError(f"fitted Ivry exponent is not positive ({exponent:.4g})")
    return float(math.exp(intercept)), float(exponent)


def _current_for(sigma, tc, r_sheet, width, t_sub):
    return width * math.sqrt(sigma * (tc**4 - t_sub**4) / (4.0 * r_sheet))


def calibrate_fluence_model(
    *,
    ivry_A: float,
    ivry_B: float,
    thickness: float,
    width: float,
    substrate_temperature: float,
    anchor_fluence: float,
    ir_pristine: float,
    ir_anchor: float,
    sigma_pristine: float,
    sigma_anchor: float,
    saturation_fluence: float,
    sigma_decay_fluence: float,
) -> tuple[FluenceCurveParams, ConductanceCurveParams]:
    """Pick r0, defect_rate and the conductance curve so the closed-form
    retrapping current passes through both anchor points.

    With rho = R_sheet * d the thickness drops out of the current, so each
    anchor fixes one R_sheet through the Ivry law.  This is a consistency
    calibration, not a prediction.
    """
    d_nm = thickness / _IVRY_LENGTH_UNIT

    def tc_of(r):
        return ivry_A * r ** (-ivry_B) / d_nm

    def r_for(current, sigma):
        r_hi = (ivry_A / (d_nm * substrate_temperature)) ** (1.0 / ivry_B) * (1 - 1e-9)

        def gap(r):
            return _current_for(sigma, tc_of(r), r, width, substrate_temperature) - current

        r_lo = 1e-6
        if gap(r_lo) < 0:
            raise DomainError("anchor current unreachable for this Ivry law")
        return brentq(gap, r_lo, r_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)

    r0 = r_for(ir_pristine, sigma_pristine)
    r_anchor = r_for(ir_anchor, sigma_anchor)
    if r_anchor < r0:
        raise DomainError("anchors imply a sheet resistance that decreases with fluence")
    if anchor_fluence >= saturation_fluence:
        raise DomainError("anchor fluence must lie below the saturation fluence")
    defect_rate = ((r_anchor / r0) * (1.0 - anchor_fluence / saturation_fluence) - 1.0) / anchor_fluence
    if defect_rate < 0:
        raise DomainError("saturation_fluence too small for the anchor sheet resistance")

    decay = math.exp(-anchor_fluence / sigma_decay_fluence)
    sigma_sat = (sigma_anchor - sigma_pristine * decay) / (1.0 - decay)
    fluence_params = FluenceCurveParams(
        r0=r0,
        defect_rate=defect_rate,
        saturation_fluence=saturation_fluence,
        ivry_prefactor_A=ivry_A,
        ivry_exponent_B=ivry_B,
    )
    conductance = ConductanceCurveParams(
        sigma0=sigma_pristine, sigma_saturated=sigma_sat, decay_fluence=sigma_decay_fluence
    )
    return fluence_params, conductance
