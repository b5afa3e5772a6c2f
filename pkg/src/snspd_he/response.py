"""Count-rate versus bias: error-function fits, normalisation and plateau widths."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf, erfinv

from .errors import DomainError, FitError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CountRateCurve:
    bias_points: np.ndarray
    counts: np.ndarray
    critical_current: float

    def __post_init__(self):
        bias = np.asarray(self.bias_points, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        if bias.ndim != 1 or bias.shape != counts.shape:
            raise DomainError("bias_points and counts must be 1D arrays of equal length")
        if np.any(np.diff(bias) <= 0):
            raise DomainError("bias_points must be strictly increasing")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise DomainError("counts must be finite and non-negative")
        if not self.critical_current > 0:
            raise DomainError("critical_current must be positive")
        object.__setattr__(self, "bias_points", bias)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class SigmoidFit:
    """CR(I) = offset + (asymptote / 2) * (1 + erf((I - center) / (sqrt(2) * width)))."""

    asymptote: float
    center: float
    width: float
    residual_rms: float
    offset: float = 0.0

    def __post_init__(self):
        if not self.asymptote > 0:
            raise DomainError("asymptote must be positive")
        if not self.width > 0:
            raise DomainError("width must be positive")

    def __call__(self, bias):
        return error_function_model(bias, self.asymptote, self.center, self.width, self.offset)

    def to_dict(self) -> dict:
        return asdict(self)


def error_function_model(bias, asymptote, center, width, offset=0.0):
    bias = np.asarray(bias, dtype=float)
    return offset + 0.5 * asymptote * (1.0 + erf((bias - center) / (SQRT2 * width)))


def _initial_guess(bias, counts, critical_current):
    asymptote = float(counts.max())
    half = 0.5 * asymptote
    above = np.nonzero(counts >= half)[0]
    k = int(above[0])
    if k == 0:
        center = float(bias[0])
    else:
        # linear interpolation of the first half-maximum crossing
        c0, c1 = counts[k - 1], counts[k]
        center = float(bias[k - 1] + (half - c0) * (bias[k] - bias[k - 1]) / (c1 - c0))
    width = (critical_current - center) / 3.0
    if not width > 0:
        width = (bias[-1] - bias[0]) / 10.0
    return asymptote, center, width


def fit_error_function(curve: CountRateCurve, offset: bool = False, max_iterations: int = 2000) -> SigmoidFit:
    """Least-squares error-function fit to a count-rate curve.

    The bias axis is scaled by the critical current and the counts by their
    maximum before fitting, so the optimiser works on O(1) numbers.  The start
    point is deterministic: asymptote = max(counts), center = first half-max
    crossing, width = (I_c - center) / 3.  With ``offset=True`` a constant dark
    count term is fitted as well.
    """
    bias, counts = curve.bias_points, curve.counts
    if bias.size < 5:
        raise FitError("need at least 5 points to fit")
    if np.all(counts == counts[0]):
        raise FitError("counts are constant; nothing to fit")

    i_scale = curve.critical_current
    c_scale = float(counts.max())
    x = bias / i_scale
    y = counts / c_scale
    a0, c0, w0 = _initial_guess(x, y, 1.0)
    p0 = [a0, c0, w0] + ([float(y.min())] if offset else [])

    def residual(p):
        return error_function_model(x, p[0], p[1], p[2], p[3] if offset else 0.0) - y

    def jacobian(p):
        a, c, w = p[0], p[1], p[2]
        u = (x - c) / (SQRT2 * w)
        g = np.exp(-u * u) / math.sqrt(math.pi)
        cols = [
            0.5 * (1.0 + erf(u)),
            -a * g / (SQRT2 * w),
            -a * g * u / w,
        ]
        if offset:
            cols.append(np.ones_like(x))
        return np.column_stack(cols)

    try:
        result = least_squares(residual, p0, jac=jacobian, method="lm", xtol=1e-15, ftol=1e-15,
                               gtol=1e-15, max_nfev=max_iterations)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"fit failed: {exc}") from exc
    if result.status <= 0:
        raise FitError(f"fit did not converge: {result.message}")
    a, c, w = (float(v) for v in result.x[:3])
    off = float(result.x[3]) if offset else 0.0
    if not np.all(np.isfinite(result.x)):
        raise FitError("fit produced non-finite parameters")
    if w <= 0:
        raise FitError(f"fitted width is not positive ({w * i_scale:.4g} A); counts do not rise with bias")
    if a <= 0:
        raise FitError("fitted asymptote is not positive")
    rms = float(np.sqrt(np.mean(result.fun**2)))
    return SigmoidFit(asymptote=a * c_scale, center=c * i_scale, width=w * i_scale,
                      residual_rms=rms, offset=off * c_scale)


def normalize_counts(curve: CountRateCurve, fit: SigmoidFit) -> np.ndarray:
    """Counts divided by the fitted asymptote."""
    return curve.counts / fit.asymptote


@dataclass(frozen=True)
class PlateauWidth:
    absolute: float
    relative: float
    onset: float = math.nan

    @classmethod
    def from_absolute(cls, absolute: float, critical_current: float) -> PlateauWidth:
        if not critical_current > 0:
            raise DomainError("critical_current must be positive")
        return cls(absolute=absolute, relative=absolute / critical_current,
                   onset=critical_current - absolute)


def threshold_current(fit: SigmoidFit, threshold: float = 0.99) -> float:
    """Bias at which the fitted curve reaches ``threshold`` x asymptote."""
    if not 0 < threshold < 1:
        raise DomainError("threshold must lie in (0, 1)")
    return fit.center + SQRT2 * fit.width * float(erfinv(2.0 * threshold - 1.0))


def plateau_width(fit: SigmoidFit, critical_current: float, threshold: float = 0.99) -> PlateauWidth:
    """Width of the saturated region between the threshold crossing and I_c."""
    onset = threshold_current(fit, threshold)
    if onset >= critical_current:
        raise DomainError(
            f"curve reaches {threshold:.3g} of saturation at {onset:.6g} A, not below I_c = {critical_current:.6g} A"
        )
    return PlateauWidth.from_absolute(critical_current - onset, critical_current)


def reduction(before: float, after: float) -> float:
    """Fractional reduction 1 - after / before."""
    if not before > 0:
        raise DomainError("reference value must be positive")
    return 1.0 - after / before


@dataclass(frozen=True)
class SchemeRecord:
    """Currents (A) and optional fit results for one irradiation scheme."""

    label: str
    i_sw_before: float
    i_sw_after: float
    i_c_after: float
    fit: SigmoidFit | None = None
    plateau: PlateauWidth | None = None


COMPARE_COLUMNS = (
    "scheme",
    "i_sw_before_A",
    "i_sw_after_A",
    "i_c_after_A",
    "switching_reduction",
    "critical_vs_switching_reduction",
    "plateau_absolute_A",
    "plateau_relative",
)


def compare_schemes(records) -> list[dict]:
    """One row per scheme with switching/critical reductions and plateau widths.

    ``switching_reduction`` compares I_sw after to I_sw before irradiation;
    ``critical_vs_switching_reduction`` compares I_c after to I_sw before.
    """
    rows = []
    for rec in records:
        plateau = rec.plateau
        if plateau is None and rec.fit is not None:
            plateau = plateau_width(rec.fit, rec.i_c_after)
        rows.append({
            "scheme": rec.label,
            "i_sw_before_A": rec.i_sw_before,
            "i_sw_after_A": rec.i_sw_after,
            "i_c_after_A": rec.i_c_after,
            "switching_reduction": reduction(rec.i_sw_before, rec.i_sw_after),
            "critical_vs_switching_reduction": reduction(rec.i_sw_before, rec.i_c_after),
            "plateau_absolute_A": plateau.absolute if plateau else math.nan,
            "plateau_relative": plateau.relative if plateau else math.nan,
        })
    return rows
