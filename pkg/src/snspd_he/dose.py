"""He-ion dose geometry: depth stopping profiles, lateral straggle, and the
implanted fraction under a wire when only its surroundings are irradiated.

Depth-dependent quantities are table driven (z in nm).  The shipped default
is a parametrised stand-in for a binary-collision Monte Carlo result for
30 keV He in NbTiN/SiO2/Si: a Gaussian stopping profile peaking at 335 nm,
a lateral FWHM table through 400 nm (film), 241 nm (main stopping layer),
and an energy-loss curve peaking at 270 nm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr

from . import reference as ref
from .errors import DomainError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


def straggle_sigma_from_fwhm(fwhm: float) -> float:
    """Standard deviation of a Gaussian with the given FWHM."""
    if not (math.isfinite(fwhm) and fwhm > 0):
        raise DomainError(f"fwhm must be positive, got {fwhm!r}")
    return fwhm / FWHM_PER_SIGMA


def _as_table(z, values, name):
    z = np.asarray(z, dtype=float)
    values = np.asarray(values, dtype=float)
    if z.ndim != 1 or z.shape != values.shape or z.size < 2:
        raise DomainError(f"{name}: need matching 1D depth/value columns with >= 2 rows")
    if not np.all(np.isfinite(z)) or not np.all(np.isfinite(values)):
        raise DomainError(f"{name}: non-finite entries")
    if np.any(np.diff(z) <= 0):
        raise DomainError(f"{name}: depths must be strictly increasing")
    z.flags.writeable = False
    values.flags.writeable = False
    return z, values


@dataclass(frozen=True)
class Layer:
    name: str
    start: float
    end: float


@dataclass(frozen=True, eq=False)
class DoseModel:
    """Depth-resolved stopping density, lateral FWHM and energy loss (z in nm)."""

    depth_z: np.ndarray
    depth_density: np.ndarray
    fwhm_z: np.ndarray
    fwhm: np.ndarray
    energy_z: np.ndarray
    energy: np.ndarray
    layers: tuple[Layer, ...] = ()

    def __post_init__(self):
        dz, dd = _as_table(self.depth_z, self.depth_density, "depth_pdf")
        fz, fw = _as_table(self.fwhm_z, self.fwhm, "lateral_fwhm_by_depth")
        ez, ee = _as_table(self.energy_z, self.energy, "energy_deposition")
        if np.any(dd < 0) or np.any(ee < 0):
            raise DomainError("densities and energy losses must be non-negative")
        if np.any(fw <= 0):
            raise DomainError("lateral FWHM values must be positive")
        total = np.trapezoid(dd, dz)
        if abs(total - 1.0) > 1e-6:
            raise DomainError(f"depth_pdf integrates to {total:.9g}, not 1")
        for layer in self.layers:
            if not layer.end > layer.start:
                raise DomainError(f"layer {layer.name!r} has non-positive thickness")
        for name, value in (("depth_z", dz), ("depth_density", dd), ("fwhm_z", fz), ("fwhm", fw),
                            ("energy_z", ez), ("energy", ee)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "layers", tuple(Layer(*l) if not isinstance(l, Layer) else l
                                                 for l in self.layers))

    def layer(self, name: str) -> Layer:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise DomainError(f"no layer named {name!r}")


def normalized_depth_pdf(z, density):
    """Scale ``density`` so it integrates to one over ``z`` (trapezoidal rule)."""
    z = np.asarray(z, dtype=float)
    density = np.asarray(density, dtype=float)
    total = np.trapezoid(density, z)
    if not total > 0:
        raise DomainError("depth density has no mass")
    return density / total


DEFAULT_LAYERS = (
    Layer("NbTiN", 0.0, 12.0),
    Layer("SiO2", 12.0, ref.SIO2_SI_INTERFACE_NM),
    Layer("Si", ref.SIO2_SI_INTERFACE_NM, 1000.0),
)

# Lateral FWHM (nm) against depth: 400 nm in the film, 241 nm at the stopping
# maximum, widening again in the tail so the depth-integrated spread is ~266 nm.
DEFAULT_FWHM_TABLE = (
    (0.0, ref.LATERAL_FWHM_FILM_NM),
    (12.0, ref.LATERAL_FWHM_FILM_NM),
    (150.0, 290.0),
    (ref.STOPPING_PEAK_DEPTH_NM, ref.LATERAL_FWHM_STOPPING_LAYER_NM),
    (500.0, 286.0),
    (700.0, 350.0),
    (1000.0, 420.0),
)

DEFAULT_DEPTH_STD_NM = 125.0
DEFAULT_ION_ENERGY_EV = 30e3


def default_energy_shape(z):
    """Energy loss per nm, up to scale: half of the maximum at the surface,
    rising to the maximum at 270 nm, then a Gaussian fall-off."""
    z = np.asarray(z, dtype=float)
    peak = ref.ENERGY_LOSS_PEAK_DEPTH_NM
    bump = np.exp(-0.5 * ((z - peak) / 80.0) ** 2)
    at_surface = math.exp(-0.5 * (peak / 80.0) ** 2)
    rising = 0.5 + 0.5 * (bump - at_surface) / (1.0 - at_surface)
    falling = np.exp(-0.5 * ((z - peak) / 90.0) ** 2)
    return np.where(z <= peak, rising, falling)


def default_dose_model(step_nm: float = 1.0, depth_max_nm: float = 1000.0) -> DoseModel:
    z = np.arange(0.0, depth_max_nm + 0.5 * step_nm, step_nm)
    density = np.exp(-0.5 * ((z - ref.STOPPING_PEAK_DEPTH_NM) / DEFAULT_DEPTH_STD_NM) ** 2)
    density = normalized_depth_pdf(z, density)
    energy = default_energy_shape(z)
    energy *= DEFAULT_ION_ENERGY_EV / np.trapezoid(energy, z)
    fz, fw = map(np.array, zip(*DEFAULT_FWHM_TABLE))
    return DoseModel(z, density, fz, fw, z, energy, DEFAULT_LAYERS)


def depth_profile_eval(model: DoseModel, z):
    """Stopping density f_line(z) in 1/nm; zero outside the tabulated support."""
    return np.interp(z, model.depth_z, model.depth_density, left=0.0, right=0.0)


def energy_deposition_eval(model: DoseModel, z):
    """Deposited energy in eV per ion per nm of depth; zero outside the table."""
    return np.interp(z, model.energy_z, model.energy, left=0.0, right=0.0)


def lateral_fwhm_at(model: DoseModel, z):
    """Lateral FWHM (nm) at depth z, held constant beyond the table ends."""
    return np.interp(z, model.fwhm_z, model.fwhm)


def film_fraction_per_nm(model: DoseModel, layer: str = "NbTiN") -> float:
    """Mean stopping fraction per nm of depth inside ``layer``."""
    span = model.layer(layer)
    z = np.linspace(span.start, span.end, 1025)
    z = np.union1d(z, model.depth_z[(model.depth_z > span.start) & (model.depth_z < span.end)])
    return float(np.trapezoid(depth_profile_eval(model, z), z) / (span.end - span.start))


def depth_integrated_fwhm(model: DoseModel) -> float:
    """FWHM of the lateral stopping distribution summed over all depths.

    The sum of Gaussians of depth-dependent width is not itself Gaussian, so the
    half-maximum point is located numerically.
    """
    z = model.depth_z
    weights = model.depth_density
    sig = lateral_fwhm_at(model, z) / FWHM_PER_SIGMA

    def mixture(x):
        return np.trapezoid(weights * np.exp(-0.5 * (x / sig) ** 2) / sig, z)

    half = 0.5 * mixture(0.0)
    upper = 10.0 * float(sig.max())
    return 2.0 * brentq(lambda x: mixture(x) - half, 0.0, upper, xtol=1e-9)


@dataclass(frozen=True)
class IrradiationPattern:
    """Irradiated intervals along the axis across the wire (nm), plus fluence.

    Interval ends may be infinite.  Use :meth:`full` and :meth:`standoff` for
    the two schemes of interest.
    """

    intervals: tuple[tuple[float, float], ...]
    fluence: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.fluence) and self.fluence >= 0):
            raise DomainError("fluence must be >= 0")
        cleaned = []
        for item in self.intervals:
            try:
                a, b = (float(v) for v in item)
            except (TypeError, ValueError):
                raise DomainError(f"malformed interval {item!r}") from None
            if math.isnan(a) or math.isnan(b) or not a < b:
                raise DomainError(f"interval {item!r} must satisfy start < end")
            cleaned.append((a, b))
        for (a0, b0), (a1, b1) in zip(cleaned, cleaned[1:]):
            if a1 < b0:
                raise DomainError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", tuple(cleaned))

    @classmethod
    def full(cls, fluence: float = 0.0) -> IrradiationPattern:
        return cls(((-math.inf, math.inf),), fluence)

    @classmethod
    def standoff(cls, w_unirr: float, fluence: float = 0.0) -> IrradiationPattern:
        """Everything irradiated except a centred gap of width ``w_unirr``."""
        if not (math.isfinite(w_unirr) and w_unirr >= 0):
            raise DomainError("w_unirr must be finite and >= 0")
        if w_unirr == 0:
            return cls.full(fluence)
        half = 0.5 * w_unirr
        return cls(((-math.inf, -half), (half, math.inf)), fluence)

    def is_irradiated(self, s):
        s = np.asarray(s, dtype=float)
        hit = np.zeros(s.shape, dtype=bool)
        for a, b in self.intervals:
            hit |= (s >= a) & (s <= b)
        return hit


def _gauss_mass(a, b, x, sigma):
    """P(a <= S <= b) for S ~ N(x, sigma), evaluated on the tail that avoids cancellation."""
    lo = (a - x) / sigma
    hi = (b - x) / sigma
    upper_side = lo > 0
    return np.where(upper_side, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


def lateral_fraction_profile(pattern: IrradiationPattern, fwhm: float, x_grid):
    """Implanted fraction at positions ``x_grid`` relative to full irradiation.

    Closed-form convolution of the irradiation mask with a Gaussian of the
    given FWHM.
    """
    sigma = straggle_sigma_from_fwhm(fwhm)
    x = np.asarray(x_grid, dtype=float)
    total = np.zeros(x.shape)
    for a, b in pattern.intervals:
        total = total + _gauss_mass(a, b, x, sigma)
    return np.clip(total, 0.0, 1.0)


def average_fraction_under_wire(pattern: IrradiationPattern, fwhm: float, wire_width: float) -> float:
    """Mean of the lateral fraction over a wire centred at x = 0."""
    if wire_width < 0:
        raise DomainError("wire_width must be >= 0")
    if wire_width == 0:
        return float(lateral_fraction_profile(pattern, fwhm, 0.0))
    half = 0.5 * wire_width

    def f(x):
        return float(lateral_fraction_profile(pattern, fwhm, x))

    value, _ = quad(f, -half, half, epsabs=0.0, epsrel=1e-11, limit=200)
    return value / wire_width


@dataclass(frozen=True)
class WireFractions:
    minimum: float
    maximum: float
    mean: float


def fractions_under_wire(pattern: IrradiationPattern, fwhm: float, wire_width: float,
                         samples: int = 2001) -> WireFractions:
    """Minimum, maximum and mean lateral fraction across a centred wire."""
    x = np.linspace(-0.5 * wire_width, 0.5 * wire_width, samples)
    f = lateral_fraction_profile(pattern, fwhm, x)
    return WireFractions(float(f.min()), float(f.max()),
                         average_fraction_under_wire(pattern, fwhm, wire_width))


def read_profile_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV (depth in nm, value) with one header row."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from None
    if data.shape[1] != 2:
        raise DomainError(f"{path}: expected 2 columns, found {data.shape[1]}")
    return data[:, 0], data[:, 1]


def write_columns_csv(path, header, *columns) -> None:
    rows = np.column_stack(columns)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def dose_model_from_csv(depth_pdf, fwhm, energy, layers=DEFAULT_LAYERS, normalize=True) -> DoseModel:
    """Build a model from three profile CSVs (as exported by SRIM-like tools)."""
    dz, dd = read_profile_csv(depth_pdf)
    if normalize:
        dd = normalized_depth_pdf(dz, dd)
    fz, fw = read_profile_csv(fwhm)
    ez, ee = read_profile_csv(energy)
    return DoseModel(dz, dd, fz, fw, ez, ee, tuple(layers))
