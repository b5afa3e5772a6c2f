"""Scenario files: strict INI parsing into a :class:`Scenario`.

Every key carries its unit in the name (``thickness_nm``, ``bias_uA``...).
Unknown sections or keys are errors, as are references to missing files.
Omitted keys fall back to the standard fixture.  A minimal file::

    [run]
    pipeline = sweep

    [sweep]
    parameter = fluence_ipsn
    values = 0, 500, 1000, 2000
"""

from __future__ import annotations

import configparser
import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import fixtures
from .core import (
    ConductanceCurveParams,
    FilmState,
    FluenceCurveParams,
    WireGeometry,
    film_at_fluence,
)
from .dose import IrradiationPattern
from .electrothermal import SolverConfig
from .errors import ConfigError, DomainError
from .units import nm_to_m, um_to_m

PIPELINES = ("dose", "simulate", "extract-sigma", "fit-counts", "compare", "analyze-surface", "sweep",
             "reproduce")

# section -> key -> kind; kinds: float, int, str, bool, floats, strs, path, paths
SCHEMA: dict[str, dict[str, str]] = {
    "run": {"pipeline": "str", "recipe": "str", "out_dir": "str", "seed": "int", "workers": "int"},
    "material": {
        "critical_temperature_K": "float",
        "sheet_resistance_ohm": "float",
        "thermal_conductivity_W_per_mK": "float",
        "specific_heat_J_per_m3K": "float",
        "thickness_nm": "float",
        "coupling_sigma_W_per_m2K4": "float",
    },
    "fluence": {
        "fluence_ipsn": "float",
        "r0_ohm": "float",
        "defect_rate_per_ipsn": "float",
        "saturation_fluence_ipsn": "float",
        "ivry_A": "float",
        "ivry_B": "float",
        "sigma0_W_per_m2K4": "float",
        "sigma_saturated_W_per_m2K4": "float",
        "sigma_decay_fluence_ipsn": "float",
    },
    "geometry": {"length_um": "float", "width_nm": "float", "substrate_temperature_K": "float"},
    "dose": {
        "pattern": "str",
        "w_unirr_nm": "float",
        "intervals_nm": "strs",
        "fluence_ipsn": "float",
        "fwhm_nm": "floats",
        "wire_width_nm": "float",
        "x_min_nm": "float",
        "x_max_nm": "float",
        "x_step_nm": "float",
        "depth_step_nm": "float",
        "depth_pdf_csv": "path",
        "fwhm_csv": "path",
        "energy_csv": "path",
    },
    "solver": {
        "n_nodes": "int",
        "dt_s": "str",
        "max_steps": "int",
        "steady_tolerance_K": "float",
        "scheme": "str",
        "boundary": "str",
        "current_tolerance": "float",
        "seed_fraction": "float",
    },
    "simulate": {
        "bias_uA": "floats",
        "seed_energy_J": "float",
        "find_retrapping": "bool",
        "trace_every": "int",
    },
    "extract": {"retrapping_uA": "floats", "fluence_ipsn": "floats"},
    "sweep": {"parameter": "str", "values": "floats", "pde": "bool"},
    "counts": {
        "csv": "path",
        "critical_current_uA": "float",
        "label": "str",
        "i_sw_before_uA": "float",
        "i_sw_after_uA": "float",
        "threshold": "float",
        "offset": "bool",
    },
    "compare": {"records": "paths"},
    "surface": {
        "mode": "str",
        "input": "path",
        "detrend": "str",
        "axis": "int",
        "strip_width_nm": "float",
        "pixel_size_nm": "float",
        "exclusion_below_ipsn": "float",
        "background_window_px": "int",
        "threshold_std": "float",
        "connectivity": "int",
        "top_depth_nm": "float",
    },
}


def _parse_value(kind, raw, where, base_dir):
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "floats":
            return [float(v) for v in raw.split(",") if v.strip()]
        if kind == "strs":
            return [v.strip() for v in raw.split(",") if v.strip()]
        if kind in ("path", "paths"):
            items = [v.strip() for v in raw.split(",") if v.strip()]
            paths = []
            for item in items:
                if item == "default":
                    paths.append(item)
                    continue
                p = Path(item)
                if not p.is_absolute():
                    p = base_dir / p
                if not p.exists():
                    raise ConfigError(f"{where}: file {str(p)!r} does not exist")
                paths.append(p)
            return paths[0] if kind == "path" else paths
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind}") from None


def parse_config_text(text: str, base_dir: Path | str = ".") -> dict[str, dict]:
    """Parse INI text into ``{section: {key: value}}`` with strict key checking."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    base_dir = Path(base_dir)
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        allowed = SCHEMA[section]
        values = {}
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _parse_value(allowed[key], raw, f"[{section}] {key}", base_dir)
        out[section] = values
    return out


def load_config(path) -> dict[str, dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc}") from None
    return parse_config_text(text, path.parent)


@dataclass
class Scenario:
    raw: dict[str, dict] = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    def get(self, section: str, key: str, default=None):
        return self.section(section).get(key, default)

    def with_value(self, dotted: str, value) -> Scenario:
        """Copy with one ``section.key`` replaced (``fluence_ipsn`` alone means the fluence)."""
        if "." not in dotted:
            dotted = "fluence." + dotted
        section, key = dotted.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"sweep parameter {dotted!r} is not a config key")
        if SCHEMA[section][key] not in ("float", "int"):
            raise ConfigError(f"sweep parameter {dotted!r} is not numeric")
        raw = copy.deepcopy(self.raw)
        raw.setdefault(section, {})[key] = value
        return Scenario(raw)

    # -- physics objects -------------------------------------------------
    def base_film(self) -> FilmState:
        std = fixtures.standard_film()
        m = self.section("material")
        return FilmState(
            critical_temperature=m.get("critical_temperature_K", std.critical_temperature),
            sheet_resistance=m.get("sheet_resistance_ohm", std.sheet_resistance),
            thermal_conductivity=m.get("thermal_conductivity_W_per_mK", std.thermal_conductivity),
            specific_heat_volumetric=m.get("specific_heat_J_per_m3K", std.specific_heat_volumetric),
            thickness=nm_to_m(m["thickness_nm"]) if "thickness_nm" in m else std.thickness,
            coupling_sigma=m.get("coupling_sigma_W_per_m2K4", std.coupling_sigma),
        )

    def curves(self) -> tuple[FluenceCurveParams, ConductanceCurveParams]:
        std_f, std_c = fixtures.calibrated_curves()
        f = self.section("fluence")
        fluence_params = FluenceCurveParams(
            r0=f.get("r0_ohm", std_f.r0),
            defect_rate=f.get("defect_rate_per_ipsn", std_f.defect_rate),
            saturation_fluence=f.get("saturation_fluence_ipsn", std_f.saturation_fluence),
            ivry_prefactor_A=f.get("ivry_A", std_f.ivry_prefactor_A),
            ivry_exponent_B=f.get("ivry_B", std_f.ivry_exponent_B),
        )
        conductance = ConductanceCurveParams(
            sigma0=f.get("sigma0_W_per_m2K4", std_c.sigma0),
            sigma_saturated=f.get("sigma_saturated_W_per_m2K4", std_c.sigma_saturated),
            decay_fluence=f.get("sigma_decay_fluence_ipsn", std_c.decay_fluence),
        )
        return fluence_params, conductance

    @property
    def fluence(self) -> float | None:
        return self.get("fluence", "fluence_ipsn")

    def film(self, fluence: float | None = None) -> FilmState:
        """Film at ``fluence`` (or the configured one) from the fluence curves;
        the plain material section when no fluence is given."""
        fluence = self.fluence if fluence is None else fluence
        base = self.base_film()
        if fluence is None:
            return base
        fluence_params, conductance = self.curves()
        return film_at_fluence(base, fluence_params, fluence, conductance)

    def geometry(self, simulation: bool = False) -> WireGeometry:
        std = fixtures.simulation_geometry() if simulation else fixtures.device_geometry()
        g = self.section("geometry")
        return WireGeometry(
            length=um_to_m(g["length_um"]) if "length_um" in g else std.length,
            width=nm_to_m(g["width_nm"]) if "width_nm" in g else std.width,
            thickness=self.base_film().thickness,
            substrate_temperature=g.get("substrate_temperature_K", std.substrate_temperature),
        )

    def solver(self) -> SolverConfig:
        std = fixtures.standard_solver()
        s = self.section("solver")
        dt = s.get("dt_s", "auto")
        if dt != "auto":
            try:
                dt = float(dt)
            except ValueError:
                raise ConfigError(f"[solver] dt_s must be a number or 'auto', got {dt!r}") from None
        return SolverConfig(
            n_nodes=s.get("n_nodes", std.n_nodes),
            dt=dt,
            max_steps=s.get("max_steps", std.max_steps),
            steady_tolerance=s.get("steady_tolerance_K", std.steady_tolerance),
            scheme=s.get("scheme", std.scheme),
            boundary=s.get("boundary", std.boundary),
            current_tolerance=s.get("current_tolerance", std.current_tolerance),
            seed_fraction=s.get("seed_fraction", std.seed_fraction),
        )

    def pattern(self) -> IrradiationPattern:
        d = self.section("dose")
        kind = d.get("pattern", "standoff")
        fluence = d.get("fluence_ipsn", 0.0)
        if kind == "full":
            return IrradiationPattern.full(fluence)
        if kind == "standoff":
            return IrradiationPattern.standoff(d.get("w_unirr_nm", 550.0), fluence)
        if kind == "intervals":
            spans = []
            for item in d.get("intervals_nm", []):
                try:
                    a, b = item.split(":")
                    spans.append((float(a), float(b)))
                except ValueError:
                    raise ConfigError(f"[dose] intervals_nm entry {item!r} is not 'start:end'") from None
            return IrradiationPattern(tuple(spans), fluence)
        raise ConfigError(f"[dose] pattern must be full, standoff or intervals, got {kind!r}")

    def validate(self) -> None:
        """Build every physics object once so bad values surface as ConfigError."""
        pipeline = self.get("run", "pipeline")
        if pipeline is not None and pipeline not in PIPELINES:
            raise ConfigError(f"[run] pipeline must be one of {PIPELINES}, got {pipeline!r}")
        try:
            self.film()
            self.geometry()
            self.geometry(simulation=True)
            self.solver()
            self.pattern()
            self.curves()
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        workers = self.get("run", "workers", 1)
        if workers < 1:
            raise ConfigError("[run] workers must be >= 1")
        for key in ("bias_uA",):
            for v in self.get("simulate", key, []):
                if not (math.isfinite(v) and v >= 0):
                    raise ConfigError(f"[simulate] {key} values must be >= 0")


def load_scenario(path=None) -> Scenario:
    scenario = Scenario(load_config(path) if path is not None else {})
    scenario.validate()
    return scenario
