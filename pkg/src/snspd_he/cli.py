"""Command line entry point: ``snspd-he <subcommand>`` or ``python -m snspd_he``.

Every subcommand accepts ``--config`` (an INI scenario file, see
:mod:`snspd_he.config`), ``--out`` (output directory) and ``--workers``.
The output directory resolves as ``--out``, then ``$SNSPD_HE_OUT``, then
``[run] out_dir``, then ``./out``.

Exit status: 0 on success, 2 for configuration or input errors, 3 when a
numerical procedure fails to converge.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import reference as ref
from .config import Scenario, load_scenario
from .core import retrapping_current_analytic, sigma_from_retrapping
from .dose import (
    IrradiationPattern,
    default_dose_model,
    depth_profile_eval,
    dose_model_from_csv,
    energy_deposition_eval,
    fractions_under_wire,
    lateral_fraction_profile,
    lateral_fwhm_at,
)
from .electrothermal import (
    NonConvergence,
    find_retrapping_current,
    hotspot_initial_state,
    hotspot_lifetime,
    run_transient,
)
from .errors import ConfigError, DomainError, FitError, SnspdError, StabilityError
from .response import (
    COMPARE_COLUMNS,
    CountRateCurve,
    PlateauWidth,
    SchemeRecord,
    compare_schemes,
    fit_error_function,
    normalize_counts,
    plateau_width,
)
from .surface import (
    GrayImage,
    dark_contrast_by_depth,
    elevation_onset_fit,
    read_height_csv,
    read_matrix_csv,
    read_pgm,
    rms_roughness,
    strip_averaged_profile,
    wrinkling_amplitude,
)
from .units import a_to_ua, ua_to_a

OUT_ENV = "SNSPD_HE_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# Default hotspot seed energy for `simulate` (J): enough to drive a short
# stretch of the standard wire normal.
DEFAULT_SEED_ENERGY = 5e-17
RECIPES = ("appendix-f", "plateau", "reductions", "fluence-sweep", "sigma")
SWEEP_COLUMNS = ("parameter", "value", "fluence_ipsn", "r_sheet_ohm", "tc_K", "sigma_W_per_m2K4",
                 "ir_analytic_A", "ir_pde_A", "error")


# -- output helpers ------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def write_csv(path: Path, header, rows) -> None:
    """CSV with a header row; floats written with ``repr`` so they round-trip."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            if isinstance(row, dict):
                row = [row[k] for k in header]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f} %"


# -- dose ----------------------------------------------------------------------

def _dose_model(scenario: Scenario):
    d = scenario.section("dose")
    step = d.get("depth_step_nm", 1.0)
    files = [d.get(k, "default") for k in ("depth_pdf_csv", "fwhm_csv", "energy_csv")]
    if all(f == "default" for f in files):
        return default_dose_model(step_nm=step)
    if any(f == "default" for f in files):
        raise ConfigError("[dose] depth_pdf_csv, fwhm_csv and energy_csv must be given together")
    return dose_model_from_csv(*files)


def cmd_dose(scenario: Scenario, out: Path, args) -> list[str]:
    d = scenario.section("dose")
    pattern = scenario.pattern()
    if args.w_unirr_nm is not None:
        pattern = IrradiationPattern.standoff(args.w_unirr_nm, pattern.fluence)
    fwhms = args.fwhm_nm or d.get("fwhm_nm") or [ref.LATERAL_FWHM_ALL_NM, ref.LATERAL_FWHM_FILM_NM]
    wire = d.get("wire_width_nm", ref.STANDOFF_WIRE_WIDTH_NM)
    x_min, x_max = d.get("x_min_nm", -1000.0), d.get("x_max_nm", 1000.0)
    x_step = d.get("x_step_nm", 1.0)
    if not (x_max > x_min and x_step > 0):
        raise ConfigError("[dose] needs x_max_nm > x_min_nm and x_step_nm > 0")
    model = _dose_model(scenario)

    x = x_min + x_step * np.arange(int(math.floor((x_max - x_min) / x_step + 1e-9)) + 1)
    lateral = [lateral_fraction_profile(pattern, w, x) for w in fwhms]
    z = model.depth_z
    fractions = [fractions_under_wire(pattern, w, wire) for w in fwhms]

    write_csv(out / "lateral_profile.csv", ["x_nm"] + [f"f_rel_fwhm_{w:g}nm" for w in fwhms],
              zip(x, *lateral))
    write_csv(out / "depth_profile.csv", ["z_nm", "f_line_per_nm", "E_dep_eV_per_nm", "fwhm_nm"],
              zip(z, depth_profile_eval(model, z), energy_deposition_eval(model, z), lateral_fwhm_at(model, z)))
    write_csv(out / "wire_fractions.csv", ["fwhm_nm", "wire_width_nm", "min", "max", "mean"],
              [(w, wire, f.minimum, f.maximum, f.mean) for w, f in zip(fwhms, fractions)])
    return [f"fwhm {w:g} nm: min {_pct(f.minimum)} max {_pct(f.maximum)} mean {_pct(f.mean)}"
            for w, f in zip(fwhms, fractions)]


# -- simulate ------------------------------------------------------------------

def cmd_simulate(scenario: Scenario, out: Path, args) -> list[str]:
    film = scenario.film()
    geom = scenario.geometry(simulation=True)
    config = scenario.solver()
    s = scenario.section("simulate")
    biases = [ua_to_a(b) for b in (args.bias_ua or s.get("bias_uA", []))]
    energy = s.get("seed_energy_J", DEFAULT_SEED_ENERGY)
    every = s.get("trace_every", 1)
    want_ir = s.get("find_retrapping", True)

    i_analytic = retrapping_current_analytic(film, geom)
    i_pde = find_retrapping_current(film, geom, config) if want_ir else math.nan
    lines = [f"retrapping: analytic {a_to_ua(i_analytic):.4f} uA, pde {a_to_ua(i_pde):.4f} uA"]
    rows = []
    traces = []
    for k, bias in enumerate(biases):
        trace = run_transient(hotspot_initial_state(film, geom, config, energy, bias), film, geom, config, every)
        if trace.outcome == "max_steps":
            raise NonConvergence(f"hotspot at bias {bias:.6g} A neither vanished nor settled")
        lifetime = hotspot_lifetime(film, geom, config, energy, bias)
        traces.append((k, trace))
        rows.append((bias, energy, lifetime, trace.outcome, i_analytic, i_pde))
        lines.append(f"bias {a_to_ua(bias):.4f} uA: lifetime {lifetime:.4e} s ({trace.outcome})")
    if not rows:
        rows.append((math.nan, energy, math.nan, "", i_analytic, i_pde))

    for k, trace in traces:
        write_csv(out / f"run_{k:03d}.csv", ["time_s", "max_temperature_K", "domain_length_m"],
                  zip(trace.time, trace.max_temperature, trace.domain_length))
    write_csv(out / "summary.csv",
              ["bias_A", "seed_energy_J", "lifetime_s", "outcome", "ir_analytic_A", "ir_pde_A"], rows)
    return lines


# -- extract-sigma ---------------------------------------------------------------

def cmd_extract_sigma(scenario: Scenario, out: Path, args) -> list[str]:
    e = scenario.section("extract")
    currents = e.get("retrapping_uA")
    fluences = e.get("fluence_ipsn")
    if currents is None:
        currents = [a_to_ua(ref.RETRAPPING_PRISTINE), a_to_ua(ref.RETRAPPING_IRRADIATED)]
        if fluences is None:
            fluences = [0.0, ref.SIGMA_ANCHOR_FLUENCE]
    if fluences is not None and len(fluences) != len(currents):
        raise ConfigError("[extract] fluence_ipsn and retrapping_uA must have equal length")
    geom = scenario.geometry()
    rows, lines = [], []
    for k, i_ua in enumerate(currents):
        fluence = fluences[k] if fluences is not None else scenario.fluence
        film = scenario.film(fluence)
        sigma = sigma_from_retrapping(ua_to_a(i_ua), film, geom)
        fl = math.nan if fluence is None else fluence
        rows.append((fl, ua_to_a(i_ua), film.sheet_resistance, film.critical_temperature, sigma))
        lines.append(f"fluence {fl:g} ipsn, I_r {i_ua:g} uA -> sigma {sigma:.4g} W/m^2K^4")
    write_csv(out / "sigma.csv", ["fluence_ipsn", "retrapping_A", "r_sheet_ohm", "tc_K", "sigma_W_per_m2K4"],
              rows)
    return lines


# -- fit-counts / compare ------------------------------------------------------

def _read_counts(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        header = [h.strip() for h in fh.readline().strip().split(",")]
    if header[:2] != ["bias_uA", "counts_per_s"]:
        raise ConfigError(f"{path}: header must start with 'bias_uA,counts_per_s'")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, usecols=(0, 1), ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return data[:, 0], data[:, 1]


def cmd_fit_counts(scenario: Scenario, out: Path, args) -> list[str]:
    c = scenario.section("counts")
    path = args.input or c.get("csv")
    if path is None:
        raise ConfigError("fit-counts needs an input CSV (positional or [counts] csv)")
    if not Path(path).exists():
        raise ConfigError(f"input file {str(path)!r} does not exist")
    ic_ua = args.ic_ua if args.ic_ua is not None else c.get("critical_current_uA")
    if ic_ua is None:
        raise ConfigError("fit-counts needs the critical current (--ic-ua or [counts] critical_current_uA)")
    label = args.label or c.get("label") or Path(path).stem
    threshold = args.threshold if args.threshold is not None else c.get("threshold", 0.99)
    offset = args.offset or c.get("offset", False)
    ic = ua_to_a(ic_ua)

    bias_ua, counts = _read_counts(path)
    curve = CountRateCurve(ua_to_a(bias_ua), counts, ic)
    fit = fit_error_function(curve, offset=offset)
    try:
        plateau = plateau_width(fit, ic, threshold)
    except DomainError:
        plateau = PlateauWidth(math.nan, math.nan, math.nan)
    i_sw_before = args.isw_before_ua if args.isw_before_ua is not None else c.get("i_sw_before_uA")
    i_sw_after = args.isw_after_ua if args.isw_after_ua is not None else c.get("i_sw_after_uA")
    record = {
        "label": label,
        "critical_current_A": ic,
        "asymptote_per_s": fit.asymptote,
        "center_A": fit.center,
        "width_A": fit.width,
        "offset_per_s": fit.offset,
        "residual_rms": fit.residual_rms,
        "threshold": threshold,
        "plateau_onset_A": plateau.onset,
        "plateau_absolute_A": plateau.absolute,
        "plateau_relative": plateau.relative,
        "i_sw_before_A": None if i_sw_before is None else ua_to_a(i_sw_before),
        "i_sw_after_A": None if i_sw_after is None else ua_to_a(i_sw_after),
    }
    write_json(out / f"fit_{label}.json", record)
    write_csv(out / f"normalized_{label}.csv", ["bias_A", "counts_normalized", "fit_normalized"],
              zip(curve.bias_points, normalize_counts(curve, fit), fit(curve.bias_points) / fit.asymptote))
    return [f"{label}: center {a_to_ua(fit.center):.4f} uA, width {a_to_ua(fit.width):.4f} uA, "
            f"plateau {a_to_ua(plateau.absolute):.4f} uA ({_pct(plateau.relative)})"]


def _record_from_json(path) -> SchemeRecord:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read fit record {str(path)!r}: {exc}") from None
    for key in ("label", "critical_current_A", "i_sw_before_A", "i_sw_after_A"):
        if data.get(key) is None:
            raise ConfigError(f"{path}: record lacks {key!r}")
    absolute = data.get("plateau_absolute_A")
    plateau = None
    if absolute is not None:
        plateau = PlateauWidth.from_absolute(absolute, data["critical_current_A"])
    return SchemeRecord(data["label"], data["i_sw_before_A"], data["i_sw_after_A"],
                        data["critical_current_A"], plateau=plateau)


def cmd_compare(scenario: Scenario, out: Path, args) -> list[str]:
    paths = args.records or scenario.get("compare", "records", [])
    if not paths:
        raise ConfigError("compare needs fit records (positional or [compare] records)")
    rows = compare_schemes([_record_from_json(p) for p in paths])
    write_csv(out / "compare.csv", COMPARE_COLUMNS, rows)
    return [f"{r['scheme']}: I_sw reduction {_pct(r['switching_reduction'])}, "
            f"I_c vs I_sw {_pct(r['critical_vs_switching_reduction'])}" for r in rows]


# -- analyze-surface -------------------------------------------------------------

def cmd_analyze_surface(scenario: Scenario, out: Path, args) -> list[str]:
    s = scenario.section("surface")
    mode = args.mode or s.get("mode")
    path = args.input or s.get("input")
    if mode is None or path is None:
        raise ConfigError("analyze-surface needs a mode and an input file")
    if not Path(path).exists():
        raise ConfigError(f"input file {str(path)!r} does not exist")

    if mode == "roughness":
        hmap = read_height_csv(path)
        detrend = s.get("detrend", "mean")
        pos, prof = strip_averaged_profile(hmap, axis=s.get("axis", 1), strip_width=s.get("strip_width_nm"))
        rms_map = rms_roughness(hmap.heights, detrend)
        rms_prof = rms_roughness(prof, detrend)
        wrinkle = wrinkling_amplitude(prof)
        write_csv(out / "profile.csv", ["position_nm", "height_nm"], zip(pos, prof))
        write_csv(out / "roughness.csv", ["rms_map_nm", "rms_profile_nm", "profile_range_nm", "detrend"],
                  [(rms_map, rms_prof, wrinkle.range, detrend)])
        return [f"rms {rms_map:.4g} nm (map), {rms_prof:.4g} nm (profile), range {wrinkle.range:.4g} nm"]

    if mode == "elevation-fit":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        fit = elevation_onset_fit(data[:, 0], data[:, 1], s.get("exclusion_below_ipsn",
                                                                 ref.ELEVATION_FIT_MIN_FLUENCE))
        write_json(out / "elevation_fit.json", {
            "slope_nm_per_ipsn": fit.slope,
            "intercept_nm": fit.intercept,
            "onset_fluence_ipsn": fit.intercept_fluence,
            "n_points": fit.n_points,
        })
        return [f"onset fluence {fit.intercept_fluence:.4g} ipsn, slope {fit.slope:.4g} nm/ipsn"]

    if mode == "dark-contrast":
        pixel = s.get("pixel_size_nm")
        if pixel is None:
            raise ConfigError("dark-contrast needs [surface] pixel_size_nm")
        raw = read_pgm(path) if str(path).lower().endswith(".pgm") else read_matrix_csv(path)
        image = GrayImage.with_uniform_depth(raw, pixel, s.get("top_depth_nm", 0.0))
        prof = dark_contrast_by_depth(image, s.get("background_window_px", 31), s.get("threshold_std", 1.5),
                                      s.get("connectivity", 4))
        write_csv(out / "dark_contrast.csv", ["depth_nm", "area_fraction", "mean_region_size_nm2"],
                  zip(prof.depth, prof.area_fraction, prof.mean_region_size))
        peak = int(np.argmax(prof.area_fraction))
        return [f"dark-contrast peak at {prof.depth[peak]:.4g} nm (area fraction {prof.area_fraction[peak]:.4g})"]

    raise ConfigError(f"unknown surface mode {mode!r}; use roughness, elevation-fit or dark-contrast")


# -- sweep -----------------------------------------------------------------------

def sweep_row(raw: dict, parameter: str, value: float, pde: bool) -> dict:
    """One sweep point; failures land in the ``error`` column."""
    row = {k: math.nan for k in SWEEP_COLUMNS}
    row.update(parameter=parameter, value=value, error="")
    try:
        scen = Scenario(raw).with_value(parameter, value)
        film = scen.film()
        fluence = scen.fluence
        row["fluence_ipsn"] = math.nan if fluence is None else fluence
        row["r_sheet_ohm"] = film.sheet_resistance
        row["tc_K"] = film.critical_temperature
        row["sigma_W_per_m2K4"] = film.coupling_sigma
        row["ir_analytic_A"] = retrapping_current_analytic(film, scen.geometry())
        if pde:
            row["ir_pde_A"] = find_retrapping_current(film, scen.geometry(simulation=True), scen.solver())
    except SnspdError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(scenario: Scenario, parameter: str, values, pde: bool = False, workers: int = 1) -> list[dict]:
    """Evaluate every value, concurrently if ``workers > 1``; rows keep input order."""
    values = [float(v) for v in values]
    Scenario(scenario.raw).with_value(parameter, 0.0)  # reject unknown parameters up front
    if workers > 1 and len(values) > 1:
        n = len(values)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(sweep_row, [scenario.raw] * n, [parameter] * n, values, [pde] * n))
    return [sweep_row(scenario.raw, parameter, v, pde) for v in values]


def _sweep_line(row: dict) -> str:
    if row["error"]:
        return f"{row['parameter']} = {row['value']:g}: {row['error']}"
    line = (f"{row['parameter']} = {row['value']:g}: R {row['r_sheet_ohm']:.4g} ohm, Tc {row['tc_K']:.4g} K, "
            f"sigma {row['sigma_W_per_m2K4']:.4g}, I_r {a_to_ua(row['ir_analytic_A']):.4g} uA")
    if not math.isnan(row["ir_pde_A"]):
        line += f" (pde {a_to_ua(row['ir_pde_A']):.4g} uA)"
    return line


def cmd_sweep(scenario: Scenario, out: Path, args) -> list[str]:
    s = scenario.section("sweep")
    parameter = args.parameter or s.get("parameter", "fluence_ipsn")
    values = args.values if args.values is not None else s.get("values", [])
    pde = args.pde or s.get("pde", False)
    rows = sweep(scenario, parameter, values, pde, _workers(scenario, args))
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    return [_sweep_line(r) for r in rows]


# -- reproduce ---------------------------------------------------------------------

def _recipe_standoff_fractions(scenario, out):
    pattern = IrradiationPattern.standoff(ref.STANDOFF_GAP_NM)
    rows, lines = [], []
    for fwhm, (pmin, pmax, pmean) in ref.STANDOFF_FRACTIONS.items():
        f = fractions_under_wire(pattern, fwhm, ref.STANDOFF_WIRE_WIDTH_NM)
        rows.append((fwhm, f.minimum, f.maximum, f.mean, pmin, pmax, pmean))
        lines.append(f"fwhm {fwhm:g} nm: min {_pct(f.minimum)} max {_pct(f.maximum)} mean {_pct(f.mean)} "
                     f"(reported {_pct(pmin)} / {_pct(pmax)} / {_pct(pmean)})")
    write_csv(out / "standoff_fractions.csv", ["fwhm_nm", "min", "max", "mean", "reported_min", "reported_max",
                                       "reported_mean"], rows)
    return lines


def _recipe_plateau(scenario, out):
    rows, lines = [], []
    for scheme, absolute in ref.PLATEAU_ABSOLUTE.items():
        ic = ref.SCHEME_CURRENTS[scheme]["i_c_after"]
        p = PlateauWidth.from_absolute(absolute, ic)
        rows.append((scheme, absolute, ic, p.relative))
        lines.append(f"{scheme}: {a_to_ua(absolute):.1f} uA / {a_to_ua(ic):.1f} uA = {_pct(p.relative)}")
    write_csv(out / "plateau.csv", ["scheme", "plateau_absolute_A", "i_c_after_A", "plateau_relative"], rows)
    return lines


def _recipe_scheme_currents(scenario, out):
    records = [SchemeRecord(name, v["i_sw_before"], v["i_sw_after"], v["i_c_after"],
                            plateau=(PlateauWidth.from_absolute(ref.PLATEAU_ABSOLUTE[name], v["i_c_after"])
                                     if name in ref.PLATEAU_ABSOLUTE else None))
               for name, v in ref.SCHEME_CURRENTS.items()]
    rows = compare_schemes(records)
    write_csv(out / "scheme_currents.csv", COMPARE_COLUMNS, rows)
    return [f"{r['scheme']}: I_sw reduction {_pct(r['switching_reduction'])}, "
            f"I_c vs I_sw {_pct(r['critical_vs_switching_reduction'])}" for r in rows]


def _recipe_fluence_sweep(scenario, out):
    values = scenario.get("sweep", "values") or [0.0, 250.0, 500.0, 1000.0, 1500.0, 2000.0]
    rows = sweep(scenario, "fluence_ipsn", values, scenario.get("sweep", "pde", False),
                 scenario.get("run", "workers", 1))
    write_csv(out / "fluence_sweep.csv", SWEEP_COLUMNS, rows)
    return [_sweep_line(r) for r in rows]


def _recipe_sigma(scenario, out):
    geom = scenario.geometry()
    rows, lines = [], []
    for fluence, current, reported in ((0.0, ref.RETRAPPING_PRISTINE, ref.SIGMA_PRISTINE),
                                       (ref.SIGMA_ANCHOR_FLUENCE, ref.RETRAPPING_IRRADIATED,
                                        ref.SIGMA_IRRADIATED)):
        film = scenario.film(fluence)
        sigma = sigma_from_retrapping(current, film, geom)
        rows.append((fluence, current, film.sheet_resistance, film.critical_temperature, sigma, reported))
        lines.append(f"fluence {fluence:g} ipsn: I_r {a_to_ua(current):.1f} uA -> sigma {sigma:.4g} "
                     f"(reported {reported:g}) W/m^2K^4")
    write_csv(out / "sigma.csv", ["fluence_ipsn", "retrapping_A", "r_sheet_ohm", "tc_K", "sigma_W_per_m2K4",
                                  "reported_sigma_W_per_m2K4"], rows)
    return lines


_RECIPES = {
    "appendix-f": _recipe_standoff_fractions,
    "plateau": _recipe_plateau,
    "reductions": _recipe_scheme_currents,
    "fluence-sweep": _recipe_fluence_sweep,
    "sigma": _recipe_sigma,
}


def cmd_reproduce(scenario: Scenario, out: Path, args) -> list[str]:
    recipe = getattr(args, "recipe", None) or scenario.get("run", "recipe")
    if recipe not in _RECIPES:
        raise ConfigError(f"unknown recipe {recipe!r}; choose from {', '.join(RECIPES)}")
    return _RECIPES[recipe](scenario, out)


COMMANDS = {
    "dose": cmd_dose,
    "simulate": cmd_simulate,
    "extract-sigma": cmd_extract_sigma,
    "fit-counts": cmd_fit_counts,
    "compare": cmd_compare,
    "analyze-surface": cmd_analyze_surface,
    "sweep": cmd_sweep,
    "reproduce": cmd_reproduce,
}


# -- argument parsing ------------------------------------------------------------

def _workers(scenario: Scenario, args) -> int:
    workers = getattr(args, "workers", None)
    return workers if workers is not None else scenario.get("run", "workers", 1)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI scenario file")
    p.add_argument("--out", type=Path, help=f"output directory (overrides ${OUT_ENV} and [run] out_dir)")
    p.add_argument("--workers", type=int, help="parallel workers for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snspd-he", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dose", help="lateral and depth implantation profiles")
    _common(p)
    p.add_argument("--fwhm-nm", type=float, nargs="+", help="lateral straggle FWHM values")
    p.add_argument("--w-unirr-nm", type=float, help="width of the unirradiated gap (standoff pattern)")

    p = sub.add_parser("simulate", help="hotspot transients and retrapping current")
    _common(p)
    p.add_argument("--bias-ua", type=float, nargs="+", help="bias currents for hotspot transients")

    p = sub.add_parser("extract-sigma", help="boundary conductance from retrapping currents")
    _common(p)

    p = sub.add_parser("fit-counts", help="error-function fit of a count-rate curve")
    _common(p)
    p.add_argument("input", nargs="?", type=Path, help="CSV with columns bias_uA,counts_per_s")
    p.add_argument("--ic-ua", type=float, help="critical current in uA")
    p.add_argument("--label", help="record label (default: input file stem)")
    p.add_argument("--threshold", type=float, help="plateau threshold as a fraction of the asymptote")
    p.add_argument("--offset", action="store_true", help="fit a constant dark-count offset")
    p.add_argument("--isw-before-ua", type=float, help="switching current before irradiation (uA)")
    p.add_argument("--isw-after-ua", type=float, help="switching current after irradiation (uA)")

    p = sub.add_parser("compare", help="compare fit-counts records across schemes")
    _common(p)
    p.add_argument("records", nargs="*", type=Path, help="JSON records written by fit-counts")

    p = sub.add_parser("analyze-surface", help="AFM roughness, elevation fit, dark-contrast statistics")
    _common(p)
    p.add_argument("mode", nargs="?", choices=("roughness", "elevation-fit", "dark-contrast"))
    p.add_argument("--input", type=Path, help="height CSV, elevation CSV, PGM or matrix CSV")

    p = sub.add_parser("sweep", help="parameter sweep of film properties and retrapping current")
    _common(p)
    p.add_argument("--parameter", help="config key to vary, e.g. fluence_ipsn or material.thickness_nm")
    p.add_argument("--values", type=float, nargs="*", help="values to sweep")
    p.add_argument("--pde", action="store_true", help="also compute the simulated retrapping current")

    p = sub.add_parser("reproduce", help="built-in reproduction recipes")
    _common(p)
    p.add_argument("recipe", choices=RECIPES)

    p = sub.add_parser("run", help="run the pipeline named in the config's [run] section")
    _common(p)
    return parser


def _output_dir(scenario: Scenario, args) -> Path:
    if getattr(args, "out", None) is not None:
        return Path(args.out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    return Path(scenario.get("run", "out_dir", "out"))


def _defaults_for(command: str) -> argparse.Namespace:
    """Namespace with every subcommand flag unset, for config-driven runs."""
    parser = build_parser()
    extra = {"compare": [], "reproduce": [RECIPES[0]]}.get(command, [])
    ns = parser.parse_args([command, *extra])
    if command == "reproduce":
        ns.recipe = None
    return ns


def _execute(command: str, scenario: Scenario, args) -> int:
    out = _output_dir(scenario, args)
    lines = COMMANDS[command](scenario, out, args)
    for line in lines:
        print(line)
    return EXIT_OK


def _guarded(fn) -> int:
    try:
        return fn()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StabilityError, FitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, SnspdError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def run_scenario(config_path, out=None, workers=None) -> int:
    """Run the pipeline named by ``[run] pipeline`` in ``config_path``; returns the exit status."""

    def go():
        scenario = load_scenario(config_path)
        command = scenario.get("run", "pipeline")
        if command is None:
            raise ConfigError("[run] pipeline is required")
        args = _defaults_for(command)
        args.out, args.workers = out, workers
        return _execute(command, scenario, args)

    return _guarded(go)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        if args.config is None:
            print("config error: run needs --config", file=sys.stderr)
            return EXIT_CONFIG
        return run_scenario(args.config, args.out, args.workers)

    def go():
        scenario = load_scenario(args.config)
        return _execute(args.command, scenario, args)

    return _guarded(go)


if __name__ == "__main__":
    sys.exit(main())
