import math

import numpy as np
import pytest

from snspd_he import fixtures
from snspd_he.core import WireGeometry, retrapping_current_analytic
from snspd_he.electrothermal import (
    NonConvergence,
    SolverConfig,
    ThermalSimState,
    auto_time_step,
    cooling_time,
    domain_survives,
    find_retrapping_current,
    healing_length,
    hotspot_initial_state,
    hotspot_lifetime,
    iv_hysteresis,
    relax_to_steady,
    run_transient,
    seeded_state,
    stability_limit,
    step,
    uniform_state,
)
from snspd_he.errors import BracketError, DomainError, StabilityError

FILM = fixtures.standard_film()
# Reduced fixtures: 2 um / 10 nm grid for single runs, 5 um / 10 nm for bisections
SHORT = fixtures.simulation_geometry().with_(length=2e-6)
COARSE = fixtures.simulation_geometry().with_(length=5e-6)
COARSE_SOLVER = SolverConfig(n_nodes=501, max_steps=2_000_000)

# Center temperature after 1000 implicit steps of 25 fs (2 um wire, 201 nodes, 5e-17 J at 6 uA),
# and the same run on a dx/4, dt/4 grid (801 nodes, 4000 steps of 6.25 fs)
GOLDEN_CENTER_COARSE = 9.81993662313106
REFERENCE_CENTER_FINE = 9.816738412875493

# Coarse-fixture retrapping current (implicit, auto dt)
GOLDEN_IR_COARSE = 1.9890625e-05


def inert_film(**changes):
    """Film with vanishing conduction and substrate coupling."""
    return FILM.with_(thermal_conductivity=1e-30, coupling_sigma=1e-30, **changes)


def test_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(scheme="rk4")
    with pytest.raises(DomainError):
        SolverConfig(boundary="periodic")
    with pytest.raises(DomainError):
        SolverConfig(n_nodes=2)
    with pytest.raises(DomainError):
        SolverConfig(dt=-1.0)
    with pytest.raises(DomainError):
        SolverConfig(steady_tolerance=0.0)
    fine = SolverConfig(n_nodes=101, dt=1e-12, max_steps=10).refined(4)
    assert (fine.n_nodes, fine.dt, fine.max_steps) == (401, 2.5e-13, 40)


def test_state_invariants():
    with pytest.raises(DomainError):
        ThermalSimState(np.ones(2), np.zeros(2, bool), 0.0, 1e-9)
    with pytest.raises(DomainError):
        ThermalSimState(np.ones(3), np.zeros(4, bool), 0.0, 1e-9)
    with pytest.raises(DomainError):
        ThermalSimState(-np.ones(3), np.zeros(3, bool), 0.0, 1e-9)
    with pytest.raises(StabilityError):
        ThermalSimState(np.array([1.0, np.nan, 1.0]), np.zeros(3, bool), 0.0, 1e-9)


def test_time_scales():
    cfg = SolverConfig(n_nodes=201, scheme="explicit")
    dx = 2e-6 / 200
    assert stability_limit(FILM, SHORT, cfg) == pytest.approx(0.5 * 2000.0 * dx**2 / 0.1, rel=1e-14)
    assert auto_time_step(FILM, SHORT, cfg) == pytest.approx(0.4 * stability_limit(FILM, SHORT, cfg))
    tau = 2000.0 / (4 * 210.0 * FILM.critical_temperature**3 / 8e-9)
    assert cooling_time(FILM) == pytest.approx(tau, rel=1e-14)
    assert auto_time_step(FILM, SHORT, SolverConfig()) == pytest.approx(0.4 * tau)
    assert auto_time_step(FILM, SHORT, SolverConfig(), transient=True) == pytest.approx(0.01 * tau)
    assert healing_length(FILM) == pytest.approx(43.1e-9, rel=2e-3)


def test_explicit_dt_above_limit_rejected():
    cfg = SolverConfig(n_nodes=201, scheme="explicit", dt=1.01 * stability_limit(FILM, SHORT, SolverConfig(n_nodes=201)))
    with pytest.raises(DomainError):
        step(uniform_state(SHORT, cfg), FILM, SHORT, cfg)


def test_runaway_explicit_step_raises_stability_error():
    cfg = SolverConfig(n_nodes=21, scheme="explicit")
    geom = SHORT
    t = np.full(21, 1.0)
    t[10] = 1e6
    state = ThermalSimState(t, t > FILM.critical_temperature, 0.0, geom.length / 20)
    with pytest.raises(StabilityError):
        for _ in range(5):
            state = step(state, FILM, geom, cfg)


@pytest.mark.parametrize("scheme", ["explicit", "implicit"])
@pytest.mark.parametrize("boundary", ["dirichlet", "neumann"])
def test_equilibrium_is_fixed_point(scheme, boundary):
    cfg = SolverConfig(n_nodes=51, scheme=scheme, boundary=boundary)
    state = uniform_state(SHORT, cfg)
    after = step(state, FILM, SHORT, cfg)
    assert np.array_equal(after.temperatures, state.temperatures)
    assert not after.normal.any()


@pytest.mark.parametrize("scheme", ["explicit", "implicit"])
def test_isolated_joule_heating(scheme):
    film = inert_film()
    cfg = SolverConfig(n_nodes=21, scheme=scheme, dt=1e-13)
    t = np.full(21, 1.0)
    t[10] = 10.0
    bias = 5e-6
    state = ThermalSimState(t, t > film.critical_temperature, bias, SHORT.length / 20)
    after = step(state, film, SHORT, cfg)
    j = bias / SHORT.cross_section
    expected = 1e-13 * j**2 * film.resistivity / film.specific_heat_volumetric
    assert after.temperatures[10] - 10.0 == pytest.approx(expected, rel=1e-9)
    assert after.temperatures[9] == pytest.approx(1.0, abs=1e-20)


@pytest.mark.parametrize("scheme", ["explicit", "implicit"])
def test_discrete_sine_mode_decay(scheme):
    """With negligible substrate coupling the lowest Dirichlet mode decays by the
    exact per-step factor of the discrete Laplacian eigenvalue."""
    film = FILM.with_(coupling_sigma=1e-30)
    n = 101
    geom = SHORT
    dx = geom.length / (n - 1)
    x = np.linspace(0.0, geom.length, n)
    amp = 2.0
    cfg = SolverConfig(n_nodes=n, scheme=scheme, dt=0.4 * stability_limit(film, geom, SolverConfig(n_nodes=n)))
    state = ThermalSimState(1.0 + amp * np.sin(np.pi * x / geom.length), np.zeros(n, bool), 0.0, dx)
    lam = 4.0 / dx**2 * math.sin(math.pi * dx / (2 * geom.length)) ** 2
    r = cfg.dt * film.thermal_conductivity * lam / film.specific_heat_volumetric
    factor = 1.0 - r if scheme == "explicit" else 1.0 / (1.0 + r)
    for _ in range(50):
        state = step(state, film, geom, cfg)
    expected = 1.0 + amp * factor**50 * np.sin(np.pi * x / geom.length)
    assert np.max(np.abs(state.temperatures - expected)) < 1e-12


@pytest.mark.parametrize("scheme", ["explicit", "implicit"])
def test_maximum_principle(scheme):
    cfg = SolverConfig(n_nodes=201, scheme=scheme, dt=1e-13)
    state = hotspot_initial_state(FILM, SHORT, cfg, 5e-17, 0.0)
    peak = state.max_temperature
    for _ in range(300):
        state = step(state, FILM, SHORT, cfg)
        assert state.max_temperature <= peak + 1e-12
        peak = state.max_temperature


@pytest.mark.parametrize("boundary", ["dirichlet", "neumann"])
def test_implicit_energy_bookkeeping(boundary):
    cfg = SolverConfig(n_nodes=201, dt=1e-13, boundary=boundary)
    state = hotspot_initial_state(FILM, SHORT, cfg, 5e-17, 8e-6)
    dx = state.grid_spacing
    s = FILM.coupling_sigma / FILM.thickness
    joule = (8e-6 / SHORT.cross_section) ** 2 * FILM.resistivity
    for _ in range(20):
        new = step(state, FILM, SHORT, cfg)
        t0, t1 = state.temperatures, new.temperatures
        # finite-volume weights: half cells at the ends for the Neumann case
        w = np.ones(t0.size)
        if boundary == "neumann":
            w[0] = w[-1] = 0.5
            sl = slice(None)
            flux = 0.0
        else:
            sl = slice(1, -1)
            flux = FILM.thermal_conductivity / dx * ((t1[0] - t1[1]) + (t1[-1] - t1[-2]))
        stored = FILM.specific_heat_volumetric * np.sum((w * (t1 - t0))[sl]) * dx
        source = np.sum((w * (joule * state.normal - s * (t1**4 - 1.0)))[sl]) * dx
        assert stored == pytest.approx(cfg.dt * (source + flux), rel=1e-6)
        state = new


def test_self_convergence_of_step():
    def center(n, dt, steps):
        cfg = SolverConfig(n_nodes=n, dt=dt)
        st = hotspot_initial_state(FILM, SHORT, cfg, 5e-17, 6e-6)
        for _ in range(steps):
            st = step(st, FILM, SHORT, cfg)
        return st.temperatures[n // 2]

    coarse = center(201, 2.5e-14, 1000)
    assert coarse == pytest.approx(GOLDEN_CENTER_COARSE, rel=1e-9)
    assert coarse == pytest.approx(REFERENCE_CENTER_FINE, rel=1e-3)
    middle = center(401, 1.25e-14, 2000)
    # first-order convergence: successive differences halve
    assert (coarse - middle) / (middle - REFERENCE_CENTER_FINE) == pytest.approx(2.0, rel=0.15)


def test_relax_examples():
    cfg = COARSE_SOLVER
    hot = uniform_state(COARSE, cfg, temperature=5.0)
    relaxed, converged = relax_to_steady(hot, FILM, COARSE, cfg)
    assert converged
    assert np.allclose(relaxed.temperatures, 1.0, atol=1e-4)

    i_a = retrapping_current_analytic(FILM, COARSE)
    alive, converged = relax_to_steady(seeded_state(FILM, COARSE, cfg, 2.0 * GOLDEN_IR_COARSE), FILM, COARSE, cfg)
    assert converged and alive.domain_length > 0
    dead, converged = relax_to_steady(seeded_state(FILM, COARSE, cfg, 0.2 * i_a), FILM, COARSE, cfg)
    assert converged and dead.domain_length == 0


def test_relax_reports_nonconvergence():
    cfg = COARSE_SOLVER.with_(max_steps=3)
    _, converged = relax_to_steady(seeded_state(FILM, COARSE, cfg, 3e-5), FILM, COARSE, cfg)
    assert not converged
    with pytest.raises(NonConvergence):
        domain_survives(FILM, COARSE, cfg, 3e-5)


def test_retrapping_coarse_golden_and_survival():
    i_r = find_retrapping_current(FILM, COARSE, COARSE_SOLVER)
    assert i_r == pytest.approx(GOLDEN_IR_COARSE, rel=1e-12)
    assert domain_survives(FILM, COARSE, COARSE_SOLVER, i_r)
    assert not domain_survives(FILM, COARSE, COARSE_SOLVER, 0.98 * i_r)


@pytest.mark.slow
def test_explicit_and_implicit_agree():
    implicit = find_retrapping_current(FILM, COARSE, COARSE_SOLVER)
    explicit = find_retrapping_current(FILM, COARSE, COARSE_SOLVER.with_(scheme="explicit"))
    assert explicit == pytest.approx(implicit, rel=0.01)


def test_bracket_error():
    with pytest.raises(BracketError):
        find_retrapping_current(FILM, COARSE, COARSE_SOLVER, i_high=5e-6)
    cfg = COARSE_SOLVER.with_(max_bracket_doublings=0, bracket_factor=1.0)
    with pytest.raises(BracketError):
        find_retrapping_current(FILM, COARSE, cfg)


def test_hotspot_lifetime_basics():
    cfg = fixtures.standard_solver()
    geom = fixtures.simulation_geometry()
    assert hotspot_lifetime(FILM, geom, cfg, 0.0, 6e-6) == 0.0
    assert hotspot_lifetime(FILM, geom, cfg, 5e-17, 40e-6) == math.inf
    with pytest.raises(DomainError):
        hotspot_lifetime(FILM, geom, cfg, -1.0, 6e-6)


@pytest.mark.slow
def test_hotspot_lifetime_against_refined_reference():
    cfg = fixtures.standard_solver()
    geom = fixtures.simulation_geometry()
    standard = hotspot_lifetime(FILM, geom, cfg, 5e-17, 6e-6)
    fine = cfg.with_(n_nodes=8001, dt=0.0025 * cooling_time(FILM))
    reference = hotspot_lifetime(FILM, geom, fine, 5e-17, 6e-6)
    assert standard == pytest.approx(reference, rel=0.02)


def test_hotspot_translation_invariance():
    cfg = fixtures.standard_solver()
    geom = fixtures.simulation_geometry()
    centre = hotspot_lifetime(FILM, geom, cfg, 5e-17, 6e-6)
    for pos in (3.3e-6, 6.1e-6):
        assert hotspot_lifetime(FILM, geom, cfg, 5e-17, 6e-6, position=pos) == pytest.approx(centre, rel=0.005)


def test_run_transient_trace():
    cfg = SolverConfig(n_nodes=201)
    state = hotspot_initial_state(FILM, SHORT, cfg, 5e-17, 6e-6)
    trace = run_transient(state, FILM, SHORT, cfg)
    assert trace.outcome == "vanished"
    assert trace.domain_length[0] > 0 and trace.domain_length[-1] == 0
    assert np.all(np.diff(trace.time) > 0)
    sparse = run_transient(state, FILM, SHORT, cfg, record_every=5)
    assert sparse.time[-1] == trace.time[-1] and sparse.time.size < trace.time.size
    steady = run_transient(hotspot_initial_state(FILM, SHORT, cfg, 5e-17, 40e-6), FILM, SHORT, cfg)
    assert steady.outcome == "steady" and steady.final.domain_length > 0


def test_iv_hysteresis():
    result = iv_hysteresis(FILM, COARSE, COARSE_SOLVER, 79.1e-6)
    assert result.switching == 79.1e-6
    assert result.retrapping == pytest.approx(GOLDEN_IR_COARSE, rel=1e-12)
    assert result.retrapping < result.switching
    with pytest.raises(DomainError):
        iv_hysteresis(FILM, COARSE, COARSE_SOLVER, 10e-6)
    with pytest.raises(DomainError):
        iv_hysteresis(FILM, COARSE, COARSE_SOLVER, 0.0)


@pytest.mark.slow
def test_stronger_cooling_narrows_hysteresis():
    currents = [iv_hysteresis(FILM.with_(coupling_sigma=s), COARSE, COARSE_SOLVER, 79.1e-6).retrapping
                for s in (210.0, 840.0, 2000.0)]
    assert currents[0] < currents[1] < currents[2] < 79.1e-6
    with pytest.raises(DomainError):
        iv_hysteresis(FILM.with_(coupling_sigma=8000.0), COARSE, COARSE_SOLVER, 79.1e-6)


def test_film_pairing_enforced():
    other = WireGeometry(5e-6, 250e-9, 10e-9, 1.0)
    with pytest.raises(DomainError):
        find_retrapping_current(FILM, other, COARSE_SOLVER)
    with pytest.raises(DomainError):
        step(uniform_state(other, COARSE_SOLVER), FILM.with_(coupling_sigma=None), COARSE, COARSE_SOLVER)
