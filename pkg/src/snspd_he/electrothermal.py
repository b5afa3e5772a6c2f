"""One-dimensional electrothermal model of a current-biased nanowire.

The temperature T(x, t) along the wire obeys

    C dT/dt = J^2 rho [normal] + kappa d2T/dx2 - (sigma/d) (T^4 - Tsub^4)

where Joule heating acts only on nodes in the normal state and a node is
normal iff T > Tc.  Two time integrators are provided: forward Euler
("explicit") and backward Euler with Newton iterations on the T^4 term
("implicit").  In both the phase used for the Joule term is the one carried
by the incoming state and is refreshed after the temperature update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .core import FilmState, WireGeometry, check_pairing, retrapping_current_analytic
from .errors import BracketError, DomainError, StabilityError

SCHEMES = ("explicit", "implicit")
BOUNDARIES = ("dirichlet", "neumann")


@dataclass(frozen=True)
class SolverConfig:
    """Discretisation and iteration controls.

    ``dt="auto"`` means 0.4 x the diffusive stability limit for the explicit
    scheme.  For the implicit scheme it is 0.4 x the substrate cooling time
    C / (4 sigma Tc^3 / d) in steady-state searches and 0.01 x that time in
    transient runs, whose timing is first order in dt.
    """

    n_nodes: int = 1001
    dt: float | str = "auto"
    max_steps: int = 200_000
    steady_tolerance: float = 1e-7
    scheme: str = "implicit"
    boundary: str = "dirichlet"
    current_tolerance: float = 1e-3
    seed_fraction: float = 0.05
    bracket_factor: float = 2.0
    max_bracket_doublings: int = 4

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.n_nodes < 3:
            raise DomainError("need at least 3 grid nodes")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise DomainError(f"dt must be positive or 'auto', got {self.dt!r}")
        if not self.steady_tolerance > 0:
            raise DomainError("steady_tolerance must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")
        if not 0 < self.current_tolerance < 1:
            raise DomainError("current_tolerance must lie in (0, 1)")
        if not 0 < self.seed_fraction < 1:
            raise DomainError("seed_fraction must lie in (0, 1)")

    def with_(self, **changes) -> SolverConfig:
        return replace(self, **changes)

    def refined(self, factor: int = 2) -> SolverConfig:
        """Same wire on a grid with dx/factor and dt/factor."""
        dt = self.dt if self.dt == "auto" else self.dt / factor
        return replace(self, n_nodes=(self.n_nodes - 1) * factor + 1, dt=dt,
                       max_steps=self.max_steps * factor)


@dataclass(frozen=True)
class ThermalSimState:
    """Temperature field, normal-phase mask and bias on a uniform grid."""

    temperatures: np.ndarray
    normal: np.ndarray
    bias_current: float
    grid_spacing: float
    time: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.temperatures, dtype=float)
        n = np.asarray(self.normal, dtype=bool)
        if t.ndim != 1 or t.size < 3:
            raise DomainError("temperatures must be a 1D array with at least 3 nodes")
        if n.shape != t.shape:
            raise DomainError("phase mask must match the temperature grid")
        if not self.grid_spacing > 0:
            raise DomainError("grid_spacing must be positive")
        if not np.all(np.isfinite(t)):
            raise StabilityError("non-finite temperature in state")
        if np.any(t < 0):
            raise DomainError("temperatures must be non-negative")
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "normal", n)

    @property
    def n_nodes(self) -> int:
        return self.temperatures.size

    @property
    def domain_length(self) -> float:
        """Total length of normal-state wire in meters."""
        return float(np.count_nonzero(self.normal)) * self.grid_spacing

    @property
    def max_temperature(self) -> float:
        return float(self.temperatures.max())


@dataclass
class _Problem:
    """Grid-independent coefficients of the heat equation, precomputed once."""

    heat_capacity: float
    conductivity: float
    cooling: float  # sigma / d
    t_sub: float
    t_c: float
    joule: float  # J^2 rho on normal nodes
    dx: float
    dt: float
    scheme: str
    boundary: str
    _bands: np.ndarray | None = field(default=None, repr=False)

    def laplacian(self, t: np.ndarray) -> np.ndarray:
        lap = np.empty_like(t)
        lap[1:-1] = t[2:] - 2.0 * t[1:-1] + t[:-2]
        if self.boundary == "neumann":
            lap[0] = 2.0 * (t[1] - t[0])
            lap[-1] = 2.0 * (t[-2] - t[-1])
        else:
            lap[0] = lap[-1] = 0.0
        return lap / self.dx**2

    def source(self, t: np.ndarray, normal: np.ndarray) -> np.ndarray:
        return (
            self.joule * normal
            + self.conductivity * self.laplacian(t)
            - self.cooling * (t**4 - self.t_sub**4)
        )

    def advance(self, t: np.ndarray, normal: np.ndarray) -> np.ndarray:
        if self.scheme == "explicit":
            with np.errstate(over="ignore", invalid="ignore"):
                new = t + (self.dt / self.heat_capacity) * self.source(t, normal)
        else:
            new = self._implicit(t, normal)
        if self.boundary == "dirichlet":
            new[0] = new[-1] = self.t_sub
        if not np.all(np.isfinite(new)) or new.min() < 0:
            raise StabilityError("temperature became non-finite or negative; reduce dt")
        return new

    def _implicit(self, t: np.ndarray, normal: np.ndarray) -> np.ndarray:
        n = t.size
        c_dt = self.heat_capacity / self.dt
        k = self.conductivity / self.dx**2
        rhs_const = c_dt * t + self.joule * normal + self.cooling * self.t_sub**4
        u = t.copy()
        if self.boundary == "dirichlet":
            u[0] = u[-1] = self.t_sub
        scale = max(float(np.abs(t).max()), self.t_sub)
        for _ in range(50):
            # residual R(u) = c_dt u - k lap(u) + s u^4 - rhs_const
            lap = np.empty(n)
            lap[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
            bands = np.zeros((3, n))
            bands[0, 1:] = -k
            bands[2, :-1] = -k
            bands[1, :] = c_dt + 2.0 * k + 4.0 * self.cooling * u**3
            if self.boundary == "neumann":
                lap[0] = 2.0 * (u[1] - u[0])
                lap[-1] = 2.0 * (u[-2] - u[-1])
                bands[0, 1] = -2.0 * k
                bands[2, -2] = -2.0 * k
            residual = c_dt * u - k * lap + self.cooling * u**4 - rhs_const
            if self.boundary == "dirichlet":
                residual[0] = residual[-1] = 0.0
                bands[1, 0] = bands[1, -1] = 1.0
                # boundary rows are identities; dropping their coupling into the
                # neighbours keeps the system diagonally dominant without pivoting
                bands[0, 1] = bands[0, -1] = 0.0
                bands[2, 0] = bands[2, -2] = 0.0
            delta = solve_banded((1, 1), bands, -residual, overwrite_ab=True, check_finite=False)
            u += delta
            if float(np.abs(delta).max()) <= 1e-13 * scale:
                break
        else:
            raise StabilityError("Newton iteration of the implicit step did not converge")
        return u


def _problem(film: FilmState, geom: WireGeometry, config: SolverConfig, bias: float,
             transient: bool = False) -> _Problem:
    check_pairing(film, geom)
    if film.coupling_sigma is None:
        raise DomainError("film has no coupling_sigma")
    dx = geom.length / (config.n_nodes - 1)
    cooling = film.coupling_sigma / film.thickness
    current_density = bias / geom.cross_section
    dt = config.dt
    if dt == "auto":
        dt = auto_time_step(film, geom, config, transient)
    elif config.scheme == "explicit" and dt > stability_limit(film, geom, config):
        raise DomainError(f"dt = {dt:.4g} s exceeds the explicit stability limit "
                          f"{stability_limit(film, geom, config):.4g} s")
    return _Problem(
        heat_capacity=film.specific_heat_volumetric,
        conductivity=film.thermal_conductivity,
        cooling=cooling,
        t_sub=geom.substrate_temperature,
        t_c=film.critical_temperature,
        joule=current_density**2 * film.resistivity,
        dx=dx,
        dt=float(dt),
        scheme=config.scheme,
        boundary=config.boundary,
    )


def stability_limit(film: FilmState, geom: WireGeometry, config: SolverConfig) -> float:
    """Largest stable forward-Euler step for the diffusion term, 0.5 C dx^2 / kappa."""
    dx = geom.length / (config.n_nodes - 1)
    return 0.5 * film.specific_heat_volumetric * dx**2 / film.thermal_conductivity


def cooling_time(film: FilmState) -> float:
    """Linearised substrate relaxation time C / (4 sigma Tc^3 / d) at Tc."""
    rate = 4.0 * film.coupling_sigma * film.critical_temperature**3 / film.thickness
    return film.specific_heat_volumetric / rate


TRANSIENT_DT_FRACTION = 0.01


def auto_time_step(film: FilmState, geom: WireGeometry, config: SolverConfig, transient: bool = False) -> float:
    if config.scheme == "explicit":
        return 0.4 * stability_limit(film, geom, config)
    return (TRANSIENT_DT_FRACTION if transient else 0.4) * cooling_time(film)


def healing_length(film: FilmState) -> float:
    """Thermal healing length sqrt(kappa d / (4 sigma Tc^3)) in meters."""
    return math.sqrt(
        film.thermal_conductivity * film.thickness
        / (4.0 * film.coupling_sigma * film.critical_temperature**3)
    )


def _phase(t: np.ndarray, t_c: float) -> np.ndarray:
    return t > t_c


def uniform_state(geom: WireGeometry, config: SolverConfig, bias: float = 0.0,
                  temperature: float | None = None) -> ThermalSimState:
    """All-superconducting wire at the substrate temperature (or ``temperature``)."""
    t0 = geom.substrate_temperature if temperature is None else temperature
    t = np.full(config.n_nodes, float(t0))
    if config.boundary == "dirichlet":
        t[0] = t[-1] = geom.substrate_temperature
    return ThermalSimState(t, np.zeros(t.size, dtype=bool), bias, geom.length / (config.n_nodes - 1))


def seeded_state(film: FilmState, geom: WireGeometry, config: SolverConfig, bias: float) -> ThermalSimState:
    """Central ``seed_fraction`` of the nodes normal at 2 Tc, the rest at Tsub."""
    n = config.n_nodes
    width = max(1, int(round(config.seed_fraction * n)))
    start = (n - width) // 2
    t = np.full(n, geom.substrate_temperature)
    t[start:start + width] = 2.0 * film.critical_temperature
    return ThermalSimState(t, _phase(t, film.critical_temperature), bias, geom.length / (n - 1))


def step(state: ThermalSimState, film: FilmState, geom: WireGeometry, config: SolverConfig) -> ThermalSimState:
    """Advance ``state`` by one time step."""
    prob = _problem(film, geom, config, state.bias_current)
    _check_grid(state, prob)
    new_t = prob.advance(state.temperatures, state.normal)
    return ThermalSimState(new_t, _phase(new_t, prob.t_c), state.bias_current, state.grid_spacing,
                           state.time + prob.dt)


def _check_grid(state: ThermalSimState, prob: _Problem) -> None:
    if not math.isclose(state.grid_spacing, prob.dx, rel_tol=1e-9):
        raise DomainError("state grid does not match the solver configuration")


def _relax(state, prob, max_steps, tol, stop=None):
    """Core loop shared by the public drivers.  Returns (t, normal, time, steps, converged)."""
    t, normal, time = state.temperatures.copy(), state.normal.copy(), state.time
    for k in range(1, max_steps + 1):
        new = prob.advance(t, normal)
        change = float(np.abs(new - t).max())
        t = new
        normal = _phase(t, prob.t_c)
        time += prob.dt
        if change < tol:
            return t, normal, time, k, True
        if stop is not None and stop(t, normal):
            return t, normal, time, k, False
    return t, normal, time, max_steps, False


def relax_to_steady(state: ThermalSimState, film: FilmState, geom: WireGeometry,
                    config: SolverConfig) -> tuple[ThermalSimState, bool]:
    """Step until the largest per-step temperature change drops below
    ``steady_tolerance``.  The flag is False if ``max_steps`` ran out first."""
    prob = _problem(film, geom, config, state.bias_current)
    _check_grid(state, prob)
    t, normal, time, _, converged = _relax(state, prob, config.max_steps, config.steady_tolerance)
    return ThermalSimState(t, normal, state.bias_current, state.grid_spacing, time), converged


def domain_survives(film: FilmState, geom: WireGeometry, config: SolverConfig, bias: float) -> bool:
    """Whether a seeded normal domain is still present once the wire has settled.

    Collapse is final: with no normal node left there is no heat source and the
    maximum principle keeps every node below Tc, so the run stops there.
    """
    prob = _problem(film, geom, config, bias)
    state = seeded_state(film, geom, config, bias)

    def collapsed(t, normal):
        return not normal.any()

    t, normal, _, _, converged = _relax(state, prob, config.max_steps, config.steady_tolerance, collapsed)
    if not normal.any():
        return False
    if not converged:
        raise NonConvergence(f"domain neither settled nor collapsed within {config.max_steps} steps "
                             f"at bias {bias:.6g} A")
    return True


class NonConvergence(StabilityError):
    """A relaxation ran out of steps without settling."""


def find_retrapping_current(film: FilmState, geom: WireGeometry, config: SolverConfig,
                            i_high: float | None = None) -> float:
    """Smallest bias (A) at which a seeded normal domain sustains itself.

    Bisection on the survival predicate over [0, i_high].  ``i_high`` defaults to
    ``bracket_factor`` x the closed-form retrapping current and is doubled up
    to ``max_bracket_doublings`` times if no domain survives there.
    """
    auto_bracket = i_high is None
    if auto_bracket:
        i_high = config.bracket_factor * retrapping_current_analytic(film, geom)
    doublings = config.max_bracket_doublings if auto_bracket else 0
    for k in range(doublings + 1):
        if domain_survives(film, geom, config, i_high):
            break
        if k == doublings:
            raise BracketError(f"bracket [0, {i_high:.6g}] A does not straddle the retrapping transition")
        i_high *= 2.0
    lo, hi = 0.0, i_high
    tol = config.current_tolerance * i_high
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if domain_survives(film, geom, config, mid):
            hi = mid
        else:
            lo = mid
    return hi


def hotspot_initial_state(film: FilmState, geom: WireGeometry, config: SolverConfig, seed_energy: float,
                          bias: float, position: float | None = None) -> ThermalSimState:
    """Wire at Tsub plus a Gaussian temperature bump holding ``seed_energy`` joules.

    The bump has a standard deviation equal to the wire width and is centred at
    ``position`` (meters from the left end; default mid-wire).
    """
    if seed_energy < 0:
        raise DomainError("seed_energy must be >= 0")
    n = config.n_nodes
    x = np.linspace(0.0, geom.length, n)
    x0 = 0.5 * geom.length if position is None else position
    spread = geom.width
    bump = np.exp(-0.5 * ((x - x0) / spread) ** 2) / (spread * math.sqrt(2.0 * math.pi))
    rise = seed_energy / (film.specific_heat_volumetric * geom.cross_section) * bump
    t = geom.substrate_temperature + rise
    if config.boundary == "dirichlet":
        t[0] = t[-1] = geom.substrate_temperature
    return ThermalSimState(t, _phase(t, film.critical_temperature), bias, geom.length / (n - 1))


def hotspot_lifetime(film: FilmState, geom: WireGeometry, config: SolverConfig, seed_energy: float,
                     bias: float, position: float | None = None) -> float:
    """Time (s) until the normal domain created by ``seed_energy`` disappears.

    Returns ``math.inf`` if the domain settles into a self-sustaining state.
    The vanishing instant is interpolated linearly in the peak temperature
    between the last two steps.
    """
    state = hotspot_initial_state(film, geom, config, seed_energy, bias, position)
    if not state.normal.any():
        return 0.0
    prob = _problem(film, geom, config, bias, transient=True)
    t, normal = state.temperatures, state.normal
    peak = float(t.max())
    time = 0.0
    for _ in range(config.max_steps):
        new = prob.advance(t, normal)
        new_peak = float(new.max())
        change = float(np.abs(new - t).max())
        t, normal = new, _phase(new, prob.t_c)
        if not normal.any():
            frac = (peak - prob.t_c) / (peak - new_peak) if peak > new_peak else 1.0
            return time + prob.dt * min(max(frac, 0.0), 1.0)
        time += prob.dt
        peak = new_peak
        if change < config.steady_tolerance:
            return math.inf
    raise NonConvergence(f"hotspot neither vanished nor settled within {config.max_steps} steps")


@dataclass(frozen=True)
class Trace:
    """Sampled history of a transient run."""

    time: np.ndarray
    max_temperature: np.ndarray
    domain_length: np.ndarray
    outcome: str  # "vanished", "steady" or "max_steps"
    final: ThermalSimState


def run_transient(state: ThermalSimState, film: FilmState, geom: WireGeometry, config: SolverConfig,
                  record_every: int = 1) -> Trace:
    """Evolve ``state`` until the normal domain vanishes, the wire settles or
    ``max_steps`` is reached, sampling every ``record_every`` steps."""
    if record_every < 1:
        raise DomainError("record_every must be >= 1")
    prob = _problem(film, geom, config, state.bias_current, transient=True)
    _check_grid(state, prob)
    dx = state.grid_spacing
    t, normal, time = state.temperatures, state.normal, state.time
    times, peaks, lengths = [time], [float(t.max())], [float(normal.sum()) * dx]
    outcome = "max_steps"
    for k in range(1, config.max_steps + 1):
        new = prob.advance(t, normal)
        change = float(np.abs(new - t).max())
        t, normal, time = new, _phase(new, prob.t_c), time + prob.dt
        done = None
        if not normal.any():
            done = "vanished"
        elif change < config.steady_tolerance:
            done = "steady"
        if done or k % record_every == 0:
            times.append(time)
            peaks.append(float(t.max()))
            lengths.append(float(normal.sum()) * dx)
        if done:
            outcome = done
            break
    final = ThermalSimState(t, normal, state.bias_current, dx, time)
    return Trace(np.array(times), np.array(peaks), np.array(lengths), outcome, final)


@dataclass(frozen=True)
class Hysteresis:
    switching: float
    retrapping: float


def iv_hysteresis(film: FilmState, geom: WireGeometry, config: SolverConfig, i_switch: float) -> Hysteresis:
    """Pair an externally supplied switching current with the simulated retrapping current."""
    if not i_switch > 0:
        raise DomainError("i_switch must be positive")
    i_r = find_retrapping_current(film, geom, config)
    if i_r >= i_switch:
        raise DomainError(f"retrapping current {i_r:.6g} A is not below the switching current {i_switch:.6g} A")
    return Hysteresis(switching=i_switch, retrapping=i_r)
