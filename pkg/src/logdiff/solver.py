"""Implicit radial solver for u_t = Delta log u and its self-similar form.

The unknown is v = log u on the nodes r_0, ..., r_{M-1}; the boundary node
r_M carries a Dirichlet value. Each node owns the control volume between the
midpoints of its neighbouring cells, and the conservative fluxes through the
faces r_{i+1/2} are

    diffusion:  F = r_{i+1/2}^(N-1) (v_{i+1} - v_i) / (r_{i+1} - r_i)
    drift:      G = r_{i+1/2}^N u_i u_{i+1} / L(u_i, u_{i+1})

(the drift only in the self-similar frame, with coefficient 1/(N-2)),
where L(a, b) = (a - b) / (log a - log b) is the logarithmic mean. With this
face value every sampled B~_k is an exact discrete steady state: the two
fluxes cancel face by face because 1/B~_k is quadratic in r. One
implicit stage solves a tridiagonal nonlinear system by damped Newton
iteration; u = e^v is positive by construction.

Classes:
    BoundaryKind: Pinned Barenblatt value or fitted far-field tail
    Scheme: Backward Euler or TR-BDF2
    BoundaryCondition: Boundary treatment at r = R_max
    SolverConfig: Step size, Newton tolerances and frame of an evolution
    EvolutionState: Positive profile at a clock

Functions:
    step: One implicit time step
    evolve: Adaptive time stepping to a horizon with monitors
    apply_operator: Discrete right-hand side of the active frame
    solve_dirichlet_frozen: One implicit step of the linear equation for differences
    drift_face_weights: Face weights that linearize the drift difference of two profiles exactly
"""

import os

# ARM64 LLVM optimization workaround
# Use generic ARM64 target to avoid CPU-specific scheduling model bugs
os.environ["NUMBA_CPU_NAME"] = "generic"

import logging
import math
from dataclasses import dataclass, field, replace
from enum import StrEnum
from functools import cached_property, lru_cache
from typing import Optional, Sequence

import numpy as np
from numba import njit
from scipy.linalg import solve_banded

from .barenblatt import BarenblattSpec, barenblatt_tail, barenblatt_value, rescaled_barenblatt_value
from .diagnostics import DiagnosticsRecord, DiagnosticsSeries, Monitor
from .errors import (
    CoefficientBoundError,
    GridMismatchError,
    InvariantViolationError,
    NearExtinctionError,
    NewtonConvergenceError,
)
from .grid import RadialGrid, RadialProfile, TailLaw, fit_tail, radial_gradient, radial_laplacian
from .transform import Frame

logger = logging.getLogger(__name__)

TR_BDF2_GAMMA = 2.0 - math.sqrt(2.0)
MAX_BACKTRACKS = 30
STAGNATION_STEP = 1e-12
COEFFICIENT_BOUND_RTOL = 1e-8
CLOCK_EPS = 1e-12
FACE_SERIES_CUTOFF = 1e-3
FACE_ASYMPTOTIC_CUTOFF = 20.0
FACE_WEIGHT_RTOL = 1e-8


class BoundaryKind(StrEnum):
    PINNED = "pinned"
    FITTED_TAIL = "fitted_tail"


class Scheme(StrEnum):
    BACKWARD_EULER = "backward_euler"
    TR_BDF2 = "tr_bdf2"


@dataclass(frozen=True)
class BoundaryCondition:
    """Boundary treatment at r = R_max.

    Attributes:
        kind (BoundaryKind): pinned (Dirichlet value of a Barenblatt solution)
            or fitted_tail (value extrapolated from a c/(k + r^2) fit).
        k_boundary (float | None): Barenblatt parameter of the pinned value;
            resolved from the initial boundary node when None.
    """

    kind: BoundaryKind = BoundaryKind.PINNED
    k_boundary: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundaryKind(self.kind))
        if self.k_boundary is not None and not (
            math.isfinite(self.k_boundary) and self.k_boundary > 0.0
        ):
            raise ValueError(f"k_boundary must be positive and finite, got {self.k_boundary!r}.")

    @classmethod
    def pinned_barenblatt(cls, k_boundary: Optional[float] = None) -> "BoundaryCondition":
        return cls(BoundaryKind.PINNED, k_boundary)

    @classmethod
    def fitted_tail(cls) -> "BoundaryCondition":
        return cls(BoundaryKind.FITTED_TAIL)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of an evolution.

    Attributes:
        dt (float): Largest time step in the active frame (t or s).
        frame (Frame): Physical or self-similar frame.
        boundary (BoundaryCondition): Boundary treatment at R_max.
        newton_tol (float): Tolerance on the scaled max-norm Newton residual.
        newton_max_iter (int): Newton iteration budget per implicit stage.
        positivity_floor (float): Values at or below this signal near extinction.
        scheme (Scheme): Backward Euler or TR-BDF2.
        max_halvings (int): dt halvings allowed after Newton failures.
        easy_iterations (int): Newton iterations counting as an easy step.
        easy_steps_to_grow (int): Consecutive easy steps before dt doubles.
    """

    dt: float
    frame: Frame
    boundary: BoundaryCondition = field(default_factory=BoundaryCondition)
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    positivity_floor: float = 1e-30
    scheme: Scheme = Scheme.BACKWARD_EULER
    max_halvings: int = 10
    easy_iterations: int = 5
    easy_steps_to_grow: int = 5

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not math.isfinite(self.dt) or self.dt <= 0.0:
            raise ValueError(f"dt must be positive and finite, got {self.dt!r}.")
        if not self.newton_tol > 0.0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol!r}.")
        if self.newton_max_iter < 1:
            raise ValueError(f"newton_max_iter must be at least 1, got {self.newton_max_iter!r}.")
        if not self.positivity_floor > 0.0:
            raise ValueError(f"positivity_floor must be positive, got {self.positivity_floor!r}.")
        if self.frame.dimension == 4:
            logger.warning("N = 4 is accepted by the stepper but lies outside the theorem checks.")


@dataclass(frozen=True)
class EvolutionState:
    """Positive profile u(., t) or u~(., s) at a clock.

    Attributes:
        profile (RadialProfile): Strictly positive profile.
        clock (float): t in the physical frame, s in the self-similar frame.
        frame (Frame): Frame the clock and profile refer to.
        step_count (int): Accepted steps since the start of the evolution.
    """

    profile: RadialProfile
    clock: float
    frame: Frame
    step_count: int = 0

    def __post_init__(self):
        if not math.isfinite(self.clock):
            raise ValueError(f"Clock must be finite, got {self.clock!r}.")
        if np.any(self.profile.values <= 0.0):
            zero = int(np.argmax(self.profile.values <= 0.0))
            raise ValueError(
                f"Evolution states must be strictly positive; node {zero} "
                f"(r = {self.profile.grid.nodes[zero]:g}) holds {self.profile.values[zero]:g}."
            )
        if self.profile.grid.dimension != self.frame.dimension:
            raise ValueError("Profile dimension differs from the frame dimension.")


@dataclass(frozen=True, eq=False)
class _Geometry:
    """Finite-volume coefficients of a grid."""

    grid: RadialGrid

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.ascontiguousarray(self.grid.control_volumes)

    @cached_property
    def conductance(self) -> np.ndarray:
        return np.ascontiguousarray(
            self.grid.faces ** (self.grid.dimension - 1) / self.grid.spacings
        )

    @cached_property
    def face_power(self) -> np.ndarray:
        return np.ascontiguousarray(self.grid.faces**self.grid.dimension)


@lru_cache(maxsize=32)
def _geometry(grid: RadialGrid) -> _Geometry:
    return _Geometry(grid)


@njit
def _face_mean(v_left, v_right):
    """Drift face value u_l u_r / L(u_l, u_r), L the logarithmic mean, from the nodal logs.

    Written as e^m phi(z) with m the mean log, z the half difference and
    phi(z) = z / sinh(z). Returns the value and its derivatives in v_left
    and v_right.
    """
    z = 0.5 * (v_left - v_right)
    size = abs(z)
    if size > FACE_ASYMPTOTIC_CUTOFF:
        # phi ~ 2|z| e^-|z|; e^(m - |z|) = min(u_l, u_r)
        scale = math.exp(min(v_left, v_right))
        phi = 2.0 * size
        slope = math.copysign(2.0 * (1.0 - size), z)
    else:
        scale = math.exp(0.5 * (v_left + v_right))
        if size < FACE_SERIES_CUTOFF:
            z2 = z * z
            phi = 1.0 - z2 / 6.0 + 7.0 * z2 * z2 / 360.0 - 31.0 * z2 * z2 * z2 / 15120.0
            slope = z * (-1.0 / 3.0 + 7.0 * z2 / 90.0 - 31.0 * z2 * z2 / 2520.0)
        else:
            sinh = math.sinh(z)
            phi = z / sinh
            slope = (sinh - z * math.cosh(z)) / (sinh * sinh)
    return scale * phi, 0.5 * scale * (phi + slope), 0.5 * scale * (phi - slope)


@njit
def _assemble(v, rhs, volumes, conductance, face_power, theta, dt, residual, banded):
    """Residual and tridiagonal Jacobian of one implicit stage.

    v holds all M + 1 nodal logs (the last is the boundary value); residual
    and banded cover the M unknown nodes, banded in solve_banded((1, 1)) layout.
    """
    m = residual.shape[0]
    u = np.exp(v)
    for i in range(m):
        a_r = conductance[i]
        g_r = theta * face_power[i]
        mean_r, left_r, right_r = _face_mean(v[i], v[i + 1])
        flux = a_r * (v[i + 1] - v[i]) + g_r * mean_r
        diag = volumes[i] * u[i] - dt * (-a_r + g_r * left_r)
        if i > 0:
            a_l = conductance[i - 1]
            g_l = theta * face_power[i - 1]
            mean_l, left_l, right_l = _face_mean(v[i - 1], v[i])
            flux -= a_l * (v[i] - v[i - 1]) + g_l * mean_l
            diag += dt * (a_l + g_l * right_l)
            banded[2, i - 1] = -dt * (a_l - g_l * left_l)
        if i + 1 < m:
            banded[0, i + 1] = -dt * (a_r + g_r * right_r)
        banded[1, i] = diag
        residual[i] = volumes[i] * (u[i] - rhs[i]) - dt * flux


@njit
def _flux_divergence(v, volumes, conductance, face_power, theta, out):
    """Discrete operator at the M interior nodes: (flux_right - flux_left) / volume."""
    m = out.shape[0]
    for i in range(m):
        flux = conductance[i] * (v[i + 1] - v[i]) + theta * face_power[i] * _face_mean(v[i], v[i + 1])[0]
        if i > 0:
            flux -= conductance[i - 1] * (v[i] - v[i - 1]) + theta * face_power[i - 1] * _face_mean(
                v[i - 1], v[i]
            )[0]
        out[i] = flux / volumes[i]


@njit
def _face_weights(log_u, log_v, beta, gamma):
    """Weights with G(u_i, u_i+1) - G(v_i, v_i+1) = beta_i p_i + gamma_i p_i+1, p = u - v."""
    m = beta.shape[0]
    for i in range(m):
        u_i, v_i = math.exp(log_u[i]), math.exp(log_v[i])
        u_j, v_j = math.exp(log_u[i + 1]), math.exp(log_v[i + 1])
        both_u, left_u, _ = _face_mean(log_u[i], log_u[i + 1])
        mixed, _, right_mixed = _face_mean(log_v[i], log_u[i + 1])
        both_v = _face_mean(log_v[i], log_v[i + 1])[0]
        if abs(u_i - v_i) > FACE_WEIGHT_RTOL * u_i:
            beta[i] = (both_u - mixed) / (u_i - v_i)
        else:
            beta[i] = left_u / u_i
        if abs(u_j - v_j) > FACE_WEIGHT_RTOL * u_j:
            gamma[i] = (mixed - both_v) / (u_j - v_j)
        else:
            gamma[i] = right_mixed / u_j


def _operator_values(v: np.ndarray, geometry: _Geometry, theta: float) -> np.ndarray:
    out = np.empty(v.size - 1)
    _flux_divergence(v, geometry.volumes, geometry.conductance, geometry.face_power, theta, out)
    return out


def apply_operator(profile: RadialProfile, frame: Frame) -> RadialProfile:
    """Discrete right-hand side Delta log u (+ div(x u)/(N-2) self-similar).

    Interior nodes use the conservative finite-volume form of the solver; the
    boundary node uses second-order finite differences.
    """
    if np.any(profile.values <= 0.0):
        raise ValueError("The operator acts on strictly positive profiles only.")
    theta = frame.drift
    v = np.log(profile.values)
    values = np.empty_like(v)
    values[:-1] = _operator_values(v, _geometry(profile.grid), theta)
    log_profile = RadialProfile(profile.grid, v)
    boundary = radial_laplacian(log_profile).values[-1]
    if theta:
        r = profile.grid.r_max
        n = profile.grid.dimension
        boundary += theta * (n * profile.values[-1] + r * radial_gradient(profile).values[-1])
    values[-1] = boundary
    return RadialProfile(profile.grid, values)


def _scaled_residual(residual: np.ndarray, geometry: _Geometry, u: np.ndarray) -> float:
    return float(np.max(np.abs(residual) / (geometry.volumes[:-1] * u[:-1])))


def _newton(
    v_start: np.ndarray,
    rhs: np.ndarray,
    dt_eff: float,
    geometry: _Geometry,
    theta: float,
    config: SolverConfig,
) -> tuple[np.ndarray, int]:
    """Damped Newton iteration for one implicit stage.

    Returns:
        tuple[np.ndarray, int]: Converged nodal logs and the iteration count.
    """
    v = v_start.copy()
    m = v.size - 1
    residual = np.empty(m)
    banded = np.zeros((3, m))
    _assemble(v, rhs, geometry.volumes, geometry.conductance, geometry.face_power, theta, dt_eff, residual, banded)
    norm = _scaled_residual(residual, geometry, np.exp(v))

    for iteration in range(1, config.newton_max_iter + 1):
        if norm < config.newton_tol:
            return v, iteration - 1
        delta = solve_banded((1, 1), banded, -residual)
        if not np.all(np.isfinite(delta)):
            break
        # cap the change of log u to one e-fold per iteration
        damping = min(1.0, 1.0 / max(float(np.max(np.abs(delta))), 1e-300))
        trial = v.copy()
        trial_residual = np.empty(m)
        trial_banded = np.zeros((3, m))
        for _ in range(MAX_BACKTRACKS):
            trial[:-1] = v[:-1] + damping * delta
            _assemble(
                trial, rhs, geometry.volumes, geometry.conductance, geometry.face_power,
                theta, dt_eff, trial_residual, trial_banded,
            )
            trial_norm = _scaled_residual(trial_residual, geometry, np.exp(trial))
            if trial_norm <= (1.0 - 1e-4 * damping) * norm:
                break
            damping *= 0.5
        v, residual, banded, norm = trial, trial_residual, trial_banded, trial_norm
        logger.debug("Newton iteration %d: scaled residual %.3e", iteration, norm)
        if norm < config.newton_tol:
            return v, iteration
        if float(np.max(np.abs(delta))) < STAGNATION_STEP:
            # roundoff floor of the residual reached
            return v, iteration

    raise NewtonConvergenceError(
        f"Newton iteration did not converge in {config.newton_max_iter} iterations "
        f"(scaled residual {norm:.3e}, tolerance {config.newton_tol:.1e}).",
        residual=norm,
        iterations=config.newton_max_iter,
    )


def resolve_boundary(config: SolverConfig, state: EvolutionState) -> SolverConfig:
    """Fill in k_boundary of a pinned boundary from the state's boundary node.

    The resolved k reproduces the boundary value as a Barenblatt value, so a
    profile sandwiched between B~_k1 and B~_k2 is pinned between them too.
    """
    boundary = config.boundary
    if boundary.kind is not BoundaryKind.PINNED or boundary.k_boundary is not None:
        return config
    frame = config.frame
    n = frame.dimension
    r_max = state.profile.grid.r_max
    u_max = state.profile.values[-1]
    if frame.is_physical:
        log_gap = math.log(frame.T - state.clock)
        scale_sq = math.exp(2.0 * log_gap / (n - 2))
        amplitude = math.exp(n * log_gap / (n - 2))
        k_boundary = 2.0 * (n - 2) * amplitude / u_max - scale_sq * r_max**2
    else:
        k_boundary = 2.0 * (n - 2) / u_max - r_max**2
    if k_boundary <= 0.0:
        raise ValueError(
            f"Boundary value {u_max:g} at R_max = {r_max:g} is not a Barenblatt value; "
            "give k_boundary explicitly or use the fitted_tail boundary."
        )
    logger.info("Resolved pinned boundary parameter k_b = %.12g", k_boundary)
    return replace(config, boundary=BoundaryCondition.pinned_barenblatt(k_boundary))


def _boundary_data(
    state: EvolutionState, config: SolverConfig, target: float
) -> tuple[float, Optional[TailLaw]]:
    """Boundary value at the target clock and the tail law that continues it."""
    frame = config.frame
    grid = state.profile.grid
    n = frame.dimension
    if config.boundary.kind is BoundaryKind.PINNED:
        k_b = config.boundary.k_boundary
        if frame.is_physical:
            spec = BarenblattSpec(k_b, frame.T, n)
            value = float(barenblatt_value(grid.r_max, target, spec))
            if value <= config.positivity_floor:
                raise NearExtinctionError(
                    f"Pinned boundary value {value:.3e} at t = {target:.6g} is below the positivity floor.",
                    clock=state.clock,
                    target=target,
                )
            return value, barenblatt_tail(spec, target)
        return float(rescaled_barenblatt_value(grid.r_max, k_b, n)), TailLaw(2.0 * (n - 2), k_b)

    law = fit_tail(state.profile, exclude_boundary=True)
    value = float(law.value(grid.r_max))
    if value <= config.positivity_floor:
        raise NearExtinctionError(
            f"Fitted boundary value {value:.3e} is below the positivity floor.",
            clock=state.clock,
            target=target,
        )
    return value, law


def _solve_stage(
    v_start: np.ndarray,
    rhs: np.ndarray,
    dt_eff: float,
    boundary_value: float,
    geometry: _Geometry,
    config: SolverConfig,
) -> tuple[np.ndarray, int]:
    v = v_start.copy()
    v[-1] = math.log(boundary_value)
    return _newton(v, np.ascontiguousarray(rhs), dt_eff, geometry, config.frame.drift, config)


def _advance(
    state: EvolutionState, config: SolverConfig, target: float
) -> tuple[EvolutionState, int]:
    """Advance state to clock target; returns the new state and Newton iterations used."""
    dt = target - state.clock
    if not dt > 0.0:
        raise ValueError(f"Step must move the clock forward, got dt = {dt!r}.")
    if state.frame != config.frame:
        raise ValueError("State frame differs from the solver frame.")
    config = resolve_boundary(config, state)
    geometry = _geometry(state.profile.grid)
    u_old = state.profile.values
    v_old = np.log(u_old)
    boundary_value, tail = _boundary_data(state, config, target)

    if config.scheme is Scheme.BACKWARD_EULER:
        v, iterations = _solve_stage(v_old, u_old[:-1], dt, boundary_value, geometry, config)
    else:
        gamma = TR_BDF2_GAMMA
        # trapezoidal stage to clock + gamma dt
        explicit = _operator_values(v_old, geometry, config.frame.drift)
        stage_value, _ = _boundary_data(state, config, state.clock + gamma * dt)
        v_stage, first = _solve_stage(
            v_old, u_old[:-1] + 0.5 * gamma * dt * explicit, 0.5 * gamma * dt,
            stage_value, geometry, config,
        )
        # BDF2 stage to the target clock
        weight = 1.0 / (gamma * (2.0 - gamma))
        rhs = weight * np.exp(v_stage[:-1]) - (1.0 - gamma) ** 2 * weight * u_old[:-1]
        v, second = _solve_stage(
            v_stage, rhs, (1.0 - gamma) / (2.0 - gamma) * dt, boundary_value, geometry, config
        )
        iterations = first + second

    u_new = np.exp(v)
    u_new[-1] = boundary_value
    if np.any(u_new <= config.positivity_floor):
        raise NearExtinctionError(
            f"Solution fell below the positivity floor {config.positivity_floor:.1e} "
            f"at clock {target:.6g}.",
            clock=state.clock,
            target=target,
        )
    profile = RadialProfile(state.profile.grid, u_new, tail)
    return EvolutionState(profile, target, state.frame, state.step_count + 1), iterations


def step(state: EvolutionState, config: SolverConfig, dt: Optional[float] = None) -> EvolutionState:
    """Advance one implicit step of size dt (default config.dt).

    Raises:
        NewtonConvergenceError: If the Newton iteration does not converge.
        NearExtinctionError: If the boundary value or any node drops to the
            positivity floor.

    Examples:
        >>> state = step(state, config)
        >>> state.step_count
        1
    """
    new_state, _ = _advance(state, config, state.clock + (config.dt if dt is None else dt))
    return new_state


def step_to(state: EvolutionState, config: SolverConfig, clock: float) -> EvolutionState:
    """Advance one implicit step landing exactly on clock."""
    new_state, _ = _advance(state, config, clock)
    return new_state


def _stops(clock: float, horizon: float, checkpoints: Sequence[float]) -> list[float]:
    inside = {c for c in checkpoints if clock + CLOCK_EPS < c < horizon - CLOCK_EPS}
    return sorted(inside | {horizon})


def evolve(
    initial: EvolutionState,
    config: SolverConfig,
    horizon: float,
    monitors: Sequence[Monitor] = (),
    checkpoints: Sequence[float] = (),
) -> tuple[EvolutionState, DiagnosticsSeries]:
    """Evolve to the horizon with adaptive steps, recording monitors after every step.

    The step size halves after a Newton failure (at most config.max_halvings
    times in a row) and doubles, up to config.dt, after config.easy_steps_to_grow
    consecutive steps needing at most config.easy_iterations Newton iterations.
    Steps are shortened to land exactly on each checkpoint and on the horizon;
    the profiles there are stored as snapshots. A near-extinction signal ends
    the evolution and is recorded as series.extinction_clock.

    Args:
        initial (EvolutionState): Starting state.
        config (SolverConfig): Solver parameters; dt is the largest step.
        horizon (float): Final clock, horizon >= initial.clock.
        monitors (Sequence[Monitor]): Called in order after every accepted step.
        checkpoints (Sequence[float]): Clocks at which to land and store snapshots.

    Returns:
        tuple[EvolutionState, DiagnosticsSeries]: Last accepted state and its diagnostics.

    Raises:
        NewtonConvergenceError: If Newton still fails after max_halvings halvings.
        InvariantViolationError: If a monitor declares a fatal violation; the
            partial series is attached to the exception.
    """
    if horizon < initial.clock:
        raise ValueError(f"Horizon {horizon!r} lies before the initial clock {initial.clock!r}.")
    series = DiagnosticsSeries()
    if any(abs(c - initial.clock) <= CLOCK_EPS for c in checkpoints):
        series.snapshots[initial.clock] = initial.profile
    if horizon - initial.clock <= CLOCK_EPS:
        return initial, series

    config = resolve_boundary(config, initial)
    state = initial
    dt = config.dt
    easy_steps = 0
    logger.info(
        "Evolving %s frame from clock %.6g to %.6g (dt = %.3g, %s)",
        config.frame.kind, initial.clock, horizon, dt, config.scheme,
    )
    for stop in _stops(initial.clock, horizon, checkpoints):
        while stop - state.clock > CLOCK_EPS:
            trial_dt = dt
            halvings = 0
            while True:
                landing = trial_dt >= stop - state.clock - CLOCK_EPS
                target = stop if landing else state.clock + trial_dt
                try:
                    new_state, iterations = _advance(state, config, target)
                    break
                except NewtonConvergenceError as error:
                    halvings += 1
                    if halvings > config.max_halvings:
                        raise
                    trial_dt *= 0.5
                    dt = trial_dt
                    easy_steps = 0
                    logger.warning(
                        "Newton failed at clock %.6g (%s); retrying with dt = %.3e",
                        state.clock, error, trial_dt,
                    )
                except NearExtinctionError as signal:
                    series.extinction_clock = signal.target
                    logger.info(
                        "Near-extinction signal at clock %.6g (last accepted %.6g)",
                        signal.target, signal.clock,
                    )
                    return state, series

            dt_used = new_state.clock - state.clock
            fields: dict[str, float] = {}
            try:
                for monitor in monitors:
                    fields.update(monitor(state, new_state, dt_used))
            except InvariantViolationError as violation:
                violation.series = series
                raise
            series.append(DiagnosticsRecord.from_fields(new_state.clock, dt_used, fields))
            state = new_state

            if iterations <= config.easy_iterations:
                easy_steps += 1
                if easy_steps >= config.easy_steps_to_grow and dt < config.dt:
                    dt = min(2.0 * dt, config.dt)
                    easy_steps = 0
                    logger.info("Increased dt to %.3e at clock %.6g", dt, state.clock)
            else:
                easy_steps = 0

        if stop in checkpoints or any(abs(stop - c) <= CLOCK_EPS for c in checkpoints):
            series.snapshots[stop] = state.profile
            logger.info("Reached checkpoint %.6g after %d steps", stop, state.step_count)
    return state, series


def drift_face_weights(u: RadialProfile, v: RadialProfile) -> tuple[np.ndarray, np.ndarray]:
    """Face weights (beta, gamma) of the drift difference of two positive profiles.

    With G the drift face value of the solver,
    G(u_i, u_{i+1}) - G(v_i, v_{i+1}) = beta_i p_i + gamma_i p_{i+1}, p = u - v,
    holds exactly at every face; both weights are positive.

    Raises:
        GridMismatchError: If the profiles live on different grids.
        ValueError: If either profile has a non-positive node.
    """
    if not u.grid.same_as(v.grid):
        raise GridMismatchError("Face weights need profiles on one grid.")
    if np.any(u.values <= 0.0) or np.any(v.values <= 0.0):
        raise ValueError("Face weights need strictly positive profiles.")
    beta = np.empty(u.grid.m)
    gamma = np.empty(u.grid.m)
    _face_weights(np.log(u.values), np.log(v.values), beta, gamma)
    return beta, gamma


def solve_dirichlet_frozen(
    coefficient: RadialProfile,
    data: RadialProfile,
    config: SolverConfig,
    bounds: tuple[float, float],
    boundary_value: float = 0.0,
    face_weights: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> RadialProfile:
    """One implicit step of p_s = Delta(a~ p) + div(x p)/(N-2) with frozen a~.

    Uses the same control volumes as the nonlinear solver. The drift face
    value of p is beta_i p_i + gamma_i p_{i+1}; by default beta = gamma = 1/2
    (central averages). With a~ the mean-value coefficient of two solutions
    and the weights of drift_face_weights, this step reproduces their
    nonlinear difference. The boundary node holds boundary_value.
    Sum_{i<M} V_i p_i does not increase when p >= 0 and the boundary value is
    zero.

    Args:
        coefficient (RadialProfile): Positive frozen coefficient a~.
        data (RadialProfile): Difference p at the start of the step.
        config (SolverConfig): dt and frame of the step.
        bounds (tuple[float, float]): (C1, C2) of the growth condition
            C1 (1 + r^2) <= a~ <= C2 (1 + r^2).
        boundary_value (float): Dirichlet value of p at R_max.
        face_weights (tuple[np.ndarray, np.ndarray] | None): Drift weights
            (beta, gamma), one entry per face.

    Returns:
        RadialProfile: p after one step (signed, no tail law).

    Raises:
        GridMismatchError: If coefficient and data live on different grids.
        CoefficientBoundError: If a~ leaves its growth bounds by more than 1e-8 relative.
        ValueError: If the face weights do not have one entry per face.
    """
    if not coefficient.grid.same_as(data.grid):
        raise GridMismatchError("Coefficient and data must share one grid.")
    c1, c2 = bounds
    grid = coefficient.grid
    growth = 1.0 + grid.nodes**2
    a = coefficient.values
    lower_gap = float(np.min(a / (c1 * growth))) - 1.0
    upper_gap = 1.0 - float(np.max(a / (c2 * growth)))
    if lower_gap < -COEFFICIENT_BOUND_RTOL or upper_gap < -COEFFICIENT_BOUND_RTOL:
        raise CoefficientBoundError(
            f"Coefficient violates C1(1+r^2) <= a <= C2(1+r^2) with C1={c1:g}, C2={c2:g} "
            f"(relative margins {lower_gap:.3e}, {upper_gap:.3e})."
        )

    geometry = _geometry(grid)
    theta = config.frame.drift
    dt = config.dt
    m = grid.m
    if face_weights is None:
        beta = gamma = np.full(m, 0.5)
    else:
        beta, gamma = (np.asarray(weights, dtype=np.float64) for weights in face_weights)
        if beta.shape != (m,) or gamma.shape != (m,):
            raise ValueError(f"Face weights need {m} entries each, got {beta.shape} and {gamma.shape}.")
    volumes = geometry.volumes[:m]
    cond = geometry.conductance
    drift = theta * geometry.face_power

    banded = np.zeros((3, m))
    # right faces i -> i+1 for i = 0..M-1, left faces for i >= 1
    banded[1] = volumes + dt * cond * a[:m] - dt * drift * beta
    banded[1, 1:] += dt * cond[:-1] * a[1:m] + dt * drift[:-1] * gamma[:-1]
    banded[0, 1:] = -dt * (cond[:-1] * a[1:m] + drift[:-1] * gamma[:-1])
    banded[2, :-1] = -dt * (cond[:-1] * a[: m - 1] - drift[:-1] * beta[:-1])

    rhs = volumes * data.values[:m]
    rhs[-1] += dt * (cond[-1] * a[m] + drift[-1] * gamma[-1]) * boundary_value
    solution = np.empty(m + 1)
    solution[:m] = solve_banded((1, 1), banded, rhs)
    solution[m] = boundary_value
    return RadialProfile(grid, solution)
