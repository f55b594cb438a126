"""Distances, potentials, mass matching and invariant checks for log-diffusion runs.

Monitors are built by the *_monitor factories and passed to solver.evolve.
Each one receives (previous state, accepted state, dt used) and returns the
diagnostics fields it measures. They work on the self-similar view of a state,
so physical-frame runs are rescaled node by node (no interpolation).

Classes:
    PotentialFlavor: Newtonian potential or Green potential of a ball
    SourceReconstruction: Piecewise-linear or cell-constant source for the potentials
    PotentialProfile: Radial potential with its flavor
    PairwiseL1Monitor: Lock-step companion evolution measuring the L1 distance between two runs
    ContractionReport, EnvelopeReport, GrowthConstantReport, L1BoundReport, LogGrowthFit

Functions:
    l1_distance, weighted_l1_distance: Distances between profiles
    match_k0: Barenblatt parameter with the same mass as the initial data (N = 3)
    richardson_levels_for: Grid coarsenings available for extrapolated integrals
    newtonian_potential_radial, green_potential_radial, fit_log_growth: Radial potentials
    mean_value_coefficient: (log u - log v)/(u - v)
    l1_monitor, pairwise_l1_monitor, weighted_l1_monitor, sup_monitor, sandwich_monitor,
    mass_monitor, aronson_benilan_monitor, coefficient_monitor: Monitor factories
    check_contraction, check_aronson_benilan, check_envelope, estimate_growth_constant,
    l1_bound_against_barenblatt, cross_validate_contraction: Invariant checks
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .barenblatt import (
    BarenblattSpec,
    barenblatt_profile,
    rescaled_barenblatt_profile,
    rescaled_barenblatt_value,
    weight_value,
)
from .diagnostics import DiagnosticsSeries, Monitor
from .errors import DivergentTailError, GridMismatchError, InvariantViolationError
from .grid import (
    MIN_NODES,
    RadialGrid,
    RadialProfile,
    ball_integral,
    gauss_legendre,
    integrate_difference,
)
from .solver import (
    EvolutionState,
    Scheme,
    SolverConfig,
    drift_face_weights,
    resolve_boundary,
    solve_dirichlet_frozen,
    step_to,
)
from .transform import FrameKind, to_selfsimilar

logger = logging.getLogger(__name__)

POTENTIAL_POINTS = 10
SANDWICH_TOLERANCE = 1e-6
CONTRACTION_RTOL = 1e-8
MEAN_VALUE_RTOL = 1e-12
CHECKPOINT_FLOOR = 1e-12
MASS_RICHARDSON_LEVELS = 2


class PotentialFlavor(StrEnum):
    NEWTONIAN = "newtonian"
    GREEN_BALL = "green_ball"


class SourceReconstruction(StrEnum):
    """How a nodal source is extended between the nodes for the potentials."""

    LINEAR = "linear"
    CELLS = "cells"


@dataclass(frozen=True, eq=False)
class PotentialProfile:
    """Radial potential on a grid.

    Attributes:
        profile (RadialProfile): Potential values at the grid nodes.
        flavor (PotentialFlavor): Newtonian potential Z or ball Green potential G~_R.
        radius (float | None): Ball radius R of a Green potential.
    """

    profile: RadialProfile
    flavor: PotentialFlavor
    radius: Optional[float] = None

    @property
    def grid(self) -> RadialGrid:
        return self.profile.grid

    @property
    def values(self) -> np.ndarray:
        return self.profile.values


def l1_distance(f: RadialProfile, g: RadialProfile) -> float:
    """Integral of |f - g| over R^N including the far field."""
    return integrate_difference(f, g, absolute=True)


def weighted_l1_distance(f: RadialProfile, g: RadialProfile, k2: float, dimension: int) -> float:
    """Integral of |f - g| B~_k2^alpha over R^N with alpha = (N-4)/2, N >= 5.

    Raises:
        ValueError: For N < 5 or a dimension differing from the grid's.
        DivergentTailError: If the weighted far-field integral diverges, as it
            does for two Barenblatt profiles with different k when N = 5.
    """
    if dimension < 5:
        raise ValueError(f"The weighted distance needs N >= 5, got N = {dimension}.")
    if f.grid.dimension != dimension:
        raise ValueError(f"Profiles live in dimension {f.grid.dimension}, not {dimension}.")
    alpha = (dimension - 4) / 2.0
    return integrate_difference(
        f,
        g,
        absolute=True,
        weight=lambda r: weight_value(r, alpha, k2, dimension),
        weight_decay=2.0 * alpha,
    )


def richardson_levels_for(grid: RadialGrid, most: int = MASS_RICHARDSON_LEVELS) -> int:
    """Number of grid coarsenings, at most `most`, that M = 2^levels * M' allows."""
    levels = 0
    m = grid.m
    while levels < most and m % 2 == 0 and m >= 4 * MIN_NODES:
        m //= 2
        levels += 1
    return levels


def match_k0(u0: RadialProfile, T: float, bracket: tuple[float, float]) -> float:
    """Parameter k0 with integral of (u0 - B_k0(., 0)) equal to zero, N = 3.

    The mass function k -> integral of (u0 - B_k(., 0)) increases with k, so
    the root is found by bisection inside the bracket. The interior integral
    is Richardson-extrapolated over up to MASS_RICHARDSON_LEVELS coarsenings
    of the grid, as many as M allows; the far field is exact for data whose
    tail law is a sum of Barenblatt tails.

    Args:
        u0 (RadialProfile): Initial data whose tail law is B_k(., 0)-like or a sum of such laws.
        T (float): Extinction time.
        bracket (tuple[float, float]): Interval of k values containing the root.

    Returns:
        float: k0.

    Raises:
        ValueError: If N != 3 or the bracket does not straddle a root.

    Examples:
        >>> match_k0(mean_of_b1_and_b4, 1.0, (1.0, 4.0))
        2.25...
    """
    n = u0.grid.dimension
    if n != 3:
        raise ValueError(f"Mass matching needs N = 3 for integrable differences, got N = {n}.")
    k_lo, k_hi = sorted(bracket)
    if not k_lo > 0.0:
        raise ValueError(f"Bracket must contain positive k values, got {bracket!r}.")

    levels = richardson_levels_for(u0.grid)

    def mass(k: float) -> float:
        reference = barenblatt_profile(BarenblattSpec(k, T, n), 0.0, u0.grid)
        return integrate_difference(u0, reference, richardson_levels=levels)

    f_lo, f_hi = mass(k_lo), mass(k_hi)
    if f_lo == 0.0:
        return k_lo
    if f_hi == 0.0:
        return k_hi
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise ValueError(
            f"Bracket ({k_lo:g}, {k_hi:g}) does not straddle the mass root "
            f"(mass differences {f_lo:.6g} and {f_hi:.6g})."
        )
    k0 = bisect(mass, k_lo, k_hi, xtol=1e-14, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    logger.info("Matched k0 = %.12g (bracket %g..%g)", k0, k_lo, k_hi)
    return float(k0)


def _radial_moments(grid: RadialGrid, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Enclosed moments and per-cell potential increments of a piecewise-linear source.

    Returns mu at the nodes, mu(r) = int_0^r f s^(N-1) ds, and for every cell
    the integral of rho^(1-N) mu(rho) over the cell, by nested Gauss-Legendre.
    """
    n = grid.dimension
    xi_out, w_out = gauss_legendre(POTENTIAL_POINTS)
    xi_in, w_in = gauss_legendre(max(POTENTIAL_POINTS, n // 2 + 2))
    left = grid.nodes[:-1]
    width = grid.spacings
    slope = (values[1:] - values[:-1]) / width

    def linear(points: np.ndarray, index: tuple) -> np.ndarray:
        return values[:-1][index] + slope[index] * (points - left[index])

    # full-cell moments
    points = left[:, None] + 0.5 * width[:, None] * (xi_in + 1.0)
    increments = np.sum(
        0.5 * width[:, None] * w_in * linear(points, (slice(None), None)) * points ** (n - 1),
        axis=1,
    )
    mu = np.concatenate(([0.0], np.cumsum(increments)))

    # moments up to each outer quadrature point
    outer = left[:, None] + 0.5 * width[:, None] * (xi_out + 1.0)
    half = 0.5 * (outer - left[:, None])
    inner = left[:, None, None] + half[:, :, None] * (xi_in + 1.0)
    partial = np.sum(
        half[:, :, None] * w_in * linear(inner, (slice(None), None, None)) * inner ** (n - 1),
        axis=2,
    )
    mu_outer = mu[:-1, None] + partial
    flux = np.sum(0.5 * width[:, None] * w_out * outer ** (1 - n) * mu_outer, axis=1)
    return mu, flux


def _cell_moments(grid: RadialGrid, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Enclosed moments and per-cell potential increments of a piecewise-constant source.

    Node i carries its value on its control volume, the shell between the
    neighbouring faces. Every grid cell splits at its face into two pieces
    with a constant source, on which both integrals are closed-form.
    Returns the same quantities as _radial_moments.
    """
    n = grid.dimension
    points = np.empty(2 * grid.m + 1)
    points[0::2] = grid.nodes
    points[1::2] = grid.faces
    left, right = points[:-1], points[1:]
    # piece j lies in the control volume of node (j + 1) // 2
    source = values[(np.arange(2 * grid.m) + 1) // 2]
    increments = source * (right**n - left**n) / n
    mu = np.concatenate(([0.0], np.cumsum(increments)))
    offset = mu[:-1] - source * left**n / n
    left_power = np.zeros_like(left)
    np.power(left, 2 - n, out=left_power, where=left > 0.0)
    constant_part = np.where(offset != 0.0, offset * (left_power - right ** (2 - n)) / (n - 2), 0.0)
    pieces = constant_part + source * (right**2 - left**2) / (2 * n)
    return mu[0::2], pieces[0::2] + pieces[1::2]


def _moments(
    grid: RadialGrid, values: np.ndarray, reconstruction: SourceReconstruction
) -> tuple[np.ndarray, np.ndarray]:
    if SourceReconstruction(reconstruction) is SourceReconstruction.CELLS:
        return _cell_moments(grid, values)
    return _radial_moments(grid, values)


def newtonian_potential_radial(
    f: RadialProfile, reconstruction: SourceReconstruction = SourceReconstruction.LINEAR
) -> PotentialProfile:
    """Newtonian potential Z of |f|, with Delta Z = -|f|.

    Z(r) is the integral from r to infinity of rho^(1-N) mu(rho), with mu the
    enclosed moment of |f|; beyond R_max the source vanishes and Z decays like
    mu(R_max) r^(2-N)/(N-2). The source between the nodes is the
    piecewise-linear interpolant, or with CELLS the constant nodal value on
    each control volume; the latter is exact for indicators of balls whose
    radius is a face.

    Raises:
        DivergentTailError: If f carries a non-zero tail law (infinite mass).

    Examples:
        >>> newtonian_potential_radial(hat).values[0]  # (1 - r)_+ in R^3
        0.16666666...
    """
    if f.tail is not None and f.tail.c > 0.0:
        raise DivergentTailError("The source has infinite mass; its Newtonian potential diverges.")
    grid = f.grid
    n = grid.dimension
    mu, flux = _moments(grid, np.abs(f.values), reconstruction)
    far_field = mu[-1] * grid.r_max ** (2 - n) / (n - 2)
    values = np.empty(grid.nodes.size)
    values[-1] = far_field
    values[:-1] = far_field + np.cumsum(flux[::-1])[::-1]
    return PotentialProfile(RadialProfile(grid, values), PotentialFlavor.NEWTONIAN)


def green_potential_radial(
    psi: RadialProfile,
    radius: float,
    reconstruction: SourceReconstruction = SourceReconstruction.LINEAR,
) -> PotentialProfile:
    """Radial Green potential G~_R(psi)(r) = int_0^r rho^(1-N) mu(rho) d rho on [0, R].

    The result lives on the nodes r <= radius, vanishes at the origin and is
    non-decreasing for psi >= 0. The source is reconstructed between the
    nodes as for newtonian_potential_radial.

    Raises:
        ValueError: If radius exceeds the grid coverage.
    """
    grid = psi.grid
    if not 0.0 < radius <= grid.r_max * (1.0 + 1e-12):
        raise ValueError(f"Ball radius {radius:g} exceeds grid coverage R_max = {grid.r_max:g}.")
    _, flux = _moments(grid, psi.values, reconstruction)
    values = np.concatenate(([0.0], np.cumsum(flux)))
    ball = grid.truncated(radius)
    return PotentialProfile(
        RadialProfile(ball, values[: ball.nodes.size]), PotentialFlavor.GREEN_BALL, radius
    )


@dataclass(frozen=True)
class LogGrowthFit:
    """Constants with G(r) >= c2 log r - c3 on the fitted range."""

    c2: float
    c3: float

    @property
    def grows(self) -> bool:
        return self.c2 > 0.0


def fit_log_growth(potential: PotentialProfile, r_min: float) -> LogGrowthFit:
    """Least-squares slope c2 of G against log r for r >= r_min, and the smallest valid c3."""
    r = potential.grid.nodes
    mask = r >= max(r_min, np.finfo(float).tiny)
    if np.count_nonzero(mask) < 2:
        raise ValueError(f"Need at least two nodes with r >= {r_min:g} to fit logarithmic growth.")
    x = np.log(r[mask])
    y = potential.values[mask]
    centred = x - x.mean()
    c2 = max(float(np.dot(centred, y - y.mean()) / np.dot(centred, centred)), 0.0)
    c3 = float(np.max(c2 * x - y))
    return LogGrowthFit(c2, c3)


def mean_value_coefficient(u: RadialProfile, v: RadialProfile) -> RadialProfile:
    """Nodewise (log u - log v)/(u - v), the integral of 1/(theta u + (1-theta) v).

    Where |u - v| < 1e-12 u the limit 1/u is returned.

    Raises:
        GridMismatchError: If the profiles live on different grids.
        ValueError: If either profile has a non-positive node.

    Examples:
        >>> mean_value_coefficient(two_v, v).values  # log(2) / v
    """
    if not u.grid.same_as(v.grid):
        raise GridMismatchError("Mean-value coefficient needs profiles on one grid.")
    if np.any(u.values <= 0.0) or np.any(v.values <= 0.0):
        raise ValueError("Mean-value coefficient needs strictly positive profiles.")
    diff = u.values - v.values
    close = np.abs(diff) < MEAN_VALUE_RTOL * u.values
    ratio = np.divide(
        np.log(u.values) - np.log(v.values), diff, out=np.zeros_like(diff), where=~close
    )
    return RadialProfile(u.grid, np.where(close, 1.0 / u.values, ratio))


def selfsimilar_view(state: EvolutionState) -> RadialProfile:
    """The state's profile in self-similar variables (exact node scaling for physical frames)."""
    if state.frame.is_physical:
        return to_selfsimilar(state.profile, state.clock, state.frame)[0]
    return state.profile


def l1_monitor(k_ref: float) -> Monitor:
    """Monitor l1_dist = ||u~ - B~_k_ref||_L1."""

    def monitor(previous: EvolutionState, current: EvolutionState, dt_used: float) -> dict[str, float]:
        view = selfsimilar_view(current)
        return {"l1_dist": l1_distance(view, rescaled_barenblatt_profile(k_ref, view.grid))}

    return monitor


class PairwiseL1Monitor:
    """Companion evolution advanced in lock-step with the monitored run.

    After each accepted step of the main run the companion is stepped to the
    same clock and l1_dist reports the L1 distance between the two.

    Attributes:
        state (EvolutionState): Current companion state.
    """

    def __init__(self, companion: EvolutionState, config: SolverConfig):
        self.config = resolve_boundary(config, companion)
        self.state = companion

    def __call__(
        self, previous: EvolutionState, current: EvolutionState, dt_used: float
    ) -> dict[str, float]:
        if not math.isclose(self.state.clock, previous.clock, rel_tol=0.0, abs_tol=1e-12):
            raise ValueError(
                f"Companion clock {self.state.clock!r} is out of step with {previous.clock!r}."
            )
        self.state = step_to(self.state, self.config, current.clock)
        return {"l1_dist": l1_distance(selfsimilar_view(current), selfsimilar_view(self.state))}


def pairwise_l1_monitor(companion: EvolutionState, config: SolverConfig) -> PairwiseL1Monitor:
    return PairwiseL1Monitor(companion, config)


def weighted_l1_monitor(k_ref: float, k2: float) -> Monitor:
    """Monitor weighted_l1_dist against B~_k_ref with weight B~_k2^((N-4)/2)."""

    def monitor(previous: EvolutionState, current: EvolutionState, dt_used: float) -> dict[str, float]:
        view = selfsimilar_view(current)
        reference = rescaled_barenblatt_profile(k_ref, view.grid)
        return {
            "weighted_l1_dist": weighted_l1_distance(view, reference, k2, view.grid.dimension)
        }

    return monitor


def sup_monitor(k_ref: float) -> Monitor:
    """Monitor sup_dist = max over nodes of |u~ - B~_k_ref|."""

    def monitor(previous: EvolutionState, current: EvolutionState, dt_used: float) -> dict[str, float]:
        view = selfsimilar_view(current)
        reference = rescaled_barenblatt_value(view.grid.nodes, k_ref, view.grid.dimension)
        return {"sup_dist": float(np.max(np.abs(view.values - reference)))}

    return monitor


def sandwich_monitor(k1: float, k2: float, tolerance: float = SANDWICH_TOLERANCE) -> Monitor:
    """Monitor the margins of B~_k1 <= u~ <= B~_k2.

    Raises InvariantViolationError from the monitor when a margin drops below
    -tolerance * sup B~_k2.
    """
    if not k1 > k2 > 0.0:
        raise ValueError(f"Sandwich needs k1 > k2 > 0, got k1={k1!r}, k2={k2!r}.")

    def monitor(previous: EvolutionState, current: EvolutionState, dt_used: float) -> dict[str, float]:
        view = selfsimilar_view(current)
        n = view.grid.dimension
        low = float(np.min(view.values - rescaled_barenblatt_value(view.grid.nodes, k1, n)))
        high = float(np.min(rescaled_barenblatt_value(view.grid.nodes, k2, n) - view.values))
        limit = -tolerance * 2.0 * (n - 2) / k2
        if low < limit or high < limit:
            raise InvariantViolationError(
                f"Sandwich violated at clock {current.clock:.6g}: margins {low:.3e} (below B~_{k1:g}) "
                f"and {high:.3e} (above B~_{k2:g}), limit {limit:.3e}."
            )
        return {"sandwich_margin_low": low, "sandwich_margin_high": high}

    return monitor


def mass_monitor(k_ref: float) -> Monitor:
    """Monitor mass_mismatch = integral of (u~ - B~_k_ref), conserved for N = 3."""

    def monitor(previous: EvolutionState, current: EvolutionState, dt_used: float) -> dict[str, float]:
        view = selfsimilar_view(current)
        return {"mass_mismatch": integrate_difference(view, rescaled_barenblatt_profile(k_ref, view.grid))}

    return monitor


def aronson_benilan_monitor() -> Monitor:
    """Monitor ab_violation of u_t <= u/t along a physical-frame run."""

    def monitor(previous: EvolutionState, current: EvolutionState, dt_used: float) -> dict[str, float]:
        if previous.clock <= 0.0:
            # u_t <= u/t holds trivially on the first step from t = 0
            return {"ab_violation": 0.0}
        return {"ab_violation": check_aronson_benilan(previous, current)}

    return monitor


def coefficient_monitor(pair: PairwiseL1Monitor, k1: float, k2: float) -> Monitor:
    """Monitor coeff_bound_margin of (k2 + r^2)/(2(N-2)) <= a~ <= (k1 + r^2)/(2(N-2)).

    a~ is the mean-value coefficient of the run and the companion of pair,
    which must come earlier in the monitor list. The margin is relative to
    the lower bound; negative values mean a violation.
    """

    def monitor(previous: EvolutionState, current: EvolutionState, dt_used: float) -> dict[str, float]:
        u = selfsimilar_view(current)
        v = selfsimilar_view(pair.state)
        coefficient = mean_value_coefficient(u, v).values
        n = u.grid.dimension
        r2 = u.grid.nodes**2
        lower = (k2 + r2) / (2.0 * (n - 2))
        upper = (k1 + r2) / (2.0 * (n - 2))
        margin = np.minimum(coefficient - lower, upper - coefficient) / lower
        return {"coeff_bound_margin": float(np.min(margin))}

    return monitor


@dataclass
class ContractionReport:
    """Outcome of check_contraction.

    Attributes:
        passed (bool): Whether every asserted property held.
        mode (str): "plain_l1" or "weighted_l1".
        failures (list[str]): Human-readable description of each failure.
        checkpoint_ratios (dict[float, float]): d(s + 1)/d(s) at integer clocks s.
        fitted_constant (float | None): Smallest C with d(s) <= d(s0) + C (s - s0) (weighted mode).
        decreasing_steps (int): Steps whose distance decreased.
        steps (int): Steps examined.
    """

    passed: bool
    mode: str
    failures: list[str] = field(default_factory=list)
    checkpoint_ratios: dict[float, float] = field(default_factory=dict)
    fitted_constant: Optional[float] = None
    decreasing_steps: int = 0
    steps: int = 0

    @property
    def first_failure(self) -> Optional[str]:
        return self.failures[0] if self.failures else None


def _checkpoint_ratios(clocks: np.ndarray, distances: np.ndarray) -> tuple[dict[float, float], list[str]]:
    ratios: dict[float, float] = {}
    failures: list[str] = []
    rounded = np.round(clocks)
    on_integer = np.abs(clocks - rounded) <= 1e-9
    by_clock = {float(rounded[i]): float(distances[i]) for i in np.flatnonzero(on_integer)}
    for s, d in sorted(by_clock.items()):
        following = by_clock.get(s + 1.0)
        if following is None or d <= CHECKPOINT_FLOOR:
            continue
        ratios[s] = following / d
        if ratios[s] >= 1.0:
            failures.append(
                f"no strict decrease between checkpoints s = {s:g} and {s + 1:g} "
                f"(ratio {ratios[s]:.12g})"
            )
    return ratios, failures


def check_contraction(
    series: DiagnosticsSeries,
    mode: str = "plain_l1",
    initial: Optional[tuple[float, float]] = None,
) -> ContractionReport:
    """Check L1 contraction (plain) or the weighted growth bound of a run.

    Plain mode asserts d_i <= d_{i-1} (1 + 1e-8) at every step and a strict
    decrease between integer-clock checkpoints one unit apart. Weighted mode
    fits the smallest C with d(s) <= d(s0) + C (s - s0), reports the per-step
    decrease and asserts the strict decrease between checkpoints.

    Args:
        series (DiagnosticsSeries): Run diagnostics with the l1_dist
            (plain) or weighted_l1_dist (weighted) column.
        mode (str): "plain_l1" or "weighted_l1".
        initial (tuple[float, float] | None): (clock, distance) before the first step.

    Raises:
        ValueError: For an empty series, an unknown mode or a missing column.
    """
    if mode not in ("plain_l1", "weighted_l1"):
        raise ValueError(f"Unknown contraction mode {mode!r}; use 'plain_l1' or 'weighted_l1'.")
    if len(series) == 0:
        raise ValueError("Cannot check contraction of an empty diagnostics series.")
    column = "l1_dist" if mode == "plain_l1" else "weighted_l1_dist"
    if not series.has_column(column):
        raise ValueError(f"Diagnostics series has no complete {column} column.")

    clocks = series.clocks
    distances = series.column(column)
    if initial is not None:
        clocks = np.concatenate(([initial[0]], clocks))
        distances = np.concatenate(([initial[1]], distances))

    report = ContractionReport(passed=True, mode=mode, steps=len(distances) - 1)
    for i in range(1, len(distances)):
        if distances[i] < distances[i - 1]:
            report.decreasing_steps += 1
        elif mode == "plain_l1" and distances[i] > distances[i - 1] * (1.0 + CONTRACTION_RTOL):
            report.failures.append(
                f"step {i} at clock {clocks[i]:.6g}: {column} rose from "
                f"{distances[i - 1]:.12g} to {distances[i]:.12g}"
            )
    if mode == "weighted_l1" and len(distances) > 1:
        slopes = (distances[1:] - distances[0]) / (clocks[1:] - clocks[0])
        report.fitted_constant = max(float(np.max(slopes)), 0.0)

    report.checkpoint_ratios, checkpoint_failures = _checkpoint_ratios(clocks, distances)
    report.failures.extend(checkpoint_failures)
    report.passed = not report.failures
    return report


def check_aronson_benilan(previous: EvolutionState, current: EvolutionState) -> float:
    """Violation max(0, max_i (u_next - u_prev)/dt - u_next/t_next) of u_t <= u/t.

    Raises:
        ValueError: If either state is not in the physical frame, the clocks are
            not positive and increasing, or the grids differ.
    """
    if previous.frame.kind is not FrameKind.PHYSICAL or current.frame.kind is not FrameKind.PHYSICAL:
        raise ValueError("The Aronson-Benilan check applies to physical-frame states only.")
    if not 0.0 < previous.clock < current.clock:
        raise ValueError(
            f"Aronson-Benilan check needs 0 < t_prev < t_next, got {previous.clock!r}, {current.clock!r}."
        )
    if not previous.profile.grid.same_as(current.profile.grid):
        raise GridMismatchError("States live on different grids.")
    dt = current.clock - previous.clock
    u_prev = previous.profile.values
    u_next = current.profile.values
    excess = (u_next - u_prev) / dt - u_next / current.clock
    return max(float(np.max(excess)), 0.0)


@dataclass
class EnvelopeReport:
    """Outcome of check_envelope.

    The bounds log c1 - c3 x <= log m(s), log M(s) <= log c2 + c3 x hold on
    every profile, with x = e^s ||f||_L1 and m, M the extreme values of
    u~ (1 + r^2) for r >= r0.
    """

    passed: bool
    bounded: bool
    clocks: list[float]
    log_min: list[float]
    log_max: list[float]
    c1: float = math.nan
    c2: float = math.nan
    c3: float = math.nan


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    centred = x - x.mean()
    denominator = float(np.dot(centred, centred))
    if denominator == 0.0:
        return 0.0
    return float(np.dot(centred, y - y.mean())) / denominator


def check_envelope(profiles: Mapping[float, RadialProfile], r0: float, f_l1: float) -> EnvelopeReport:
    """Fit exponential-in-e^s envelopes to u~ (1 + r^2) on r >= r0.

    Args:
        profiles (Mapping[float, RadialProfile]): Self-similar profiles keyed by clock s.
        r0 (float): Inner radius of the examined region.
        f_l1 (float): L1 norm of the perturbation f of the initial data.

    Returns:
        EnvelopeReport: Constants c1, c2 and c3 >= 0; bounded is False when a
            profile vanishes somewhere on r >= r0.
    """
    clocks = sorted(profiles)
    log_min: list[float] = []
    log_max: list[float] = []
    bounded = True
    for s in clocks:
        profile = profiles[s]
        mask = profile.grid.nodes >= r0
        scaled = profile.values[mask] * (1.0 + profile.grid.nodes[mask] ** 2)
        if scaled.size == 0:
            raise ValueError(f"No nodes with r >= {r0:g}.")
        low, high = float(np.min(scaled)), float(np.max(scaled))
        if low <= 0.0:
            bounded = False
            log_min.append(-math.inf)
        else:
            log_min.append(math.log(low))
        log_max.append(math.log(high) if high > 0.0 else -math.inf)
    report = EnvelopeReport(passed=bounded, bounded=bounded, clocks=clocks, log_min=log_min, log_max=log_max)
    if not bounded or not clocks:
        return report

    x = np.exp(np.array(clocks)) * f_l1
    lo, hi = np.array(log_min), np.array(log_max)
    c3 = max(0.0, _slope(x, hi), -_slope(x, lo))
    report.c3 = c3
    report.c2 = math.exp(float(np.max(hi - c3 * x)))
    report.c1 = math.exp(float(np.min(lo + c3 * x)))
    return report


@dataclass
class GrowthConstantReport:
    """Smallest C with sqrt(int_{B_R} w(t)) <= sqrt(int_{B_2R} w(0)) + C R^((N-2)/2) sqrt(T).

    w is (u - v)_+ for the positive-part variant and |u - v| otherwise.
    """

    constant: float
    variant: str
    radii: list[float]
    samples: int


def estimate_growth_constant(
    u_series: Mapping[float, RadialProfile],
    v_series: Mapping[float, RadialProfile],
    radii: Sequence[float],
    T: float,
    positive_part: bool = True,
    k: Optional[float] = None,
    delta: Optional[float] = None,
) -> GrowthConstantReport:
    """Fit the constant of the local L1 growth bound between two physical solutions.

    Args:
        u_series, v_series (Mapping[float, RadialProfile]): Physical profiles keyed by time;
            the earliest time is the initial data.
        radii (Sequence[float]): Ball radii R, each with 2R <= R_max.
        T (float): Extinction time.
        positive_part (bool): Use (u - v)_+ (True) or |u - v| (False).
        k, delta (float | None): When both are given, only radii
            R >= sqrt(k) delta^(-1/(N-2)) are used.

    Raises:
        ValueError: If times differ between the series, no radius qualifies,
            or a radius exceeds half the grid coverage.
    """
    if sorted(u_series) != sorted(v_series):
        raise ValueError("Both series must be sampled at the same times.")
    if not u_series:
        raise ValueError("Empty solution series.")
    times = sorted(u_series)
    t0 = times[0]
    grid = u_series[t0].grid
    n = grid.dimension
    selected = [float(R) for R in radii]
    if k is not None and delta is not None:
        r_min = math.sqrt(k) * delta ** (-1.0 / (n - 2))
        selected = [R for R in selected if R >= r_min]
    if not selected:
        raise ValueError("No ball radius satisfies the validity condition of the growth bound.")
    for R in selected:
        if 2.0 * R > grid.r_max * (1.0 + 1e-12):
            raise ValueError(f"Radius {R:g} needs 2R <= R_max = {grid.r_max:g}.")

    def gap(t: float) -> RadialProfile:
        u, v = u_series[t], v_series[t]
        if not u.grid.same_as(v.grid):
            raise GridMismatchError(f"Series live on different grids at t = {t:g}.")
        diff = u.values - v.values
        return RadialProfile(u.grid, np.maximum(diff, 0.0) if positive_part else np.abs(diff))

    initial = gap(t0)
    constant = 0.0
    samples = 0
    for R in selected:
        rhs = math.sqrt(max(ball_integral(initial, 2.0 * R), 0.0))
        for t in times[1:]:
            lhs = math.sqrt(max(ball_integral(gap(t), R), 0.0))
            constant = max(constant, (lhs - rhs) / (R ** ((n - 2) / 2.0) * math.sqrt(T)))
            samples += 1
    return GrowthConstantReport(
        constant, "positive_part" if positive_part else "absolute", selected, samples
    )


@dataclass
class L1BoundReport:
    """Outcome of l1_bound_against_barenblatt: distances keyed by time and the bound."""

    passed: bool
    bound: float
    distances: dict[float, float]


def l1_bound_against_barenblatt(
    snapshots: Mapping[float, RadialProfile],
    spec: BarenblattSpec,
    f_l1: float,
    rtol: float = 1e-2,
) -> L1BoundReport:
    """Check ||u(t) - B_k0(t)||_L1 <= ||f||_L1 along a physical run from B_k0 + f."""
    distances: dict[float, float] = {}
    for t, u in sorted(snapshots.items()):
        if t >= spec.T:
            continue
        distances[t] = l1_distance(u, barenblatt_profile(spec, t, u.grid))
    passed = all(d <= f_l1 * (1.0 + rtol) for d in distances.values())
    return L1BoundReport(passed, f_l1, distances)


def cross_validate_contraction(
    u_state: EvolutionState,
    v_state: EvolutionState,
    config: SolverConfig,
    bounds: tuple[float, float],
) -> float:
    """Relative sup gap between the nonlinear and the linearized difference after one step.

    Both states take one backward-Euler step; their difference is compared with
    one solve_dirichlet_frozen step of the initial difference, frozen at the
    mean-value coefficient and the drift face weights of the new states. The
    two agree up to the Newton tolerance.
    """
    config = replace(config, scheme=Scheme.BACKWARD_EULER)
    target = u_state.clock + config.dt
    u_next = step_to(u_state, config, target)
    v_next = step_to(v_state, config, target)
    coefficient = mean_value_coefficient(u_next.profile, v_next.profile)
    p_start = RadialProfile(u_state.profile.grid, u_state.profile.values - v_state.profile.values)
    p_linear = solve_dirichlet_frozen(
        coefficient,
        p_start,
        config,
        bounds,
        boundary_value=float(u_next.profile.values[-1] - v_next.profile.values[-1]),
        face_weights=drift_face_weights(u_next.profile, v_next.profile),
    )
    p_nonlinear = u_next.profile.values - v_next.profile.values
    scale = float(np.max(np.abs(p_nonlinear)))
    if scale == 0.0:
        return float(np.max(np.abs(p_linear.values)))
    return float(np.max(np.abs(p_linear.values - p_nonlinear))) / scale
