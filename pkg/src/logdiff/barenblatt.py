"""Closed-form Barenblatt solutions of u_t = Delta log u and identities they satisfy.

The Barenblatt solution with parameters k > 0 and extinction time T is

    B_k(x, t) = 2(N-2) (T-t)_+^(N/(N-2)) / (k + (T-t)_+^(2/(N-2)) |x|^2),

and its rescaled form B~_k(y) = 2(N-2) / (k + |y|^2) is a stationary solution of
u~_s = Delta log u~ + div(y u~) / (N-2). Larger k gives a smaller profile, so
B_k1 <= B_k2 whenever k1 > k2.

Classes:
    BarenblattSpec: Parameters (k, T, N) of one Barenblatt solution

Functions:
    barenblatt_value: B_k(r, t)
    barenblatt_tail: Far-field law of B_k(., t)
    barenblatt_profile: B_k(., t) sampled on a grid, with its tail law
    rescaled_barenblatt_value: B~_k(r)
    rescaled_barenblatt_profile: B~_k sampled on a grid, with its tail law
    rescale_identity_check: Sup error of the rescaling identity B_k -> B~_k
    barenblatt_mass_difference: Closed-form integral of B_a - B_b in R^3
    coefficient_growth_bounds: Quadratic-growth constants of the mean-value coefficient
    weight_value: B~_k2^alpha
    weight_gradient: d/dr B~_k2^alpha
    laplacian_weight_identity: Closed form of Delta B~^alpha for alpha = (N-4)/2
    drift_diffusion_operator: Drift-diffusion operator applied to B~^alpha
    drift_diffusion_bound: Closed form of the same operator
    residual_rescaled_pde: Discrete residual of the rescaled equation
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import (
    MIN_DIMENSION,
    RadialGrid,
    RadialProfile,
    TailLaw,
    radial_gradient,
    radial_laplacian,
)
from .transform import Frame, FrameKind, to_selfsimilar

WEIGHT_MIN_DIMENSION = 5


@dataclass(frozen=True)
class BarenblattSpec:
    """Parameters of one Barenblatt solution.

    Attributes:
        k (float): Profile parameter k > 0.
        T (float): Extinction time T > 0.
        dimension (int): Space dimension N >= 3.

    Examples:
        >>> barenblatt_value(0.0, 0.0, BarenblattSpec(k=1.0, T=1.0, dimension=3))
        2.0
    """

    k: float
    T: float = 1.0
    dimension: int = 3

    def __post_init__(self):
        if not math.isfinite(self.k) or self.k <= 0.0:
            raise ValueError(f"k must be positive and finite, got {self.k!r}.")
        if not math.isfinite(self.T) or self.T <= 0.0:
            raise ValueError(f"T must be positive and finite, got {self.T!r}.")
        if isinstance(self.dimension, bool) or int(self.dimension) != self.dimension:
            raise ValueError(f"Dimension must be an integer, got {self.dimension!r}.")
        if self.dimension < MIN_DIMENSION:
            raise ValueError(f"Dimension must be at least {MIN_DIMENSION}, got {self.dimension}.")


def _log_gap(t: float, T: float) -> float | None:
    """log(T - t) for t < T, None once the solution has vanished."""
    gap = T - t
    return math.log(gap) if gap > 0.0 else None


def barenblatt_value(r: np.ndarray | float, t: float, spec: BarenblattSpec) -> np.ndarray | float:
    """Evaluate B_k(r, t); zero for t >= T.

    Examples:
        >>> barenblatt_value(1.0, 0.0, BarenblattSpec(k=1.0, T=1.0, dimension=5))
        3.0
    """
    n = spec.dimension
    log_gap = _log_gap(t, spec.T)
    if log_gap is None:
        return np.zeros_like(np.asarray(r, dtype=np.float64))[()]
    scale = math.exp(log_gap / (n - 2))
    amplitude = math.exp(n * log_gap / (n - 2))
    return 2.0 * (n - 2) * amplitude / (spec.k + scale**2 * np.square(r))


def barenblatt_tail(spec: BarenblattSpec, t: float) -> TailLaw:
    """B_k(r, t) = c / (k' + r^2) with c = 2(N-2)(T-t) and k' = k (T-t)^(-2/(N-2))."""
    n = spec.dimension
    log_gap = _log_gap(t, spec.T)
    if log_gap is None:
        raise ValueError(f"B_k has vanished at t = {t!r} >= T = {spec.T!r}; no tail law.")
    return TailLaw(2.0 * (n - 2) * math.exp(log_gap), spec.k * math.exp(-2.0 * log_gap / (n - 2)))


def barenblatt_profile(spec: BarenblattSpec, t: float, grid: RadialGrid) -> RadialProfile:
    """B_k(., t) on a grid; the zero profile without tail once t >= T."""
    if grid.dimension != spec.dimension:
        raise ValueError(
            f"Grid dimension {grid.dimension} differs from Barenblatt dimension {spec.dimension}."
        )
    values = barenblatt_value(grid.nodes, t, spec)
    if _log_gap(t, spec.T) is None:
        return RadialProfile(grid, values)
    return RadialProfile(grid, values, barenblatt_tail(spec, t))


def rescaled_barenblatt_value(r: np.ndarray | float, k: float, dimension: int) -> np.ndarray | float:
    """Evaluate B~_k(r) = 2(N-2) / (k + r^2).

    Examples:
        >>> rescaled_barenblatt_value(0.0, 2.0, 3)
        1.0
    """
    return 2.0 * (dimension - 2) / (k + np.square(r))


def rescaled_barenblatt_profile(k: float, grid: RadialGrid) -> RadialProfile:
    n = grid.dimension
    return RadialProfile(
        grid, rescaled_barenblatt_value(grid.nodes, k, n), TailLaw(2.0 * (n - 2), k)
    )


def rescale_identity_check(spec: BarenblattSpec, t: float, grid: RadialGrid) -> float:
    """Sup distance between the rescaled sample of B_k(., t) and B~_k.

    B_k is sampled at the physical radii that map onto the nodes of grid, so
    no interpolation enters and the result measures pure floating-point error.

    Raises:
        ValueError: If t >= T.
    """
    frame = Frame(FrameKind.PHYSICAL, spec.T, spec.dimension)
    physical_grid = grid.scaled(1.0 / frame.scale(t))
    u = barenblatt_profile(spec, t, physical_grid)
    u_tilde, _ = to_selfsimilar(u, t, frame)
    exact = rescaled_barenblatt_value(u_tilde.grid.nodes, spec.k, spec.dimension)
    return float(np.max(np.abs(u_tilde.values - exact)))


def barenblatt_mass_difference(a: float, b: float, dimension: int = 3) -> float:
    """Closed form of the integral of B_a - B_b over R^3: 4 pi^2 (sqrt(b) - sqrt(a)).

    The value is the same for B_k(., t) at every t < T and for B~_k.

    Raises:
        ValueError: Unless dimension == 3 (the difference is not integrable for N >= 4).
    """
    if dimension != 3:
        raise ValueError(f"Barenblatt differences are integrable only for N = 3, got N = {dimension}.")
    return 4.0 * math.pi**2 * (math.sqrt(b) - math.sqrt(a))


def coefficient_growth_bounds(k1: float, k2: float, dimension: int) -> tuple[float, float]:
    """Constants (C1, C2) with C1 (1+r^2) <= a~ <= C2 (1+r^2) for B~_k1 <= u~, v~ <= B~_k2.

    The mean-value coefficient of two sandwiched profiles lies between
    (k2 + r^2)/(2(N-2)) and (k1 + r^2)/(2(N-2)).
    """
    if not k1 > k2 > 0.0:
        raise ValueError(f"Sandwich needs k1 > k2 > 0, got k1={k1!r}, k2={k2!r}.")
    scale = 2.0 * (dimension - 2)
    return min(k2, 1.0) / scale, max(k1, 1.0) / scale


def _require_weight_dimension(dimension: int) -> None:
    if dimension < WEIGHT_MIN_DIMENSION:
        raise ValueError(
            f"The weight B~^alpha with alpha = (N-4)/2 needs N >= {WEIGHT_MIN_DIMENSION}, got N = {dimension}."
        )


def weight_value(
    r: np.ndarray | float, alpha: float, k2: float, dimension: int
) -> np.ndarray | float:
    """Weight B~_k2(r)^alpha = (2(N-2)/(k2 + r^2))^alpha.

    Examples:
        >>> weight_value(3.0, 1.0, 1.0, 5)
        0.6
    """
    return rescaled_barenblatt_value(r, k2, dimension) ** alpha


def weight_gradient(
    r: np.ndarray | float, alpha: float, k2: float, dimension: int
) -> np.ndarray | float:
    return -2.0 * alpha * r / (k2 + np.square(r)) * weight_value(r, alpha, k2, dimension)


def laplacian_weight_identity(r: np.ndarray | float, k2: float, dimension: int) -> np.ndarray | float:
    """Delta B~^alpha = -(N-4)(2r^2 + k2 N)/(k2 + r^2)^2 B~^alpha, alpha = (N-4)/2.

    Strictly negative for every r.

    Raises:
        ValueError: For N <= 4.
    """
    _require_weight_dimension(dimension)
    n = dimension
    r2 = np.square(r)
    alpha = (n - 4) / 2.0
    return -(n - 4) * (2.0 * r2 + k2 * n) / (k2 + r2) ** 2 * weight_value(r, alpha, k2, n)


def drift_diffusion_operator(r: np.ndarray | float, k2: float, dimension: int) -> np.ndarray | float:
    """((k2 + r^2)/(2(N-2))) Delta B~^alpha - r d_r B~^alpha / (N-2), assembled term by term."""
    _require_weight_dimension(dimension)
    n = dimension
    alpha = (n - 4) / 2.0
    diffusion = (k2 + np.square(r)) / (2.0 * (n - 2)) * laplacian_weight_identity(r, k2, n)
    drift = np.asarray(r) * weight_gradient(r, alpha, k2, n) / (n - 2)
    return diffusion - drift


def drift_diffusion_bound(r: np.ndarray | float, k2: float, dimension: int) -> np.ndarray | float:
    """Closed form -k2 (N-4) N / (2(N-2)(k2 + r^2)) B~^alpha of drift_diffusion_operator.

    Examples:
        >>> drift_diffusion_bound(0.0, 1.0, 5)  # -(5/6) sqrt(6)
        -2.041241452319315
    """
    _require_weight_dimension(dimension)
    n = dimension
    alpha = (n - 4) / 2.0
    return (
        -k2 * (n - 4) * n / (2.0 * (n - 2) * (k2 + np.square(r))) * weight_value(r, alpha, k2, n)
    )


def residual_rescaled_pde(f: RadialProfile) -> RadialProfile:
    """Discrete right-hand side Delta log f + (N f + r f') / (N-2) of the rescaled equation.

    Vanishes at second order under refinement for f = B~_k, the stationary
    solutions of the rescaled equation.

    Raises:
        ValueError: If any node value is not strictly positive.
    """
    if np.any(f.values <= 0.0):
        raise ValueError("Rescaled residual needs a strictly positive profile.")
    n = f.grid.dimension
    log_f = RadialProfile(f.grid, np.log(f.values))
    diffusion = radial_laplacian(log_f).values
    drift = (n * f.values + f.grid.nodes * radial_gradient(f).values) / (n - 2)
    return RadialProfile(f.grid, diffusion + drift)
