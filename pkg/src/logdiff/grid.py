"""Radial meshes, radial profiles and dimension-aware quadrature.

Every integral over R^N of a radial function is computed as
omega_N * int_0^inf f(r) r^(N-1) dr. The part over [0, R_max] uses a product
rule that integrates the piecewise-linear interpolant of f against the exact
weight r^(N-1) on each cell; the part beyond R_max is carried analytically by
the far-field tail law c / (k + r^2) attached to a profile.

Classes:
    RadialGrid: Strictly increasing radial nodes with dimension and quadrature data
    TailLaw: Far-field law c / (k + r^2)
    MixedTailLaw: Sum of tail laws, the far field of a superposition
    RadialProfile: Nodal values of a radial function plus an optional tail law

Functions:
    make_grid: Geometrically stretched grid on [0, r_max]
    integrate_radial: Integral over R^N of a profile
    integrate_difference: Signed or absolute integral of a profile difference
    radial_laplacian: Second-order radial Laplacian on the stretched grid
    extrapolated_laplacian: Richardson-extrapolated Laplacian of a smooth function
    richardson: Romberg extrapolation of estimates on nested grids
    radial_gradient: Second-order radial derivative on the stretched grid
    ball_integral: Integral of a profile over the ball B_R(0)
    fit_tail: Least-squares tail law fitted to the outer nodes
    surface_area: Surface area omega_N of the unit sphere in R^N
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cache, cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import DivergentTailError, GridMismatchError

logger = logging.getLogger(__name__)

MIN_DIMENSION = 3
MIN_NODES = 16
TAIL_MATCH_RTOL = 1e-8
TAIL_CERTIFICATE_RTOL = 1e-8
TAIL_FIT_FRACTION = 0.1

Weight = Callable[[np.ndarray], np.ndarray]


def surface_area(dimension: int) -> float:
    """Surface area of the unit sphere S^(N-1) in R^N.

    Examples:
        >>> surface_area(3)
        12.566370614359172
    """
    return 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)


@cache
def gauss_legendre(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre abscissae and weights on [-1, 1] (cached, read-only)."""
    xi, wi = np.polynomial.legendre.leggauss(n_points)
    xi.setflags(write=False)
    wi.setflags(write=False)
    return xi, wi


def _readonly(values: np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Radial mesh r_0 = 0 < r_1 < ... < r_M = R_max in dimension N.

    Attributes:
        nodes (np.ndarray): Strictly increasing radii, read-only.
        dimension (int): Space dimension N >= 3.
        stretch (float): Ratio of successive spacings (1 for uniform grids).

    Examples:
        >>> grid = make_grid(1.0, 16, 1.0, 3)
        >>> grid.m
        16
        >>> grid.r_max
        1.0
    """

    nodes: np.ndarray
    dimension: int
    stretch: float = 1.0

    def __post_init__(self):
        nodes = _readonly(self.nodes)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("Grid needs at least 3 nodes in a one-dimensional array.")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("Grid nodes must be finite.")
        if nodes[0] != 0.0:
            raise ValueError(f"Grid must start at r = 0 exactly, got r_0 = {nodes[0]!r}.")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("Grid nodes must be strictly increasing.")
        if isinstance(self.dimension, bool) or int(self.dimension) != self.dimension:
            raise ValueError(f"Dimension must be an integer, got {self.dimension!r}.")
        if self.dimension < MIN_DIMENSION:
            raise ValueError(
                f"Dimension must be at least {MIN_DIMENSION}, got {self.dimension}."
            )
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "dimension", int(self.dimension))

    @property
    def m(self) -> int:
        """Number of cells M (the grid has M + 1 nodes)."""
        return self.nodes.size - 1

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def omega(self) -> float:
        """Surface area of the unit sphere in this grid's dimension."""
        return surface_area(self.dimension)

    @cached_property
    def spacings(self) -> np.ndarray:
        return _readonly(np.diff(self.nodes))

    @cached_property
    def faces(self) -> np.ndarray:
        """Cell faces r_{i+1/2} (midpoints between successive nodes), length M."""
        return _readonly(0.5 * (self.nodes[:-1] + self.nodes[1:]))

    @cached_property
    def control_volumes(self) -> np.ndarray:
        """Finite-volume measures int r^(N-1) dr of each node's cell, length M + 1.

        Node 0 owns [0, r_{1/2}], node M owns [r_{M-1/2}, R_max].
        """
        n = self.dimension
        edges = np.concatenate(([0.0], self.faces, [self.r_max]))
        return _readonly((edges[1:] ** n - edges[:-1] ** n) / n)

    @cached_property
    def _cell_weights(self) -> tuple[np.ndarray, np.ndarray]:
        # Exact for (a + b r) r^(N-1) on every cell.
        n = self.dimension
        xi, wi = gauss_legendre(n // 2 + 2)
        left, right = self.nodes[:-1, None], self.nodes[1:, None]
        half = 0.5 * (right - left)
        x = 0.5 * (left + right) + half * xi[None, :]
        jac = half * wi[None, :] * x ** (n - 1)
        phi_right = (x - left) / (right - left)
        w_left = np.sum(jac * (1.0 - phi_right), axis=1)
        w_right = np.sum(jac * phi_right, axis=1)
        return _readonly(w_left), _readonly(w_right)

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        """Nodal weights w_i with int_{|x| <= R_max} f dx = sum_i w_i f(r_i).

        Exact whenever f is linear on every cell.
        """
        w_left, w_right = self._cell_weights
        weights = np.zeros(self.nodes.size)
        weights[:-1] += w_left
        weights[1:] += w_right
        return _readonly(self.omega * weights)

    def cell_integrals(self, values: np.ndarray) -> np.ndarray:
        """Per-cell integrals over R^N shells of the piecewise-linear interpolant."""
        w_left, w_right = self._cell_weights
        return self.omega * (w_left * values[:-1] + w_right * values[1:])

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or (
            self.dimension == other.dimension
            and self.nodes.size == other.nodes.size
            and bool(np.array_equal(self.nodes, other.nodes))
        )

    def scaled(self, factor: float) -> "RadialGrid":
        """Grid with every radius multiplied by factor > 0."""
        if not math.isfinite(factor) or factor <= 0.0:
            raise ValueError(f"Scale factor must be positive and finite, got {factor!r}.")
        return RadialGrid(self.nodes * factor, self.dimension, self.stretch)

    def coarsened(self) -> "RadialGrid":
        """Every other node, the same mapping with doubled spacing.

        Raises:
            ValueError: If the number of cells is odd or the result would be too small.
        """
        if self.m % 2 or self.m < 4:
            raise ValueError(f"Cannot coarsen a grid with M = {self.m} cells; M must be even and >= 4.")
        return RadialGrid(self.nodes[::2], self.dimension, self.stretch**2)

    def truncated(self, radius: float) -> "RadialGrid":
        """Grid made of the nodes with r <= radius."""
        if radius > self.r_max * (1.0 + 1e-12):
            raise ValueError(
                f"Radius {radius:g} exceeds grid coverage R_max = {self.r_max:g}."
            )
        keep = self.nodes <= radius * (1.0 + 1e-12)
        return RadialGrid(self.nodes[keep], self.dimension, self.stretch)


@dataclass(frozen=True)
class TailLaw:
    """Far-field law f(r) = c / (k + r^2) for r > R_max.

    Attributes:
        c (float): Amplitude, c >= 0.
        k (float): Shift, k > 0.
    """

    c: float
    k: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.k)):
            raise ValueError(f"Tail parameters must be finite, got c={self.c!r}, k={self.k!r}.")
        if self.c < 0.0:
            raise ValueError(f"Tail amplitude c must be non-negative, got {self.c!r}.")
        if self.k <= 0.0:
            raise ValueError(f"Tail shift k must be positive, got {self.k!r}.")

    @property
    def components(self) -> tuple["TailLaw", ...]:
        return (self,)

    def value(self, r: np.ndarray | float) -> np.ndarray | float:
        return self.c / (self.k + np.square(r))

    def scaled(self, amplitude: float, length: float) -> "TailLaw":
        """Law of amplitude * f(r / length)."""
        return TailLaw(self.c * amplitude * length**2, self.k * length**2)


@dataclass(frozen=True)
class MixedTailLaw:
    """Far-field law sum_i c_i / (k_i + r^2) of a superposition of profiles.

    Attributes:
        laws (tuple[TailLaw, ...]): Components, at least one.

    Examples:
        >>> MixedTailLaw((TailLaw(1.0, 4.0), TailLaw(1.0, 1.0))).c
        2.0
    """

    laws: tuple[TailLaw, ...]

    def __post_init__(self):
        laws = tuple(self.laws)
        if not laws:
            raise ValueError("A mixed tail law needs at least one component.")
        object.__setattr__(self, "laws", laws)

    @property
    def components(self) -> tuple[TailLaw, ...]:
        return self.laws

    @property
    def c(self) -> float:
        """Total amplitude, the coefficient of r^-2 at infinity."""
        return float(sum(law.c for law in self.laws))

    @property
    def k(self) -> float:
        """Amplitude-weighted shift, so that c/(k + r^2) matches the law to O(r^-6)."""
        if self.c == 0.0:
            return self.laws[0].k
        return float(sum(law.c * law.k for law in self.laws)) / self.c

    def value(self, r: np.ndarray | float) -> np.ndarray | float:
        return sum(law.value(r) for law in self.laws)

    def scaled(self, amplitude: float, length: float) -> "MixedTailLaw":
        return MixedTailLaw(tuple(law.scaled(amplitude, length) for law in self.laws))


Tail = TailLaw | MixedTailLaw


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Nodal values of a radial function on a RadialGrid.

    Profiles carrying a tail law are densities: their values must be
    non-negative and the tail must reproduce the boundary node. Profiles
    without a tail are treated as vanishing beyond R_max and may be signed.

    Attributes:
        grid (RadialGrid): Grid the values live on.
        values (np.ndarray): Read-only array of M + 1 finite values.
        tail (TailLaw | MixedTailLaw | None): Far-field law beyond R_max.
    """

    grid: RadialGrid
    values: np.ndarray
    tail: Optional[Tail] = None

    def __post_init__(self):
        values = _readonly(self.values)
        if values.shape != self.grid.nodes.shape:
            raise ValueError(
                f"Profile has {values.size} values but grid has {self.grid.nodes.size} nodes."
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("Profile values must be finite (NaN or inf found).")
        if self.tail is not None:
            if np.any(values < 0.0):
                raise ValueError("Profiles carrying a tail law must be non-negative.")
            boundary = values[-1]
            law = self.tail.value(self.grid.r_max)
            if abs(boundary - law) > TAIL_MATCH_RTOL * abs(boundary):
                raise ValueError(
                    f"Tail law gives {law:.12g} at R_max but boundary node holds {boundary:.12g}."
                )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls,
        grid: RadialGrid,
        function: Callable[[np.ndarray], np.ndarray],
        tail: Optional[Tail] = None,
    ) -> "RadialProfile":
        return cls(grid, np.asarray(function(grid.nodes), dtype=np.float64), tail)

    def with_values(
        self, values: np.ndarray, tail: Optional[Tail] = None
    ) -> "RadialProfile":
        return RadialProfile(self.grid, values, tail)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def evaluate(self, radii: np.ndarray) -> np.ndarray:
        """Monotone cubic interpolation inside [0, R_max], tail law beyond.

        Raises:
            ValueError: If a radius lies beyond R_max and the profile has no tail.
        """
        radii = np.asarray(radii, dtype=np.float64)
        outside = radii > self.grid.r_max
        if np.any(outside) and self.tail is None:
            raise ValueError(
                f"Cannot evaluate beyond R_max = {self.grid.r_max:g} without a tail law."
            )
        result = np.empty_like(radii)
        inside = ~outside
        result[inside] = PchipInterpolator(self.grid.nodes, self.values)(radii[inside])
        if np.any(outside):
            result[outside] = self.tail.value(radii[outside])
        return result


def make_grid(r_max: float, m_nodes: int, stretch: float, dimension: int) -> RadialGrid:
    """Build a radial grid with geometrically stretched spacing.

    Successive spacings satisfy h_{i+1} = stretch * h_i; stretch = 1 gives a
    uniform grid.

    Args:
        r_max (float): Outer radius R_max > 0.
        m_nodes (int): Number of cells M >= 16 (the grid has M + 1 nodes).
        stretch (float): Spacing ratio >= 1.
        dimension (int): Space dimension N >= 3.

    Returns:
        RadialGrid: Grid with r_0 = 0 and r_M = r_max.

    Raises:
        ValueError: For non-finite or out-of-range arguments.

    Examples:
        >>> make_grid(1.0, 16, 1.0, 3).nodes[1]
        0.0625
    """
    for name, value in (("r_max", r_max), ("m_nodes", m_nodes), ("stretch", stretch), ("dimension", dimension)):
        if isinstance(value, bool) or not isinstance(value, (int, float, np.number)) or not math.isfinite(value):
            raise ValueError(f"{name} must be a finite number, got {value!r}.")
    if r_max <= 0.0:
        raise ValueError(f"r_max must be positive, got {r_max!r}.")
    if isinstance(m_nodes, bool) or int(m_nodes) != m_nodes or m_nodes < MIN_NODES:
        raise ValueError(f"m_nodes must be an integer >= {MIN_NODES}, got {m_nodes!r}.")
    if stretch < 1.0:
        raise ValueError(f"stretch must be >= 1, got {stretch!r}.")
    if isinstance(dimension, bool) or int(dimension) != dimension:
        raise ValueError(f"dimension must be an integer, got {dimension!r}.")
    if dimension < MIN_DIMENSION:
        raise ValueError(f"dimension must be at least {MIN_DIMENSION}, got {dimension}.")

    m = int(m_nodes)
    index = np.arange(m + 1, dtype=np.float64)
    if stretch == 1.0:
        nodes = r_max * index / m
    else:
        log_q = math.log(stretch)
        nodes = r_max * np.expm1(index * log_q) / math.expm1(m * log_q)
    nodes[0] = 0.0
    nodes[-1] = r_max
    return RadialGrid(nodes, int(dimension), float(stretch))


def integrate_radial(f: RadialProfile) -> float:
    """Integral of a radial profile over R^N.

    Raises:
        DivergentTailError: If the profile carries a non-zero tail law, whose
            integral c r^(N-1) / (k + r^2) diverges for every N >= 3.

    Examples:
        >>> grid = make_grid(1.0, 16, 1.0, 3)
        >>> integrate_radial(RadialProfile(grid, np.ones(17)))  # 4 pi / 3
        4.18879020478639
    """
    if not np.all(np.isfinite(f.values)):
        raise ValueError("Profile contains NaN values.")
    if f.tail is not None and f.tail.c > 0.0:
        raise DivergentTailError(
            f"Tail c/(k+r^2) is not integrable against r^{f.grid.dimension - 1}; "
            "integrate differences of profiles with matching tails instead."
        )
    return float(np.dot(f.grid.quadrature_weights, f.values))


def _tail_terms(profile: RadialProfile) -> list[tuple[float, float]]:
    if profile.tail is None:
        return []
    return [(law.c, law.k) for law in profile.tail.components if law.c > 0.0]


def _same_terms(first: list[tuple[float, float]], second: list[tuple[float, float]]) -> bool:
    if len(first) != len(second):
        return False
    return all(
        math.isclose(c1, c2, rel_tol=1e-12, abs_tol=0.0) and math.isclose(k1, k2, rel_tol=1e-12, abs_tol=0.0)
        for (c1, k1), (c2, k2) in zip(sorted(first), sorted(second))
    )


def _tail_decay_exponent(f: RadialProfile, g: RadialProfile) -> Optional[int]:
    """Leading decay exponent p of tail(f) - tail(g) ~ r^-p, None when identical.

    Expanding sum c_i / (k_i + r^2) in powers of r^-2, the coefficient of
    r^-(2j+2) is (-1)^j sum c_i k_i^j; the first moment that differs between
    f and g fixes the exponent.
    """
    f_terms, g_terms = _tail_terms(f), _tail_terms(g)
    if _same_terms(f_terms, g_terms):
        return None
    for order in range(3):
        f_moment = sum(c * k**order for c, k in f_terms)
        g_moment = sum(c * k**order for c, k in g_terms)
        if not math.isclose(f_moment, g_moment, rel_tol=1e-12, abs_tol=0.0):
            return 2 * order + 2
    return 8


def _tail_difference(f: RadialProfile, g: RadialProfile, exponent: int) -> Callable[[float], float]:
    """tail(f) - tail(g) at r, free of cancellation in the cancelled leading orders.

    With x = r^2 and a reference shift kappa,
    1/(k + x) = 1/(kappa + x) + (kappa - k)/(kappa + x)^2 + (kappa - k)^2/((kappa + x)^2 (k + x)),
    so the r^-2 and r^-4 parts are collected into two moment sums that are
    dropped once they cancel between f and g.
    """
    terms = [(c, k) for c, k in _tail_terms(f)] + [(-c, k) for c, k in _tail_terms(g)]
    kappa = terms[0][1]
    amplitude = sum(a for a, _ in terms) if exponent <= 2 else 0.0
    first = sum(a * (kappa - k) for a, k in terms) if exponent <= 4 else 0.0

    def difference(r: float) -> float:
        x = r * r
        shifted = kappa + x
        rest = sum(a * (kappa - k) ** 2 / (k + x) for a, k in terms)
        return amplitude / shifted + (first + rest) / shifted**2

    return difference


def _tail_contribution(
    f: RadialProfile,
    g: RadialProfile,
    absolute: bool,
    weight: Optional[Weight],
    weight_decay: float,
) -> float:
    exponent = _tail_decay_exponent(f, g)
    if exponent is None:
        return 0.0
    n = f.grid.dimension
    # integrand ~ r^(N - 1 - p - weight_decay)
    if n - exponent - weight_decay >= 0.0:
        raise DivergentTailError(
            f"Tail difference decays like r^-{exponent}"
            + (f" with weight decay r^-{weight_decay:g}" if weight_decay else "")
            + f"; its integral over R^{n} diverges."
        )
    difference = _tail_difference(f, g, exponent)
    omega = f.grid.omega

    def integrand(r: float) -> float:
        diff = difference(r)
        if absolute:
            diff = abs(diff)
        value = omega * diff * r ** (n - 1)
        if weight is not None:
            value *= float(weight(np.array([r]))[0])
        return value

    tail, _ = quad(integrand, f.grid.r_max, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return float(tail)


def richardson(estimates: Sequence[float] | Sequence[np.ndarray]) -> float | np.ndarray:
    """Romberg extrapolation of estimates whose error expands in h^2, h^4, ...

    estimates[j] is computed with spacing 2^j h; with L + 1 estimates the
    result is accurate to O(h^(2L + 2)).

    Examples:
        >>> richardson([1.0 + 0.01, 1.0 + 0.04])  # error 0.01 h^2 at h = 1
        1.0
    """
    table = list(estimates)
    if not table:
        raise ValueError("Richardson extrapolation needs at least one estimate.")
    for level in range(1, len(table)):
        factor = 4.0**level
        table = [(factor * fine - coarse) / (factor - 1.0) for fine, coarse in zip(table[:-1], table[1:])]
    return table[0]


def integrate_difference(
    f: RadialProfile,
    g: RadialProfile,
    absolute: bool = False,
    *,
    weight: Optional[Weight] = None,
    weight_decay: float = 0.0,
    richardson_levels: int = 0,
) -> float:
    """Integral over R^N of f - g (or |f - g|), far field included.

    The far-field part is integrated from the two tail laws. Equal tails
    cancel exactly; tails with equal total amplitude leave an r^-4 remainder
    that is integrable iff N <= 3; differing amplitudes leave r^-2 and never
    integrate.

    Args:
        f (RadialProfile): First profile.
        g (RadialProfile): Second profile, on the same grid.
        absolute (bool): Integrate |f - g| instead of f - g.
        weight (Callable | None): Optional radial weight applied inside and in the tail.
        weight_decay (float): Decay exponent of the weight at infinity (weight ~ r^-weight_decay).
        richardson_levels (int): Extrapolate the interior part from the grid
            and this many successive coarsenings. Signed integrals of smooth
            profiles only; M must be divisible by 2^levels.

    Returns:
        float: The integral.

    Raises:
        GridMismatchError: If f and g live on different grids.
        DivergentTailError: If the far-field integral diverges or, for N >= 4,
            cannot be certified below 1e-8 of the interior part.
        ValueError: If extrapolation is requested for an absolute integral or
            the grid cannot be coarsened often enough.

    Examples:
        >>> integrate_difference(b1, b4, absolute=True)  # N = 3: 4 pi^2
        39.47841...
    """
    if not f.grid.same_as(g.grid):
        raise GridMismatchError("Profiles must share one grid to be compared.")
    if richardson_levels < 0:
        raise ValueError(f"richardson_levels must be non-negative, got {richardson_levels!r}.")
    if richardson_levels and absolute:
        raise ValueError("Richardson extrapolation needs a smooth integrand; |f - g| has kinks.")
    diff = f.values - g.values
    if absolute:
        diff = np.abs(diff)
    if weight is not None:
        diff = diff * weight(f.grid.nodes)
    grid = f.grid
    estimates = [float(np.dot(grid.quadrature_weights, diff))]
    for _ in range(richardson_levels):
        grid, diff = grid.coarsened(), diff[::2]
        estimates.append(float(np.dot(grid.quadrature_weights, diff)))
    interior = float(richardson(estimates))
    tail = _tail_contribution(f, g, absolute, weight, weight_decay)
    if (
        f.grid.dimension >= 4
        and tail != 0.0
        and abs(tail) >= TAIL_CERTIFICATE_RTOL * abs(interior)
    ):
        raise DivergentTailError(
            f"Tail contribution {tail:.3e} is not certified below "
            f"{TAIL_CERTIFICATE_RTOL:g} of the interior part {interior:.3e} for N = {f.grid.dimension}."
        )
    return interior + tail


def _derivatives(f: RadialProfile) -> tuple[np.ndarray, np.ndarray]:
    """Second-order first and second derivatives on the non-uniform grid."""
    r = f.grid.nodes
    v = f.values
    h = f.grid.spacings
    first = np.zeros_like(v)
    second = np.zeros_like(v)

    hm, hp = h[:-1], h[1:]
    forward = v[2:] - v[1:-1]
    backward = v[1:-1] - v[:-2]
    denom = hp * hm * (hp + hm)
    first[1:-1] = (hm**2 * forward + hp**2 * backward) / denom
    second[1:-1] = 2.0 * (hm * forward - hp * backward) / denom

    # even reflection v(-r) = v(r) at the origin
    second[0] = 2.0 * (v[1] - v[0]) / h[0] ** 2

    d1 = r[-1] - r[-2]
    d2 = r[-1] - r[-3]
    first[-1] = (
        v[-1] * (1.0 / d1 + 1.0 / d2)
        - v[-2] * d2 / (d1 * (d2 - d1))
        + v[-3] * d1 / (d2 * (d2 - d1))
    )
    second[-1] = 2.0 * (
        v[-1] / (d1 * d2) - v[-2] / (d1 * (d2 - d1)) + v[-3] / (d2 * (d2 - d1))
    )
    return first, second


def radial_gradient(f: RadialProfile) -> RadialProfile:
    """Radial derivative f'(r) with f'(0) = 0, second order on the stretched grid."""
    first, _ = _derivatives(f)
    return RadialProfile(f.grid, first)


def radial_laplacian(f: RadialProfile) -> RadialProfile:
    """Radial Laplacian f'' + (N - 1) f' / r.

    Central differences at interior nodes, N f''(0) at the origin (even
    symmetry), one-sided second-order differences at R_max. Exact for
    polynomials of degree <= 2.

    Examples:
        >>> grid = make_grid(1.0, 16, 1.0, 3)
        >>> radial_laplacian(RadialProfile.from_function(grid, np.square)).values[5]
        6.0
    """
    first, second = _derivatives(f)
    r = f.grid.nodes
    n = f.grid.dimension
    laplacian = np.empty_like(second)
    laplacian[0] = n * second[0]
    laplacian[1:] = second[1:] + (n - 1) * first[1:] / r[1:]
    return RadialProfile(f.grid, laplacian)


def extrapolated_laplacian(
    function: Callable[[np.ndarray], np.ndarray],
    r_max: float,
    m_nodes: int,
    dimension: int,
    levels: int = 3,
) -> RadialProfile:
    """Radial Laplacian of a smooth function, Richardson-extrapolated over nested uniform grids.

    The Laplacian is taken on uniform grids with M, 2M, ..., 2^(levels-1) M
    cells and combined at the nodes of the coarsest one. The one-sided
    boundary formula is only first order, so the boundary node keeps the
    finest-grid value.

    Args:
        function (Callable): Smooth even function of r, evaluated on node arrays.
        r_max (float): Outer radius.
        m_nodes (int): Cells M of the coarsest grid.
        dimension (int): Space dimension N >= 3.
        levels (int): Number of nested grids, at least 1.

    Returns:
        RadialProfile: Laplacian at the nodes of make_grid(r_max, m_nodes, 1, dimension).
    """
    if levels < 1:
        raise ValueError(f"levels must be at least 1, got {levels!r}.")
    estimates = []
    for level in range(levels):
        grid = make_grid(r_max, m_nodes * 2**level, 1.0, dimension)
        laplacian = radial_laplacian(RadialProfile.from_function(grid, function))
        estimates.append(laplacian.values[:: 2**level])
    coarse = make_grid(r_max, m_nodes, 1.0, dimension)
    values = np.array(richardson(estimates[::-1]), dtype=np.float64)
    values[-1] = estimates[-1][-1]
    return RadialProfile(coarse, values)


def ball_integral(f: RadialProfile, radius: float) -> float:
    """Integral of f over the ball B_radius(0), radius <= R_max.

    Raises:
        ValueError: If radius is negative or exceeds the grid.
    """
    grid = f.grid
    if radius < 0.0 or radius > grid.r_max * (1.0 + 1e-12):
        raise ValueError(f"Ball radius {radius:g} outside [0, {grid.r_max:g}].")
    radius = min(radius, grid.r_max)
    cells = grid.cell_integrals(f.values)
    j = int(np.searchsorted(grid.nodes, radius, side="right")) - 1
    total = float(np.sum(cells[:j]))
    if j >= grid.m or radius == grid.nodes[j]:
        return total
    a, b = grid.nodes[j], grid.nodes[j + 1]
    slope = (f.values[j + 1] - f.values[j]) / (b - a)
    n = grid.dimension
    xi, wi = gauss_legendre(n // 2 + 2)
    half = 0.5 * (radius - a)
    x = 0.5 * (radius + a) + half * xi
    partial = np.sum(half * wi * (f.values[j] + slope * (x - a)) * x ** (n - 1))
    return total + grid.omega * float(partial)


def fit_tail(
    profile: RadialProfile,
    fraction: float = TAIL_FIT_FRACTION,
    c: Optional[float] = None,
    exclude_boundary: bool = False,
) -> TailLaw:
    """Fit c / (k + r^2) to the outer fraction of the nodes.

    The fit is linear in 1/f = (k + r^2)/c. Unless exclude_boundary is set, k
    is then re-anchored so that the law reproduces the boundary node exactly.

    Args:
        profile (RadialProfile): Positive profile to fit.
        fraction (float): Fraction of outer nodes used (at least 3 nodes).
        c (float | None): Fixed amplitude; fitted when None.
        exclude_boundary (bool): Leave the boundary node out of the fit and do
            not re-anchor (used to extrapolate a new boundary value).

    Returns:
        TailLaw: Fitted law.

    Raises:
        ValueError: If the outer nodes are not positive or the fit is not a valid law.
    """
    grid = profile.grid
    stop = grid.nodes.size - 1 if exclude_boundary else grid.nodes.size
    count = max(3, int(math.ceil(fraction * grid.nodes.size)))
    start = max(1, stop - count)
    r2 = grid.nodes[start:stop] ** 2
    values = profile.values[start:stop]
    if np.any(values <= 0.0):
        raise ValueError("Tail fit needs strictly positive outer values.")
    inverse = 1.0 / values
    if c is None:
        slope, intercept = np.polyfit(r2, inverse, 1)
        if slope <= 0.0:
            raise ValueError("Outer values do not decay like c / (k + r^2).")
        c = 1.0 / slope
        k = intercept * c
    else:
        k = float(np.mean(c * inverse - r2))
    if not exclude_boundary:
        k = c / profile.values[-1] - grid.r_max**2
    if k <= 0.0:
        raise ValueError(f"Fitted tail shift is not positive (k = {k:g}).")
    return TailLaw(float(c), float(k))
