"""Exact changes of variables between the physical and self-similar frames.

With lambda = (T - t)^(1/(N-2)), the self-similar unknown is

    u~(y, s) = lambda^(-N) u(y / lambda, t),    s = -log(T - t),

so a profile sampled at physical radii rho maps to self-similar radii
y = lambda * rho with values scaled by lambda^(-N). No interpolation is
needed unless the caller asks for a specific target grid.

Classes:
    FrameKind: Physical or self-similar frame
    Frame: Frame kind plus the extinction time and dimension of the rescaling

Functions:
    to_selfsimilar: Physical profile at time t -> self-similar profile at s
    from_selfsimilar: Self-similar profile at s -> physical profile at time t
    resample: Monotone cubic resampling of a profile onto another grid
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Optional

import numpy as np

from .grid import MIN_DIMENSION, TAIL_MATCH_RTOL, RadialGrid, RadialProfile, TailLaw

logger = logging.getLogger(__name__)


class FrameKind(StrEnum):
    PHYSICAL = "physical"
    SELFSIMILAR = "selfsimilar"


@dataclass(frozen=True)
class Frame:
    """Coordinate frame of an evolution.

    Attributes:
        kind (FrameKind): Physical (x, t, u) or self-similar (y, s, u~).
        T (float): Extinction time of the reference rescaling.
        dimension (int): Space dimension N >= 3.

    Examples:
        >>> frame = Frame(FrameKind.SELFSIMILAR, T=1.0, dimension=3)
        >>> frame.s_of_t(0.0)
        -0.0
        >>> frame.drift
        1.0
    """

    kind: FrameKind
    T: float
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "kind", FrameKind(self.kind))
        if not math.isfinite(self.T) or self.T <= 0.0:
            raise ValueError(f"Extinction time T must be positive and finite, got {self.T!r}.")
        if isinstance(self.dimension, bool) or int(self.dimension) != self.dimension:
            raise ValueError(f"Dimension must be an integer, got {self.dimension!r}.")
        if self.dimension < MIN_DIMENSION:
            raise ValueError(f"Dimension must be at least {MIN_DIMENSION}, got {self.dimension}.")

    @property
    def is_physical(self) -> bool:
        return self.kind is FrameKind.PHYSICAL

    @property
    def drift(self) -> float:
        """Coefficient of div(x u) in this frame: 1/(N-2) self-similar, 0 physical."""
        return 0.0 if self.is_physical else 1.0 / (self.dimension - 2)

    def with_kind(self, kind: FrameKind) -> "Frame":
        return Frame(kind, self.T, self.dimension)

    def s_of_t(self, t: float) -> float:
        if t >= self.T:
            raise ValueError(f"Time t = {t!r} is not before the extinction time T = {self.T!r}.")
        return -math.log(self.T - t)

    def t_of_s(self, s: float) -> float:
        return self.T - math.exp(-s)

    def scale(self, t: float) -> float:
        """Spatial scale lambda = (T - t)^(1/(N-2)) of the rescaling at time t < T."""
        if t >= self.T:
            raise ValueError(f"Time t = {t!r} is not before the extinction time T = {self.T!r}.")
        return math.exp(math.log(self.T - t) / (self.dimension - 2))


def _check_dimension(profile: RadialProfile, frame: Frame) -> None:
    if profile.grid.dimension != frame.dimension:
        raise ValueError(
            f"Profile lives in dimension {profile.grid.dimension} but frame has N = {frame.dimension}."
        )


def _rescale(profile: RadialProfile, radius_factor: float, log_amplitude: float) -> RadialProfile:
    # y = radius_factor * rho, value factor = exp(log_amplitude)
    amplitude = math.exp(log_amplitude)
    tail = None if profile.tail is None else profile.tail.scaled(amplitude, radius_factor)
    return RadialProfile(profile.grid.scaled(radius_factor), profile.values * amplitude, tail)


def to_selfsimilar(
    u: RadialProfile, t: float, frame: Frame, target: Optional[RadialGrid] = None
) -> tuple[RadialProfile, float]:
    """Map a physical profile at time t < T to the self-similar frame.

    Args:
        u (RadialProfile): Profile sampled at physical radii.
        t (float): Physical time, t < T.
        frame (Frame): Frame carrying T and N of the rescaling.
        target (RadialGrid | None): Resample onto this self-similar grid.
            By default the nodes are carried over exactly (y = lambda * rho).

    Returns:
        tuple[RadialProfile, float]: The rescaled profile and s = -log(T - t).

    Raises:
        ValueError: If t >= T or the dimensions disagree.
    """
    _check_dimension(u, frame)
    n = frame.dimension
    s = frame.s_of_t(t)
    log_gap = math.log(frame.T - t)
    rescaled = _rescale(u, math.exp(log_gap / (n - 2)), -n * log_gap / (n - 2))
    if target is not None:
        rescaled = resample(rescaled, target)
    return rescaled, s


def from_selfsimilar(
    u_tilde: RadialProfile, s: float, frame: Frame, target: Optional[RadialGrid] = None
) -> tuple[RadialProfile, float]:
    """Map a self-similar profile at clock s back to physical time t = T - e^(-s).

    Inverse of to_selfsimilar: radii are divided by lambda and values
    multiplied by lambda^N.
    """
    _check_dimension(u_tilde, frame)
    n = frame.dimension
    log_gap = -s
    physical = _rescale(u_tilde, math.exp(-log_gap / (n - 2)), n * log_gap / (n - 2))
    if target is not None:
        physical = resample(physical, target)
    return physical, frame.t_of_s(s)


def resample(profile: RadialProfile, grid: RadialGrid) -> RadialProfile:
    """Resample a profile onto another grid of the same dimension.

    Inside the source grid the monotone cubic (PCHIP) interpolant is used,
    which stays between neighbouring data values and so preserves
    positivity. Radii beyond the source R_max are filled from the tail law.

    Raises:
        ValueError: If dimensions differ, or the target reaches beyond a
            tail-free source.
    """
    if grid.dimension != profile.grid.dimension:
        raise ValueError(
            f"Cannot resample from dimension {profile.grid.dimension} to {grid.dimension}."
        )
    values = profile.evaluate(grid.nodes)
    tail = profile.tail
    if (
        tail is not None
        and tail.c > 0.0
        and grid.r_max < profile.grid.r_max
        and abs(tail.value(grid.r_max) - values[-1]) > TAIL_MATCH_RTOL * values[-1]
    ):
        shift = tail.c / values[-1] - grid.r_max**2
        if shift <= 0.0:
            raise ValueError(
                f"Profile does not decay like its tail law near r = {grid.r_max:g}; "
                "cannot re-anchor the tail."
            )
        tail = TailLaw(tail.c, shift)
    elif tail is not None and tail.c == 0.0 and np.any(values[-1:] != 0.0):
        tail = None
    return RadialProfile(grid, values, tail)
