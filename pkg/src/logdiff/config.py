"""Run configurations and initial data for the logdiff command line.

A run configuration is a plain-text document of `key = value` lines; `#`
starts a comment and blank lines are ignored. Initial data are written as
descriptors such as `mean-of-barenblatts(k1=4, k2=1, weight=0.5)`.

Classes:
    Command: Commands understood by the command line
    BarenblattData: u0 = B_k(., 0)
    MeanOfBarenblatts: u0 = w B_k1(., 0) + (1 - w) B_k2(., 0)
    BarenblattPlusBump: u0 = B_k0(., 0) (1 + amplitude * bump)
    RunConfig: Validated configuration of one run

Functions:
    parse_initial: Parse an initial-data descriptor
    parse_config: Parse and validate a configuration document
    load_config: Read and parse a configuration file
    initial_profile: Sample initial data on a grid in a frame
"""

import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from enum import StrEnum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .barenblatt import BarenblattSpec, barenblatt_tail, barenblatt_value
from .errors import ConfigError
from .grid import MixedTailLaw, RadialGrid, RadialProfile, Tail, TailLaw, make_grid
from .solver import BoundaryCondition, BoundaryKind, Scheme, SolverConfig
from .transform import Frame, FrameKind

logger = logging.getLogger(__name__)

MIN_R_MAX = 10.0
# B_k(R_max) / B_k(0) = k / (k + R_max^2) at the default R_max
FAR_FIELD_RATIO = 1e-3
SANDWICH_PADDING = 1e-3

_DESCRIPTOR = re.compile(r"^\s*([a-z][a-z-]*)\s*\((.*)\)\s*$")


class Command(StrEnum):
    SIMULATE = "simulate"
    BARENBLATT_TABLE = "barenblatt-table"
    MATCH_K0 = "match-k0"
    VERIFY = "verify"
    THEOREM1 = "theorem1"
    THEOREM2 = "theorem2"
    EXTINCTION = "extinction"


# commands whose statements hold only for N = 3 or N >= 5
SCOPED_COMMANDS = {Command.VERIFY, Command.THEOREM1, Command.THEOREM2, Command.EXTINCTION}


def smooth_bump(r: np.ndarray, lower: float, upper: float) -> np.ndarray:
    """C-infinity bump exp(1 - 1/(1 - z^2)) on (lower, upper), peak 1 at the midpoint."""
    z = (2.0 * np.asarray(r, dtype=np.float64) - (lower + upper)) / (upper - lower)
    inside = np.abs(z) < 1.0
    out = np.zeros_like(z)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
    return out


@dataclass(frozen=True)
class BarenblattData:
    """u0 = B_k(., 0)."""

    k: float

    def __post_init__(self):
        if not self.k > 0.0:
            raise ConfigError(f"barenblatt: k must be positive, got {self.k!r}.")

    @property
    def parameters(self) -> tuple[float, ...]:
        return (self.k,)

    def values(self, r: np.ndarray, T: float, dimension: int) -> np.ndarray:
        return barenblatt_value(r, 0.0, BarenblattSpec(self.k, T, dimension))

    def tail(self, r_max: float, T: float, dimension: int) -> TailLaw:
        return barenblatt_tail(BarenblattSpec(self.k, T, dimension), 0.0)


@dataclass(frozen=True)
class MeanOfBarenblatts:
    """u0 = w B_k1(., 0) + (1 - w) B_k2(., 0), sandwiched between B_k1 and B_k2."""

    k1: float
    k2: float
    weight: float = 0.5

    def __post_init__(self):
        if not (self.k1 > 0.0 and self.k2 > 0.0):
            raise ConfigError(f"mean-of-barenblatts: k1 and k2 must be positive, got {self.k1!r}, {self.k2!r}.")
        if not 0.0 <= self.weight <= 1.0:
            raise ConfigError(f"mean-of-barenblatts: weight must lie in [0, 1], got {self.weight!r}.")

    @property
    def parameters(self) -> tuple[float, ...]:
        return (self.k1, self.k2)

    def values(self, r: np.ndarray, T: float, dimension: int) -> np.ndarray:
        first = barenblatt_value(r, 0.0, BarenblattSpec(self.k1, T, dimension))
        second = barenblatt_value(r, 0.0, BarenblattSpec(self.k2, T, dimension))
        return self.weight * first + (1.0 - self.weight) * second

    def tail(self, r_max: float, T: float, dimension: int) -> Tail:
        first = barenblatt_tail(BarenblattSpec(self.k1, T, dimension), 0.0)
        second = barenblatt_tail(BarenblattSpec(self.k2, T, dimension), 0.0)
        return MixedTailLaw(
            (
                TailLaw(self.weight * first.c, first.k),
                TailLaw((1.0 - self.weight) * second.c, second.k),
            )
        )

    def matched_k0(self) -> float:
        """Closed-form mass-matched parameter in R^3: sqrt(k0) = w sqrt(k1) + (1 - w) sqrt(k2)."""
        return (self.weight * math.sqrt(self.k1) + (1.0 - self.weight) * math.sqrt(self.k2)) ** 2


@dataclass(frozen=True)
class BarenblattPlusBump:
    """u0 = B_k0(., 0) (1 + amplitude * bump) with the bump supported in (lower, upper)."""

    k0: float
    amplitude: float
    support: tuple[float, float]

    def __post_init__(self):
        if not self.k0 > 0.0:
            raise ConfigError(f"barenblatt-plus-bump: k0 must be positive, got {self.k0!r}.")
        if not self.amplitude > -1.0:
            raise ConfigError(
                f"barenblatt-plus-bump: amplitude must exceed -1 to keep u0 positive, got {self.amplitude!r}."
            )
        lower, upper = self.support
        if not 0.0 <= lower < upper:
            raise ConfigError(f"barenblatt-plus-bump: support must satisfy 0 <= a < b, got {lower!r}:{upper!r}.")

    @property
    def parameters(self) -> tuple[float, ...]:
        return (self.k0,)

    def values(self, r: np.ndarray, T: float, dimension: int) -> np.ndarray:
        base = barenblatt_value(r, 0.0, BarenblattSpec(self.k0, T, dimension))
        return base * (1.0 + self.amplitude * smooth_bump(r, *self.support))

    def tail(self, r_max: float, T: float, dimension: int) -> TailLaw:
        if self.support[1] >= r_max:
            raise ConfigError(
                f"barenblatt-plus-bump: support {self.support[1]:g} must end inside R_max = {r_max:g}."
            )
        return barenblatt_tail(BarenblattSpec(self.k0, T, dimension), 0.0)


InitialData = Union[BarenblattData, MeanOfBarenblatts, BarenblattPlusBump]

_INITIAL_KINDS = {
    "barenblatt": (BarenblattData, {"k"}),
    "mean-of-barenblatts": (MeanOfBarenblatts, {"k1", "k2", "weight"}),
    "barenblatt-plus-bump": (BarenblattPlusBump, {"k0", "amplitude", "support"}),
}


def parse_initial(text: str) -> InitialData:
    """Parse an initial-data descriptor.

    Raises:
        ConfigError: For unknown kinds, unknown or missing arguments, or bad numbers.

    Examples:
        >>> parse_initial("barenblatt-plus-bump(k0=1, amplitude=0.1, support=1:2)")
        BarenblattPlusBump(k0=1.0, amplitude=0.1, support=(1.0, 2.0))
    """
    match = _DESCRIPTOR.match(text)
    if match is None:
        raise ConfigError(f"initial: expected kind(arg=value, ...), got {text!r}.")
    kind, body = match.groups()
    if kind not in _INITIAL_KINDS:
        raise ConfigError(f"initial: unknown kind {kind!r}; use one of {sorted(_INITIAL_KINDS)}.")
    cls, allowed = _INITIAL_KINDS[kind]
    arguments: dict[str, object] = {}
    for item in filter(None, (part.strip() for part in body.split(","))):
        name, sep, raw = item.partition("=")
        name, raw = name.strip(), raw.strip()
        if not sep or name not in allowed:
            raise ConfigError(f"initial: {kind} does not take argument {item!r}.")
        if name in arguments:
            raise ConfigError(f"initial: argument {name!r} given twice.")
        try:
            if name == "support":
                lower, upper = raw.split(":")
                arguments[name] = (float(lower), float(upper))
            else:
                arguments[name] = float(raw)
        except ValueError:
            raise ConfigError(f"initial: argument {name!r} has invalid value {raw!r}.") from None
    try:
        return cls(**arguments)
    except TypeError:
        raise ConfigError(f"initial: {kind} needs arguments {sorted(allowed)}.") from None


def initial_profile(data: InitialData, grid: RadialGrid, frame: Frame) -> RadialProfile:
    """Sample initial data at t = 0 on the grid, in the frame's variables.

    In the self-similar frame the grid nodes are self-similar radii y and the
    values are lambda^(-N) u0(y / lambda) with lambda = T^(1/(N-2)).
    """
    n, T = frame.dimension, frame.T
    if frame.is_physical:
        return RadialProfile(grid, data.values(grid.nodes, T, n), data.tail(grid.r_max, T, n))
    scale = frame.scale(0.0)
    amplitude = scale ** (-n)
    tail = data.tail(grid.r_max / scale, T, n).scaled(amplitude, scale)
    return RadialProfile(grid, amplitude * data.values(grid.nodes / scale, T, n), tail)


def local_barenblatt_parameter(profile: RadialProfile, frame: Frame, clock: float = 0.0) -> np.ndarray:
    """k(r) with u(r) = B_k(r, clock) at every node; constant for Barenblatt data."""
    n = frame.dimension
    r2 = profile.grid.nodes**2
    if frame.is_physical:
        gap = frame.T - clock
        return 2.0 * (n - 2) * gap ** (n / (n - 2)) / profile.values - gap ** (2.0 / (n - 2)) * r2
    return 2.0 * (n - 2) / profile.values - r2


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of one run.

    Unset optional values are resolved by the accessor methods; see
    parse_config for the document format.
    """

    command: Command
    dimension: int = 3
    T: float = 1.0
    k0: Optional[float] = None
    k1: Optional[float] = None
    k2: Optional[float] = None
    r_max: Optional[float] = None
    m_nodes: int = 400
    stretch: float = 1.0
    dt: float = 0.01
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    positivity_floor: float = 1e-30
    boundary: BoundaryKind = BoundaryKind.PINNED
    k_boundary: Optional[float] = None
    scheme: Scheme = Scheme.BACKWARD_EULER
    frame: FrameKind = FrameKind.SELFSIMILAR
    horizon: Optional[float] = None
    initial: Optional[InitialData] = None
    snapshots: tuple[float, ...] = field(default_factory=tuple)
    output: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        n = self.dimension
        if n < 3:
            raise ConfigError(f"dimension: N must be at least 3, got {n}.")
        if n == 4 and self.command in SCOPED_COMMANDS:
            raise ConfigError(
                f"dimension: {self.command} covers N = 3 or N >= 5 only; N = 4 is out of scope."
            )
        if self.command is Command.THEOREM1 and n != 3:
            raise ConfigError(f"dimension: theorem1 requires N = 3, got N = {n}.")
        if self.command in (Command.THEOREM2, Command.EXTINCTION) and n < 5:
            raise ConfigError(f"dimension: {self.command} requires N >= 5, got N = {n}.")
        if self.command is Command.MATCH_K0 and n != 3:
            raise ConfigError(f"dimension: match-k0 requires N = 3, got N = {n}.")
        if self.k1 is not None and self.k2 is not None and not self.k1 > self.k2 > 0.0:
            raise ConfigError(f"k1, k2: the sandwich needs k1 > k2 > 0, got k1 = {self.k1}, k2 = {self.k2}.")
        for name in ("T", "dt", "stretch", "newton_tol", "positivity_floor"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigError(f"{name}: must be positive and finite, got {value!r}.")
        for name in ("k0", "k1", "k2", "k_boundary", "r_max"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0.0):
                raise ConfigError(f"{name}: must be positive and finite, got {value!r}.")
        if self.m_nodes < 16:
            raise ConfigError(f"m_nodes: need at least 16 cells, got {self.m_nodes}.")
        if self.newton_max_iter < 1:
            raise ConfigError(f"newton_max_iter: must be at least 1, got {self.newton_max_iter}.")

    @property
    def frame_kind(self) -> FrameKind:
        if self.command is Command.EXTINCTION:
            return FrameKind.PHYSICAL
        if self.command in (Command.THEOREM1, Command.THEOREM2):
            return FrameKind.SELFSIMILAR
        return self.frame

    def make_frame(self, kind: Optional[FrameKind] = None) -> Frame:
        return Frame(kind or self.frame_kind, self.T, self.dimension)

    def resolved_r_max(self) -> float:
        if self.r_max is not None:
            return self.r_max
        ks = [k for k in (self.k0, self.k1, self.k2) if k is not None]
        if self.initial is not None:
            ks.extend(self.initial.parameters)
        return max(MIN_R_MAX, math.sqrt((1.0 / FAR_FIELD_RATIO - 1.0) * max(ks, default=1.0)))

    def make_grid(self, m_nodes: Optional[int] = None) -> RadialGrid:
        return make_grid(self.resolved_r_max(), m_nodes or self.m_nodes, self.stretch, self.dimension)

    def resolved_horizon(self, kind: Optional[FrameKind] = None) -> float:
        if self.horizon is not None:
            return self.horizon
        return self.T if (kind or self.frame_kind) is FrameKind.PHYSICAL else 10.0

    def resolved_initial(self) -> InitialData:
        """Initial data, defaulting to B_k0 or the mean of B_k1 and B_k2."""
        if self.initial is not None:
            return self.initial
        if self.k0 is not None:
            return BarenblattData(self.k0)
        if self.k1 is not None and self.k2 is not None:
            return MeanOfBarenblatts(self.k1, self.k2, 0.5)
        raise ConfigError(f"initial: {self.command} needs initial data (or k0, or k1 and k2).")

    def reference_k(self) -> Optional[float]:
        """Parameter of the expected limit profile when it is known from the data."""
        if self.k0 is not None:
            return self.k0
        data = self.initial
        if isinstance(data, BarenblattPlusBump):
            return data.k0
        if isinstance(data, BarenblattData):
            return data.k
        return None

    def sandwich(self, profile: RadialProfile, frame: Frame) -> tuple[float, float]:
        """(k1, k2) with B_k1 <= u0 <= B_k2: configured values, else derived from the data."""
        if self.k1 is not None and self.k2 is not None:
            return self.k1, self.k2
        local = local_barenblatt_parameter(profile, frame)
        k1 = float(np.max(local)) * (1.0 + SANDWICH_PADDING)
        k2 = float(np.min(local)) / (1.0 + SANDWICH_PADDING)
        if not k2 > 0.0:
            raise ConfigError("k1, k2: initial data are not trapped between two Barenblatt profiles.")
        logger.info("Derived sandwich parameters k1 = %.6g, k2 = %.6g", k1, k2)
        return self.k1 or k1, self.k2 or k2

    def solver_config(self, kind: Optional[FrameKind] = None, k_boundary: Optional[float] = None) -> SolverConfig:
        if self.boundary is BoundaryKind.PINNED:
            boundary = BoundaryCondition.pinned_barenblatt(k_boundary or self.k_boundary)
        else:
            boundary = BoundaryCondition.fitted_tail()
        return SolverConfig(
            dt=self.dt,
            frame=self.make_frame(kind),
            boundary=boundary,
            newton_tol=self.newton_tol,
            newton_max_iter=self.newton_max_iter,
            positivity_floor=self.positivity_floor,
            scheme=self.scheme,
        )


_INT_KEYS = {"dimension", "m_nodes", "newton_max_iter", "seed"}
_FLOAT_KEYS = {
    "T", "k0", "k1", "k2", "r_max", "stretch", "dt", "newton_tol",
    "positivity_floor", "k_boundary", "horizon",
}
_ENUM_KEYS = {"command": Command, "boundary": BoundaryKind, "scheme": Scheme, "frame": FrameKind}
KNOWN_KEYS = {f.name for f in fields(RunConfig)}


def _convert(key: str, raw: str) -> object:
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}.") from None
    if key in _ENUM_KEYS:
        try:
            return _ENUM_KEYS[key](raw)
        except ValueError:
            allowed = ", ".join(member.value for member in _ENUM_KEYS[key])
            raise ConfigError(f"{key}: unknown value {raw!r}; use one of {allowed}.") from None
    if key == "initial":
        return parse_initial(raw)
    if key == "snapshots":
        try:
            return tuple(sorted(float(part) for part in raw.split(",") if part.strip()))
        except ValueError:
            raise ConfigError(f"snapshots: expected comma-separated clocks, got {raw!r}.") from None
    return raw


def parse_config(text: str, command: Optional[Union[Command, str]] = None) -> RunConfig:
    """Parse and validate a `key = value` configuration document.

    Args:
        text (str): Document text.
        command (Command | str | None): Command given on the command line;
            must agree with a `command` key when both are present.

    Returns:
        RunConfig: Validated configuration.

    Raises:
        ConfigError: For malformed lines, unknown or duplicate keys, invalid
            values, or violated command constraints; the message names the key.

    Examples:
        >>> parse_config("command = theorem1\\nk1 = 4\\nk2 = 1").dimension
        3
    """
    values: dict[str, object] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, raw = content.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"line {number}: expected 'key = value', got {line.strip()!r}.")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{key}: unknown key (line {number}).")
        if key in values:
            raise ConfigError(f"{key}: duplicate key (line {number}).")
        values[key] = _convert(key, raw)

    if command is not None:
        command = _convert("command", str(command))
        if "command" in values and values["command"] is not command:
            raise ConfigError(
                f"command: document says {values['command']} but {command} was requested."
            )
        values["command"] = command
    if "command" not in values:
        raise ConfigError("command: missing; give it in the document or on the command line.")
    return RunConfig(**values)


def load_config(path: Path, command: Optional[Union[Command, str]] = None, seed: Optional[int] = None) -> RunConfig:
    config = parse_config(Path(path).read_text(encoding="utf-8"), command)
    if seed is not None:
        config = replace(config, seed=seed)
    return config
