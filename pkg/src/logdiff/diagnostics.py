"""Per-step diagnostics of an evolution and their file formats.

Classes:
    DiagnosticsRecord: Monitored quantities after one accepted step
    DiagnosticsSeries: Ordered records of one run, plus snapshots and the extinction clock

Functions:
    write_snapshot: Two-column profile CSV plus a JSON sidecar with the tail law
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Iterator, Mapping, Optional

import numpy as np
import polars as pl

from .grid import RadialProfile

if TYPE_CHECKING:
    from .solver import EvolutionState

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

COLUMNS = (
    "clock",
    "dt_used",
    "l1_dist",
    "weighted_l1_dist",
    "sup_dist",
    "sandwich_margin_low",
    "sandwich_margin_high",
    "mass_mismatch",
    "ab_violation",
    "coeff_bound_margin",
)

# columns that hold distances and must never be negative
DISTANCE_COLUMNS = ("l1_dist", "weighted_l1_dist", "sup_dist", "ab_violation")

# Monitor(previous state, accepted state, dt used) -> record fields
Monitor = Callable[["EvolutionState", "EvolutionState", float], Mapping[str, float]]


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Quantities monitored after one accepted step; None means not monitored."""

    clock: float
    dt_used: float
    l1_dist: Optional[float] = None
    weighted_l1_dist: Optional[float] = None
    sup_dist: Optional[float] = None
    sandwich_margin_low: Optional[float] = None
    sandwich_margin_high: Optional[float] = None
    mass_mismatch: Optional[float] = None
    ab_violation: Optional[float] = None
    coeff_bound_margin: Optional[float] = None

    def __post_init__(self):
        for name in DISTANCE_COLUMNS:
            value = getattr(self, name)
            if value is not None and value < 0.0:
                raise ValueError(f"Diagnostics column {name} must be non-negative, got {value!r}.")

    @classmethod
    def from_fields(cls, clock: float, dt_used: float, values: Mapping[str, float]) -> "DiagnosticsRecord":
        unknown = set(values) - set(COLUMNS)
        if unknown:
            raise ValueError(f"Unknown diagnostics columns: {sorted(unknown)}.")
        return cls(clock=clock, dt_used=dt_used, **{k: float(v) for k, v in values.items()})


@dataclass
class DiagnosticsSeries:
    """Diagnostics of one run.

    A series has a single writer, the evolution that fills it.

    Attributes:
        records (list[DiagnosticsRecord]): One record per accepted step, clocks strictly increasing.
        snapshots (dict[float, RadialProfile]): Profiles stored at requested checkpoint clocks.
        extinction_clock (float | None): Clock at which the near-extinction signal fired.
    """

    records: list[DiagnosticsRecord] = field(default_factory=list)
    snapshots: dict[float, RadialProfile] = field(default_factory=dict)
    extinction_clock: Optional[float] = None

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DiagnosticsRecord]:
        return iter(self.records)

    def append(self, record: DiagnosticsRecord) -> None:
        if self.records and not record.clock > self.records[-1].clock:
            raise ValueError(
                f"Diagnostics clocks must increase strictly: {record.clock!r} "
                f"after {self.records[-1].clock!r}."
            )
        self.records.append(record)

    @property
    def clocks(self) -> np.ndarray:
        return np.array([record.clock for record in self.records], dtype=np.float64)

    def column(self, name: str) -> np.ndarray:
        """Column as floats, NaN where the quantity was not monitored."""
        if name not in COLUMNS:
            raise KeyError(f"Unknown diagnostics column {name!r}.")
        return np.array(
            [math.nan if (v := getattr(r, name)) is None else v for r in self.records],
            dtype=np.float64,
        )

    def has_column(self, name: str) -> bool:
        return bool(self.records) and all(getattr(r, name) is not None for r in self.records)

    def to_frame(self) -> pl.DataFrame:
        data = {name: [getattr(r, name) for r in self.records] for name in COLUMNS}
        return pl.DataFrame(data, schema={name: pl.Float64 for name in COLUMNS})

    def write_csv(self, path: Path) -> None:
        """Write the diagnostics CSV; unmonitored quantities become empty fields."""
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().write_csv(path, null_value="")
        logger.info("Wrote %d diagnostics rows to %s", len(self.records), path)


def write_snapshot(profile: RadialProfile, clock: float, directory: Path) -> Path:
    """Write profile_<clock>.csv (columns r, value) and a .json sidecar.

    Returns:
        Path: The CSV path.
    """
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"profile_{clock:.6f}"
    csv_path = directory / f"{stem}.csv"
    pl.DataFrame({"r": profile.grid.nodes, "value": profile.values}).write_csv(csv_path)
    sidecar = {
        "clock": clock,
        "dimension": profile.grid.dimension,
        "tail_c": None if profile.tail is None else profile.tail.c,
        "tail_k": None if profile.tail is None else profile.tail.k,
        "tail_laws": None if profile.tail is None else [[law.c, law.k] for law in profile.tail.components],
    }
    (directory / f"{stem}.json").write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    return csv_path
