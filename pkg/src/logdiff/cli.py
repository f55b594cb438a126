"""Command-line interface for logdiff runs.

Each run reads a configuration document, executes one command and writes
its artifacts into an output directory: diagnostics.csv, summary.json and
snapshots/. Several --config files run concurrently, one directory each.

This script can be run either as a module (python -m logdiff.cli)
or directly as a script (python cli.py).

Classes:
    RunSummary: Pass/fail record and fitted constants of one run

Functions:
    run: Execute one configuration and write its artifacts
    main: Argument parsing and batch execution
"""

# Support both direct execution and module import
if __name__ == "__main__":
    # Running as script - use absolute imports with sys.path manipulation
    import sys
    from pathlib import Path

    # Add parent directory to path so we can import logdiff
    src_path = Path(__file__).parent.parent
    if str(src_path) not in sys.path:
        sys.path.insert(0, str(src_path))

    from logdiff import analysis
    from logdiff.barenblatt import (
        BarenblattSpec,
        barenblatt_mass_difference,
        barenblatt_profile,
        barenblatt_value,
        coefficient_growth_bounds,
        drift_diffusion_bound,
        drift_diffusion_operator,
        laplacian_weight_identity,
        rescale_identity_check,
        rescaled_barenblatt_profile,
        rescaled_barenblatt_value,
        residual_rescaled_pde,
        weight_value,
    )
    from logdiff.config import Command, MeanOfBarenblatts, RunConfig, initial_profile, load_config
    from logdiff.diagnostics import SCHEMA_VERSION, DiagnosticsSeries, write_snapshot
    from logdiff.errors import ConfigError, DivergentTailError, InvariantViolationError, LogDiffError
    from logdiff.grid import RadialProfile, extrapolated_laplacian, integrate_difference, make_grid
    from logdiff.solver import EvolutionState, Scheme, SolverConfig, evolve
    from logdiff.transform import FrameKind, to_selfsimilar
else:
    # Running as module - use relative imports
    from . import analysis
    from .barenblatt import (
        BarenblattSpec,
        barenblatt_mass_difference,
        barenblatt_profile,
        barenblatt_value,
        coefficient_growth_bounds,
        drift_diffusion_bound,
        drift_diffusion_operator,
        laplacian_weight_identity,
        rescale_identity_check,
        rescaled_barenblatt_profile,
        rescaled_barenblatt_value,
        residual_rescaled_pde,
        weight_value,
    )
    from .config import Command, MeanOfBarenblatts, RunConfig, initial_profile, load_config
    from .diagnostics import SCHEMA_VERSION, DiagnosticsSeries, write_snapshot
    from .errors import ConfigError, DivergentTailError, InvariantViolationError, LogDiffError
    from .grid import RadialProfile, extrapolated_laplacian, integrate_difference, make_grid
    from .solver import EvolutionState, Scheme, SolverConfig, evolve
    from .transform import FrameKind, to_selfsimilar

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import polars as pl

logger = logging.getLogger("logdiff.cli")

DEFAULT_OUTPUT = Path("logdiff-out")
IDENTITY_SAMPLES = 100
IDENTITY_TOL = 1e-12
STATIONARITY_TOL = 1e-3
TRACKING_TOL = 1e-2
AB_TOL = 1e-8
REFINEMENT_GAIN = 3.0
# drift below this is roundoff, where refinement cannot gain further
STATIONARITY_FLOOR = 1e-9
MASS_RTOL = 1e-2
WEIGHT_IDENTITY_RTOL = 1e-6
WEIGHT_LAPLACIAN_LEVELS = 4
# 398 cells on [0, 4] put a face at r = 1
POTENTIAL_CELLS = 398
K0_TOL = 1e-6
POTENTIAL_RTOL = 1e-8
CROSS_VALIDATION_TOL = 1e-6
DECAY_TARGET = 0.5
COEFFICIENT_TOL = 1e-10
EXTINCTION_WINDOW = 0.95


@dataclass
class RunSummary:
    """Outcome of one run, written as summary.json.

    Attributes:
        command (str): Command that was run.
        passed (bool): True iff every asserted check passed and no error occurred.
        failure (str | None): Description of the first failure.
        checks (dict[str, bool]): Asserted checks by name.
        constants (dict[str, float]): Fitted constants and measured quantities.
        k0 (float | None): Mass-matched or configured limit parameter.
        extinction_clock (float | None): Clock of the near-extinction signal.
    """

    command: str
    passed: bool = True
    failure: Optional[str] = None
    checks: dict[str, bool] = field(default_factory=dict)
    constants: dict[str, float] = field(default_factory=dict)
    k0: Optional[float] = None
    extinction_clock: Optional[float] = None

    def check(self, name: str, ok: bool, detail: Optional[str] = None) -> bool:
        ok = bool(ok)
        self.checks[name] = ok
        if not ok:
            self.fail(f"{name}: {detail}" if detail else name)
        return ok

    def fail(self, message: str) -> None:
        self.passed = False
        if self.failure is None:
            self.failure = message

    def to_json(self) -> dict:
        def clean(value: float) -> Optional[float]:
            return float(value) if value is not None and math.isfinite(value) else None

        return {
            "command": self.command,
            "passed": self.passed,
            "failure": self.failure,
            "checks": self.checks,
            "constants": {name: clean(value) for name, value in self.constants.items()},
            "k0": self.k0,
            "extinction_clock": self.extinction_clock,
            "diagnostics_schema": SCHEMA_VERSION,
        }

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")


def _write_series(series: DiagnosticsSeries, out: Path, name: str = "diagnostics.csv") -> None:
    series.write_csv(out / name)
    for clock, profile in sorted(series.snapshots.items()):
        write_snapshot(profile, clock, out / "snapshots")


def _integer_clocks(start: float, stop: float) -> list[float]:
    return [float(s) for s in range(math.floor(start) + 1, math.floor(stop + 1e-12) + 1)]


def _sup_relative(values: np.ndarray, exact: np.ndarray) -> float:
    return float(np.max(np.abs(values - exact) / exact))


def _simulate(config: RunConfig, out: Path, summary: RunSummary) -> None:
    frame = config.make_frame()
    grid = config.make_grid()
    u0 = initial_profile(config.resolved_initial(), grid, frame)
    start = 0.0 if frame.is_physical else frame.s_of_t(0.0)
    n = config.dimension

    monitors: list = []
    k_ref = config.reference_k()
    if k_ref is not None:
        monitors.append(analysis.sup_monitor(k_ref))
        if n == 3:
            monitors += [analysis.l1_monitor(k_ref), analysis.mass_monitor(k_ref)]
        elif n >= 5 and config.k2 is not None:
            monitors.append(analysis.weighted_l1_monitor(k_ref, config.k2))
    if config.k1 is not None and config.k2 is not None:
        monitors.append(analysis.sandwich_monitor(config.k1, config.k2))
    if frame.is_physical:
        monitors.append(analysis.aronson_benilan_monitor())

    final, series = evolve(
        EvolutionState(u0, start, frame),
        config.solver_config(),
        config.resolved_horizon(),
        monitors,
        config.snapshots,
    )
    _write_series(series, out)
    summary.extinction_clock = series.extinction_clock
    summary.constants["final_clock"] = final.clock
    summary.constants["steps"] = float(final.step_count)


def _barenblatt_table(config: RunConfig, out: Path, summary: RunSummary) -> None:
    k = config.reference_k() or 1.0
    spec = BarenblattSpec(k, config.T, config.dimension)
    grid = config.make_grid()
    rescaled = rescaled_barenblatt_value(grid.nodes, k, config.dimension)
    frames = [
        pl.DataFrame(
            {
                "t": np.full(grid.nodes.size, t),
                "r": grid.nodes,
                "value": barenblatt_value(grid.nodes, t, spec),
                "rescaled_value": rescaled,
            }
        )
        for t in (config.snapshots or (0.0,))
    ]
    pl.concat(frames).write_csv(out / "barenblatt.csv")
    summary.k0 = k
    if config.dimension == 3 and config.k1 is not None and config.k2 is not None:
        summary.constants["mass_difference"] = barenblatt_mass_difference(config.k1, config.k2)


def _match_k0(config: RunConfig, out: Path, summary: RunSummary) -> None:
    data = config.resolved_initial()
    frame = config.make_frame(FrameKind.PHYSICAL)
    u0 = initial_profile(data, config.make_grid(), frame)
    k1, k2 = config.sandwich(u0, frame)
    k0 = analysis.match_k0(u0, config.T, (k2, k1))
    summary.k0 = k0
    summary.constants["mass_residual"] = integrate_difference(
        u0,
        barenblatt_profile(BarenblattSpec(k0, config.T, 3), 0.0, u0.grid),
        richardson_levels=analysis.richardson_levels_for(u0.grid),
    )
    if isinstance(data, MeanOfBarenblatts):
        exact = data.matched_k0()
        summary.constants["k0_closed_form"] = exact
        summary.check("k0_closed_form", abs(k0 - exact) <= K0_TOL, f"k0 = {k0:.12g}, closed form {exact:.12g}")


def _stationary_drift(config: RunConfig, k: float, m_nodes: int) -> float:
    frame = config.make_frame(FrameKind.SELFSIMILAR)
    grid = config.make_grid(m_nodes)
    start = frame.s_of_t(0.0)
    exact = rescaled_barenblatt_profile(k, grid)
    final, _ = evolve(EvolutionState(exact, start, frame), config.solver_config(FrameKind.SELFSIMILAR), start + 1.0)
    return _sup_relative(final.profile.values, exact.values)


def _verify(config: RunConfig, out: Path, summary: RunSummary) -> None:
    n = config.dimension
    k = config.reference_k() or 1.0
    summary.k0 = k

    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(IDENTITY_SAMPLES):
        dim = int(rng.choice([3, 5, 6, 7]))
        spec = BarenblattSpec(float(rng.uniform(0.5, 5.0)), float(rng.uniform(0.5, 2.0)), dim)
        t = float(rng.uniform(0.0, 0.99)) * spec.T
        worst = max(worst, rescale_identity_check(spec, t, make_grid(10.0, 64, 1.0, dim)))
    summary.constants["rescale_identity_error"] = worst
    summary.check("rescale_identity", worst <= IDENTITY_TOL, f"sup error {worst:.3e}")

    coarse, fine = config.make_grid(), config.make_grid(2 * config.m_nodes)
    residuals = [
        float(np.max(np.abs(residual_rescaled_pde(rescaled_barenblatt_profile(k, g)).values[:-1])))
        for g in (coarse, fine)
    ]
    summary.constants["residual_coarse"], summary.constants["residual_fine"] = residuals
    summary.check(
        "residual_second_order",
        residuals[1] * REFINEMENT_GAIN <= residuals[0],
        f"residuals {residuals[0]:.3e} -> {residuals[1]:.3e}",
    )

    drift = _stationary_drift(config, k, config.m_nodes)
    drift_fine = _stationary_drift(config, k, 2 * config.m_nodes)
    summary.constants["stationarity_drift"] = drift
    summary.constants["stationarity_drift_fine"] = drift_fine
    summary.check("stationarity", drift <= STATIONARITY_TOL, f"sup relative drift {drift:.3e}")
    summary.check(
        "stationarity_refinement",
        drift_fine <= max(drift / REFINEMENT_GAIN, STATIONARITY_FLOOR),
        f"drift {drift:.3e} -> {drift_fine:.3e}",
    )

    if n == 3:
        exact = barenblatt_mass_difference(k, 4.0 * k)
        measured = integrate_difference(rescaled_barenblatt_profile(k, fine), rescaled_barenblatt_profile(4.0 * k, fine))
        error = abs(measured - exact) / abs(exact)
        summary.constants["mass_difference_error"] = error
        summary.check("mass_difference", error <= MASS_RTOL, f"relative error {error:.3e}")
    else:
        _verify_weight_identities(config, summary)

    _verify_potentials(n, summary)
    _verify_cross_validation(config, k, summary)
    _verify_tracking(config, k, summary)


def _verify_weight_identities(config: RunConfig, summary: RunSummary) -> None:
    n = config.dimension
    r_max = config.resolved_r_max()
    coarse = make_grid(r_max, config.m_nodes, 1.0, n)
    alpha = (n - 4) / 2.0
    worst_split = 0.0
    worst_laplacian = 0.0
    for k2 in (0.5, 1.0, 3.0):
        r = coarse.nodes
        closed = drift_diffusion_bound(r, k2, n)
        worst_split = max(worst_split, float(np.max(np.abs(drift_diffusion_operator(r, k2, n) - closed) / np.abs(closed))))
        extrapolated = extrapolated_laplacian(
            lambda radii, k2=k2: weight_value(radii, alpha, k2, n), r_max, config.m_nodes, n, WEIGHT_LAPLACIAN_LEVELS
        ).values[:-1]
        exact = laplacian_weight_identity(r[:-1], k2, n)
        worst_laplacian = max(worst_laplacian, float(np.max(np.abs(extrapolated - exact) / np.abs(exact))))
    summary.constants["drift_diffusion_split_error"] = worst_split
    summary.constants["laplacian_weight_error"] = worst_laplacian
    summary.check("drift_diffusion_identity", worst_split <= 1e-12, f"relative error {worst_split:.3e}")
    summary.check("laplacian_weight_identity", worst_laplacian <= WEIGHT_IDENTITY_RTOL, f"relative error {worst_laplacian:.3e}")


def _verify_potentials(n: int, summary: RunSummary) -> None:
    """Closed-form potentials of the unit-ball indicator and of psi = 1 on a grid with a face at r = 1."""
    grid = make_grid(4.0, POTENTIAL_CELLS, 1.0, n)
    r = grid.nodes
    indicator = RadialProfile(grid, np.where(r <= 1.0, 1.0, 0.0))
    newtonian = analysis.newtonian_potential_radial(indicator, analysis.SourceReconstruction.CELLS).values
    outside = r >= 1.0
    newtonian_exact = np.concatenate(([1.0 / (2.0 * (n - 2))], r[outside] ** (2 - n) / (n * (n - 2))))
    newtonian_error = float(
        np.max(np.abs(np.concatenate(([newtonian[0]], newtonian[outside])) - newtonian_exact) / newtonian_exact)
    )
    green = analysis.green_potential_radial(RadialProfile(grid, np.ones(r.size)), 3.0, analysis.SourceReconstruction.CELLS)
    green_exact = green.grid.nodes[1:] ** 2 / (2 * n)
    green_error = float(np.max(np.abs(green.values[1:] - green_exact) / green_exact))
    summary.constants["newtonian_potential_error"] = newtonian_error
    summary.constants["green_potential_error"] = green_error
    summary.check("newtonian_potential", newtonian_error <= POTENTIAL_RTOL, f"relative error {newtonian_error:.3e}")
    summary.check("green_potential", green_error <= POTENTIAL_RTOL, f"relative error {green_error:.3e}")


def _verify_cross_validation(config: RunConfig, k: float, summary: RunSummary) -> None:
    """One nonlinear step of a moving mixture and of B~_k against the frozen linear step."""
    n = config.dimension
    frame = config.make_frame(FrameKind.SELFSIMILAR)
    grid = config.make_grid()
    lower, upper = rescaled_barenblatt_profile(2.0 * k, grid), rescaled_barenblatt_profile(0.5 * k, grid)
    mixture = RadialProfile(grid, 0.5 * (lower.values + upper.values))
    _cross_validate(
        EvolutionState(mixture, frame.s_of_t(0.0), frame),
        rescaled_barenblatt_profile(k, grid),
        config.solver_config(FrameKind.SELFSIMILAR),
        coefficient_growth_bounds(2.0 * k, 0.5 * k, n),
        summary,
    )


def _verify_tracking(config: RunConfig, k: float, summary: RunSummary) -> None:
    frame = config.make_frame(FrameKind.PHYSICAL)
    grid = config.make_grid()
    spec = BarenblattSpec(k, config.T, config.dimension)
    final_time = 0.9 * config.T
    samples = (round(0.3 * config.T, 12), round(0.6 * config.T, 12), final_time)
    u0 = barenblatt_profile(spec, 0.0, grid)
    _, series = evolve(
        EvolutionState(u0, 0.0, frame),
        replace(config.solver_config(FrameKind.PHYSICAL), scheme=Scheme.TR_BDF2),
        final_time,
        [analysis.aronson_benilan_monitor()],
        samples,
    )
    final = series.snapshots[final_time]
    error = _sup_relative(final.values, barenblatt_value(grid.nodes, final_time, spec))
    violation = float(np.max(series.column("ab_violation")))
    summary.constants["tracking_error"] = error
    summary.constants["ab_violation_max"] = violation
    summary.check("exact_tracking", error <= TRACKING_TOL, f"sup relative error {error:.3e} at t = {final_time:g}")
    summary.check("aronson_benilan", violation <= AB_TOL * u0.sup, f"violation {violation:.3e}")

    # local L1 growth between the run and the explicit B_4k
    companion = BarenblattSpec(4.0 * k, config.T, config.dimension)
    u_series = {0.0: u0, **{t: series.snapshots[t] for t in samples}}
    v_series = {t: barenblatt_profile(companion, t, grid) for t in u_series}
    radii = [grid.r_max / 8.0, grid.r_max / 4.0, grid.r_max / 2.0]
    constants = {
        variant: analysis.estimate_growth_constant(u_series, v_series, radii, config.T, positive_part=positive).constant
        for variant, positive in (("growth_constant_positive", True), ("growth_constant_absolute", False))
    }
    summary.constants.update(constants)
    summary.check(
        "growth_constant",
        all(math.isfinite(value) and value >= 0.0 for value in constants.values()),
        f"constants {constants}",
    )


def _selfsimilar_start(config: RunConfig):
    """Grid, sandwich, initial self-similar state and its physical data."""
    frame = config.make_frame(FrameKind.SELFSIMILAR)
    physical = frame.with_kind(FrameKind.PHYSICAL)
    grid = config.make_grid()
    data = config.resolved_initial()
    u0_physical = initial_profile(data, grid, physical)
    k1, k2 = config.sandwich(u0_physical, physical)
    state = EvolutionState(initial_profile(data, grid, frame), frame.s_of_t(0.0), frame)
    return grid, (k1, k2), state, u0_physical


def _cross_validate(
    state: EvolutionState,
    reference: RadialProfile,
    solver_config: SolverConfig,
    bounds: tuple[float, float],
    summary: RunSummary,
) -> None:
    """One backward-Euler step of state and of reference against the frozen linear step."""
    gap = analysis.cross_validate_contraction(
        state, EvolutionState(reference, state.clock, state.frame), solver_config, bounds
    )
    summary.constants["cross_validation_gap"] = gap
    summary.check("cross_validation", gap <= CROSS_VALIDATION_TOL, f"relative gap {gap:.3e}")


def _theorem1(config: RunConfig, out: Path, summary: RunSummary) -> None:
    grid, (k1, k2), state, u0_physical = _selfsimilar_start(config)
    k0 = config.k0 or analysis.match_k0(u0_physical, config.T, (k2, k1))
    summary.k0 = k0
    horizon = config.resolved_horizon()
    checkpoints = sorted(set(_integer_clocks(state.clock, horizon)) | set(config.snapshots))
    solver_config = config.solver_config(k_boundary=config.k_boundary or k0)
    reference = rescaled_barenblatt_profile(k0, grid)
    initial_l1 = analysis.l1_distance(state.profile, reference)
    summary.constants["initial_l1_dist"] = initial_l1
    _cross_validate(state, reference, solver_config, coefficient_growth_bounds(k1, k2, 3), summary)

    monitors = [
        analysis.l1_monitor(k0),
        analysis.sup_monitor(k0),
        analysis.sandwich_monitor(k1, k2),
        analysis.mass_monitor(k0),
    ]
    final, series = evolve(state, solver_config, horizon, monitors, checkpoints)
    _write_series(series, out)
    summary.check("no_extinction", series.extinction_clock is None, f"signal at {series.extinction_clock}")

    report = analysis.check_contraction(series, "plain_l1", initial=(state.clock, initial_l1))
    summary.check("l1_contraction", report.passed, report.first_failure)
    summary.constants["checkpoint_ratio_max"] = max(report.checkpoint_ratios.values(), default=math.nan)
    decay = float(series.column("l1_dist")[-1]) / initial_l1 if initial_l1 > 0.0 else 0.0
    summary.constants["l1_decay_ratio"] = decay
    summary.check("l1_decay", decay <= DECAY_TARGET, f"final/initial ratio {decay:.4f}")
    summary.constants["mass_mismatch_max"] = float(np.max(np.abs(series.column("mass_mismatch"))))
    summary.constants["sandwich_margin_min"] = float(
        min(np.min(series.column("sandwich_margin_low")), np.min(series.column("sandwich_margin_high")))
    )
    summary.checks["sandwich"] = True

    # companion run started from B~_k0 for the two-solution contraction
    companion = EvolutionState(reference, state.clock, state.frame)
    pair = analysis.pairwise_l1_monitor(companion, solver_config)
    _, pair_series = evolve(
        state, solver_config, horizon, [pair, analysis.coefficient_monitor(pair, k1, k2)], checkpoints
    )
    pair_series.write_csv(out / "contraction.csv")
    pair_report = analysis.check_contraction(pair_series, "plain_l1", initial=(state.clock, initial_l1))
    summary.check("pairwise_contraction", pair_report.passed, pair_report.first_failure)
    margin = float(np.min(pair_series.column("coeff_bound_margin")))
    summary.constants["coeff_bound_margin_min"] = margin
    summary.constants["coefficient_c1"], summary.constants["coefficient_c2"] = coefficient_growth_bounds(k1, k2, 3)
    summary.check("coefficient_bounds", margin >= -COEFFICIENT_TOL, f"margin {margin:.3e}")
    logger.info("theorem1 finished at s = %.6g with l1 ratio %.4f", final.clock, decay)


def _theorem2(config: RunConfig, out: Path, summary: RunSummary) -> None:
    k_ref = config.reference_k()
    if k_ref is None:
        raise ConfigError("k0: theorem2 needs the limit parameter (k0 or barenblatt-plus-bump data).")
    summary.k0 = k_ref
    grid, (k1, k2), state, _ = _selfsimilar_start(config)
    n = config.dimension
    horizon = config.resolved_horizon()
    checkpoints = sorted(set(_integer_clocks(state.clock, horizon)) | set(config.snapshots))
    reference = rescaled_barenblatt_profile(k_ref, grid)
    initial = analysis.weighted_l1_distance(state.profile, reference, k2, n)
    summary.constants["initial_weighted_l1_dist"] = initial
    solver_config = config.solver_config(k_boundary=config.k_boundary or k_ref)
    _cross_validate(state, reference, solver_config, coefficient_growth_bounds(k1, k2, n), summary)

    monitors = [
        analysis.weighted_l1_monitor(k_ref, k2),
        analysis.sup_monitor(k_ref),
        analysis.sandwich_monitor(k1, k2),
    ]
    _, series = evolve(state, solver_config, horizon, monitors, checkpoints)
    _write_series(series, out)
    summary.check("no_extinction", series.extinction_clock is None, f"signal at {series.extinction_clock}")

    report = analysis.check_contraction(series, "weighted_l1", initial=(state.clock, initial))
    summary.check("weighted_decrease", report.passed, report.first_failure)
    summary.constants["weighted_growth_constant"] = report.fitted_constant
    summary.constants["decreasing_step_fraction"] = report.decreasing_steps / max(report.steps, 1)
    summary.constants["checkpoint_ratio_max"] = max(report.checkpoint_ratios.values(), default=math.nan)
    summary.checks["sandwich"] = True

    try:
        analysis.weighted_l1_distance(reference, rescaled_barenblatt_profile(4.0 * k_ref, grid), k2, n)
        certified = False
    except DivergentTailError:
        certified = True
    summary.check("divergence_certificate", certified, "B~_k vs B~_4k was not rejected")


def _extinction(config: RunConfig, out: Path, summary: RunSummary) -> None:
    k_ref = config.reference_k()
    if k_ref is None:
        raise ConfigError("k0: extinction needs the reference parameter (k0 or barenblatt-plus-bump data).")
    summary.k0 = k_ref
    T = config.T
    frame = config.make_frame(FrameKind.PHYSICAL)
    grid = config.make_grid()
    spec = BarenblattSpec(k_ref, T, config.dimension)
    u0 = initial_profile(config.resolved_initial(), grid, frame)
    f_l1 = analysis.l1_distance(u0, barenblatt_profile(spec, 0.0, grid))
    summary.constants["perturbation_l1"] = f_l1
    late = EXTINCTION_WINDOW * T
    checkpoints = sorted({round(0.1 * i * T, 12) for i in range(1, 10)} | {late} | set(config.snapshots))

    _, series = evolve(
        EvolutionState(u0, 0.0, frame),
        config.solver_config(FrameKind.PHYSICAL),
        config.resolved_horizon(FrameKind.PHYSICAL),
        [analysis.aronson_benilan_monitor()],
        checkpoints,
    )
    _write_series(series, out)
    clock = series.extinction_clock
    summary.extinction_clock = clock
    summary.check(
        "extinction_time",
        clock is not None and late <= clock <= T + config.dt,
        f"signal at {clock} outside [{late:g}, {T + config.dt:g}]",
    )

    at_late = series.snapshots.get(late)
    if summary.check("late_state_reached", at_late is not None, f"no state at t = {late:g}"):
        bound = float(barenblatt_value(0.0, late, spec))
        summary.constants["sup_ratio_late"] = at_late.sup / bound
        summary.check("sup_bound", at_late.sup <= bound * (1.0 + TRACKING_TOL), f"sup {at_late.sup:.6g} vs {bound:.6g}")

    bound_report = analysis.l1_bound_against_barenblatt(series.snapshots, spec, f_l1)
    summary.constants["l1_distance_max"] = max(bound_report.distances.values(), default=math.nan)
    summary.check("l1_bound", bound_report.passed, f"distance exceeds {f_l1:.6g}")

    views = {
        frame.s_of_t(t): to_selfsimilar(profile, t, frame)[0]
        for t, profile in series.snapshots.items()
        if t < T
    }
    envelope = analysis.check_envelope(views, 0.0, f_l1)
    summary.check("envelope_bounded", envelope.bounded, "profile vanished before extinction")
    summary.constants.update({"envelope_c1": envelope.c1, "envelope_c2": envelope.c2, "envelope_c3": envelope.c3})

    if len(series):
        violation = float(np.max(series.column("ab_violation")))
        summary.constants["ab_violation_max"] = violation
        summary.check("aronson_benilan", violation <= AB_TOL * u0.sup, f"violation {violation:.3e}")


COMMANDS: dict[Command, Callable[[RunConfig, Path, RunSummary], None]] = {
    Command.SIMULATE: _simulate,
    Command.BARENBLATT_TABLE: _barenblatt_table,
    Command.MATCH_K0: _match_k0,
    Command.VERIFY: _verify,
    Command.THEOREM1: _theorem1,
    Command.THEOREM2: _theorem2,
    Command.EXTINCTION: _extinction,
}


def run(config: RunConfig, out: Path) -> int:
    """Execute one configuration, writing its artifacts into out.

    Returns:
        int: 0 iff every asserted check passed, 1 otherwise.
    """
    out.mkdir(parents=True, exist_ok=True)
    summary = RunSummary(str(config.command))
    logger.info("Running %s (N = %d) into %s", config.command, config.dimension, out)
    try:
        COMMANDS[config.command](config, out, summary)
    except InvariantViolationError as error:
        if error.series is not None:
            _write_series(error.series, out)
        summary.fail(f"InvariantViolationError: {error}")
    except (LogDiffError, ValueError) as error:
        summary.fail(f"{type(error).__name__}: {error}")
    summary.write(out / "summary.json")
    if summary.passed:
        logger.info("%s passed", config.command)
    else:
        logger.error("%s failed: %s", config.command, summary.failure)
    return 0 if summary.passed else 1


def _output_dir(base: Optional[Path], config: RunConfig, path: Path, batch: bool) -> Path:
    if batch:
        return (base or DEFAULT_OUTPUT) / path.stem
    return base or (Path(config.output) if config.output else DEFAULT_OUTPUT)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="logdiff",
        description="Simulate and verify radial logarithmic diffusion u_t = Delta log u.",
    )
    parser.add_argument("command", choices=[command.value for command in Command])
    parser.add_argument("--config", action="append", required=True, type=Path, help="run configuration (repeatable)")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    parser.add_argument("--threads", type=int, default=1, help="concurrent runs of a batch")
    parser.add_argument("-v", "--verbose", action="store_true", help="log Newton iterations")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    batch = len(args.config) > 1
    jobs = []
    for path in args.config:
        try:
            config = load_config(path, args.command, args.seed)
        except (ConfigError, OSError) as error:
            print(f"Error: {path}: {error}", file=sys.stderr)
            return 2
        jobs.append((path, config, _output_dir(args.out, config, path, batch)))

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        statuses = list(pool.map(lambda job: run(job[1], job[2]), jobs))
    for (path, _, out), status in zip(jobs, statuses):
        print(f"{path}: {'passed' if status == 0 else 'FAILED'} ({out / 'summary.json'})")
    return max(statuses)


if __name__ == "__main__":
    sys.exit(main())
