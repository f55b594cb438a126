"""Unit tests for the implicit radial solver."""

import logging

import numpy as np
import pytest

from logdiff.barenblatt import (  # type: ignore
    BarenblattSpec,
    barenblatt_profile,
    coefficient_growth_bounds,
    rescaled_barenblatt_profile,
    rescaled_barenblatt_value,
)
from logdiff.errors import CoefficientBoundError, GridMismatchError, NewtonConvergenceError  # type: ignore
from logdiff.grid import RadialProfile, make_grid  # type: ignore
from logdiff.solver import (  # type: ignore
    BoundaryCondition,
    BoundaryKind,
    EvolutionState,
    Scheme,
    SolverConfig,
    apply_operator,
    drift_face_weights,
    resolve_boundary,
    solve_dirichlet_frozen,
    step,
    step_to,
)
from logdiff.transform import Frame, FrameKind  # type: ignore


def selfsimilar(dimension=3):
    return Frame(FrameKind.SELFSIMILAR, 1.0, dimension)


def physical(dimension=3):
    return Frame(FrameKind.PHYSICAL, 1.0, dimension)


class TestSolverConfig:
    """Test solver configuration validation."""

    def test_defaults(self):
        """Test the default Newton parameters and boundary."""
        config = SolverConfig(0.01, selfsimilar())
        assert config.newton_tol == 1e-10
        assert config.newton_max_iter == 50
        assert config.positivity_floor == 1e-30
        assert config.boundary.kind is BoundaryKind.PINNED
        assert config.scheme is Scheme.BACKWARD_EULER

    def test_non_positive_dt_rejected(self):
        """Test that dt <= 0 raises ValueError."""
        with pytest.raises(ValueError, match="dt must be positive"):
            SolverConfig(0.0, selfsimilar())

    def test_newton_budget_rejected(self):
        """Test that a zero Newton budget is rejected."""
        with pytest.raises(ValueError, match="newton_max_iter"):
            SolverConfig(0.1, selfsimilar(), newton_max_iter=0)

    def test_scheme_from_string(self):
        """Test that the scheme may be given by name."""
        assert SolverConfig(0.1, selfsimilar(), scheme="tr_bdf2").scheme is Scheme.TR_BDF2

    def test_dimension_four_warns(self, caplog):
        """Test that N = 4 is accepted with a warning."""
        with caplog.at_level(logging.WARNING, logger="logdiff.solver"):
            SolverConfig(0.1, selfsimilar(4))
        assert "N = 4" in caplog.text

    def test_invalid_boundary_parameter(self):
        """Test that a non-positive k_boundary is rejected."""
        with pytest.raises(ValueError, match="k_boundary"):
            BoundaryCondition.pinned_barenblatt(-1.0)


class TestEvolutionState:
    """Test evolution state validation."""

    def test_zero_node_rejected(self):
        """Test that a non-positive node is reported by index."""
        grid = make_grid(10.0, 16, 1.0, 3)
        values = np.ones(17)
        values[4] = 0.0
        with pytest.raises(ValueError, match="node 4"):
            EvolutionState(RadialProfile(grid, values), 0.0, selfsimilar())

    def test_dimension_mismatch_rejected(self):
        """Test that profile and frame dimensions must agree."""
        grid = make_grid(10.0, 16, 1.0, 3)
        with pytest.raises(ValueError, match="dimension"):
            EvolutionState(RadialProfile(grid, np.ones(17)), 0.0, selfsimilar(5))


class TestResolveBoundary:
    """Test resolution of the pinned boundary parameter."""

    def test_selfsimilar_barenblatt(self):
        """Test that B~_k at the boundary resolves to k."""
        grid = make_grid(20.0, 100, 1.0, 3)
        state = EvolutionState(rescaled_barenblatt_profile(2.5, grid), 0.0, selfsimilar())
        config = resolve_boundary(SolverConfig(0.1, selfsimilar()), state)
        assert config.boundary.k_boundary == pytest.approx(2.5, rel=1e-10)

    def test_physical_barenblatt(self):
        """Test that B_k(., t) at the boundary resolves to k in the physical frame."""
        grid = make_grid(20.0, 100, 1.0, 5)
        spec = BarenblattSpec(1.5, 1.0, 5)
        state = EvolutionState(barenblatt_profile(spec, 0.3, grid), 0.3, physical(5))
        config = resolve_boundary(SolverConfig(0.1, physical(5)), state)
        assert config.boundary.k_boundary == pytest.approx(1.5, rel=1e-10)

    def test_explicit_value_kept(self):
        """Test that an explicit k_boundary is not overwritten."""
        grid = make_grid(20.0, 100, 1.0, 3)
        state = EvolutionState(rescaled_barenblatt_profile(2.5, grid), 0.0, selfsimilar())
        config = SolverConfig(0.1, selfsimilar(), BoundaryCondition.pinned_barenblatt(3.0))
        assert resolve_boundary(config, state).boundary.k_boundary == 3.0

    def test_non_barenblatt_value_rejected(self):
        """Test that a boundary value above every Barenblatt value is rejected."""
        grid = make_grid(20.0, 100, 1.0, 3)
        state = EvolutionState(RadialProfile(grid, np.ones(101)), 0.0, selfsimilar())
        with pytest.raises(ValueError, match="not a Barenblatt value"):
            resolve_boundary(SolverConfig(0.1, selfsimilar()), state)


class TestApplyOperator:
    """Test the discrete right-hand side."""

    @pytest.mark.parametrize(
        "k, stretch, dimension",
        [(1.0, 1.0, 3), (0.25, 1.0, 3), (4.0, 1.01, 3), (2.0, 1.005, 5)],
    )
    def test_barenblatt_is_discrete_steady_state(self, k, stretch, dimension):
        """Test that the self-similar operator vanishes to roundoff on sampled B~_k at interior nodes."""
        grid = make_grid(20.0, 400, stretch, dimension)
        b = rescaled_barenblatt_profile(k, grid)
        rhs = apply_operator(b, selfsimilar(dimension))
        assert np.max(np.abs(rhs.values[:-1]) / b.values[:-1]) < 1e-9

    def test_mixture_is_not_steady(self):
        """Test that a mean of two Barenblatt profiles is moved by the operator."""
        grid = make_grid(20.0, 400, 1.0, 3)
        mean = 0.5 * (rescaled_barenblatt_value(grid.nodes, 4.0, 3) + rescaled_barenblatt_value(grid.nodes, 1.0, 3))
        rhs = apply_operator(RadialProfile(grid, mean), selfsimilar())
        assert np.max(np.abs(rhs.values[:-1]) / mean[:-1]) > 1e-2

    def test_constant_is_physical_steady_state(self):
        """Test that Delta log u vanishes for constant u."""
        grid = make_grid(5.0, 32, 1.1, 5)
        rhs = apply_operator(RadialProfile(grid, np.full(33, 2.0)), physical(5))
        assert np.allclose(rhs.values, 0.0, atol=1e-12)

    def test_non_positive_profile_rejected(self):
        """Test that the operator needs u > 0."""
        grid = make_grid(5.0, 16, 1.0, 3)
        with pytest.raises(ValueError, match="strictly positive"):
            apply_operator(RadialProfile(grid, np.zeros(17)), physical())


class TestStep:
    """Test single implicit steps."""

    def test_step_advances_clock(self):
        """Test that one step advances the clock by dt and counts the step."""
        grid = make_grid(20.0, 100, 1.0, 3)
        state = EvolutionState(rescaled_barenblatt_profile(1.0, grid), 0.0, selfsimilar())
        new_state = step(state, SolverConfig(0.1, selfsimilar()))
        assert new_state.clock == pytest.approx(0.1)
        assert new_state.step_count == 1
        assert np.all(new_state.profile.values > 0.0)

    def test_step_to_lands_exactly(self):
        """Test that step_to lands on the requested clock."""
        grid = make_grid(20.0, 100, 1.0, 3)
        state = EvolutionState(rescaled_barenblatt_profile(1.0, grid), 0.0, selfsimilar())
        assert step_to(state, SolverConfig(0.1, selfsimilar()), 0.037).clock == 0.037

    def test_pinned_boundary_value(self):
        """Test that the boundary node holds the pinned Barenblatt value and tail."""
        grid = make_grid(20.0, 100, 1.0, 3)
        state = EvolutionState(rescaled_barenblatt_profile(2.0, grid), 0.0, selfsimilar())
        config = SolverConfig(0.1, selfsimilar(), BoundaryCondition.pinned_barenblatt(2.0))
        new_state = step(state, config)
        assert new_state.profile.values[-1] == pytest.approx(rescaled_barenblatt_value(20.0, 2.0, 3))
        assert new_state.profile.tail.k == 2.0

    def test_tr_bdf2_step(self):
        """Test that a TR-BDF2 step leaves B~_k in place."""
        grid = make_grid(20.0, 200, 1.0, 3)
        b = rescaled_barenblatt_profile(1.0, grid)
        config = SolverConfig(0.1, selfsimilar(), scheme=Scheme.TR_BDF2)
        new_state = step(EvolutionState(b, 0.0, selfsimilar()), config)
        assert np.max(np.abs(new_state.profile.values - b.values) / b.values) < 1e-9

    def test_fitted_tail_boundary(self):
        """Test that the fitted-tail boundary leaves B~_k in place up to the fit roundoff."""
        grid = make_grid(20.0, 200, 1.0, 3)
        b = rescaled_barenblatt_profile(1.0, grid)
        config = SolverConfig(0.05, selfsimilar(), BoundaryCondition.fitted_tail())
        new_state = step(EvolutionState(b, 0.0, selfsimilar()), config)
        assert new_state.profile.tail is not None
        assert np.max(np.abs(new_state.profile.values - b.values) / b.values) < 1e-9

    def test_newton_budget_exhausted(self):
        """Test that a one-iteration budget fails on a large step from far data."""
        grid = make_grid(20.0, 100, 1.0, 3)
        far = RadialProfile(grid, 0.2 * np.exp(-grid.nodes / 5.0))
        config = SolverConfig(1.0, selfsimilar(), BoundaryCondition.pinned_barenblatt(1.0), newton_max_iter=1)
        with pytest.raises(NewtonConvergenceError) as info:
            step(EvolutionState(far, 0.0, selfsimilar()), config)
        assert info.value.iterations == 1

    def test_backward_step_rejected(self):
        """Test that a step must move the clock forward."""
        grid = make_grid(20.0, 100, 1.0, 3)
        state = EvolutionState(rescaled_barenblatt_profile(1.0, grid), 1.0, selfsimilar())
        with pytest.raises(ValueError, match="forward"):
            step_to(state, SolverConfig(0.1, selfsimilar()), 0.5)


class TestSolveDirichletFrozen:
    """Test the frozen-coefficient linear step."""

    def setup_method(self):
        self.grid = make_grid(20.0, 200, 1.0, 3)
        self.config = SolverConfig(0.1, selfsimilar())
        self.bounds = coefficient_growth_bounds(4.0, 1.0, 3)
        self.coefficient = RadialProfile(self.grid, 1.0 / rescaled_barenblatt_value(self.grid.nodes, 2.0, 3))

    def test_mass_non_increasing(self):
        """Test that sum V p does not grow for p >= 0 with zero boundary value."""
        p = RadialProfile(
            self.grid,
            rescaled_barenblatt_value(self.grid.nodes, 1.0, 3) - rescaled_barenblatt_value(self.grid.nodes, 4.0, 3),
        )
        volumes = self.grid.control_volumes[:-1]
        new = solve_dirichlet_frozen(self.coefficient, p, self.config, self.bounds)
        assert new.values[-1] == 0.0
        assert np.dot(volumes, new.values[:-1]) <= np.dot(volumes, p.values[:-1]) * (1.0 + 1e-8)

    def test_zero_data_stays_zero(self):
        """Test that zero data with a zero boundary value stays zero."""
        p = RadialProfile(self.grid, np.zeros(201))
        new = solve_dirichlet_frozen(self.coefficient, p, self.config, self.bounds)
        assert np.all(new.values == 0.0)

    def test_coefficient_outside_bounds_rejected(self):
        """Test that a coefficient below C1 (1 + r^2) is rejected."""
        small = RadialProfile(self.grid, 0.1 * self.coefficient.values)
        with pytest.raises(CoefficientBoundError, match="C1"):
            solve_dirichlet_frozen(small, RadialProfile(self.grid, np.zeros(201)), self.config, self.bounds)

    def test_grid_mismatch_rejected(self):
        """Test that coefficient and data must share a grid."""
        other = RadialProfile(make_grid(10.0, 200, 1.0, 3), np.zeros(201))
        with pytest.raises(GridMismatchError):
            solve_dirichlet_frozen(self.coefficient, other, self.config, self.bounds)

    def test_central_weights_are_default(self):
        """Test that explicit one-half face weights reproduce the default step."""
        p = RadialProfile(self.grid, rescaled_barenblatt_value(self.grid.nodes, 1.0, 3))
        halves = (np.full(200, 0.5), np.full(200, 0.5))
        default = solve_dirichlet_frozen(self.coefficient, p, self.config, self.bounds)
        weighted = solve_dirichlet_frozen(self.coefficient, p, self.config, self.bounds, face_weights=halves)
        assert np.array_equal(default.values, weighted.values)

    def test_face_weights_shape_checked(self):
        """Test that face weights need one entry per face."""
        p = RadialProfile(self.grid, np.zeros(201))
        with pytest.raises(ValueError, match="200 entries"):
            solve_dirichlet_frozen(
                self.coefficient, p, self.config, self.bounds, face_weights=(np.ones(201), np.ones(201))
            )


class TestDriftFaceWeights:
    """Test the exact linearization of the drift face values."""

    def test_equal_profiles_give_central_weights(self):
        """Test that two equal constants give beta = gamma = 1/2."""
        grid = make_grid(5.0, 16, 1.0, 3)
        u = RadialProfile(grid, np.full(17, 2.0))
        beta, gamma = drift_face_weights(u, u)
        assert np.allclose(beta, 0.5, rtol=1e-12)
        assert np.allclose(gamma, 0.5, rtol=1e-12)

    def test_doubled_constant(self):
        """Test the closed-form weights of u = 2 against v = 1.

        The face value of (1, 2) is 2 log 2, so beta = 2 - 2 log 2 and gamma = 2 log 2 - 1.
        """
        grid = make_grid(5.0, 16, 1.0, 3)
        beta, gamma = drift_face_weights(RadialProfile(grid, np.full(17, 2.0)), RadialProfile(grid, np.ones(17)))
        assert np.allclose(beta, 2.0 - 2.0 * np.log(2.0), rtol=1e-12)
        assert np.allclose(gamma, 2.0 * np.log(2.0) - 1.0, rtol=1e-12)

    def test_weights_positive_for_barenblatts(self):
        """Test that the weights of two Barenblatt profiles are positive and sum to about one."""
        grid = make_grid(20.0, 200, 1.0, 3)
        beta, gamma = drift_face_weights(rescaled_barenblatt_profile(1.0, grid), rescaled_barenblatt_profile(4.0, grid))
        assert np.all(beta > 0.0) and np.all(gamma > 0.0)
        assert np.allclose(beta + gamma, 1.0, atol=0.1)

    def test_grid_mismatch_rejected(self):
        """Test that the profiles must share a grid."""
        with pytest.raises(GridMismatchError):
            drift_face_weights(
                rescaled_barenblatt_profile(1.0, make_grid(20.0, 32, 1.0, 3)),
                rescaled_barenblatt_profile(1.0, make_grid(10.0, 32, 1.0, 3)),
            )
