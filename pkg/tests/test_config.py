"""Tests for run configurations and initial-data descriptors."""

import math

import numpy as np
import pytest

from logdiff.barenblatt import rescaled_barenblatt_value  # type: ignore
from logdiff.config import (  # type: ignore
    BarenblattData,
    BarenblattPlusBump,
    Command,
    MeanOfBarenblatts,
    RunConfig,
    initial_profile,
    load_config,
    local_barenblatt_parameter,
    parse_config,
    parse_initial,
    smooth_bump,
)
from logdiff.errors import ConfigError  # type: ignore
from logdiff.grid import MixedTailLaw, make_grid  # type: ignore
from logdiff.solver import BoundaryKind, Scheme  # type: ignore
from logdiff.transform import Frame, FrameKind  # type: ignore


class TestParseConfig:
    """Test parsing of key = value documents."""

    def test_parse_with_comments_and_defaults(self):
        """Test comments, blank lines and default values."""
        text = "# theorem run\ncommand = theorem1\n\nk1 = 4   # upper\nk2 = 1\n"
        config = parse_config(text)
        assert config.command is Command.THEOREM1
        assert config.k1 == 4.0 and config.k2 == 1.0
        assert config.dimension == 3
        assert config.m_nodes == 400
        assert config.dt == 0.01
        assert config.boundary is BoundaryKind.PINNED
        assert config.frame is FrameKind.SELFSIMILAR

    def test_command_from_command_line(self):
        """Test that the command may come from the command line only."""
        assert parse_config("k0 = 2", command="simulate").command is Command.SIMULATE

    def test_conflicting_command_rejected(self):
        """Test that document and command line must agree."""
        with pytest.raises(ConfigError, match="command: document says verify"):
            parse_config("command = verify", command="simulate")

    def test_missing_command_rejected(self):
        """Test that a command is required."""
        with pytest.raises(ConfigError, match="command: missing"):
            parse_config("k0 = 1")

    def test_unknown_key_rejected(self):
        """Test that unknown keys are named with their line."""
        with pytest.raises(ConfigError, match=r"kappa: unknown key \(line 2\)"):
            parse_config("command = simulate\nkappa = 1")

    def test_duplicate_key_rejected(self):
        """Test that a key may appear only once."""
        with pytest.raises(ConfigError, match="dt: duplicate key"):
            parse_config("command = simulate\ndt = 0.1\ndt = 0.2")

    def test_malformed_line_rejected(self):
        """Test that lines without '=' are rejected."""
        with pytest.raises(ConfigError, match="line 2: expected 'key = value'"):
            parse_config("command = simulate\njust words")

    def test_bad_number_rejected(self):
        """Test that numeric keys need numbers."""
        with pytest.raises(ConfigError, match="dt: expected a number"):
            parse_config("command = simulate\ndt = fast")

    def test_bad_enum_rejected(self):
        """Test that enum keys list their allowed values."""
        with pytest.raises(ConfigError, match="scheme: unknown value 'rk4'"):
            parse_config("command = simulate\nscheme = rk4")

    def test_scheme_and_boundary_values(self):
        """Test parsing of scheme, boundary and frame."""
        config = parse_config("command = simulate\nscheme = tr_bdf2\nboundary = fitted_tail\nframe = physical")
        assert config.scheme is Scheme.TR_BDF2
        assert config.boundary is BoundaryKind.FITTED_TAIL
        assert config.frame is FrameKind.PHYSICAL

    def test_snapshots_sorted(self):
        """Test that snapshot clocks are parsed and sorted."""
        config = parse_config("command = simulate\nsnapshots = 2, 0.5, 1")
        assert config.snapshots == (0.5, 1.0, 2.0)


class TestCommandConstraints:
    """Test the dimension constraints of each command."""

    def test_theorem1_needs_three_dimensions(self):
        """Test that theorem1 refuses N = 5."""
        with pytest.raises(ConfigError, match="theorem1 requires N = 3"):
            parse_config("command = theorem1\ndimension = 5")

    def test_theorem2_needs_five_dimensions(self):
        """Test that theorem2 refuses N = 3."""
        with pytest.raises(ConfigError, match="requires N >= 5"):
            parse_config("command = theorem2\ndimension = 3")

    def test_dimension_four_out_of_scope(self):
        """Test that scoped commands refuse N = 4."""
        for command in ("verify", "theorem2", "extinction"):
            with pytest.raises(ConfigError, match="N = 4 is out of scope"):
                parse_config(f"command = {command}\ndimension = 4")

    def test_simulate_accepts_dimension_four(self):
        """Test that plain simulation accepts N = 4."""
        assert parse_config("command = simulate\ndimension = 4").dimension == 4

    def test_match_k0_needs_three_dimensions(self):
        """Test that match-k0 refuses N = 5."""
        with pytest.raises(ConfigError, match="match-k0 requires N = 3"):
            parse_config("command = match-k0\ndimension = 5")

    def test_sandwich_order(self):
        """Test that k1 <= k2 is rejected."""
        with pytest.raises(ConfigError, match="k1, k2: the sandwich needs k1 > k2 > 0"):
            parse_config("command = theorem1\nk1 = 1\nk2 = 4")

    def test_positive_parameters(self):
        """Test that non-positive T is rejected by name."""
        with pytest.raises(ConfigError, match="T: must be positive"):
            RunConfig(Command.SIMULATE, T=0.0)

    def test_minimum_cells(self):
        """Test that fewer than 16 cells are rejected."""
        with pytest.raises(ConfigError, match="m_nodes"):
            RunConfig(Command.SIMULATE, m_nodes=8)


class TestParseInitial:
    """Test initial-data descriptors."""

    def test_barenblatt(self):
        """Test barenblatt(k=...)."""
        assert parse_initial("barenblatt(k=2)") == BarenblattData(2.0)

    def test_mean_of_barenblatts(self):
        """Test mean-of-barenblatts with all arguments."""
        data = parse_initial("mean-of-barenblatts(k1=4, k2=1, weight=0.5)")
        assert data == MeanOfBarenblatts(4.0, 1.0, 0.5)
        assert data.matched_k0() == pytest.approx(2.25)

    def test_bump_support(self):
        """Test the a:b support syntax."""
        data = parse_initial("barenblatt-plus-bump(k0=1, amplitude=0.1, support=1:2)")
        assert data == BarenblattPlusBump(1.0, 0.1, (1.0, 2.0))

    def test_unknown_kind_rejected(self):
        """Test that unknown kinds are rejected."""
        with pytest.raises(ConfigError, match="unknown kind 'gaussian'"):
            parse_initial("gaussian(width=1)")

    def test_unknown_argument_rejected(self):
        """Test that arguments are checked against the kind."""
        with pytest.raises(ConfigError, match="does not take argument"):
            parse_initial("barenblatt(k0=1)")

    def test_missing_argument_rejected(self):
        """Test that required arguments must be present."""
        with pytest.raises(ConfigError, match="needs arguments"):
            parse_initial("mean-of-barenblatts(k1=4)")

    def test_malformed_descriptor_rejected(self):
        """Test that a descriptor needs parentheses."""
        with pytest.raises(ConfigError, match="expected kind"):
            parse_initial("barenblatt k=1")

    def test_amplitude_keeps_positivity(self):
        """Test that amplitude <= -1 is rejected."""
        with pytest.raises(ConfigError, match="amplitude must exceed -1"):
            BarenblattPlusBump(1.0, -1.0, (1.0, 2.0))

    def test_initial_in_document(self):
        """Test that the initial key is parsed into a descriptor."""
        config = parse_config("command = extinction\ndimension = 5\ninitial = barenblatt-plus-bump(k0=1, amplitude=0.2, support=1:3)")
        assert config.reference_k() == 1.0


class TestInitialProfile:
    """Test sampling of initial data on grids."""

    def test_selfsimilar_barenblatt_is_stationary_profile(self):
        """Test that B_k(., 0) in self-similar variables is B~_k for T = 2."""
        frame = Frame(FrameKind.SELFSIMILAR, 2.0, 3)
        grid = make_grid(20.0, 100, 1.0, 3)
        profile = initial_profile(BarenblattData(1.5), grid, frame)
        assert np.allclose(profile.values, rescaled_barenblatt_value(grid.nodes, 1.5, 3), rtol=1e-12)
        assert profile.tail.k == pytest.approx(1.5, rel=1e-12)

    def test_mean_tail_matches_boundary(self):
        """Test that the mean of two Barenblatts carries a consistent tail."""
        frame = Frame(FrameKind.PHYSICAL, 1.0, 3)
        grid = make_grid(20.0, 100, 1.0, 3)
        profile = initial_profile(MeanOfBarenblatts(4.0, 1.0), grid, frame)
        assert profile.tail.value(20.0) == pytest.approx(profile.values[-1], rel=1e-12)

    def test_mean_tail_is_exact_mixture(self):
        """Test that the self-similar mean of two Barenblatts keeps both far-field laws."""
        frame = Frame(FrameKind.SELFSIMILAR, 1.0, 3)
        grid = make_grid(20.0, 100, 1.0, 3)
        profile = initial_profile(MeanOfBarenblatts(4.0, 1.0), grid, frame)
        assert isinstance(profile.tail, MixedTailLaw)
        assert [law.k for law in profile.tail.laws] == pytest.approx([4.0, 1.0], rel=1e-12)
        expected = 0.5 * (rescaled_barenblatt_value(50.0, 4.0, 3) + rescaled_barenblatt_value(50.0, 1.0, 3))
        assert profile.tail.value(50.0) == pytest.approx(expected, rel=1e-12)

    def test_bump_must_end_inside_grid(self):
        """Test that the bump support must end before R_max."""
        frame = Frame(FrameKind.PHYSICAL, 1.0, 5)
        with pytest.raises(ConfigError, match="must end inside"):
            initial_profile(BarenblattPlusBump(1.0, 0.1, (5.0, 12.0)), make_grid(10.0, 32, 1.0, 5), frame)

    def test_local_parameter_constant_for_barenblatt(self):
        """Test that B_k(., 0) has local parameter k everywhere."""
        frame = Frame(FrameKind.PHYSICAL, 1.0, 5)
        grid = make_grid(10.0, 64, 1.0, 5)
        profile = initial_profile(BarenblattData(3.0), grid, frame)
        assert np.allclose(local_barenblatt_parameter(profile, frame), 3.0, rtol=1e-9)

    def test_smooth_bump(self):
        """Test that the bump peaks at 1 and vanishes outside its support."""
        r = np.array([0.5, 1.0, 1.5, 2.0, 2.5])
        values = smooth_bump(r, 1.0, 2.0)
        assert values[2] == pytest.approx(1.0)
        assert values[0] == values[1] == values[3] == values[4] == 0.0


class TestRunConfigAccessors:
    """Test resolution of unset values."""

    def test_default_radius(self):
        """Test R_max = max(10, sqrt(999 max k)), where B_k falls to 1e-3 of its peak."""
        assert RunConfig(Command.SIMULATE, k0=4.0).resolved_r_max() == pytest.approx(math.sqrt(3996.0))
        assert RunConfig(Command.SIMULATE, k0=0.01).resolved_r_max() == 10.0

    def test_default_horizon(self):
        """Test T for physical runs and s = 10 for self-similar runs."""
        assert RunConfig(Command.EXTINCTION, dimension=5, T=2.0).resolved_horizon() == 2.0
        assert RunConfig(Command.THEOREM1).resolved_horizon() == 10.0

    def test_derived_sandwich(self):
        """Test that a sandwich is derived from mean data with padding."""
        config = RunConfig(Command.MATCH_K0, initial=MeanOfBarenblatts(4.0, 1.0))
        frame = Frame(FrameKind.PHYSICAL, 1.0, 3)
        u0 = initial_profile(config.resolved_initial(), config.make_grid(64), frame)
        k1, k2 = config.sandwich(u0, frame)
        assert 2.5 < k1 <= 2.5 * 1.0011
        assert 1.6 / 1.0011 <= k2 < 1.6

    def test_resolved_initial_from_sandwich(self):
        """Test that k1 and k2 alone give mean-of-barenblatts data."""
        config = RunConfig(Command.THEOREM1, k1=4.0, k2=1.0)
        assert config.resolved_initial() == MeanOfBarenblatts(4.0, 1.0, 0.5)

    def test_missing_initial_rejected(self):
        """Test that a run without data is rejected."""
        with pytest.raises(ConfigError, match="initial"):
            RunConfig(Command.SIMULATE).resolved_initial()

    def test_solver_config(self):
        """Test that solver settings are passed through."""
        config = RunConfig(Command.SIMULATE, dt=0.05, scheme=Scheme.TR_BDF2, k_boundary=2.0)
        solver = config.solver_config()
        assert solver.dt == 0.05
        assert solver.scheme is Scheme.TR_BDF2
        assert solver.boundary.k_boundary == 2.0
        assert solver.frame.kind is FrameKind.SELFSIMILAR

    def test_load_config_with_seed(self, tmp_path):
        """Test reading a file and overriding the seed."""
        path = tmp_path / "run.cfg"
        path.write_text("command = verify\nseed = 3\n", encoding="utf-8")
        assert load_config(path).seed == 3
        assert load_config(path, seed=11).seed == 11
