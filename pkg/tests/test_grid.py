"""Tests for radial grids, profiles and quadrature."""

import math

import numpy as np
import pytest

from logdiff.barenblatt import rescaled_barenblatt_profile  # type: ignore
from logdiff.errors import DivergentTailError, GridMismatchError  # type: ignore
from logdiff.grid import (  # type: ignore
    MixedTailLaw,
    RadialGrid,
    RadialProfile,
    TailLaw,
    ball_integral,
    extrapolated_laplacian,
    fit_tail,
    integrate_difference,
    integrate_radial,
    make_grid,
    radial_gradient,
    radial_laplacian,
    richardson,
    surface_area,
)


class TestMakeGrid:
    """Test grid construction and validation."""

    def test_uniform_grid_nodes(self):
        """Test that stretch 1 gives equally spaced nodes from 0 to r_max."""
        grid = make_grid(2.0, 16, 1.0, 3)
        assert grid.m == 16
        assert grid.nodes[0] == 0.0
        assert grid.r_max == 2.0
        assert np.allclose(grid.spacings, 0.125)

    def test_stretched_grid_ratio(self):
        """Test that successive spacings grow by the stretch factor."""
        grid = make_grid(10.0, 32, 1.05, 5)
        ratios = grid.spacings[1:] / grid.spacings[:-1]
        assert np.allclose(ratios, 1.05, rtol=1e-10)
        assert grid.r_max == 10.0

    def test_too_few_nodes_rejected(self):
        """Test that fewer than 16 cells raise ValueError."""
        with pytest.raises(ValueError, match="m_nodes"):
            make_grid(1.0, 8, 1.0, 3)

    def test_low_dimension_rejected(self):
        """Test that N < 3 raises ValueError."""
        with pytest.raises(ValueError, match="dimension"):
            make_grid(1.0, 16, 1.0, 2)

    def test_shrinking_stretch_rejected(self):
        """Test that stretch < 1 raises ValueError."""
        with pytest.raises(ValueError, match="stretch"):
            make_grid(1.0, 16, 0.9, 3)

    @pytest.mark.parametrize(
        "arguments, name",
        [
            ((math.inf, 16, 1.0, 3), "r_max"),
            ((1.0, math.inf, 1.0, 3), "m_nodes"),
            ((1.0, 16, math.nan, 3), "stretch"),
            ((1.0, 16, 1.0, math.inf), "dimension"),
        ],
    )
    def test_non_finite_arguments_rejected(self, arguments, name):
        """Test that infinite or NaN arguments raise ValueError naming the argument."""
        with pytest.raises(ValueError, match=name):
            make_grid(*arguments)

    def test_non_integer_cells_rejected(self):
        """Test that a fractional number of cells is rejected."""
        with pytest.raises(ValueError, match="m_nodes"):
            make_grid(1.0, 16.5, 1.0, 3)

    def test_coarsened_keeps_every_other_node(self):
        """Test that coarsening keeps even nodes and squares the stretch."""
        grid = make_grid(10.0, 32, 1.05, 5)
        coarse = grid.coarsened()
        assert coarse.m == 16
        assert np.array_equal(coarse.nodes, grid.nodes[::2])
        assert coarse.stretch == pytest.approx(1.05**2)
        assert np.allclose(coarse.spacings[1:] / coarse.spacings[:-1], 1.05**2, rtol=1e-10)

    def test_odd_grid_cannot_be_coarsened(self):
        """Test that an odd number of cells is rejected."""
        with pytest.raises(ValueError, match="even"):
            make_grid(1.0, 17, 1.0, 3).coarsened()

    def test_grid_must_start_at_origin(self):
        """Test that a grid not starting at r = 0 is rejected."""
        with pytest.raises(ValueError, match="r = 0"):
            RadialGrid(np.array([0.1, 0.5, 1.0]), 3)

    def test_grid_nodes_strictly_increasing(self):
        """Test that repeated nodes are rejected."""
        with pytest.raises(ValueError, match="strictly increasing"):
            RadialGrid(np.array([0.0, 0.5, 0.5, 1.0]), 3)

    def test_nodes_are_read_only(self):
        """Test that grid nodes cannot be modified in place."""
        grid = make_grid(1.0, 16, 1.0, 3)
        with pytest.raises(ValueError):
            grid.nodes[1] = 5.0


class TestQuadrature:
    """Test the dimension-aware product quadrature."""

    def test_surface_areas(self):
        """Test omega_N for N = 3 and N = 5."""
        assert surface_area(3) == pytest.approx(4.0 * math.pi)
        assert surface_area(5) == pytest.approx(8.0 * math.pi**2 / 3.0)

    def test_constant_is_ball_volume(self):
        """Test that integrating 1 gives the volume of the ball in R^3."""
        grid = make_grid(1.0, 16, 1.0, 3)
        total = integrate_radial(RadialProfile(grid, np.ones(17)))
        assert total == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)

    def test_linear_function_exact_on_stretched_grid(self):
        """Test exactness for f = r on a stretched grid in N = 5."""
        grid = make_grid(2.0, 24, 1.1, 5)
        total = integrate_radial(RadialProfile.from_function(grid, lambda r: r))
        exact = surface_area(5) * 2.0**6 / 6.0
        assert total == pytest.approx(exact, rel=1e-12)

    def test_control_volumes_cover_the_ball(self):
        """Test that control volumes add up to R_max^N / N."""
        grid = make_grid(3.0, 40, 1.02, 4)
        assert np.sum(grid.control_volumes) == pytest.approx(3.0**4 / 4.0, rel=1e-12)

    def test_ball_integral_of_constant(self):
        """Test that a ball integral between nodes is exact for constants."""
        grid = make_grid(2.0, 16, 1.0, 3)
        inside = ball_integral(RadialProfile(grid, np.ones(17)), 0.7)
        assert inside == pytest.approx(4.0 * math.pi * 0.7**3 / 3.0, rel=1e-12)

    def test_ball_integral_beyond_grid_rejected(self):
        """Test that a ball larger than the grid raises ValueError."""
        grid = make_grid(2.0, 16, 1.0, 3)
        with pytest.raises(ValueError, match="outside"):
            ball_integral(RadialProfile(grid, np.ones(17)), 3.0)

    def test_tailed_profile_not_integrable(self):
        """Test that a non-zero tail law makes the plain integral diverge."""
        grid = make_grid(40.0, 400, 1.0, 3)
        with pytest.raises(DivergentTailError):
            integrate_radial(rescaled_barenblatt_profile(1.0, grid))


class TestIntegrateDifference:
    """Test integrals of profile differences with far-field tails."""

    def test_barenblatt_difference_closed_form(self):
        """Test that B~_1 - B~_4 integrates to 4 pi^2 in R^3."""
        grid = make_grid(40.0, 1600, 1.0, 3)
        b1 = rescaled_barenblatt_profile(1.0, grid)
        b4 = rescaled_barenblatt_profile(4.0, grid)
        total = integrate_difference(b1, b4, absolute=True)
        assert total == pytest.approx(4.0 * math.pi**2, rel=1e-4)

    def test_difference_is_antisymmetric(self):
        """Test that swapping the profiles flips the sign."""
        grid = make_grid(40.0, 400, 1.0, 3)
        b1 = rescaled_barenblatt_profile(1.0, grid)
        b4 = rescaled_barenblatt_profile(4.0, grid)
        assert integrate_difference(b1, b4) == pytest.approx(-integrate_difference(b4, b1))

    def test_identical_profiles_give_zero(self):
        """Test that a profile compared with itself integrates to zero."""
        grid = make_grid(20.0, 200, 1.0, 5)
        b = rescaled_barenblatt_profile(2.0, grid)
        assert integrate_difference(b, b, absolute=True) == 0.0

    def test_k_difference_diverges_for_n5(self):
        """Test that tails differing in k are rejected in N = 5."""
        grid = make_grid(20.0, 200, 1.0, 5)
        with pytest.raises(DivergentTailError):
            integrate_difference(
                rescaled_barenblatt_profile(1.0, grid), rescaled_barenblatt_profile(4.0, grid)
            )

    def test_amplitude_difference_diverges(self):
        """Test that tails with different amplitudes are rejected in N = 3."""
        grid = make_grid(20.0, 200, 1.0, 3)
        f = RadialProfile(grid, 2.0 / (1.0 + grid.nodes**2), TailLaw(2.0, 1.0))
        g = RadialProfile(grid, 3.0 / (1.0 + grid.nodes**2), TailLaw(3.0, 1.0))
        with pytest.raises(DivergentTailError, match="r\\^-2"):
            integrate_difference(f, g)

    def test_grid_mismatch_rejected(self):
        """Test that profiles on different grids cannot be compared."""
        f = RadialProfile(make_grid(1.0, 16, 1.0, 3), np.ones(17))
        g = RadialProfile(make_grid(2.0, 16, 1.0, 3), np.ones(17))
        with pytest.raises(GridMismatchError):
            integrate_difference(f, g)

    def test_triangle_inequality(self):
        """Test the triangle inequality of the L1 distance on a triple of profiles."""
        grid = make_grid(40.0, 400, 1.0, 3)
        b1, b2, b4 = (rescaled_barenblatt_profile(k, grid) for k in (1.0, 2.0, 4.0))
        d14 = integrate_difference(b1, b4, absolute=True)
        d12 = integrate_difference(b1, b2, absolute=True)
        d24 = integrate_difference(b2, b4, absolute=True)
        assert d14 <= d12 + d24 + 1e-12


class TestRadialProfile:
    """Test profile validation and evaluation."""

    def test_tail_must_match_boundary(self):
        """Test that a tail law disagreeing with the boundary node is rejected."""
        grid = make_grid(10.0, 16, 1.0, 3)
        values = 2.0 / (1.0 + grid.nodes**2)
        with pytest.raises(ValueError, match="Tail law"):
            RadialProfile(grid, values, TailLaw(2.0, 2.0))

    def test_tailed_profile_must_be_non_negative(self):
        """Test that densities with a tail cannot be negative."""
        grid = make_grid(10.0, 16, 1.0, 3)
        values = 2.0 / (1.0 + grid.nodes**2)
        values[3] = -1.0
        with pytest.raises(ValueError, match="non-negative"):
            RadialProfile(grid, values, TailLaw(2.0, 1.0))

    def test_nan_rejected(self):
        """Test that NaN values are rejected."""
        grid = make_grid(1.0, 16, 1.0, 3)
        values = np.ones(17)
        values[4] = np.nan
        with pytest.raises(ValueError, match="finite"):
            RadialProfile(grid, values)

    def test_signed_profile_allowed_without_tail(self):
        """Test that differences without tails may be signed."""
        grid = make_grid(1.0, 16, 1.0, 3)
        profile = RadialProfile(grid, np.linspace(-1.0, 1.0, 17))
        assert profile.sup == 1.0

    def test_evaluate_uses_tail_beyond_grid(self):
        """Test that evaluation past R_max follows the tail law."""
        grid = make_grid(10.0, 100, 1.0, 3)
        b = rescaled_barenblatt_profile(1.0, grid)
        assert b.evaluate(np.array([20.0]))[0] == pytest.approx(2.0 / 401.0)

    def test_evaluate_without_tail_rejected(self):
        """Test that evaluation beyond a tail-free profile raises ValueError."""
        grid = make_grid(1.0, 16, 1.0, 3)
        with pytest.raises(ValueError, match="without a tail law"):
            RadialProfile(grid, np.ones(17)).evaluate(np.array([2.0]))


class TestDerivatives:
    """Test the radial gradient and Laplacian."""

    def test_laplacian_of_r_squared(self):
        """Test that Delta r^2 = 2N everywhere, origin included."""
        grid = make_grid(1.0, 20, 1.07, 5)
        lap = radial_laplacian(RadialProfile.from_function(grid, np.square))
        assert np.allclose(lap.values, 10.0, rtol=1e-9)

    def test_gradient_of_quadratic(self):
        """Test that the gradient of r^2 is 2r including the boundary node."""
        grid = make_grid(2.0, 20, 1.05, 3)
        grad = radial_gradient(RadialProfile.from_function(grid, np.square))
        assert np.allclose(grad.values, 2.0 * grid.nodes, atol=1e-10)

    def test_laplacian_second_order(self):
        """Test second-order convergence of the Laplacian of B~_1 at interior nodes."""
        errors = []
        for m in (100, 200):
            grid = make_grid(10.0, m, 1.0, 3)
            r = grid.nodes
            f = RadialProfile(grid, 1.0 / (1.0 + r**2))
            exact = -6.0 / (1.0 + r**2) ** 2 + 8.0 * r**2 / (1.0 + r**2) ** 3
            errors.append(np.max(np.abs(radial_laplacian(f).values[:-1] - exact[:-1])))
        assert errors[0] / errors[1] > 3.5


class TestFitTail:
    """Test the far-field tail fit."""

    def test_fit_recovers_barenblatt_tail(self):
        """Test that fitting B~_3 recovers c = 2(N-2) and k = 3."""
        grid = make_grid(30.0, 300, 1.0, 5)
        law = fit_tail(rescaled_barenblatt_profile(3.0, grid))
        assert law.c == pytest.approx(6.0, rel=1e-8)
        assert law.k == pytest.approx(3.0, rel=1e-6)

    def test_fit_with_fixed_amplitude(self):
        """Test that a fixed c only fits the shift."""
        grid = make_grid(30.0, 300, 1.0, 3)
        law = fit_tail(rescaled_barenblatt_profile(2.0, grid), c=2.0, exclude_boundary=True)
        assert law.k == pytest.approx(2.0, rel=1e-10)

    def test_non_decaying_profile_rejected(self):
        """Test that a growing profile cannot be fitted."""
        grid = make_grid(10.0, 100, 1.0, 3)
        with pytest.raises(ValueError, match="decay"):
            fit_tail(RadialProfile(grid, 1.0 + grid.nodes))


class TestMixedTailLaw:
    """Test far-field laws of superpositions."""

    def test_totals(self):
        """Test the total amplitude, the weighted shift and the point values."""
        law = MixedTailLaw((TailLaw(1.0, 4.0), TailLaw(3.0, 1.0)))
        assert law.c == 4.0
        assert law.k == pytest.approx(7.0 / 4.0)
        assert law.value(2.0) == pytest.approx(1.0 / 8.0 + 3.0 / 5.0)

    def test_scaled_maps_every_component(self):
        """Test that amplitude * f(r / L) rescales each component."""
        law = MixedTailLaw((TailLaw(1.0, 4.0), TailLaw(3.0, 1.0))).scaled(2.0, 3.0)
        assert law.components == (TailLaw(18.0, 36.0), TailLaw(54.0, 9.0))
        assert law.value(6.0) == pytest.approx(2.0 * (1.0 / 8.0 + 3.0 / 5.0))

    def test_empty_law_rejected(self):
        """Test that a mixture needs at least one component."""
        with pytest.raises(ValueError, match="at least one"):
            MixedTailLaw(())

    def test_single_law_has_itself_as_component(self):
        """Test that a plain law is its own only component."""
        law = TailLaw(2.0, 1.0)
        assert law.components == (law,)

    def test_mixture_difference_closed_form(self):
        """Test that (B~_4 + B~_1)/2 - B~_1 integrates to -2 pi^2 in R^3."""
        grid = make_grid(20.0, 400, 1.0, 3)
        b4, b1 = rescaled_barenblatt_profile(4.0, grid), rescaled_barenblatt_profile(1.0, grid)
        tail = MixedTailLaw((TailLaw(0.5 * b4.tail.c, 4.0), TailLaw(0.5 * b1.tail.c, 1.0)))
        mean = RadialProfile(grid, 0.5 * (b4.values + b1.values), tail)
        total = integrate_difference(mean, b1, richardson_levels=2)
        assert total == pytest.approx(-2.0 * math.pi**2, rel=1e-6)

    def test_cancelled_moments_closed_form(self):
        """Test (B~_4 + B~_1)/2 - B~_2.5 in R^3, whose tails agree up to r^-6."""
        grid = make_grid(20.0, 400, 1.0, 3)
        b4, b1 = rescaled_barenblatt_profile(4.0, grid), rescaled_barenblatt_profile(1.0, grid)
        tail = MixedTailLaw((TailLaw(0.5 * b4.tail.c, 4.0), TailLaw(0.5 * b1.tail.c, 1.0)))
        mean = RadialProfile(grid, 0.5 * (b4.values + b1.values), tail)
        total = integrate_difference(mean, rescaled_barenblatt_profile(2.5, grid), richardson_levels=2)
        assert total == pytest.approx(4.0 * math.pi**2 * (math.sqrt(2.5) - 1.5), rel=1e-6)

    def test_first_moment_difference_diverges_for_n5(self):
        """Test that a mixture against B~_1 leaves an r^-4 tail, not integrable in N = 5."""
        grid = make_grid(20.0, 400, 1.0, 5)
        b4, b1 = rescaled_barenblatt_profile(4.0, grid), rescaled_barenblatt_profile(1.0, grid)
        tail = MixedTailLaw((TailLaw(0.5 * b4.tail.c, 4.0), TailLaw(0.5 * b1.tail.c, 1.0)))
        mean = RadialProfile(grid, 0.5 * (b4.values + b1.values), tail)
        with pytest.raises(DivergentTailError, match="r\\^-4"):
            integrate_difference(mean, b1)


class TestRichardson:
    """Test Romberg extrapolation and its use in integrals and Laplacians."""

    def test_removes_quadratic_and_quartic_errors(self):
        """Test that three estimates cancel the h^2 and h^4 terms exactly."""
        estimates = [1.0 + 0.3 * h**2 - 0.2 * h**4 for h in (0.1, 0.2, 0.4)]
        assert richardson(estimates) == pytest.approx(1.0, abs=1e-14)

    def test_single_estimate_is_returned(self):
        """Test that one estimate is left unchanged."""
        assert richardson([2.5]) == 2.5

    def test_no_estimates_rejected(self):
        """Test that an empty list raises ValueError."""
        with pytest.raises(ValueError, match="at least one"):
            richardson([])

    def test_extrapolated_gaussian_integral(self):
        """Test the integral of exp(-r^2) over R^3 against pi^(3/2)."""
        grid = make_grid(8.0, 256, 1.0, 3)
        gaussian = RadialProfile.from_function(grid, lambda r: np.exp(-(r**2)))
        zero = RadialProfile(grid, np.zeros(257))
        exact = math.pi**1.5
        plain = integrate_difference(gaussian, zero)
        extrapolated = integrate_difference(gaussian, zero, richardson_levels=2)
        assert extrapolated == pytest.approx(exact, rel=1e-8)
        assert abs(extrapolated - exact) < 1e-3 * abs(plain - exact)

    def test_absolute_integral_not_extrapolated(self):
        """Test that extrapolating |f - g| is refused."""
        grid = make_grid(8.0, 64, 1.0, 3)
        f = RadialProfile(grid, np.ones(65))
        with pytest.raises(ValueError, match="smooth integrand"):
            integrate_difference(f, RadialProfile(grid, np.zeros(65)), absolute=True, richardson_levels=1)

    def test_negative_levels_rejected(self):
        """Test that a negative number of levels raises ValueError."""
        grid = make_grid(8.0, 64, 1.0, 3)
        f = RadialProfile(grid, np.ones(65))
        with pytest.raises(ValueError, match="non-negative"):
            integrate_difference(f, f, richardson_levels=-1)

    def test_extrapolated_laplacian_of_gaussian(self):
        """Test the extrapolated Laplacian of exp(-r^2) against (4 r^2 - 2N) exp(-r^2)."""
        laplacian = extrapolated_laplacian(lambda r: np.exp(-(r**2)), 6.0, 240, 5, levels=3)
        r = laplacian.grid.nodes[:-1]
        exact = (4.0 * r**2 - 10.0) * np.exp(-(r**2))
        assert np.max(np.abs(laplacian.values[:-1] - exact)) <= 1e-7

    def test_extrapolated_laplacian_needs_a_level(self):
        """Test that zero levels raise ValueError."""
        with pytest.raises(ValueError, match="levels"):
            extrapolated_laplacian(lambda r: r**2, 1.0, 16, 3, levels=0)
