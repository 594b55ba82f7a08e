import numpy as np
import pytest
from numpy.testing import assert_allclose

from cell.cell_problem_manager import solve_correctors
from errors import GridError
from fem.cg_solver import SolverConfig
from mesh.cell_grid import build_cell_grid
from mesh.coefficients import parse_coefficient
from mesh.domain_grid import build_domain_grid, l_shape_mask, unit_square_mask
from mesh.fields import CellField, ScalarField, interpolate
from norms.sobolev_norms import l2_norm
from unfold.estimates_manager import EstimatesManager, product_ratio, unfolding_distance
from unfold.two_scale import two_scale_decompose
from unfold.unfolded_field import UnfoldedField
from unfold.unfolding import (average, average_gradient, cell_mean, q_interp, remainder_split, unfold,
                              unfold_gradient)


def _sin_sin(x):
    return np.prod(np.sin(np.pi * x), axis=-1)


def _random_field(grid, rng):
    return ScalarField(grid, rng.standard_normal(grid.num_nodes))


@pytest.fixture
def square():
    return build_domain_grid(2, 4, 4, unit_square_mask(2, 4))


@pytest.fixture
def l_shape():
    return build_domain_grid(2, 4, 4, l_shape_mask(4))


class TestUnfolding:
    def test_integration_identity(self, l_shape, rng):
        phi = _random_field(l_shape, rng)
        assert unfold(phi).integral() == pytest.approx(phi.integral(), abs=1e-12)

    def test_l2_identity(self, square, rng):
        phi = _random_field(square, rng)
        assert unfold(phi).l2_norm() == pytest.approx(l2_norm(phi), rel=1e-12)

    def test_y_gradient_is_scaled_unfolded_gradient(self, l_shape, rng):
        phi = _random_field(l_shape, rng)
        lhs = unfold(phi).y_gradient().values
        rhs = l_shape.eps * unfold_gradient(phi).values
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(np.abs(lhs).max(), 1.0)

    def test_unfolded_cell_reads_the_cell(self, square):
        phi = interpolate(square, lambda x: x[:, 0] + 10 * x[:, 1])
        unfolded = unfold(phi)
        cell = square.cell_index[2, 1]
        y = unfolded.y_grid.coordinates
        expected = square.eps * (2 + y[:, 0]) + 10 * square.eps * (1 + y[:, 1])
        assert_allclose(unfolded.values[cell], expected, atol=1e-12)

    def test_coarser_y_resolution_interpolates(self, square):
        phi = interpolate(square, lambda x: x[:, 0] * x[:, 1])
        coarse = unfold(phi, m_y=2)
        assert coarse.y_grid.divisions == 2
        assert_allclose(coarse.values, unfold(phi).values[:, [0, 2, 4, 10, 12, 14, 20, 22, 24]], atol=1e-12)

    def test_non_dividing_y_resolution_evaluates(self, square):
        phi = interpolate(square, lambda x: 2 * x[:, 0] - x[:, 1])
        unfolded = unfold(phi, m_y=3)
        cell = square.cell_index[1, 3]
        y = unfolded.y_grid.coordinates
        expected = 2 * square.eps * (1 + y[:, 0]) - square.eps * (3 + y[:, 1])
        assert_allclose(unfolded.values[cell], expected, atol=1e-12)


class TestMeansAndScaleSplitting:
    def test_cell_mean_of_linear_field(self, square):
        phi = interpolate(square, lambda x: x[:, 0])
        means = cell_mean(phi)
        assert isinstance(means, CellField)
        assert_allclose(means.values, square.eps * (square.cells[:, 0] + 0.5))

    def test_cell_mean_of_random_field_preserves_integral(self, l_shape, rng):
        phi = _random_field(l_shape, rng)
        assert cell_mean(phi).integral() == pytest.approx(phi.integral(), abs=1e-12)

    def test_q_interp_of_cellwise_constant(self, square):
        means = CellField(square, np.full(square.num_cells, 3.0))
        assert_allclose(q_interp(means).values, 3.0)

    def test_q_interp_nodes_carry_cell_means(self, square, rng):
        phi = _random_field(square, rng)
        macro = q_interp(phi)
        means = cell_mean(phi).values
        lattice = macro.lattice()
        for cell, (i, j) in enumerate(square.cells):
            assert lattice[i * 4, j * 4] == pytest.approx(means[cell])

    def test_q_interp_on_l_shape_reflects_missing_cells(self, l_shape, rng):
        phi = _random_field(l_shape, rng)
        macro = q_interp(phi)
        means = cell_mean(phi).values
        lattice = macro.lattice()
        # macro nodes on the re-entrant faces read the cell one step back along e_1
        assert lattice[8, 12] == pytest.approx(means[l_shape.cell_index[1, 3]])
        assert lattice[8, 8] == pytest.approx(means[l_shape.cell_index[1, 2]])
        # node (3, 2) falls through to the step back along e_2
        assert lattice[12, 8] == pytest.approx(means[l_shape.cell_index[3, 1]])
        # the far corner node (4, 0) reads cell (3, 0)
        assert lattice[16, 0] == pytest.approx(means[l_shape.cell_index[3, 0]])

    def test_remainder_split_reassembles(self, l_shape, rng):
        phi = _random_field(l_shape, rng)
        macro, remainder = remainder_split(phi)
        assert_allclose(macro.values + l_shape.eps * remainder.values, phi.values, atol=1e-12)

    def test_average_inverts_unfolding(self, l_shape, rng):
        phi = _random_field(l_shape, rng)
        assert_allclose(average(unfold(phi)).values, phi.values, atol=1e-12)

    def test_reentrant_edge_reads_the_cell_below(self, l_shape):
        y_grid = build_cell_grid(2, 4)
        ids = np.arange(l_shape.num_cells, dtype=float)
        field = UnfoldedField(l_shape, y_grid, np.tile(ids[:, None], (1, y_grid.num_nodes)))
        values = average(field).values
        edge = (l_shape.node_lattice[:, 1] == 8) & (l_shape.node_lattice[:, 0] > 8)
        assert edge.sum() == 8
        below = l_shape.cell_index[np.minimum(l_shape.node_lattice[edge, 0] // 4, 3), 1]
        assert_allclose(values[edge], below)

    def test_average_of_constant_in_x_field_is_oscillation(self, square):
        y_grid = build_cell_grid(2, 4)
        eta = np.cos(2 * np.pi * y_grid.coordinates[:, 0])
        field = UnfoldedField(square, y_grid, np.tile(eta, (square.num_cells, 1)))
        expected = np.cos(2 * np.pi * square.coordinates[:, 0] / square.eps)
        assert_allclose(average(field).values, expected, atol=1e-12)

    def test_average_gradient_inverts_gradient_unfolding(self, l_shape, rng):
        phi = _random_field(l_shape, rng)
        assert_allclose(average_gradient(unfold_gradient(phi)).values, phi.gradient().values, atol=1e-10)

    def test_average_gradient_needs_full_resolution(self, square, rng):
        with pytest.raises(GridError):
            average_gradient(unfold_gradient(_random_field(square, rng), m_y=2))


class TestEstimates:
    def test_unfolding_distance_of_constant_is_zero(self, square):
        phi = interpolate(square, lambda x: np.full(x.shape[0], 2.0))
        assert unfolding_distance(phi) == pytest.approx(0.0, abs=1e-6)

    def test_product_ratio_is_bounded(self, rng):
        grid = build_domain_grid(2, 4, 4, unit_square_mask(2, 4))
        y_grid = build_cell_grid(2, 4)
        for _ in range(10):
            phi = _random_field(grid, rng)
            psi = ScalarField(y_grid, rng.standard_normal(y_grid.num_nodes))
            assert product_ratio(phi, psi) <= 4.0

    def test_product_ratio_with_corrector_samples(self, l_shape, seeds):
        y_grid = build_cell_grid(2, 4)
        correctors = solve_correctors(parse_coefficient("checkerboard(1,10)", 2), y_grid, SolverConfig(1e-12))
        for seed in seeds:
            phi = _random_field(l_shape, np.random.default_rng(seed))
            for chi in correctors.correctors:
                assert l2_norm(chi) > 0
                assert 0 < product_ratio(phi, chi) <= 4.0

    def test_periodic_oscillation_is_recovered_as_micro_part(self):
        grid = build_domain_grid(2, 4, 8, unit_square_mask(2, 4))
        eta = lambda y: np.cos(2 * np.pi * y[..., 0]) * np.sin(2 * np.pi * y[..., 1])
        phi = interpolate(grid, lambda x: grid.eps * eta(x / grid.eps))
        decomposition = two_scale_decompose(phi, cfg=SolverConfig(1e-12))
        assert np.abs(decomposition.macro.values).max() < 1e-12
        target = eta(decomposition.micro.y_grid.coordinates)
        for cell in range(grid.num_cells):
            assert np.abs(decomposition.micro.values[cell] - target).max() < 1e-8
        assert decomposition.defect < 1e-6

    def test_constant_field_has_no_micro_part(self, l_shape):
        phi = interpolate(l_shape, lambda x: np.full(x.shape[0], 1.5))
        decomposition = two_scale_decompose(phi, m_y=2, cfg=SolverConfig(1e-12))
        assert_allclose(decomposition.macro.values, 1.5, atol=1e-12)
        assert np.abs(decomposition.remainder.values).max() < 1e-10
        assert np.abs(decomposition.micro.values).max() < 1e-10
        assert decomposition.defect < 1e-8

    def test_operator_estimate_ratios(self):
        manager = EstimatesManager(_sin_sin, [4, 8, 16], subdivisions=4, m_y=4, solver_config=SolverConfig(1e-10))
        report = manager.run()
        assert list(report.frame["eps"]) == [0.25, 0.125, 0.0625]
        assert np.all(report.frame[["poincare_ratio", "unfolding_ratio", "defect_ratio"]].to_numpy() > 0)
        flags = report.passed
        assert flags["poincare_ratio_stable"]
        assert flags["unfolding_ratio_stable"]
        assert flags["interpolation_ratio_stable"]
        assert flags["remainder_ratio_stable"]
        assert flags["hminus1_ratio_bounded"]
