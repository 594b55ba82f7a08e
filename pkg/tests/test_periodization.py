import numpy as np
import pytest
from numpy.testing import assert_allclose

from fem.cg_solver import SolverConfig
from mesh.cell_grid import build_cell_grid
from mesh.domain_grid import build_domain_grid, unit_square_mask
from mesh.fields import ScalarField, interpolate
from norms.sobolev_norms import h1_norm
from periodize.cutoff_profile import CutoffProfile
from periodize.periodization import (PeriodicProjector, defect_summary, face_defect, periodize_lift,
                                     periodize_lift_steps, periodize_project, periodize_project_columns)
from unfold.unfolding import unfold

TIGHT = SolverConfig(1e-12)


def _periodic(y):
    return np.cos(2 * np.pi * y[:, 0]) * np.sin(2 * np.pi * y[:, 1]) + 0.3


class TestCutoffProfile:
    def test_plateaus(self):
        theta = CutoffProfile()
        assert_allclose(theta([0.0, 0.1, -0.125]), 1.0)
        assert_allclose(theta([0.375, 0.6, 1.0]), 0.0)

    def test_monotone_between_plateaus(self):
        values = CutoffProfile()(np.linspace(0.125, 0.375, 101))
        assert np.all(np.diff(values) <= 0)

    def test_bracket_is_antisymmetric(self):
        y = np.linspace(0.0, 1.0, 33)
        bracket = CutoffProfile().bracket(y)
        assert bracket[0] == pytest.approx(0.5)
        assert bracket[-1] == pytest.approx(-0.5)
        assert_allclose(bracket, -bracket[::-1], atol=1e-12)


class TestLift:
    def test_one_dimensional_lift_of_y(self):
        grid = build_cell_grid(1, 8)
        lifted = periodize_lift(interpolate(grid, lambda y: y[:, 0]))
        assert lifted.values[0] == pytest.approx(0.5)
        assert lifted.values[-1] == pytest.approx(0.5)

    def test_every_step_keeps_earlier_axes_periodic(self, rng):
        grid = build_cell_grid(2, 8)
        phi = ScalarField(grid, rng.standard_normal(grid.num_nodes))
        steps = periodize_lift_steps(phi)
        assert len(steps) == 3
        for step, field in enumerate(steps[1:], start=1):
            for axis in range(step):
                assert np.abs(face_defect(field, axis)).max() <= 1e-12

    def test_faces_end_at_the_average_trace(self, rng):
        grid = build_cell_grid(2, 8)
        phi = ScalarField(grid, rng.standard_normal(grid.num_nodes))
        first = periodize_lift_steps(phi)[1]
        average = 0.5 * (phi.values[grid.face_nodes(0, 0)] + phi.values[grid.face_nodes(0, 1)])
        assert_allclose(first.values[grid.face_nodes(0, 0)], average, atol=1e-14)

    def test_periodic_field_is_unchanged(self):
        grid = build_cell_grid(2, 8)
        phi = interpolate(grid, _periodic)
        assert_allclose(periodize_lift(phi).values, phi.values, atol=1e-14)

    def test_interior_is_untouched(self, rng):
        grid = build_cell_grid(2, 8)
        phi = ScalarField(grid, rng.standard_normal(grid.num_nodes))
        interior = np.all((grid.node_lattice >= 3) & (grid.node_lattice <= 5), axis=1)
        assert_allclose(periodize_lift(phi).values[interior], phi.values[interior])


class TestProjection:
    def test_one_dimensional_projection_of_y_is_its_mean(self):
        grid = build_cell_grid(1, 8)
        projected = periodize_project(interpolate(grid, lambda y: y[:, 0]), TIGHT)
        assert_allclose(projected.values, 0.5, atol=1e-10)

    def test_periodic_field_is_a_fixed_point(self):
        grid = build_cell_grid(2, 8)
        phi = interpolate(grid, _periodic)
        assert_allclose(periodize_project(phi, TIGHT).values, phi.values, atol=1e-9)

    def test_projection_properties_over_seeds(self, seeds):
        grid = build_cell_grid(2, 4)
        projector = PeriodicProjector(grid, TIGHT)
        for seed in seeds:
            values = np.random.default_rng(seed).standard_normal(grid.num_nodes)
            projected, _ = projector.apply(values)
            twice, _ = projector.apply(projected)
            for axis in range(2):
                assert np.abs(face_defect(ScalarField(grid, projected), axis)).max() <= 1e-10
            assert_allclose(twice, projected, atol=1e-8)
            weights = grid.node_weights()
            assert weights @ projected == pytest.approx(weights @ values, abs=1e-12)
            assert projector.norm(projected) <= projector.norm(values) * (1 + 1e-10)
            assert projector.orthogonality_residual(values, projected) <= 1e-8

    def test_columns_match_single_projections(self, rng):
        domain = build_domain_grid(2, 2, 4, unit_square_mask(2, 2))
        phi = ScalarField(domain, rng.standard_normal(domain.num_nodes))
        unfolded = unfold(phi)
        projected = periodize_project_columns(unfolded, TIGHT)
        for cell in range(domain.num_cells):
            single = periodize_project(unfolded.column(cell), TIGHT)
            assert_allclose(projected.values[cell], single.values, atol=1e-9)


class TestDefectSummary:
    def test_periodic_field_has_no_defect(self):
        grid = build_cell_grid(2, 8)
        summary = defect_summary(interpolate(grid, _periodic), cfg=TIGHT)
        assert set(summary) == {"defect_axis_1", "defect_axis_2", "lift_distance", "projection_distance",
                                "lift_ratio"}
        assert summary["defect_axis_1"] == pytest.approx(0.0, abs=1e-12)
        assert summary["defect_axis_2"] == pytest.approx(0.0, abs=1e-12)
        assert summary["lift_distance"] == pytest.approx(0.0, abs=1e-12)
        assert summary["projection_distance"] == pytest.approx(0.0, abs=1e-8)

    def test_linear_ramp(self):
        grid = build_cell_grid(2, 8)
        phi = interpolate(grid, lambda y: y[:, 0])
        summary = defect_summary(phi, cfg=TIGHT)
        assert summary["defect_axis_1"] == pytest.approx(1.0)
        assert summary["defect_axis_2"] == pytest.approx(0.0, abs=1e-14)
        assert summary["projection_distance"] == pytest.approx(np.sqrt(1.0 / 12.0 + 1.0), rel=1e-8)
        assert summary["lift_distance"] > 0
        assert summary["lift_distance"] == pytest.approx(h1_norm(phi - periodize_lift(phi)))
        assert summary["lift_ratio"] == pytest.approx(summary["lift_distance"])

    def test_one_dimensional_constant_has_no_lift_ratio(self):
        summary = defect_summary(interpolate(build_cell_grid(1, 8), lambda y: np.ones(y.shape[0])), cfg=TIGHT)
        assert summary["defect_axis_1"] == 0.0
        assert summary["lift_ratio"] == 0.0

    def test_lift_constant_is_stable_under_refinement(self):
        def smooth(y):
            return np.exp(y[:, 0]) * (1.0 + y[:, 1] ** 2)

        ratios = [defect_summary(interpolate(build_cell_grid(2, m), smooth), cfg=TIGHT)["lift_ratio"]
                  for m in (16, 32, 64)]
        assert min(ratios) > 0
        assert max(ratios) / min(ratios) < 2.0
