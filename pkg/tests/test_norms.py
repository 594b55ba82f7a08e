import numpy as np
import pytest
from numpy.testing import assert_allclose

from fem.assembly import assemble_load, assemble_mass
from fem.cg_solver import SolverConfig
from mesh.cell_grid import build_cell_grid
from mesh.domain_grid import build_domain_grid, l_shape_mask, unit_square_mask
from mesh.fields import CellField, ScalarField, interpolate
from norms.sobolev_norms import (RieszMap, face_h_half_norm, h1_norm, h1_seminorm, h_minus1_norm, l2_norm,
                                 mixed_l2y_hminus1x_norm)
from unfold.unfolded_field import UnfoldedVectorField
from unfold.unfolding import cell_mean, unfold_gradient

TIGHT = SolverConfig(1e-12)


@pytest.fixture
def square():
    return build_domain_grid(2, 4, 4, unit_square_mask(2, 4))


def test_l2_and_h1_of_linear_field(square):
    phi = interpolate(square, lambda x: x[:, 0])
    assert l2_norm(phi) == pytest.approx(np.sqrt(1.0 / 3.0))
    assert h1_seminorm(phi) == pytest.approx(1.0)
    assert h1_norm(phi) == pytest.approx(np.sqrt(4.0 / 3.0))


def test_l2_norm_of_vector_field(square):
    phi = interpolate(square, lambda x: 3 * x[:, 0] + 4 * x[:, 1])
    assert l2_norm(phi.gradient()) == pytest.approx(5.0)


def test_l2_norm_on_l_shape():
    grid = build_domain_grid(2, 2, 4, l_shape_mask(2))
    constant = interpolate(grid, lambda x: np.full(x.shape[0], 2.0))
    assert l2_norm(constant) == pytest.approx(2.0 * np.sqrt(0.75))


def test_h_minus1_of_first_eigenfunction(square):
    g = interpolate(square, lambda x: np.prod(np.sin(np.pi * x), axis=-1))
    # -Δz = g has z = g/(2π²), so ||g||² = ||g||²_{L²}/(2π²) = 1/(8π²)
    assert h_minus1_norm(g, TIGHT) == pytest.approx(1.0 / (np.pi * np.sqrt(8.0)), rel=2e-2)


def test_h_minus1_is_below_scaled_l2(square, rng):
    riesz = RieszMap(square, TIGHT)
    for _ in range(5):
        g = ScalarField(square, rng.standard_normal(square.num_nodes))
        assert h_minus1_norm(g, riesz=riesz) <= l2_norm(g) / (np.pi * np.sqrt(2.0)) * (1 + 1e-8)


def test_cell_oscillation_is_order_eps_in_h_minus1(rng):
    ratios = []
    for cells in (4, 8, 16):
        grid = build_domain_grid(2, cells, 4, unit_square_mask(2, cells))
        phi = ScalarField(grid, rng.standard_normal(grid.num_nodes))
        ratio = h_minus1_norm(phi - cell_mean(phi), TIGHT) / (grid.eps * l2_norm(phi))
        # zero cell means leave only the Poincaré constant ε/π of a square cell
        assert ratio <= (1 + 1e-8) / np.pi
        ratios.append(ratio)
    assert max(ratios) / min(ratios) < 3.0


def test_h_minus1_of_cellwise_field(square):
    signs = np.where((square.cells.sum(axis=1) % 2) == 0, 1.0, -1.0)
    field = CellField(square, signs)
    assert 0 < h_minus1_norm(field, TIGHT) < l2_norm(field)


def test_riesz_batches_match_single_columns(square, rng):
    riesz = RieszMap(square, TIGHT)
    samples = rng.standard_normal((70,) + square.quadrature_points().shape[:2])
    loads = np.stack([assemble_load(square, sample) for sample in samples], axis=1)
    batched = riesz.norms(loads)
    assert batched.shape == (70,)
    for column in (0, 63, 64, 69):
        assert batched[column] == pytest.approx(riesz.norms(loads[:, column])[0], rel=1e-8)


def test_face_norm_of_constant_is_its_size():
    assert face_h_half_norm(np.full(9, -3.0)) == pytest.approx(3.0)
    assert face_h_half_norm(np.array([2.5])) == 2.5


def test_face_norm_dominates_l2(rng):
    mass = assemble_mass(build_cell_grid(1, 8)).toarray()
    for _ in range(10):
        v = rng.standard_normal(9)
        assert face_h_half_norm(v) >= np.sqrt(v @ mass @ v) * (1 - 1e-12)
        assert face_h_half_norm(2 * v) == pytest.approx(2 * face_h_half_norm(v))


def test_face_norm_grows_with_oscillation():
    nodes = np.arange(17) / 16
    smooth = face_h_half_norm(np.cos(np.pi * nodes))
    rough = face_h_half_norm(np.cos(8 * np.pi * nodes))
    assert rough > 2 * smooth


def test_mixed_norm_of_macro_gradient_vanishes(square):
    phi = interpolate(square, lambda x: 2 * x[:, 0] - x[:, 1])
    field = unfold_gradient(phi, m_y=2)
    assert mixed_l2y_hminus1x_norm(field, phi.gradient()) == pytest.approx(0.0, abs=1e-10)


def test_mixed_norm_of_y_constant_field(square, rng):
    y_grid = build_cell_grid(2, 2)
    per_cell = rng.standard_normal((square.num_cells, 2))
    values = np.broadcast_to(per_cell[:, None, None, :], (square.num_cells, y_grid.num_elements, 4, 2))
    field = UnfoldedVectorField(square, y_grid, values)
    riesz = RieszMap(square, TIGHT)
    expected = np.hypot(h_minus1_norm(CellField(square, per_cell[:, 0]), riesz=riesz),
                        h_minus1_norm(CellField(square, per_cell[:, 1]), riesz=riesz))
    assert_allclose(mixed_l2y_hminus1x_norm(field, riesz=riesz), expected, rtol=1e-8)
