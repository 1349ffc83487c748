import numpy as np
import pytest

from perfhom.cell import (cell_norm_report, extrapolate_tensors, fixed_eta_tensor,
                          permeability_at_eta, permeability_limit, solve_cell)
from perfhom.errors import PreconditionError
from perfhom.geometry import build_cell_geometry, c_eta_from_eta

# Frozen from the dense direct oracle (full saddle matrix, LU) on the same cells.
FROZEN_2D = {(0.5, 8): 0.03943154904395221, (0.4, 16): 0.041954769191009975,
             (0.6, 16): 0.02206142527548046}
FROZEN_3D_04_8 = 0.10918791683345419


@pytest.mark.parametrize("eta,n", sorted(FROZEN_2D))
def test_permeability_matches_frozen_oracle(eta, n):
    a = permeability_at_eta(build_cell_geometry(2, eta, "ball", n), tol=1e-12)
    np.testing.assert_allclose(np.diag(a.matrix), FROZEN_2D[(eta, n)], rtol=1e-8)
    assert abs(a.matrix[0, 1]) < 1e-12
    assert a.form_gap < 1e-9


def test_permeability_3d_frozen():
    a = permeability_at_eta(build_cell_geometry(3, 0.4, "ball", 8), tol=1e-12)
    np.testing.assert_allclose(np.diag(a.matrix), FROZEN_3D_04_8, rtol=1e-8)


def test_oracle_path_agrees():
    g = build_cell_geometry(2, 0.5, "ball", 8)
    a = permeability_at_eta(g, tol=1e-12)
    b = permeability_at_eta(g, oracle=True)
    np.testing.assert_allclose(a.matrix, b.matrix, rtol=1e-9, atol=1e-15)


def test_energy_and_mean_forms_agree_anisotropic():
    g = build_cell_geometry(2, 0.5, "ellipsoid", 32, aspect=(1.0, 0.5))
    a = permeability_at_eta(g, tol=1e-11)
    np.testing.assert_allclose(a.matrix, a.energy_form, rtol=1e-7, atol=1e-12)
    # the flatter direction is more permeable
    assert a.matrix[0, 0] != pytest.approx(a.matrix[1, 1], rel=1e-3)
    assert np.all(np.linalg.eigvalsh(a.matrix) > 0)


def test_permeability_decreases_with_hole_size():
    vals = [permeability_at_eta(build_cell_geometry(2, eta, "ball", 16), c_eta=1.0,
                                tol=1e-11).matrix[0, 0] for eta in (0.3, 0.5, 0.7)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_cell_solution_divergence_free():
    g = build_cell_geometry(2, 0.4, "box", 16)
    sol = solve_cell(g, direction=1, tol=1e-11)
    assert sol.divergence_max < 1e-8
    assert sol.c_eta == pytest.approx(c_eta_from_eta(2, 0.4))
    rep = cell_norm_report(sol)
    assert rep["grad_ratio"] > 0 and rep["w_norm"] > 0
    # the flow is along the forcing direction on average
    assert sol.w[1].sum() > abs(sol.w[0].sum())


def test_linear_in_forcing():
    g = build_cell_geometry(2, 0.4, "ball", 16)
    a = solve_cell(g, c_eta=1.0, tol=1e-12)
    b = solve_cell(g, c_eta=2.0, tol=1e-12)
    np.testing.assert_allclose(b.w, 4.0 * a.w, atol=1e-10)


def test_direction_validated():
    with pytest.raises(PreconditionError):
        solve_cell(build_cell_geometry(2, 0.4, "ball", 8), direction=2)


def test_extrapolation_exact_power_law():
    etas = [0.4, 0.3, 0.2]
    mats = [np.diag([2.0 + 3.0 * e ** 1.5, 1.0 + 0.5 * e ** 2]) for e in etas]
    limit, info = extrapolate_tensors(etas, mats)
    np.testing.assert_allclose(np.diag(limit), [2.0, 1.0], rtol=1e-9)
    assert info["powers"][0][0] == pytest.approx(1.5, rel=1e-8)
    assert not info["unreliable"]


def test_extrapolation_flags_non_monotone():
    etas = [0.4, 0.3, 0.2]
    mats = [np.eye(2) * v for v in (1.0, 1.2, 1.1)]
    limit, info = extrapolate_tensors(etas, mats)
    assert info["unreliable"]
    np.testing.assert_allclose(limit, mats[-1])


def test_permeability_limit_coarse_warns():
    with pytest.warns(RuntimeWarning, match="unreliable"):
        perm = permeability_limit("ball", 2, (0.4, 0.3, 0.2), 32, tol=1e-10)
    assert perm.extrapolation["unreliable"]


def test_permeability_limit_2d():
    perm = permeability_limit("ball", 2, (0.4, 0.3, 0.2), 64, tol=1e-10)
    assert not perm.extrapolation["unreliable"]
    # the limit lies beyond the finest eta (A grows as the holes shrink)
    assert perm.matrix[0, 0] > perm.tensors[-1].matrix[0, 0]
    assert perm.matrix.shape == (2, 2)
    assert np.all(perm.eigenvalues > 0)
    assert len(perm.tensors) == 3
    d = perm.to_dict()
    assert d["eta_sequence"] == [0.4, 0.3, 0.2]


def test_permeability_limit_validates_sequence():
    with pytest.raises(PreconditionError):
        permeability_limit("ball", 2, (0.2, 0.3, 0.4), 16)


def test_fixed_eta_tensor_symmetric():
    t = fixed_eta_tensor(build_cell_geometry(2, 0.5, "ball", 16), c_eta=1.0)
    np.testing.assert_array_equal(t.matrix, t.matrix.T)
