import numpy as np
import pytest

from perfhom.darcy import (DarcyProblem, DarcySolver, darcy_from_permeability,
                           dense_darcy_oracle, solve_darcy)
from perfhom.errors import PreconditionError
from perfhom.homogenize import make_forcing


def test_matches_dense_oracle_2d():
    pb = DarcyProblem(np.diag([1.0, 0.5]), mu=2.0, f=make_forcing("rotational", 2), resolution=16)
    sol = solve_darcy(pb)
    p, uf = dense_darcy_oracle(pb)
    np.testing.assert_allclose(sol.u_faces, uf, atol=1e-12)
    np.testing.assert_allclose(sol.p, p, atol=1e-12)
    assert sol.flux_residual < 1e-10 and sol.wall_flux == 0.0


def test_conservative_forcing_gives_rest():
    # f = grad(phi) with phi affine: u = 0 and p = phi - mean
    pb = DarcyProblem(np.eye(2), f=lambda c, X: 1.0 + 0 * X[0] if c == 0 else 0 * X[0],
                      resolution=16)
    sol = solve_darcy(pb)
    assert np.abs(sol.u_faces).max() < 1e-12
    x = pb.grid.cell_centers()[0]
    np.testing.assert_allclose(sol.p, x - x.mean(), atol=1e-12)


def test_3d_amg_path_matches_direct():
    f = make_forcing("rotational", 3)
    a = DarcySolver(DarcyProblem(np.diag([1.0, 2.0, 3.0]), f=f, resolution=12, method="direct"))
    b = DarcySolver(DarcyProblem(np.diag([1.0, 2.0, 3.0]), f=f, resolution=12, method="amg",
                                 tol=1e-13))
    fa = a.problem.forcing()
    np.testing.assert_allclose(a.solve(fa).u_faces, b.solve(fa).u_faces, atol=1e-9)


def test_velocity_scales_with_mobility():
    f = make_forcing("rotational", 2)
    u1 = solve_darcy(DarcyProblem(np.eye(2), mu=1.0, f=f, resolution=8)).u_faces
    u2 = solve_darcy(DarcyProblem(3 * np.eye(2), mu=2.0, f=f, resolution=8)).u_faces
    np.testing.assert_allclose(u2, 1.5 * u1, atol=1e-13)


@pytest.mark.parametrize("A", [[[1.0, 0.2], [0.2, 1.0]], [[1.0, 0.0], [0.0, -1.0]],
                               [[1.0, 0.1], [0.0, 1.0]]])
def test_rejects_bad_permeability(A):
    with pytest.raises(PreconditionError):
        DarcyProblem(np.array(A))


def test_from_permeability_records_provenance():
    class Perm:
        d = 2
        matrix = np.eye(2) * 0.1
        eta_sequence = [0.4, 0.3, 0.2]
        extrapolation = {"method": "test"}
        hole_shape = "ball"

    sol = darcy_from_permeability(Perm(), 1.0, make_forcing("rotational", 2), resolution=8)
    assert sol.metadata["permeability"]["eta_sequence"] == [0.4, 0.3, 0.2]


def test_amg_setup_is_reproducible_and_leaves_global_rng_alone():
    import scipy.sparse as sp

    from perfhom.linalg import SparseSPDSolver

    n = 40
    T = sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    L = (sp.kron(T, sp.eye(n)) + sp.kron(sp.eye(n), T) + 1e-3 * sp.eye(n * n)).tocsr()
    b = np.sin(np.arange(n * n, dtype=float))
    np.random.seed(1)
    x1, _ = SparseSPDSolver(L, "amg").solve(b)
    np.random.seed(2)
    before = np.random.get_state()[1].copy()
    x2, _ = SparseSPDSolver(L, "amg").solve(b)
    assert np.array_equal(x1, x2)
    assert np.array_equal(np.random.get_state()[1], before)
