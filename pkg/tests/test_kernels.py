import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perfhom import kernels
from perfhom.geometry import PerforationSpec, build_perforated_mask
from perfhom.grid import Operators, StaggeredGrid, drop_isolated_cells

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(),
                                    reason="compiled kernels not built")


def _random_ops(rng, shape, periodic=False, density=0.8):
    g = StaggeredGrid.box(shape, [0.0] * len(shape), [1.0] * len(shape), periodic=periodic)
    fluid = drop_isolated_cells(g, rng.random(shape) < density)
    return Operators(g, fluid)


def _fields(ops, rng):
    d = ops.d
    u = rng.standard_normal((d,) + ops.grid.shape) * ops.fluid_face
    v = rng.standard_normal((d,) + ops.grid.shape) * ops.fluid_face
    p = rng.standard_normal(ops.grid.shape) * ops.fluid_cell
    return u, v, p


@pytest.fixture(params=["python", "cython"])
def backend(request):
    if request.param == "cython" and not kernels.compiled_available():
        pytest.skip("compiled kernels not built")
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend("cython" if kernels.compiled_available() else "python")


@pytest.mark.parametrize("shape,periodic", [((9, 7), False), ((6, 5, 4), False),
                                            ((8, 8), True), ((5, 6, 7), (True, False, True))])
def test_operator_identities(backend, rng, shape, periodic):
    ops = _random_ops(rng, shape, periodic)
    u, v, p = _fields(ops, rng)
    # gradient is minus the adjoint of divergence
    assert np.vdot(ops.divergence(u), p) == pytest.approx(-np.vdot(u, ops.gradient(p)), abs=1e-9)
    # -Lap is symmetric positive semi-definite
    Au, Av = ops.laplacian(u), ops.laplacian(v)
    assert np.vdot(Au, v) == pytest.approx(np.vdot(u, Av), rel=1e-12, abs=1e-9)
    assert np.vdot(Au, u) >= -1e-9
    # convection is skew: <C(a) v, v> = 0
    assert abs(np.vdot(ops.convection(u, v), v)) <= 1e-10 * (1 + np.abs(v).sum() ** 2)


@pytest.mark.parametrize("shape", [(9, 7), (6, 5, 4)])
def test_matrix_free_matches_assembled(backend, rng, shape):
    ops = _random_ops(rng, shape)
    u, _, p = _fields(ops, rng)
    for c in range(ops.d):
        A = ops.assemble_laplacian(c)
        got = ops.laplacian_comp(u[c], c)[ops.fluid_face[c]]
        np.testing.assert_allclose(got, A @ u[c][ops.fluid_face[c]], atol=1e-9)
        np.testing.assert_allclose(ops.laplacian_diagonal(c)[ops.fluid_face[c]], A.diagonal())
    D = ops.assemble_divergence()
    div = sum(D[c] @ u[c][ops.fluid_face[c]] for c in range(ops.d))
    np.testing.assert_allclose(ops.divergence(u)[ops.fluid_cell], div, atol=1e-9)
    Ac = ops.assemble_laplacian(-1)
    np.testing.assert_allclose(ops.cell_laplacian(p)[ops.fluid_cell], Ac @ p[ops.fluid_cell],
                               atol=1e-9)


@needs_compiled
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 31), d=st.sampled_from([2, 3]), n=st.integers(3, 9),
       periodic=st.booleans())
def test_backends_agree(seed, d, n, periodic):
    rng = np.random.default_rng(seed)
    ops = _random_ops(rng, (n,) * d, periodic)
    u, v, p = _fields(ops, rng)
    results = {}
    for name in ("python", "cython"):
        kernels.use_backend(name)
        results[name] = [ops.laplacian(u), ops.divergence(u), ops.gradient(p),
                         ops.convection(u, v), ops.cell_laplacian(p)]
    kernels.use_backend("cython")
    for a, b in zip(results["python"], results["cython"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-10)


@needs_compiled
def test_thread_count_bit_identical(rng):
    spec = PerforationSpec(d=3, eps=0.25, alpha=1)
    m = build_perforated_mask(spec, 24)
    ops = Operators(m.grid, m.fluid_cell, m.fluid_face)
    u, v, p = _fields(ops, rng)
    out = {}
    try:
        for t in (1, 3, 8):
            kernels.set_num_threads(t)
            out[t] = [ops.laplacian(u), ops.divergence(u), ops.gradient(p), ops.convection(u, v),
                      kernels.dot(u, v)]
    finally:
        kernels.set_num_threads(1)
    for t in (3, 8):
        for a, b in zip(out[1], out[t]):
            assert np.array_equal(a, b)


def test_dot_fixed_order(backend, rng):
    x = rng.standard_normal(1001)
    y = rng.standard_normal(1001)
    assert kernels.dot(x, y) == pytest.approx(float(np.dot(x, y)), rel=1e-12)
    assert kernels.dot(x, y) == kernels.dot(x, y)


def test_env_threads(monkeypatch):
    monkeypatch.setenv("PERFHOM_THREADS", "4")
    assert kernels.threads_from_env() == 4
    monkeypatch.delenv("PERFHOM_THREADS")
    assert kernels.threads_from_env(2) == 2
