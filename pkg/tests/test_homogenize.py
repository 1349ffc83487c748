import math
import warnings

import numpy as np
import pytest

from oracles import dirichlet_poincare_box, dirichlet_poincare_discrete
from perfhom.errors import ConfigError, PreconditionError
from perfhom.geometry import full_box_mask
from perfhom.grid import Operators
from perfhom.homogenize import (SweepConfig, make_forcing, make_initial, poincare_constant,
                                poincare_sweep, run_large_holes_sweep, run_small_holes_sweep)
from perfhom.io import dumps


def _ops(n=16, d=2):
    m = full_box_mask(d, n)
    return m, Operators(m.grid, m.fluid_cell, m.fluid_face)


def test_rotational_forcing_is_not_a_gradient():
    m, ops = _ops()
    f = m.grid.sample_faces(make_forcing("rotational", 2), 0.0) * m.fluid_face
    # divergence-free in the interior yet with nonzero circulation
    assert np.abs(ops.divergence(f)[1:-1, 1:-1]).max() < 1e-12
    h = m.grid.spacing[0]
    curl = (np.diff(f[1], axis=0)[:, 1:] - np.diff(f[0], axis=1)[1:, :]) / h
    assert np.abs(curl[2:-2, 2:-2] - 2.0).max() < 1e-10


def test_time_dependent_modulation():
    f = make_forcing("rotational", 2, amplitude=2.0, time_dependent=True)
    X = (np.array([0.0]), np.array([0.0]))
    assert f(0, X, 0.25)[0] == pytest.approx(2.0 * 1.5 * 0.5)
    assert make_forcing("zero", 2) is None
    with pytest.raises(ConfigError):
        make_forcing("swirl", 2)


@pytest.mark.parametrize("d", [2, 3])
def test_vortex_initial_divergence_free(d):
    m, ops = _ops(12, d)
    u = m.grid.sample_faces(make_initial("vortex", d)) * m.fluid_face
    # separable field: the MAC divergence of its face samples vanishes to rounding
    assert np.abs(ops.divergence(u)).max() < 1e-12
    assert np.abs(u).max() > 0.5


def test_sweep_config_rows():
    cfg = SweepConfig(eps_sequence=(0.25, 0.125))
    assert cfg.rows() == [(0.25, 1.0), (0.125, 1.0)]
    assert cfg.grid_resolution(0.125) == 64
    assert SweepConfig(proxy="alpha", alpha_sequence=(1.5, 4.0)).rows() == [(0.25, 1.5), (0.25, 4.0)]
    with pytest.raises(PreconditionError):
        SweepConfig(cells_per_period=8).grid_resolution(0.3)


def test_poincare_matches_discrete_eigenvalue():
    cp = poincare_constant(full_box_mask(2, 24), rtol=1e-12)
    assert cp == pytest.approx(dirichlet_poincare_discrete(24, 2), rel=1e-8)


def test_poincare_unit_square_analytic():
    cp = poincare_constant(full_box_mask(2, 64))
    assert cp == pytest.approx(dirichlet_poincare_box(2), rel=0.02)


def test_poincare_holes_reduce_constant():
    rep = poincare_sweep(d=2, alpha=1.5, eps_sequence=(0.25, 0.125), cells_per_period=16,
                         radius_ratio=0.35)
    cps = [r["C_P"] for r in rep.rows]
    assert all(c < dirichlet_poincare_box(2) for c in cps)
    assert cps[1] < cps[0]
    assert rep.band_ratio >= 1.0


def test_large_holes_sweep_2d_report():
    cfg = SweepConfig(d=2, alpha=1.5, eps_sequence=(0.25, 0.125), n_steps=3, horizon=0.5,
                      cell_resolution=32, cells_per_period=16, radius_ratio=0.35)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = run_large_holes_sweep(cfg)
    assert rep.kind == "large_holes" and not rep.degraded
    assert len(rep.errors()) == 2 and all(0 < e < 1.5 for e in rep.errors())
    assert rep.checks["strictly_decreasing"] == (rep.errors()[1] < rep.errors()[0])
    for row in rep.rows:
        assert row["min_slack"] >= -1e-8 * row["energy_scale"]
    assert rep.limit_model["model"] == "Darcy"
    header, rows = rep.csv_rows()
    assert header[0] == "eps" and len(rows) == 2
    dumps(rep.to_dict())  # serialisable, finite


def test_large_holes_skips_unresolved_rows():
    cfg = SweepConfig(d=2, alpha=1.5, eps_sequence=(0.25, 0.125), n_steps=2, horizon=0.2,
                      cell_resolution=32)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = run_large_holes_sweep(cfg)
    assert rep.degraded and not rep.passed
    assert "skipped" in rep.rows[1]


def test_small_holes_proxy_2d():
    cfg = SweepConfig(d=2, proxy="alpha", alpha_sequence=(1.5, 2.0, 3.0), eps_sequence=(0.25,),
                      resolution=64, radius_ratio=0.75, forcing="smooth", initial="vortex",
                      horizon=0.1, n_steps=5, mu=0.1, unresolved="mask")
    rep = run_small_holes_sweep(cfg)
    errs = rep.errors()
    assert rep.checks["monotone_in_alpha"] and errs[0] > errs[-1]
    assert [r["hole_resolved"] for r in rep.rows] == [True, True, False]
    assert not rep.checks["all_holes_resolved"]
    assert any("not desk-reproducible" in n for n in rep.notes)


def test_regime_preconditions():
    with pytest.raises(PreconditionError):
        run_large_holes_sweep(SweepConfig(d=3, alpha=3.5))
    with pytest.raises(PreconditionError):
        run_small_holes_sweep(SweepConfig(d=3, alpha=2.0))
