"""Acceptance criteria 1-9, each at its stated tolerance and runtime budget.

Every test records a one-line PASS/FAIL summary (printed at the end of the
session) before asserting. Criteria 2, 6 and 9 go through the command line
exactly as a user would run them.
"""
import json
import math
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from conftest import record
from oracles import dirichlet_poincare_box
from perfhom.cell import cell_norm_report, solve_cell
from perfhom.geometry import (PerforationSpec, build_cell_geometry, build_perforated_mask,
                              full_box_mask)
from perfhom.grid import Operators, StaggeredGrid, drop_isolated_cells
from perfhom.homogenize import SweepConfig, poincare_constant, poincare_sweep, run_small_holes_sweep
from perfhom.nse import FlowProblem, energy_residual, simulate
from perfhom.saddle import SaddleSystem, dense_oracle, solve_saddle

pytestmark = pytest.mark.acceptance

PERMEABILITY_TOML = """
[permeability]
d = 2
hole_shape = "ball"
eta_sequence = [0.4, 0.3, 0.2]
resolution = 64
tol = 1e-10
"""

SWEEP_LARGE_TOML = """
[sweep-large]
d = 3
alpha = 1.0
eps_sequence = [0.25, 0.125]
cells_per_period = 8
forcing = "rotational"
initial = "zero"
viscosity = 1.0
horizon_seconds = 1.0
n_steps = 4
"""

# grid for the small-hole proxy; see the ledger for why alpha = 4 stays unresolved
PROXY_RESOLUTION = 96


def _cli(config, out, threads):
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "perfhom", "--config", str(config), "--output",
                           str(out), "--threads", str(threads)], capture_output=True, text=True)
    return proc, time.perf_counter() - start


@pytest.fixture(scope="module")
def cli_runs(tmp_path_factory):
    """Criteria 2 and 6 through the CLI (threads 1); criterion 9 reruns them."""
    root = tmp_path_factory.mktemp("acceptance")
    (root / "permeability.toml").write_text(PERMEABILITY_TOML)
    (root / "sweep_large.toml").write_text(SWEEP_LARGE_TOML)
    return {"root": root, "done": {}}


def _run_once(cli_runs, name, threads):
    key = (name, threads)
    if key not in cli_runs["done"]:
        root = cli_runs["root"]
        out = root / f"{name}_t{threads}"
        proc, secs = _cli(root / f"{name}.toml", out, threads)
        cli_runs["done"][key] = (proc, secs, out)
    return cli_runs["done"][key]


def test_criterion_1_saddle_oracle():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        n0, n1 = rng.integers(4, 13, size=2)
        g = StaggeredGrid.box((n0, n1), [0.0, 0.0], [1.0, 1.0])
        fluid = drop_isolated_cells(g, rng.random((n0, n1)) < rng.uniform(0.6, 0.95))
        ops = Operators(g, fluid)
        s = SaddleSystem(ops, rng.standard_normal((2, n0, n1)), mu=rng.uniform(0.1, 10.0))
        sol = solve_saddle(s, tol=1e-10)
        ref = dense_oracle(s)
        xr = np.concatenate([ops.pack_velocity(ref.velocity), ops.pack_cells(ref.pressure)])
        xi = np.concatenate([ops.pack_velocity(sol.velocity), ops.pack_cells(sol.pressure)])
        worst = max(worst, float(np.linalg.norm(xi - xr) / np.linalg.norm(xr)))
    secs = time.perf_counter() - start
    ok = worst <= 1e-7 and secs < 10.0
    record(1, ok, f"max relative difference {worst:.2e} (<= 1e-7) over 20 systems, {secs:.1f} s")
    assert ok


def test_criterion_2_cell_identity(cli_runs):
    proc, secs, out = _run_once(cli_runs, "permeability", 1)
    assert proc.returncode == 0, proc.stderr
    rep = json.loads((out / "report.json").read_text())
    gaps, spd, sym = [], True, True
    for t in rep["per_eta"]:
        A, E = np.array(t["A"]), np.array(t["A_energy"])
        gaps.append(float(np.abs(A - E).max() / np.abs(A).max()))
        sym &= bool(np.abs(A - A.T).max() <= 1e-10 * np.abs(A).max())
        spd &= bool(np.linalg.eigvalsh(0.5 * (A + A.T)).min() > 0)
    ok = len(gaps) == 3 and max(gaps) <= 1e-6 and sym and spd and secs < 120
    record(2, ok, f"form gaps {[f'{g:.1e}' for g in gaps]} (<= 1e-6), symmetric={sym}, "
                  f"SPD={spd}, {secs:.1f} s")
    assert ok


def test_criterion_3_cell_bands():
    start = time.perf_counter()
    etas = (0.4, 0.3, 0.25, 0.2)
    reports = {}
    for eta in etas:
        geo = build_cell_geometry(3, eta, "ball", 32)
        for i in range(3):
            sol = solve_cell(geo, direction=i, tol=1e-8)
            reports[(eta, i)] = cell_norm_report(sol)
    secs = time.perf_counter() - start
    worst = 1.0
    for i in range(3):
        base = reports[(0.4, i)]
        for eta in etas:
            for key, val in reports[(eta, i)].items():
                r = val / base[key]
                worst = max(worst, r, 1.0 / r)
    ok = worst <= 3.0 and secs < 600
    record(3, ok, f"largest band factor {worst:.3f} (<= 3) over eta {etas}, {secs:.1f} s")
    assert ok


def test_criterion_4_energy_inequality():
    start = time.perf_counter()
    mask = build_perforated_mask(PerforationSpec(d=2, eps=0.25, alpha=1), 64)

    def f(c, X, t):
        x, y = X
        rot = (0.5 - y) if c == 0 else (x - 0.5)
        bump = 5.0 * np.sin(np.pi * x) * np.sin(np.pi * y) if c == 0 else 0.0
        return 20.0 * np.cos(3.0 * t) * rot + bump

    tr = simulate(FlowProblem(mask, mu=0.05, f=f, T=1.0, dt=0.005, snapshot_every=50))
    secs = time.perf_counter() - start
    _, smin = energy_residual(tr)
    kmax = max(row[1] for row in tr.ledger)
    steps = tr.info["steps"]
    ok = smin >= -1e-8 * kmax and steps >= 200 and secs < 120
    record(4, ok, f"min slack {smin:.3e} >= {-1e-8 * kmax:.3e} over {steps} steps, {secs:.1f} s")
    assert ok


def test_criterion_5_poincare():
    start = time.perf_counter()
    rep = poincare_sweep(d=3, alpha=1.0, eps_sequence=(0.25, 0.125, 0.0625), cells_per_period=8)
    cp_box = poincare_constant(full_box_mask(2, 64))
    secs = time.perf_counter() - start
    ref = dirichlet_poincare_box(2)
    rel = abs(cp_box - ref) / ref
    ok = rep.band_ratio <= 2.0 and rel <= 0.02 and secs < 300
    ratios = ", ".join(f"{r['ratio']:.3f}" for r in rep.rows)
    record(5, ok, f"C_P/sigma = [{ratios}], band {rep.band_ratio:.3f} (<= 2); unit square "
                  f"off by {100 * rel:.2f}% (<= 2%), {secs:.1f} s")
    assert ok


def test_criterion_6_darcy_shadow(cli_runs):
    proc, secs, out = _run_once(cli_runs, "sweep_large", 1)
    assert proc.returncode == 0, proc.stderr
    rep = json.loads((out / "report.json").read_text())
    errs = [r["error"] for r in rep["rows"]]
    ok = len(errs) == 2 and errs[1] < errs[0] and rep["checks"]["strictly_decreasing"] \
        and secs < 1800
    record(6, ok, f"errors {errs[0]:.4f} -> {errs[1]:.4f} (strictly decreasing), {secs:.1f} s")
    assert ok


def test_criterion_7_small_hole_proxy():
    start = time.perf_counter()
    cfg = SweepConfig(d=3, proxy="alpha", eps_sequence=(0.25,), alpha_sequence=(1.5, 2.0, 3.0, 4.0),
                      resolution=PROXY_RESOLUTION, radius_ratio=0.75, forcing="smooth",
                      initial="vortex", horizon=0.2, n_steps=10, mu=0.1, unresolved="mask")
    rep = run_small_holes_sweep(cfg)
    secs = time.perf_counter() - start
    errs = rep.errors()
    monotone = rep.checks["monotone_in_alpha"]
    resolved = rep.checks["all_holes_resolved"]
    marked = any("not desk-reproducible" in n for n in rep.notes)
    unresolved = [r["alpha"] for r in rep.rows if not r.get("hole_resolved")]
    ok = monotone and resolved and marked and secs < 1800
    record(7, ok, f"errors {[round(e, 4) for e in errs]} monotone={monotone}; "
                  f"all holes resolved={resolved} (unresolved alpha {unresolved} at "
                  f"{PROXY_RESOLUTION}^3); asymptotics marked not reproducible={marked}, {secs:.1f} s")
    assert monotone and marked and secs < 1800
    assert resolved, "alpha = 4 holes need ~320^3 cells at eps = 1/4; see the decisions ledger"


def test_criterion_8_manufactured_order():
    sy = pytest.importorskip("sympy")
    start = time.perf_counter()
    x, y, t = sy.symbols("x y t")
    mu = 0.1
    u = sy.sin(sy.pi * x) ** 2 * sy.sin(2 * sy.pi * y) * sy.cos(t)
    v = -sy.sin(2 * sy.pi * x) * sy.sin(sy.pi * y) ** 2 * sy.cos(t)
    p = sy.cos(sy.pi * x) * sy.cos(sy.pi * y) * sy.cos(t)

    def lap(w):
        return sy.diff(w, x, 2) + sy.diff(w, y, 2)

    fu = sy.diff(u, t) + u * sy.diff(u, x) + v * sy.diff(u, y) - mu * lap(u) + sy.diff(p, x)
    fv = sy.diff(v, t) + u * sy.diff(v, x) + v * sy.diff(v, y) - mu * lap(v) + sy.diff(p, y)
    F = [sy.lambdify((x, y, t), e, "numpy") for e in (fu, fv)]
    U = [sy.lambdify((x, y, t), e, "numpy") for e in (u, v)]
    T = 0.5
    errs = []
    for n, steps in ((16, 10), (32, 20), (64, 40)):
        m = full_box_mask(2, n)
        tr = simulate(FlowProblem(m, mu=mu, f=lambda c, X, tt: F[c](X[0], X[1], tt),
                                  u0=lambda c, X: U[c](X[0], X[1], 0.0), T=T, n_steps=steps,
                                  snapshot_every=steps))
        exact = m.grid.sample_faces(lambda c, X: U[c](X[0], X[1], T)) * m.fluid_face
        errs.append(float(np.abs(tr.velocity - exact).max()))
    secs = time.perf_counter() - start
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    ok = min(ratios) >= 1.7 and secs < 300
    record(8, ok, f"max errors {[f'{e:.2e}' for e in errs]}, contraction "
                  f"{[round(r, 2) for r in ratios]} (>= 1.7), {secs:.1f} s")
    assert ok


def test_criterion_9_determinism(cli_runs):
    same = {}
    for name in ("permeability", "sweep_large"):
        a = _run_once(cli_runs, name, 1)
        b = _run_once(cli_runs, name, 8)
        assert a[0].returncode == 0 and b[0].returncode == 0, b[0].stderr
        same[name] = (a[2] / "report.json").read_bytes() == (b[2] / "report.json").read_bytes()
    ok = all(same.values())
    record(9, ok, "report.json bit-identical for --threads 1 vs 8: " +
           ", ".join(f"{k}={v}" for k, v in same.items()))
    assert ok
