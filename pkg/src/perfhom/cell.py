"""Generalized periodic cell problem and the permeability tensor.

For each direction i the periodic Stokes problem ``-Lap w + grad q = c**2 e_i``
is solved on the unit cell minus the centred hole. The permeability is
``A_ij = int (w^j)_i``, or equivalently ``c**-2 int grad w^i : grad w^j``.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DiscretizationInconsistencyError, PreconditionError
from .geometry import build_cell_geometry, c_eta_from_eta
from .grid import Operators
from .saddle import SaddleSystem, dense_oracle, solve_saddle


@dataclass
class CellSolution:
    geometry: object
    direction: int  # 0-based
    c_eta: float
    w: np.ndarray
    q: np.ndarray
    norms: dict
    iterations: int = 0
    relative_residual: float = 0.0
    divergence_max: float = 0.0


def _operators(geometry):
    return Operators(geometry.grid, geometry.fluid_cell, geometry.fluid_face)


def cell_norms(ops, w, q):
    """Masked discrete L2 norms of grad w, w and q on the cell."""
    vol = ops.grid.cell_volume
    grad2 = sum(float(np.vdot(w[c], ops.laplacian_comp(w[c], c))) for c in range(ops.d))
    return {
        "grad_w_L2": math.sqrt(max(grad2, 0.0) * vol),
        "w_L2": math.sqrt(float(np.vdot(w, w)) * vol),
        "q_L2": math.sqrt(float(np.vdot(q, q)) * vol),
    }


def cell_system(geometry, c_eta, direction, ops=None):
    ops = ops or _operators(geometry)
    f = np.zeros((geometry.d,) + geometry.grid.shape)
    f[direction] = c_eta ** 2
    return SaddleSystem(ops, f)


def solve_cell(geometry, c_eta=None, direction=0, tol=1e-10, max_iter=500, inner="auto",
               oracle=False, ops=None):
    """Periodic Stokes solve with constant forcing ``c_eta**2 e_direction``.

    ``c_eta`` defaults to the d-branch value of the geometry's eta. With
    ``oracle=True`` the dense direct solver is used (tiny cells only).
    """
    d = geometry.d
    if not 0 <= direction < d:
        raise PreconditionError(f"direction must lie in 0..{d - 1}")
    if c_eta is None:
        c_eta = c_eta_from_eta(d, geometry.eta)
    if c_eta < 0:
        raise PreconditionError("c_eta must be nonnegative")
    ops = ops or _operators(geometry)
    system = cell_system(geometry, c_eta, direction, ops)
    sol = dense_oracle(system) if oracle else solve_saddle(system, tol=tol, max_iter=max_iter,
                                                             inner=inner)
    return CellSolution(
        geometry=geometry, direction=direction, c_eta=float(c_eta), w=sol.velocity,
        q=sol.pressure, norms=cell_norms(ops, sol.velocity, sol.pressure),
        iterations=sol.iterations, relative_residual=sol.relative_residual,
        divergence_max=sol.divergence_max,
    )


def cell_norm_report(sol):
    """Boundedness ratios ||grad w||/c, ||w||, ||q||/c (raw norms when c = 0)."""
    n = sol.norms
    c = sol.c_eta
    div = c if c > 0 else 1.0
    return {"grad_ratio": n["grad_w_L2"] / div, "w_norm": n["w_L2"], "q_ratio": n["q_L2"] / div}


@dataclass
class PermeabilityAtEta:
    eta: float
    c_eta: float
    resolution: int
    matrix: np.ndarray  # mean-velocity form
    energy_form: np.ndarray
    form_gap: float
    norm_reports: list
    solutions: list = None

    def to_dict(self):
        return {
            "eta": self.eta, "c_eta": self.c_eta, "resolution": self.resolution,
            "A": self.matrix.tolist(), "A_energy": self.energy_form.tolist(),
            "form_gap": self.form_gap, "norm_reports": self.norm_reports,
        }


def permeability_forms(solutions):
    """(mean-velocity form, energy form) from the d cell solutions."""
    geo = solutions[0].geometry
    ops = _operators(geo)
    d = geo.d
    vol = geo.grid.cell_volume
    c2 = solutions[0].c_eta ** 2
    mean = np.empty((d, d))
    energy = np.empty((d, d))
    lap = [[ops.laplacian_comp(s.w[c], c) for c in range(d)] for s in solutions]
    for i in range(d):
        for j in range(d):
            mean[i, j] = float(solutions[j].w[i].sum()) * vol
            energy[i, j] = sum(float(np.vdot(solutions[i].w[c], lap[j][c]))
                               for c in range(d)) * vol / c2
    return mean, energy


def permeability_at_eta(geometry, c_eta=None, tol=1e-10, inner="auto", oracle=False,
                        keep_solutions=False, check_rtol=None):
    """A(eta) by the mean-velocity form, cross-checked against the energy form."""
    d = geometry.d
    if c_eta is None:
        c_eta = c_eta_from_eta(d, geometry.eta)
    if c_eta <= 0:
        raise PreconditionError("c_eta must be positive")
    ops = _operators(geometry)
    sols = [solve_cell(geometry, c_eta, i, tol=tol, inner=inner, oracle=oracle, ops=ops)
            for i in range(d)]
    mean, energy = permeability_forms(sols)
    scale = np.abs(mean).max()
    gap = float(np.abs(mean - energy).max() / scale)
    limit = check_rtol if check_rtol is not None else 10.0 * tol
    if gap > limit:
        raise DiscretizationInconsistencyError(
            f"energy and mean-velocity forms differ by {gap:.3e} (limit {limit:.1e})")
    return PermeabilityAtEta(
        eta=float(geometry.eta), c_eta=float(c_eta), resolution=geometry.resolution,
        matrix=mean, energy_form=energy, form_gap=gap,
        norm_reports=[cell_norm_report(s) for s in sols],
        solutions=sols if keep_solutions else None,
    )


@dataclass
class PermeabilityTensor:
    d: int
    matrix: np.ndarray
    eta_sequence: list
    tensors: list  # PermeabilityAtEta per eta
    extrapolation: dict = field(default_factory=dict)
    hole_shape: str = "ball"

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))

    def to_dict(self):
        return {
            "d": self.d, "hole_shape": self.hole_shape, "A": self.matrix.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "eta_sequence": list(self.eta_sequence),
            "per_eta": [t.to_dict() for t in self.tensors],
            "extrapolation": self.extrapolation,
        }


def _fit_power(etas, values):
    """Fit v(eta) = A + b*eta**p through three points; returns (A, p) or None."""
    (e1, e2, e3), (v1, v2, v3) = etas, values
    d12, d23 = v1 - v2, v2 - v3
    if d12 == 0.0 or d23 == 0.0 or (d12 > 0) != (d23 > 0):
        return None
    ratio = d12 / d23

    def g(p):
        return (e1 ** p - e2 ** p) / (e2 ** p - e3 ** p) - ratio

    lo, hi = 1e-3, 12.0
    try:
        if g(lo) * g(hi) > 0:
            return None
        p = brentq(g, lo, hi, xtol=1e-14)
    except ValueError:
        return None
    b = d12 / (e1 ** p - e2 ** p)
    return v3 - b * e3 ** p, p


def extrapolate_tensors(etas, mats, noise=1e-8):
    """Entrywise three-point power-law extrapolation over the last three etas."""
    etas = list(etas)[-3:]
    mats = [np.asarray(m) for m in mats][-3:]
    d = mats[0].shape[0]
    scale = max(np.abs(m).max() for m in mats)
    limit = mats[-1].copy()
    powers = np.full((d, d), np.nan)
    unreliable = []
    for i in range(d):
        for j in range(d):
            vals = [m[i, j] for m in mats]
            if max(abs(v) for v in vals) <= noise * scale:
                limit[i, j] = 0.0
                continue
            fit = _fit_power(etas, vals)
            if fit is None:
                unreliable.append([i, j])
                continue
            limit[i, j], powers[i, j] = fit
    limit = 0.5 * (limit + limit.T)
    finest = mats[-1]
    change = np.abs(mats[-1] - mats[-2]) / np.maximum(np.abs(mats[-2]), noise * scale)
    info = {
        "method": "three-point power fit A + b*eta**p per entry",
        "powers": [[None if np.isnan(x) else float(x) for x in row] for row in powers],
        "estimated_error": float(np.abs(limit - finest).max()),
        "relative_change_finest": float(change.max()),
        "slow_convergence": bool(change.max() >= 0.05),
        "unreliable_entries": unreliable,
        "unreliable": bool(unreliable),
    }
    if np.linalg.eigvalsh(limit).min() <= 0:
        info["unreliable"] = True
        info["fallback"] = "extrapolant not positive definite; finest tensor used"
        limit = 0.5 * (finest + finest.T)
    return limit, info


def permeability_limit(shape="ball", d=2, eta_sequence=(0.4, 0.3, 0.2), resolutions=64,
                       tol=1e-10, inner="auto", aspect=None, c_eta=None):
    """Extrapolate A(eta) to eta -> 0 over a decreasing eta sequence."""
    etas = [float(e) for e in eta_sequence]
    if len(etas) < 3 or any(b >= a for a, b in zip(etas, etas[1:])):
        raise PreconditionError("eta_sequence must be strictly decreasing with length >= 3")
    res = [int(resolutions)] * len(etas) if np.isscalar(resolutions) else list(resolutions)
    if len(res) != len(etas):
        raise PreconditionError("one resolution per eta required")
    tensors = []
    for eta, n in zip(etas, res):
        geo = build_cell_geometry(d, eta, shape, n, aspect=aspect)
        c = c_eta(eta) if callable(c_eta) else c_eta
        tensors.append(permeability_at_eta(geo, c, tol=tol, inner=inner))
    mats = [t.matrix for t in tensors]
    limit, info = extrapolate_tensors(etas, mats)
    if info["unreliable"]:
        warnings.warn("permeability extrapolation unreliable: " + repr(info["unreliable_entries"]),
                      RuntimeWarning, stacklevel=2)
    return PermeabilityTensor(d=d, matrix=limit, eta_sequence=etas, tensors=tensors,
                              extrapolation=info, hole_shape=shape)


def fixed_eta_tensor(geometry, c_eta=None, tol=1e-10, inner="auto"):
    """Permeability at a single fixed eta (classical cell problem, a_eps ~ eps)."""
    at = permeability_at_eta(geometry, c_eta, tol=tol, inner=inner)
    return PermeabilityTensor(
        d=geometry.d, matrix=0.5 * (at.matrix + at.matrix.T), eta_sequence=[at.eta],
        tensors=[at], extrapolation={"method": "fixed eta (no extrapolation)",
                                     "estimated_error": 0.0, "unreliable": False},
        hole_shape=geometry.hole_shape)
