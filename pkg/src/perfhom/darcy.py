"""Darcy's law ``mu u = A (f - grad p), div u = 0, u.n = 0`` on a box.

Cell-centred pressures with two-point fluxes on the same staggered layout as
the flow solver, so Darcy face fluxes compare directly with NSE face
velocities. The permeability must be diagonal in the grid axes (two-point
fluxes cannot represent cross terms); A is constant, so face averaging of A
is the identity.
"""
import inspect
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import PreconditionError
from .geometry import full_box_mask
from .grid import Operators
from .linalg import SparseSPDSolver, pcg


def _takes_time(func):
    """True for forcings of the form ``f(comp, coords, t)``."""
    try:
        params = inspect.signature(func).parameters.values()
    except (TypeError, ValueError):
        return True
    positional = [q for q in params if q.kind in (q.POSITIONAL_ONLY, q.POSITIONAL_OR_KEYWORD)]
    return len(positional) >= 3 or any(q.kind is q.VAR_POSITIONAL for q in params)


def _as_matrix(A):
    perm = None
    if hasattr(A, "matrix"):
        perm, A = A, A.matrix
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return A, perm


@dataclass
class DarcyProblem:
    A: object
    mu: float = 1.0
    f: object = None
    resolution: object = 32
    omega: tuple = None
    d: int = None
    tol: float = 1e-12
    method: str = "auto"

    def __post_init__(self):
        mat, self.provenance = _as_matrix(self.A)
        if self.d is None:
            self.d = mat.shape[0]
        if mat.shape != (self.d, self.d):
            raise PreconditionError(f"A must be {self.d}x{self.d}")
        if not np.allclose(mat, mat.T, rtol=1e-10, atol=0.0):
            raise PreconditionError("A must be symmetric")
        if np.linalg.eigvalsh(mat).min() <= 0:
            raise PreconditionError("A must be positive definite")
        off = mat - np.diag(np.diag(mat))
        if np.abs(off).max() > 1e-10 * np.abs(mat).max():
            raise PreconditionError("two-point fluxes need A diagonal in the grid axes")
        if self.mu <= 0:
            raise PreconditionError("viscosity must be positive")
        self.matrix = mat
        self.mask = full_box_mask(self.d, self.resolution, self.omega)

    @property
    def grid(self):
        return self.mask.grid

    def forcing(self, t=None):
        g = self.grid
        if self.f is None:
            return np.zeros((g.d,) + g.shape)
        if callable(self.f):
            if _takes_time(self.f):
                out = g.sample_faces(self.f, 0.0 if t is None else t)
            else:
                out = g.sample_faces(self.f)
        else:
            out = np.array(self.f, dtype=float)
        return out * self.mask.fluid_face


@dataclass
class DarcySolution:
    u: np.ndarray  # cell-centred velocity
    u_faces: np.ndarray  # normal fluxes on faces (zero on walls)
    p: np.ndarray
    flux_residual: float
    wall_flux: float
    iterations: int = 0
    metadata: dict = field(default_factory=dict)


class DarcySolver:
    """Reusable factorisation of ``D diag(A) D^T`` (pinned) for per-frame solves."""

    def __init__(self, problem):
        self.problem = problem
        mask = problem.mask
        self.ops = Operators(mask.grid, mask.fluid_cell, mask.fluid_face)
        self.coef = np.diag(problem.matrix)
        blocks = self.ops.assemble_divergence()
        L = sum(a * (B @ B.T) for a, B in zip(self.coef, blocks)).tocsr()
        self.L = L
        n = L.shape[0]
        keep = np.ones(n)
        keep[0] = 0.0
        Kd = sp.diags(keep)
        pinned = (Kd @ L @ Kd + sp.diags(1.0 - keep) * L.diagonal().max()).tocsr()
        method = problem.method
        if method == "auto":
            method = "direct" if problem.d == 2 or n <= 40_000 else "amg"
        self.method = method
        self._solver = SparseSPDSolver(pinned, method)

    def scaled(self, v):
        return np.stack([a * v[c] for c, a in enumerate(self.coef)])

    def solve(self, f):
        ops = self.ops
        rhs = -ops.pack_cells(ops.divergence(self.scaled(f)))
        compat = abs(rhs.sum())
        b = rhs.copy()
        b[0] = 0.0
        if self.method == "direct":
            x, its = self._solver.solve(b)
        else:
            x, its, _ = pcg(lambda v: self._solver.matrix @ v, b, precond=self._solver.precondition,
                            rtol=self.problem.tol, maxiter=1000, name="darcy-cg")
        x -= x.mean()
        p = ops.unpack_cells(x)
        u_f = self.scaled(f - ops.gradient(p)) / self.problem.mu * ops.fluid_face
        from .nse import cell_average

        div = ops.divergence(u_f)
        return DarcySolution(
            u=cell_average(ops, u_f), u_faces=u_f, p=p,
            flux_residual=float(np.abs(div).max()), wall_flux=_wall_flux(ops, u_f),
            iterations=int(its),
            metadata={"A": self.problem.matrix.tolist(), "mu": self.problem.mu,
                      "compatibility_sum": float(compat),
                      "grid": list(self.problem.grid.shape)},
        )


def _wall_flux(ops, u_f):
    g = ops.grid
    worst = 0.0
    for c in range(g.d):
        if g.periodic[c]:
            continue
        sl = [slice(None)] * g.d
        sl[c] = 0
        worst = max(worst, float(np.abs(u_f[c][tuple(sl)]).max()))
    return worst


def solve_darcy(problem, t=None):
    """One Darcy solve with the forcing at time ``t`` (or the static forcing)."""
    return DarcySolver(problem).solve(problem.forcing(t))


def darcy_frames(problem, times):
    solver = DarcySolver(problem)
    return [solver.solve(problem.forcing(t)) for t in times]


def darcy_from_permeability(perm, mu, f, omega=None, resolution=32, t=None):
    """Solve Darcy with the extrapolated permeability, recording its provenance."""
    if getattr(perm, "matrix", None) is None:
        raise PreconditionError("permeability has no extrapolated matrix")
    problem = DarcyProblem(A=perm.matrix, mu=mu, f=f, resolution=resolution, omega=omega,
                           d=perm.d)
    sol = solve_darcy(problem, t)
    sol.metadata["permeability"] = {
        "eta_sequence": list(perm.eta_sequence),
        "extrapolation": perm.extrapolation,
        "hole_shape": getattr(perm, "hole_shape", None),
    }
    return sol


def dense_darcy_oracle(problem, t=None):
    """Dense Neumann problem with a Lagrange mean constraint (small grids)."""
    ops = Operators(problem.grid, problem.mask.fluid_cell, problem.mask.fluid_face)
    coef = np.diag(problem.matrix)
    blocks = ops.assemble_divergence()
    L = sum(a * (B @ B.T) for a, B in zip(coef, blocks)).toarray()
    n = L.shape[0]
    if n > 5000:
        raise PreconditionError("dense Darcy oracle limited to 5000 cells")
    f = problem.forcing(t)
    sf = np.stack([a * f[c] for c, a in enumerate(coef)])
    rhs = -ops.pack_cells(ops.divergence(sf))
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = L
    M[:n, n] = 1.0
    M[n, :n] = 1.0
    x = np.linalg.solve(M, np.concatenate([rhs, [0.0]]))[:n]
    p = ops.unpack_cells(x)
    u_f = np.stack([a * v for a, v in zip(coef, f - ops.gradient(p))]) / problem.mu * ops.fluid_face
    return p, u_f
