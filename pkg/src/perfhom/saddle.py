"""Discrete Stokes saddle-point systems on masked MAC grids.

The velocity block is ``K = mass*I + mu*A`` per component, where ``A`` is the
masked ``-Lap``; the constraint is the masked divergence ``D`` and the
gradient is ``G = -D^T``. Pressures are gauged to zero mean on each
connected fluid region.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import CompatibilityError, NonConvergenceError, SingularSystemError, SizeGuardError
from .grid import Operators
from .linalg import SparseSPDSolver, pcg

DENSE_LIMIT = 5000


@dataclass
class SaddleSystem:
    ops: Operators
    rhs_velocity: np.ndarray
    rhs_divergence: np.ndarray = None
    mu: float = 1.0
    mass: float = 0.0

    def __post_init__(self):
        g = self.ops.grid
        self.rhs_velocity = np.asarray(self.rhs_velocity, dtype=float) * self.ops.fluid_face
        if self.rhs_divergence is None:
            self.rhs_divergence = np.zeros(g.shape)
        self.rhs_divergence = np.asarray(self.rhs_divergence, dtype=float) * self.ops.fluid_cell
        if self.mu <= 0 or self.mass < 0:
            raise ValueError("need mu > 0 and mass >= 0")

    @property
    def grid(self):
        return self.ops.grid

    @property
    def d(self):
        return self.ops.d

    def viscous(self, v, comp):
        out = self.ops.laplacian_comp(v, comp)
        out *= self.mu
        if self.mass:
            out += self.mass * v
        return out

    def viscous_diagonal(self, comp):
        diag = self.mu * self.ops.laplacian_diagonal(comp)
        if self.mass:
            diag = diag + self.mass * self.ops.fluid_face[comp]
        return diag

    def assemble_viscous(self, comp):
        A = self.mu * self.ops.assemble_laplacian(comp)
        if self.mass:
            A = A + self.mass * sp.identity(A.shape[0], format="csr")
        return A.tocsr()

    @cached_property
    def pressure_components(self):
        """Labels of fluid-cell regions connected through fluid faces (-1 on solid)."""
        ops = self.ops
        blocks = ops.assemble_divergence()
        n = blocks[0].shape[0]
        adj = sp.csr_matrix((n, n))
        for B in blocks:
            adj = adj + abs(B) @ abs(B).T
        _, labels = connected_components(adj, directed=False)
        out = -np.ones(self.grid.shape, dtype=np.int64)
        out[ops.fluid_cell] = labels
        return out

    def project_pressure(self, p):
        """Remove the mean on each connected fluid region."""
        labels = self.pressure_components
        fluid = labels >= 0
        lab = labels[fluid]
        sums = np.bincount(lab, weights=p[fluid])
        counts = np.bincount(lab)
        out = np.zeros_like(p)
        out[fluid] = p[fluid] - (sums / counts)[lab]
        return out

    def check_compatibility(self, rtol=1e-10):
        g = self.rhs_divergence
        labels = self.pressure_components
        fluid = labels >= 0
        sums = np.bincount(labels[fluid], weights=g[fluid])
        scale = np.abs(g).sum() + 1e-300
        if np.any(np.abs(sums) > rtol * scale) and np.abs(g).max() > 0:
            raise CompatibilityError(
                f"rhs_divergence does not sum to zero on each fluid region (sums {sums})")
        if self.mass == 0.0:
            self._check_viscous_kernel()

    def _check_viscous_kernel(self):
        for c in range(self.d):
            A = self.ops.assemble_laplacian(c)
            if A.shape[0] == 0:
                continue
            anchored = np.asarray(A.sum(axis=1)).ravel() > 1e-12 * A.diagonal().max()
            n_lab, labels = connected_components(A, directed=False)
            has_anchor = np.bincount(labels, weights=anchored.astype(float), minlength=n_lab) > 0
            if has_anchor.all():
                continue
            f = self.rhs_velocity[c][self.ops.fluid_face[c]]
            free = np.flatnonzero(~has_anchor)
            loads = np.array([f[labels == k].sum() for k in free])
            if np.any(np.abs(loads) > 1e-14 * (np.abs(f).sum() + 1e-300)):
                raise SingularSystemError(
                    f"velocity block of component {c} has a constant kernel (no obstacle or wall) "
                    "and the forcing has a nonzero mean along it")
            raise SingularSystemError(f"velocity block of component {c} is singular")


@dataclass
class SaddleSolution:
    velocity: np.ndarray
    pressure: np.ndarray
    residual_norms: list = field(default_factory=list)
    iterations: int = 0
    inner_iterations: int = 0
    relative_residual: float = 0.0
    divergence_max: float = 0.0


class ViscousSolver:
    """Inner solves with ``mass*I + mu*A`` for one velocity component."""

    def __init__(self, system, comp, method="cg"):
        self.system = system
        self.comp = comp
        self.mask = system.ops.fluid_face[comp]
        if method == "auto":
            n = int(self.mask.sum())
            method = "direct" if system.d == 2 and n <= 60_000 else "cg"
        self.method = method
        if method == "cg":
            diag = system.viscous_diagonal(comp)
            self._inv_diag = np.where(self.mask, 1.0 / np.where(diag > 0, diag, 1.0), 0.0)
        elif method in ("direct", "amg"):
            self._sparse = SparseSPDSolver(system.assemble_viscous(comp), method)
        else:
            raise ValueError(f"unknown inner method {method!r}")
        self.iterations = 0

    def solve(self, b, x0=None, rtol=1e-12):
        if self.method == "cg":
            x, it, _ = pcg(lambda v: self.system.viscous(v, self.comp), b * self.mask,
                           precond=lambda r: self._inv_diag * r, x0=x0, rtol=rtol,
                           maxiter=20000, name=f"viscous-cg[{self.comp}]")
        else:
            x0p = None if x0 is None else x0[self.mask]
            xp, it = self._sparse.solve(b[self.mask], x0=x0p, rtol=rtol)
            x = np.zeros_like(b)
            x[self.mask] = xp
        self.iterations += it
        return x


def _norm(x):
    return float(np.sqrt(kernels.dot(x, x)))


def coupled_residual(system, u, p):
    """Velocity and divergence residuals of ``K u + G p = f, D u = g``."""
    ops = system.ops
    gp = ops.gradient(p)
    r_u = np.stack([system.rhs_velocity[c] - system.viscous(u[c], c) - gp[c]
                    for c in range(system.d)]) * ops.fluid_face
    r_p = (system.rhs_divergence - ops.divergence(u)) * ops.fluid_cell
    return r_u, r_p


def solve_saddle(system, tol=1e-10, max_iter=500, inner="cg", x0_pressure=None,
                 inner_tol=None, solvers=None):
    """Uzawa iteration on the pressure Schur complement, CG inside and outside.

    Solves ``S p = g - D K^{-1} f`` with ``S = D K^{-1} D^T`` by CG on the
    zero-mean subspace (preconditioner ``mu*I``), then recovers ``u``.
    ``solvers`` lets time loops reuse factorised/diagonal inner solvers.
    """
    system.check_compatibility()
    ops = system.ops
    d = system.d
    f = system.rhs_velocity
    g = system.rhs_divergence
    if solvers is None:
        solvers = [ViscousSolver(system, c, inner) for c in range(d)]
    inner_tol = inner_tol if inner_tol is not None else min(1e-3 * tol, 1e-12)

    def kinv(rhs, guess=None):
        return np.stack([solvers[c].solve(rhs[c], None if guess is None else guess[c],
                                          rtol=inner_tol) for c in range(d)])

    scale = _norm(f) + _norm(g)
    if scale == 0.0:
        z = np.zeros((d,) + system.grid.shape)
        return SaddleSolution(z, np.zeros(system.grid.shape), [0.0], 0, 0, 0.0, 0.0)

    p = np.zeros(system.grid.shape) if x0_pressure is None else system.project_pressure(
        np.asarray(x0_pressure, dtype=float) * ops.fluid_cell)
    u = kinv(f - ops.gradient(p))
    r = system.project_pressure(ops.divergence(u) - g)  # = -(b - S p)
    r = -r
    schur_scale = _norm(system.project_pressure(g - ops.divergence(kinv(f)))) + _norm(g) \
        if x0_pressure is not None else _norm(r) + _norm(g)
    target = tol * max(schur_scale, 1e-300)
    history = [_norm(r)]
    it = 0
    if history[-1] > target:
        z = system.mu * r
        dirn = z.copy()
        rz = kernels.dot(r, z)
        u_dir = None
        for it in range(1, max_iter + 1):
            u_dir = kinv(-ops.gradient(dirn))
            q = system.project_pressure(ops.divergence(u_dir))
            dq = kernels.dot(dirn, q)
            if dq <= 0:
                raise NonConvergenceError("Schur complement lost positivity", history)
            alpha = rz / dq
            p += alpha * dirn
            u += alpha * u_dir
            r -= alpha * q
            history.append(_norm(r))
            if history[-1] <= target:
                break
            z = system.mu * r
            rz_new = kernels.dot(r, z)
            dirn = z + (rz_new / rz) * dirn
            rz = rz_new
        else:
            raise NonConvergenceError(
                f"Uzawa/Schur CG: no convergence in {max_iter} iterations "
                f"(residual {history[-1]:.3e}, target {target:.3e})", history)
    p = system.project_pressure(p)
    # recompute u from the final pressure to drop accumulated drift
    u = kinv(f - ops.gradient(p), guess=u)
    r_u, r_p = coupled_residual(system, u, p)
    rel = float(np.sqrt(_norm(r_u) ** 2 + _norm(r_p) ** 2) / np.sqrt(_norm(f) ** 2 + _norm(g) ** 2))
    return SaddleSolution(
        velocity=u, pressure=p, residual_norms=history, iterations=it,
        inner_iterations=sum(s.iterations for s in solvers), relative_residual=rel,
        divergence_max=float(np.abs(r_p).max()),
    )


def assemble_saddle(system):
    """Dense-ready sparse blocks ``(K, D)`` on packed unknowns."""
    K = sp.block_diag([system.assemble_viscous(c) for c in range(system.d)], format="csr")
    D = sp.hstack(system.ops.assemble_divergence(), format="csr")
    return K, D


def dense_oracle(system):
    """Direct elimination of the full saddle matrix with explicit mean constraints."""
    ops = system.ops
    n_u = int(ops.fluid_face.sum())
    n_p = int(ops.fluid_cell.sum())
    labels = system.pressure_components
    n_lab = int(labels.max()) + 1 if n_p else 0
    total = n_u + n_p + n_lab
    if total > DENSE_LIMIT:
        raise SizeGuardError(f"{total} unknowns exceed the dense oracle limit {DENSE_LIMIT}")
    system.check_compatibility()
    K, D = assemble_saddle(system)
    E = np.zeros((n_p, n_lab))
    E[np.arange(n_p), labels[ops.fluid_cell]] = 1.0
    M = np.zeros((total, total))
    M[:n_u, :n_u] = K.toarray()
    M[:n_u, n_u:n_u + n_p] = -D.T.toarray()
    M[n_u:n_u + n_p, :n_u] = -D.toarray()
    M[n_u:n_u + n_p, n_u + n_p:] = E
    M[n_u + n_p:, n_u:n_u + n_p] = E.T
    rhs = np.concatenate([ops.pack_velocity(system.rhs_velocity),
                          -ops.pack_cells(system.rhs_divergence), np.zeros(n_lab)])
    x = np.linalg.solve(M, rhs)
    u = ops.unpack_velocity(x[:n_u])
    p = ops.unpack_cells(x[n_u:n_u + n_p])
    r_u, r_p = coupled_residual(system, u, p)
    scale = np.sqrt(_norm(system.rhs_velocity) ** 2 + _norm(system.rhs_divergence) ** 2)
    rel = float(np.sqrt(_norm(r_u) ** 2 + _norm(r_p) ** 2) / scale) if scale else 0.0
    return SaddleSolution(velocity=u, pressure=p, residual_norms=[rel], iterations=1,
                          relative_residual=rel, divergence_max=float(np.abs(r_p).max()))
