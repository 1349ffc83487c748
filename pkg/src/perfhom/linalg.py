"""Krylov and preconditioner helpers shared by the solvers."""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import NonConvergenceError


def pcg(apply, b, precond=None, x0=None, rtol=1e-10, atol=0.0, maxiter=10000, name="cg"):
    """Preconditioned conjugate gradients on arrays of any shape.

    Returns ``(x, iterations, residual_history)``; raises NonConvergenceError.
    """
    dot = kernels.dot
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply(x) if x0 is not None else b.copy()
    bnorm = np.sqrt(dot(b, b))
    target = max(rtol * bnorm, atol)
    rnorm = np.sqrt(dot(r, r))
    history = [rnorm]
    if rnorm <= target or bnorm == 0.0:
        return x, 0, history
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = dot(r, z)
    for it in range(1, maxiter + 1):
        q = apply(p)
        pq = dot(p, q)
        if pq <= 0.0:
            raise NonConvergenceError(f"{name}: operator not positive definite (p.Ap={pq:.3e})",
                                      history)
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        rnorm = np.sqrt(dot(r, r))
        history.append(rnorm)
        if rnorm <= target:
            return x, it, history
        z = precond(r) if precond is not None else r
        rz_new = dot(r, z)
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise NonConvergenceError(f"{name}: no convergence in {maxiter} iterations "
                              f"(residual {rnorm:.3e}, target {target:.3e})", history)


def bicgstab(apply, b, precond=None, x0=None, rtol=1e-10, maxiter=5000, name="bicgstab"):
    """Right-preconditioned BiCGSTAB for the non-symmetric momentum predictor."""
    dot = kernels.dot
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply(x)
    bnorm = np.sqrt(dot(b, b))
    target = rtol * bnorm
    rnorm = np.sqrt(dot(r, r))
    history = [rnorm]
    if rnorm <= target or bnorm == 0.0:
        return x, 0, history
    M = precond if precond is not None else (lambda v: v)
    r_hat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    for it in range(1, maxiter + 1):
        rho_new = dot(r_hat, r)
        if rho_new == 0.0:
            break
        beta = (rho_new / rho) * (alpha / omega)
        p = r + beta * (p - omega * v)
        ph = M(p)
        v = apply(ph)
        alpha = rho_new / dot(r_hat, v)
        s = r - alpha * v
        if np.sqrt(dot(s, s)) <= target:
            x += alpha * ph
            history.append(np.sqrt(dot(s, s)))
            return x, it, history
        sh = M(s)
        t = apply(sh)
        tt = dot(t, t)
        omega = dot(t, s) / tt if tt > 0 else 0.0
        x += alpha * ph + omega * sh
        r = s - omega * t
        rho = rho_new
        rnorm = np.sqrt(dot(r, r))
        history.append(rnorm)
        if rnorm <= target:
            return x, it, history
        if omega == 0.0:
            break
    raise NonConvergenceError(f"{name}: no convergence (residual {rnorm:.3e}, target {target:.3e})",
                              history)


class SparseSPDSolver:
    """Solve with an assembled SPD matrix by LU factorisation or AMG-preconditioned CG."""

    def __init__(self, matrix, method="direct"):
        self.matrix = sp.csr_matrix(matrix)
        self.method = method
        if method == "direct":
            self._lu = spla.splu(self.matrix.tocsc())
        elif method == "amg":
            import pyamg

            # pyamg draws its spectral-radius start vector from the global RNG;
            # pin it so setups (and hence reports) are reproducible run to run
            state = np.random.get_state()
            np.random.seed(0)
            try:
                self._ml = pyamg.smoothed_aggregation_solver(self.matrix, symmetry="hermitian",
                                                             max_coarse=500)
            finally:
                np.random.set_state(state)
            self._M = self._ml.aspreconditioner(cycle="V")
        else:
            raise ValueError(f"unknown sparse method {method!r}")

    def precondition(self, b):
        if self.method == "direct":
            return self._lu.solve(b)
        return self._M @ b

    def solve(self, b, x0=None, rtol=1e-12):
        if self.method == "direct":
            return self._lu.solve(b), 1
        x, it, _ = pcg(lambda v: self.matrix @ v, b, precond=lambda v: self._M @ v, x0=x0,
                       rtol=rtol, maxiter=500, name="amg-cg")
        return x, it
