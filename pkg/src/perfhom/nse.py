"""Time stepping of incompressible Navier-Stokes on (perforated) boxes.

Two schemes share one energy ledger:

* ``projection`` -- incremental pressure correction. The momentum predictor
  is implicit in viscosity and linearly implicit in the skew-symmetric
  convection, so the discrete energy inequality holds exactly (up to solver
  tolerances) with nonnegative numerical dissipation.
* ``coupled`` -- backward Euler with a full Stokes saddle solve per step and
  Picard iteration on the convection term; needed when the time scale
  ``sigma**2`` makes the flow quasi-static (large holes).

The ``time_scale`` coefficient multiplies only the time derivative.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import InstabilityError, NonConvergenceError, PreconditionError
from .grid import Operators
from .io import write_csv, write_field
from .linalg import SparseSPDSolver, bicgstab
from .saddle import SaddleSystem, ViscousSolver, solve_saddle

LEDGER_COLUMNS = ("t", "kinetic", "dissipation", "work", "slack")


@dataclass
class FlowProblem:
    """Data of one run. ``f`` and ``u0`` may be arrays or callables
    ``f(comp, coords, t)`` / ``u0(comp, coords)`` sampled on the faces."""
    mask: object
    mu: float = 1.0
    time_scale: float = 1.0
    u0: object = None
    f: object = None
    T: float = 1.0
    dt: float = None
    n_steps: int = None
    cfl: float = 0.5
    scheme: str = "projection"
    tol: float = 1e-12
    snapshot_every: int = 1
    p0: np.ndarray = None
    t0: float = 0.0
    project_initial: bool = True
    inner: str = "auto"
    max_picard: int = 30
    integral_history: bool = True

    def __post_init__(self):
        if self.mu <= 0:
            raise PreconditionError("viscosity must be positive")
        if self.time_scale <= 0:
            raise PreconditionError("time_scale must be positive")
        if self.T <= 0:
            raise PreconditionError("horizon must be positive")
        if self.scheme not in ("projection", "coupled"):
            raise PreconditionError(f"unknown scheme {self.scheme!r}")
        if self.dt is None:
            n = self.n_steps or 100
            self.dt = self.T / n
        if self.n_steps is None:
            self.n_steps = int(math.ceil(self.T / self.dt - 1e-9))
        if self.dt <= 0:
            raise PreconditionError("dt must be positive")

    @property
    def grid(self):
        return self.mask.grid

    def forcing(self, t):
        g = self.grid
        if self.f is None:
            return np.zeros((g.d,) + g.shape)
        if callable(self.f):
            out = g.sample_faces(self.f, t)
        else:
            out = np.array(self.f, dtype=float)
        return out * self.mask.fluid_face

    def initial_velocity(self):
        g = self.grid
        if self.u0 is None:
            return np.zeros((g.d,) + g.shape)
        out = g.sample_faces(self.u0) if callable(self.u0) else np.array(self.u0, dtype=float)
        return out * self.mask.fluid_face


@dataclass
class TimeIntegrals:
    """Running trapezoidal integrals of u (faces), u(x)u (cell centres) and f (faces)."""
    times: list
    U: list
    Psi: list
    F: list

    @property
    def final(self):
        return self.U[-1], self.Psi[-1], self.F[-1]


@dataclass
class Trajectory:
    problem: FlowProblem
    times: list = field(default_factory=list)
    velocities: list = field(default_factory=list)
    pressures: list = field(default_factory=list)
    forcings: list = field(default_factory=list)
    ledger: list = field(default_factory=list)  # rows (t, kinetic, dissipation, work, slack)
    steps: list = field(default_factory=list)  # dt per step
    divergence_max: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    velocity: np.ndarray = None  # final state
    pressure: np.ndarray = None
    integrals: TimeIntegrals = None

    @property
    def slack(self):
        return np.array([row[4] for row in self.ledger])

    @property
    def energy_scale(self):
        if not self.ledger:
            return 0.0
        kin = max(row[1] for row in self.ledger)
        work = max(abs(row[3]) for row in self.ledger)
        return max(kin, work)

    def write_ledger(self, path):
        write_csv(path, LEDGER_COLUMNS, self.ledger)

    def dump_frames(self, directory, prefix="frame"):
        g = self.problem.grid
        mh = self.problem.mask.mask_hash()
        for k, (t, u, p) in enumerate(zip(self.times, self.velocities, self.pressures)):
            common = {"time": t, "spacing": list(g.spacing), "mask_hash": mh}
            write_field(f"{directory}/{prefix}_{k:05d}_u", u, field="velocity", **common)
            write_field(f"{directory}/{prefix}_{k:05d}_p", p, field="pressure", **common)


def cell_average(ops, u):
    """Face velocity averaged to cell centres (walls and solid faces count as 0)."""
    g = ops.grid
    out = np.empty_like(u)
    for c in range(g.d):
        up = np.roll(u[c], -1, axis=c)
        if not g.periodic[c]:
            sl = [slice(None)] * g.d
            sl[c] = -1
            up[tuple(sl)] = 0.0
        out[c] = 0.5 * (u[c] + up)
    return out


def outer_cells(ops, u):
    uc = cell_average(ops, u)
    return np.einsum("i...,j...->ij...", uc, uc)


class PressurePoisson:
    """Masked Neumann Laplacian ``D D^T`` with one pinned cell per fluid region."""

    def __init__(self, ops, labels, method="auto"):
        self.ops = ops
        blocks = ops.assemble_divergence()
        L = sum(B @ B.T for B in blocks).tocsr()
        lab = labels[ops.fluid_cell]
        n_lab = int(lab.max()) + 1
        pins = np.array([np.flatnonzero(lab == k)[0] for k in range(n_lab)])
        keep = np.ones(L.shape[0])
        keep[pins] = 0.0
        Kd = sp.diags(keep)
        L = (Kd @ L @ Kd + sp.diags(1.0 - keep) * L.diagonal().max()).tocsr()
        self.pins = pins
        if method == "auto":
            method = "direct" if (ops.d == 2 and L.shape[0] <= 200_000) or L.shape[0] <= 20_000 \
                else "amg"
        self.solver = SparseSPDSolver(L, method)

    def solve(self, rhs_cells, rtol=1e-12):
        b = self.ops.pack_cells(rhs_cells).copy()
        b[self.pins] = 0.0
        x, _ = self.solver.solve(b, rtol=rtol)
        return self.ops.unpack_cells(x)


def _inner(x, y, vol):
    return kernels.dot(x, y) * vol


class _Accumulator:
    """Online trapezoid for U, Psi, F at every step.

    With ``integral_history=False`` only the latest U, Psi, F are kept instead of
    one copy per snapshot (Psi alone is d*d fields per snapshot).
    """

    def __init__(self, ops, t, u, f, integral_history=True):
        self.ops = ops
        self.integral_history = integral_history
        self.prev = (t, u.copy(), outer_cells(ops, u), f.copy())
        self.U = np.zeros_like(u)
        self.Psi = np.zeros((ops.d, ops.d) + ops.grid.shape)
        self.F = np.zeros_like(f)
        self.out = TimeIntegrals([t], [self.U.copy()], [self.Psi.copy()], [self.F.copy()])

    def add(self, t, u, f):
        t0, u0, psi0, f0 = self.prev
        w = 0.5 * (t - t0)
        psi = outer_cells(self.ops, u)
        self.U += w * (u0 + u)
        self.Psi += w * (psi0 + psi)
        self.F += w * (f0 + f)
        self.prev = (t, u.copy(), psi, f.copy())

    def snapshot(self, t):
        if self.integral_history:
            self.out.times.append(t)
            self.out.U.append(self.U.copy())
            self.out.Psi.append(self.Psi.copy())
            self.out.F.append(self.F.copy())
        else:
            self.out.times[-1] = t
            self.out.U[-1] = self.U.copy()
            self.out.Psi[-1] = self.Psi.copy()
            self.out.F[-1] = self.F.copy()


def project_divergence_free(ops, u, poisson):
    """L2 projection of a masked face field onto the discrete divergence-free space."""
    div = ops.divergence(u)
    phi = poisson.solve(-div)
    return (u - ops.gradient(phi)) * ops.fluid_face


def simulate(problem, on_step=None, dt_min=None):
    """Run the configured scheme; returns a Trajectory with ledger and integrals.

    ``on_step(t, u, p)`` is called after every accepted step.
    """
    mask = problem.mask
    g = mask.grid
    ops = Operators(g, mask.fluid_cell, mask.fluid_face)
    d = g.d
    vol = g.cell_volume
    s2 = problem.time_scale
    mu = problem.mu
    h_min = min(g.spacing)
    dt_min = dt_min if dt_min is not None else 1e-10 * problem.T

    stokes = SaddleSystem(ops, np.zeros((d,) + g.shape), mu=mu, mass=s2 / problem.dt)
    labels = stokes.pressure_components
    poisson = PressurePoisson(ops, labels)

    u = problem.initial_velocity()
    info = {"scheme": problem.scheme, "mask_hash": mask.mask_hash(), "grid": list(g.shape),
            "diffusion_number": mu * problem.dt / (s2 * h_min ** 2),
            "backend": kernels.BACKEND, "threads": kernels.get_num_threads()}
    if problem.project_initial and np.abs(u).max() > 0:
        u_proj = project_divergence_free(ops, u, poisson)
        info["initial_projection_change"] = float(np.abs(u_proj - u).max())
        u = u_proj
    p = np.zeros(g.shape) if problem.p0 is None else stokes.project_pressure(problem.p0)
    t = float(problem.t0)
    t_end = t + problem.T

    traj = Trajectory(problem=problem, info=info)
    f_now = problem.forcing(t)
    kinetic0 = 0.5 * s2 * _inner(u, u, vol)
    traj.ledger.append((t, kinetic0, 0.0, 0.0, 0.0))
    traj.divergence_max.append(float(np.abs(ops.divergence(u)).max()))
    traj.times.append(t)
    traj.velocities.append(u.copy())
    traj.pressures.append(p.copy())
    traj.forcings.append(f_now.copy())
    acc = _Accumulator(ops, t, u, f_now, problem.integral_history)

    diss = work = 0.0
    step = 0
    viscous_solvers = None
    pred_diag = None
    picard_total = 0
    while t < t_end - 1e-12 * problem.T:
        umax = float(np.abs(u).max())
        dt = min(problem.dt, t_end - t)
        if umax > 0:
            dt = min(dt, problem.cfl * h_min / umax)
        if not np.isfinite(umax) or dt < dt_min:
            raise InstabilityError(
                f"time step collapsed at t={t:.6g}: dt={dt:.3e}, max|u|={umax:.3e}",
                [row[4] for row in traj.ledger])
        f_half = problem.forcing(t + 0.5 * dt)
        mass = s2 / dt

        if problem.scheme == "projection":
            if pred_diag is None or pred_diag[0] != dt:
                pred_diag = (dt, [1.0 / np.where(ops.fluid_face[c],
                                                 mass + mu * ops.laplacian_diagonal(c), 1.0)
                                  * ops.fluid_face[c] for c in range(d)])
            gp = ops.gradient(p)
            rhs = (mass * u + f_half - gp) * ops.fluid_face
            u_star = np.empty_like(u)
            for c in range(d):
                def apply(v, c=c):
                    out = ops.laplacian_comp(v, c)
                    out *= mu
                    out += mass * v
                    out += ops.convection_comp(u, v, c)
                    return out

                inv = pred_diag[1][c]
                u_star[c], _, _ = bicgstab(apply, rhs[c], precond=lambda r, inv=inv: inv * r,
                                           x0=u[c], rtol=problem.tol, name=f"predictor[{c}]")
            u_star *= ops.fluid_face
            phi = poisson.solve(-mass * ops.divergence(u_star), rtol=problem.tol)
            u_new = (u_star - ops.gradient(phi) / mass) * ops.fluid_face
            p = stokes.project_pressure(p + phi)
            energy_vel = u_star
        else:
            if viscous_solvers is None or stokes.mass != mass:
                stokes.mass = mass
                viscous_solvers = [ViscousSolver(stokes, c, problem.inner) for c in range(d)]
            base = (mass * u + f_half) * ops.fluid_face
            conv = np.zeros_like(u) if umax == 0 else ops.convection(u, u)
            scale = math.sqrt(kernels.dot(base, base)) or 1.0
            u_new = u
            for k in range(problem.max_picard):
                stokes.rhs_velocity = (base - conv) * ops.fluid_face
                sol = solve_saddle(stokes, tol=problem.tol, x0_pressure=p, inner=problem.inner,
                                   solvers=viscous_solvers)
                u_new, p = sol.velocity, sol.pressure
                picard_total += 1
                if umax == 0:
                    break
                conv_new = ops.convection(u, u_new)
                change = math.sqrt(kernels.dot(conv_new - conv, conv_new - conv))
                conv = conv_new
                if change <= problem.tol * scale:
                    break
            else:
                raise NonConvergenceError("Picard iteration on convection did not converge",
                                          [change])
            energy_vel = u_new

        diss += dt * mu * _inner(energy_vel, ops.laplacian(energy_vel), vol)
        work += dt * _inner(f_half, energy_vel, vol)
        u = u_new
        t = t + dt
        step += 1
        kinetic = 0.5 * s2 * _inner(u, u, vol)
        slack = kinetic0 + work - kinetic - diss
        traj.ledger.append((t, kinetic, diss, work, slack))
        traj.steps.append(dt)
        traj.divergence_max.append(float(np.abs(ops.divergence(u)).max()))
        f_now = problem.forcing(t)
        acc.add(t, u, f_now)
        last = t >= t_end - 1e-12 * problem.T
        if step % problem.snapshot_every == 0 or last:
            traj.times.append(t)
            traj.velocities.append(u.copy())
            traj.pressures.append(p.copy())
            traj.forcings.append(f_now.copy())
            acc.snapshot(t)
        if on_step is not None:
            on_step(t, u, p)

    traj.velocity = u
    traj.pressure = p
    traj.integrals = acc.out
    info["steps"] = step
    if problem.scheme == "coupled":
        info["picard_solves"] = picard_total
    return traj


def energy_residual(traj):
    """Cumulative slack of the discrete energy inequality and its minimum.

    slack(t) = kinetic(0) + work(0,t) - kinetic(t) - dissipation(0,t),
    kinetic = sigma^2/2 ||u||^2.
    """
    slack = traj.slack
    return slack, float(slack.min()) if len(slack) else 0.0


def zero_extend(values, mask):
    """Fluid-face values (packed vector or full array) as a full-grid field, zero on solid."""
    ff = mask.fluid_face
    values = np.asarray(values, dtype=float)
    if values.shape == ff.shape:
        return values * ff
    if values.size != int(ff.sum()):
        raise PreconditionError("packed values do not match the number of fluid faces")
    out = np.zeros(ff.shape)
    start = 0
    for c in range(ff.shape[0]):
        n = int(ff[c].sum())
        out[c][ff[c]] = values[start:start + n]
        start += n
    return out


def restrict(field, mask):
    """Inverse of zero_extend: packed fluid-face values."""
    ff = mask.fluid_face
    return np.concatenate([field[c][ff[c]] for c in range(ff.shape[0])])


def time_integrate(traj):
    """Trapezoidal U, Psi, F over the stored frames."""
    ops = Operators(traj.problem.grid, traj.problem.mask.fluid_cell, traj.problem.mask.fluid_face)
    out = None
    acc = None
    for t, u, f in zip(traj.times, traj.velocities, traj.forcings):
        if acc is None:
            acc = _Accumulator(ops, t, u, f)
            continue
        acc.add(t, u, f)
        acc.snapshot(t)
    out = acc.out
    return out


def space_time_norm(times, fields, vol, weights="trapezoid"):
    """sqrt(int ||field||^2 dt) over frames (trapezoid or right-endpoint rule)."""
    sq = [kernels.dot(x, x) * vol for x in fields]
    total = 0.0
    for k in range(1, len(times)):
        dt = times[k] - times[k - 1]
        total += dt * (0.5 * (sq[k - 1] + sq[k]) if weights == "trapezoid" else sq[k])
    return math.sqrt(total)
