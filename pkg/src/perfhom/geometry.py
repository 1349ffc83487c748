"""Perforated domains, unit-cell geometry and the hole-size scaling laws."""
import enum
import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import (
    DegenerateLogError,
    EmptyFluidError,
    GeometryError,
    NoObstacleError,
    PreconditionError,
    UnderResolvedHoleError,
    UnsupportedDimensionError,
)
from .grid import StaggeredGrid, drop_isolated_cells, face_masks

HOLE_SHAPES = ("ball", "ellipsoid", "box")


@dataclass(frozen=True)
class Scaling:
    sigma: float
    eta: float
    c_eta: float


def _check_dim(d):
    if d not in (2, 3):
        raise UnsupportedDimensionError(f"dimension {d} is not supported (use 2 or 3)")


def sigma_eps(d, eps, a_eps):
    """Regime ratio: (eps^d / a^(d-2))^(1/2) for d=3, eps*|log(a/eps)|^(1/2) for d=2."""
    return scaling(d, eps, a_eps).sigma


def scaling(d, eps, a_eps):
    """sigma_eps together with eta = a/eps and c_eta = eps/sigma_eps."""
    _check_dim(d)
    if not (0.0 < eps <= 1.0):
        raise PreconditionError(f"need 0 < eps <= 1, got {eps}")
    if not (0.0 < a_eps <= eps):
        raise PreconditionError(f"need 0 < a_eps <= eps, got a_eps={a_eps}, eps={eps}")
    eta = a_eps / eps
    if d == 2:
        if a_eps == eps:
            raise DegenerateLogError("a_eps == eps makes |log(a_eps/eps)| vanish in 2D")
        sigma = eps * math.sqrt(abs(math.log(eta)))
    else:
        sigma = math.sqrt(eps ** d / a_eps ** (d - 2))
    return Scaling(sigma=sigma, eta=eta, c_eta=eps / sigma)


def c_eta_from_eta(d, eta):
    """Cell forcing scale as a function of the hole ratio alone."""
    _check_dim(d)
    if not (0.0 < eta < 1.0):
        raise PreconditionError(f"need 0 < eta < 1, got {eta}")
    if d == 2:
        return 1.0 / math.sqrt(abs(math.log(eta)))
    return eta ** ((d - 2) / 2.0)


class Regime(enum.Enum):
    SMALL_HOLES = "SmallHoles"
    CRITICAL = "Critical"
    LARGE_HOLES = "LargeHoles"
    UNSUPPORTED = "Unsupported"


def classify_regime(d, alpha):
    """Regime of a_eps = eps**alpha from the limit of sigma_eps."""
    if d == 3 and alpha >= 1:
        if alpha > 3:
            return Regime.SMALL_HOLES
        if alpha == 3:
            return Regime.CRITICAL
        return Regime.LARGE_HOLES
    if d == 2 and alpha >= 1:
        # polynomial holes in 2D always give sigma_eps -> 0
        return Regime.LARGE_HOLES
    return Regime.UNSUPPORTED


def regime_note(d, alpha):
    if alpha == 1 and classify_regime(d, alpha) is Regime.LARGE_HOLES:
        return "alpha = 1: hole ratio fixed, permeability from the classical cell problem at that ratio"
    if classify_regime(d, alpha) is Regime.CRITICAL:
        return "critical regime (Brinkman limit) is classified only, never simulated"
    return ""


# -- model hole ---------------------------------------------------------------

def _semi_axes(d, shape, aspect):
    if shape not in HOLE_SHAPES:
        raise PreconditionError(f"hole_shape must be one of {HOLE_SHAPES}, got {shape!r}")
    if shape == "ball":
        return np.ones(d)
    s = np.ones(d) if aspect is None else np.asarray(aspect, dtype=float)
    if s.shape != (d,) or np.any(s <= 0):
        raise PreconditionError("aspect needs d positive entries")
    return s / s.max()


def _inside_unit(shape, semi, rel):
    """Membership in the unit model hole (ball radius 1, or scaled ellipsoid/box)."""
    if shape == "box":
        return np.max([np.abs(r) / s for r, s in zip(rel, semi)], axis=0) <= 1.0
    return sum((r / s) ** 2 for r, s in zip(rel, semi)) <= 1.0


def _circumradius(shape, semi):
    return float(np.sqrt(np.sum(semi ** 2))) if shape == "box" else float(semi.max())


def _inradius(shape, semi):
    return float(semi.min())


# -- perforated domain ----------------------------------------------------

@dataclass(frozen=True)
class PerforationSpec:
    """Holes eps*k + a_eps * radius_ratio * U on the eps-lattice inside a box.

    ``U`` is the unit model shape (ball of radius 1, or ellipsoid/box with
    semi-axes ``aspect`` normalised to a largest value of 1).
    """
    d: int
    eps: float
    alpha: float = None
    a_eps: float = None
    omega: tuple = None
    hole_shape: str = "ball"
    radius_ratio: float = 0.25
    delta3: float = 0.4
    aspect: tuple = None

    def __post_init__(self):
        _check_dim(self.d)
        if self.omega is None:
            object.__setattr__(self, "omega", ((0.0, 1.0),) * self.d)
        if len(self.omega) != self.d:
            raise PreconditionError("omega needs one (lo, hi) pair per axis")
        if (self.alpha is None) == (self.a_eps is None):
            raise PreconditionError("give exactly one of alpha or a_eps")
        if self.alpha is not None and self.alpha < 1:
            raise PreconditionError(f"alpha must be >= 1, got {self.alpha}")
        a = self.hole_scale
        if not (0.0 < a <= self.eps <= 1.0):
            raise PreconditionError(f"need 0 < a_eps <= eps <= 1, got a_eps={a}, eps={self.eps}")
        if not (0.0 < self.delta3 < 0.5):
            raise PreconditionError("delta3 must lie in (0, 1/2)")
        if self.radius_ratio <= 0:
            raise PreconditionError("radius_ratio must be positive")
        semi = _semi_axes(self.d, self.hole_shape, self.aspect)
        if not self.radius_ratio * _circumradius(self.hole_shape, semi) * a < self.delta3 * self.eps:
            raise GeometryError("hole does not fit strictly inside the delta3*eps ball")

    @property
    def hole_scale(self):
        return float(self.a_eps) if self.a_eps is not None else float(self.eps) ** self.alpha

    @property
    def semi_axes(self):
        return _semi_axes(self.d, self.hole_shape, self.aspect)

    @property
    def deltas(self):
        """(delta0, delta1, delta2, delta3) of the nesting chain."""
        semi = self.semi_axes
        inner = self.radius_ratio * _inradius(self.hole_shape, semi)
        outer = self.radius_ratio * _circumradius(self.hole_shape, semi)
        return (inner, outer, outer, self.delta3)

    @property
    def hole_radius(self):
        return self.radius_ratio * _circumradius(self.hole_shape, self.semi_axes) * self.hole_scale

    @property
    def cell_eta(self):
        """Hole ratio of the matching unit-cell geometry (unit-diameter model hole)."""
        return 2.0 * self.radius_ratio * self.hole_scale / self.eps

    def scaling(self):
        return scaling(self.d, self.eps, self.hole_scale)

    def lattice(self):
        """K_eps = {k : eps*closure(Q_k) inside the open box}, by exact rationals."""
        e = Fraction(self.eps)
        half = Fraction(1, 2)
        ranges = []
        for lo, hi in self.omega:
            lo, hi = Fraction(lo), Fraction(hi)
            k_min = math.floor(lo / e + half) + 1
            k_max = math.ceil(hi / e - half) - 1
            ks = [k for k in range(k_min, k_max + 1)
                  if lo < e * (k - half) and e * (k + half) < hi]
            ranges.append(ks)
        return np.array(list(product(*ranges)), dtype=np.int64).reshape(-1, self.d)

    def to_dict(self):
        return {
            "d": self.d, "eps": self.eps, "alpha": self.alpha, "a_eps": self.hole_scale,
            "omega": [list(map(float, b)) for b in self.omega], "hole_shape": self.hole_shape,
            "radius_ratio": self.radius_ratio, "delta3": self.delta3,
            "aspect": None if self.aspect is None else list(self.aspect),
        }


@dataclass
class PerforatedMask:
    spec: PerforationSpec
    grid: StaggeredGrid
    fluid_cell: np.ndarray
    fluid_face: np.ndarray
    hole_count: int
    porosity: float
    lattice: np.ndarray = field(repr=False)
    holes_resolved: int = 0

    @property
    def resolution(self):
        return self.grid.shape

    def mask_hash(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.fluid_cell, dtype=np.uint8).tobytes())
        h.update(repr(self.grid.shape).encode())
        return h.hexdigest()[:16]


def _resolution_tuple(resolution, d):
    if np.isscalar(resolution):
        return (int(resolution),) * d
    res = tuple(int(n) for n in resolution)
    if len(res) != d:
        raise PreconditionError("resolution needs one entry per axis")
    return res


def voxelize_holes(spec, grid):
    """Solid-cell indicator (cell-centre rule) and the number of holes hit."""
    centers = grid.cell_centers()
    lattice = spec.lattice()
    solid = np.zeros(grid.shape, dtype=bool)
    if len(lattice) == 0:
        return solid, 0
    eps = spec.eps
    scale = spec.radius_ratio * spec.hole_scale
    semi = spec.semi_axes
    # holes sit strictly inside their own cube, so only the nearest lattice point matters
    k = [np.rint(x / eps).astype(np.int64) for x in centers]
    in_lattice = np.ones(grid.shape, dtype=bool)
    for a in range(spec.d):
        in_lattice &= (k[a] >= lattice[:, a].min()) & (k[a] <= lattice[:, a].max())
    rel = [(x - eps * ka) / scale for x, ka in zip(centers, k)]
    solid = in_lattice & _inside_unit(spec.hole_shape, semi, rel)
    if not solid.any():
        return solid, 0
    keys = np.stack([ka[solid] for ka in k], axis=1)
    return solid, len(np.unique(keys, axis=0))


def build_perforated_mask(spec, resolution, allow_unresolved=False):
    """Voxelize Omega minus the holes onto a wall-closed staggered grid."""
    res = _resolution_tuple(resolution, spec.d)
    lower = [lo for lo, _ in spec.omega]
    upper = [hi for _, hi in spec.omega]
    grid = StaggeredGrid.box(res, lower, upper, periodic=False)
    lattice = spec.lattice()
    h_max = max(grid.spacing)
    inner_diam = 2.0 * spec.deltas[0] * spec.hole_scale
    if len(lattice) and inner_diam < 2.0 * h_max and not allow_unresolved:
        raise UnderResolvedHoleError(
            f"hole diameter {inner_diam:.4g} spans fewer than 2 cells of size {h_max:.4g}")
    solid, hit = voxelize_holes(spec, grid)
    fluid = drop_isolated_cells(grid, ~solid)
    if not fluid.any():
        raise EmptyFluidError("no fluid cells left")
    return PerforatedMask(
        spec=spec, grid=grid, fluid_cell=fluid, fluid_face=face_masks(grid, fluid),
        hole_count=len(lattice), porosity=float(fluid.mean()), lattice=lattice,
        holes_resolved=hit,
    )


def full_box_mask(d, resolution, omega=None):
    """Unperforated box with the same layout as a PerforatedMask."""
    omega = omega or ((0.0, 1.0),) * d
    res = _resolution_tuple(resolution, d)
    grid = StaggeredGrid.box(res, [lo for lo, _ in omega], [hi for _, hi in omega], periodic=False)
    fluid = np.ones(res, dtype=bool)
    return PerforatedMask(spec=None, grid=grid, fluid_cell=fluid,
                          fluid_face=face_masks(grid, fluid), hole_count=0, porosity=1.0,
                          lattice=np.zeros((0, d), dtype=np.int64))


def analytic_porosity(spec):
    """Fluid volume fraction of the continuous perforated box (ball/ellipsoid/box holes)."""
    d = spec.d
    r = spec.radius_ratio * spec.hole_scale
    semi = spec.semi_axes
    if spec.hole_shape == "box":
        vol = np.prod(2 * r * semi)
    else:
        unit_ball = math.pi if d == 2 else 4.0 * math.pi / 3.0
        vol = unit_ball * np.prod(r * semi)
    box = np.prod([hi - lo for lo, hi in spec.omega])
    return float(1.0 - len(spec.lattice()) * vol / box)


# -- unit cell --------------------------------------------------------------

@dataclass
class CellGeometry:
    d: int
    eta: float
    hole_shape: str
    resolution: int
    grid: StaggeredGrid
    fluid_cell: np.ndarray
    fluid_face: np.ndarray
    aspect: tuple = None

    @property
    def fluid_fraction(self):
        return float(self.fluid_cell.mean())


def build_cell_geometry(d, eta, hole_shape="ball", resolution=32, aspect=None, delta3=0.4):
    """Periodic unit cell (-1/2, 1/2)^d minus the centred hole eta*T0, diam(T0) = 1."""
    _check_dim(d)
    if eta <= 0:
        raise NoObstacleError("eta = 0 leaves no obstacle; the periodic cell problem is singular")
    if resolution < 8:
        raise PreconditionError("cell resolution must be at least 8")
    semi = _semi_axes(d, hole_shape, aspect)
    # T0 is the unit model shape scaled by 1/2
    diam = _circumradius(hole_shape, semi)
    if eta * diam >= 1.0:
        raise GeometryError(f"eta*diam(T0) = {eta * diam:.4g} must stay below 1")
    h = 1.0 / resolution
    outer = 0.5 * eta * diam
    if outer > min(delta3, 0.5 - h):
        raise GeometryError(
            f"hole circumradius {outer:.4g} violates the interior margin "
            f"min(delta3={delta3}, 1/2 - one cell = {0.5 - h:.4g})")
    grid = StaggeredGrid.box((resolution,) * d, (-0.5,) * d, (0.5,) * d, periodic=True)
    centers = grid.cell_centers()
    rel = [x / (0.5 * eta) for x in centers]
    solid = _inside_unit(hole_shape, semi, rel)
    if not solid.any():
        raise NoObstacleError(f"hole eta={eta} contains no cell centre at resolution {resolution}")
    fluid = drop_isolated_cells(grid, ~solid)
    return CellGeometry(d=d, eta=float(eta), hole_shape=hole_shape, resolution=int(resolution),
                        grid=grid, fluid_cell=fluid, fluid_face=face_masks(grid, fluid),
                        aspect=None if aspect is None else tuple(aspect))
