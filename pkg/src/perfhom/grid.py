"""Uniform staggered (MAC) grids, masks and the discrete operators on them.

Velocity fields are stored as arrays of shape ``(d, *shape)``; component ``c``
at index ``i`` lives on the face at the lower side of cell ``i`` along axis
``c``. On a wall-closed axis face 0 is the wall itself and the upper wall is
implicit, so every component has the same shape as the cell array.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import kernels


@dataclass(frozen=True)
class StaggeredGrid:
    shape: tuple
    spacing: tuple
    periodic: tuple
    origin: tuple = None

    def __post_init__(self):
        d = len(self.shape)
        if d not in (2, 3):
            raise ValueError("grid must be 2D or 3D")
        if len(self.spacing) != d or len(self.periodic) != d:
            raise ValueError("shape, spacing and periodic must have equal length")
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * d)
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))

    @classmethod
    def box(cls, shape, lower, upper, periodic=False):
        shape = tuple(int(n) for n in shape)
        spacing = tuple((hi - lo) / n for lo, hi, n in zip(lower, upper, shape))
        per = (periodic,) * len(shape) if isinstance(periodic, bool) else tuple(periodic)
        return cls(shape, spacing, per, tuple(float(x) for x in lower))

    @property
    def d(self):
        return len(self.shape)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def shape3(self):
        return self.shape + (1,) * (3 - self.d)

    @cached_property
    def periodic3(self):
        return np.array(list(self.periodic) + [1] * (3 - self.d), dtype=np.intc)

    @cached_property
    def inv_h(self):
        return np.array([1.0 / h for h in self.spacing] + [0.0] * (3 - self.d))

    @cached_property
    def inv_h2(self):
        return self.inv_h ** 2

    def cell_centers(self):
        axes = [o + (np.arange(n) + 0.5) * h
                for o, n, h in zip(self.origin, self.shape, self.spacing)]
        return np.meshgrid(*axes, indexing="ij")

    def face_centers(self, comp):
        axes = []
        for a, (o, n, h) in enumerate(zip(self.origin, self.shape, self.spacing)):
            off = 0.0 if a == comp else 0.5
            axes.append(o + (np.arange(n) + off) * h)
        return np.meshgrid(*axes, indexing="ij")

    def sample_faces(self, func, *args):
        """Evaluate ``func(comp, coords, *args)`` on every component's faces."""
        return np.stack([np.asarray(func(c, self.face_centers(c), *args), dtype=float)
                         * np.ones(self.shape) for c in range(self.d)])

    def zeros_velocity(self):
        return np.zeros((self.d,) + self.shape)

    def zeros_cells(self):
        return np.zeros(self.shape)


def face_masks(grid, fluid_cell):
    """A face is fluid iff both adjacent cells are; wall faces are solid."""
    fluid_cell = np.asarray(fluid_cell, dtype=bool)
    out = np.empty((grid.d,) + grid.shape, dtype=bool)
    for c in range(grid.d):
        lower = np.roll(fluid_cell, 1, axis=c)
        m = fluid_cell & lower
        if not grid.periodic[c]:
            sl = [slice(None)] * grid.d
            sl[c] = 0
            m[tuple(sl)] = False
        out[c] = m
    return out


def drop_isolated_cells(grid, fluid_cell):
    """Mark fluid cells without any fluid face as solid."""
    fluid_cell = np.asarray(fluid_cell, dtype=bool).copy()
    faces = face_masks(grid, fluid_cell)
    touched = np.zeros(grid.shape, dtype=bool)
    for c in range(grid.d):
        touched |= faces[c]
        upper = np.roll(faces[c], -1, axis=c)
        if not grid.periodic[c]:
            sl = [slice(None)] * grid.d
            sl[c] = -1
            upper[tuple(sl)] = False
        touched |= upper
    return fluid_cell & touched


class Operators:
    """Masked discrete operators on one grid/mask pair.

    ``laplacian`` is the positive operator ``-Lap`` with zero velocity on
    solid faces and walls; ``grad = -div^T`` holds exactly on masked unknowns.
    """

    def __init__(self, grid, fluid_cell, fluid_face=None):
        self.grid = grid
        self.fluid_cell = np.asarray(fluid_cell, dtype=bool)
        if fluid_face is None:
            fluid_face = face_masks(grid, self.fluid_cell)
        self.fluid_face = np.asarray(fluid_face, dtype=bool)
        s3 = grid.shape3
        self._cmask3 = np.ascontiguousarray(self.fluid_cell.reshape(s3), dtype=np.uint8)
        self._fmask3 = [np.ascontiguousarray(self.fluid_face[c].reshape(s3), dtype=np.uint8)
                        for c in range(grid.d)]
        self._zero3 = np.zeros(s3)

    @property
    def d(self):
        return self.grid.d

    def _as3(self, x):
        return np.ascontiguousarray(x, dtype=float).reshape(self.grid.shape3)

    # -- matrix-free application ---------------------------------------
    def laplacian_comp(self, v, comp, out=None):
        g = self.grid
        res = np.empty(g.shape3)
        kernels.face_laplacian(self._as3(v), self._fmask3[comp], comp, g.periodic3, g.inv_h2, res)
        res = res.reshape(g.shape)
        if out is not None:
            out[...] = res
            return out
        return res

    def laplacian(self, u):
        return np.stack([self.laplacian_comp(u[c], c) for c in range(self.d)])

    def cell_laplacian(self, p):
        """Dirichlet ``-Lap`` on fluid cells (zero on solid cells and walls)."""
        g = self.grid
        res = np.empty(g.shape3)
        kernels.face_laplacian(self._as3(p), self._cmask3, -1, g.periodic3, g.inv_h2, res)
        return res.reshape(g.shape)

    def divergence(self, u):
        g = self.grid
        comps = [self._as3(u[c]) for c in range(self.d)]
        while len(comps) < 3:
            comps.append(self._zero3)
        res = np.empty(g.shape3)
        kernels.divergence(comps[0], comps[1], comps[2], g.periodic3, g.inv_h, res)
        return res.reshape(g.shape) * self.fluid_cell

    def gradient(self, p):
        g = self.grid
        p3 = self._as3(np.where(self.fluid_cell, p, 0.0))
        out = np.empty((self.d,) + g.shape)
        res = np.empty(g.shape3)
        for c in range(self.d):
            kernels.gradient(p3, self._fmask3[c], c, g.periodic3, g.inv_h, res)
            out[c] = res.reshape(g.shape)
        return out

    def convection_comp(self, adv, v, comp):
        g = self.grid
        a = [self._as3(adv[c]) for c in range(self.d)]
        while len(a) < 3:
            a.append(self._zero3)
        res = np.empty(g.shape3)
        kernels.convection(a[0], a[1], a[2], self._as3(v), self._fmask3[comp], comp,
                           g.periodic3, g.inv_h, res)
        return res.reshape(g.shape)

    def convection(self, adv, v):
        return np.stack([self.convection_comp(adv, v[c], c) for c in range(self.d)])

    def laplacian_diagonal(self, comp):
        """Diagonal of ``laplacian_comp`` (``comp=-1`` for cell data)."""
        g = self.grid
        diag = np.zeros(g.shape)
        for a in range(g.d):
            w = g.inv_h2[a]
            diag += 2.0 * w
            if not g.periodic[a] and a != comp:
                for idx in (0, -1):
                    sl = [slice(None)] * g.d
                    sl[a] = idx
                    diag[tuple(sl)] += w
        mask = self.fluid_cell if comp < 0 else self.fluid_face[comp]
        return np.where(mask, diag, 0.0)

    # -- sparse assembly (oracles, preconditioners) --------------------
    @cached_property
    def cell_index(self):
        idx = -np.ones(self.grid.shape, dtype=np.int64)
        idx[self.fluid_cell] = np.arange(int(self.fluid_cell.sum()))
        return idx

    @cached_property
    def face_index(self):
        out = []
        for c in range(self.d):
            idx = -np.ones(self.grid.shape, dtype=np.int64)
            idx[self.fluid_face[c]] = np.arange(int(self.fluid_face[c].sum()))
            out.append(idx)
        return out

    def _neighbor(self, idx, a, step):
        """Index array of the neighbour along ``a``; -2 marks the region outside a wall."""
        g = self.grid
        nb = np.roll(idx, -step, axis=a)
        if not g.periodic[a]:
            sl = [slice(None)] * g.d
            sl[a] = -1 if step > 0 else 0
            nb[tuple(sl)] = -2
        return nb

    def assemble_laplacian(self, comp):
        """Sparse matrix of ``laplacian_comp`` (or the cell version for comp=-1)."""
        g = self.grid
        idx = self.cell_index if comp < 0 else self.face_index[comp]
        mask = idx >= 0
        n = int(mask.sum())
        rows, cols, vals = [], [], []
        diag = np.zeros(n)
        for a in range(g.d):
            w = g.inv_h2[a]
            for step in (1, -1):
                nb = self._neighbor(idx, a, step)
                me = idx[mask]
                other = nb[mask]
                diag += w
                outside = other == -2
                if a != comp:
                    diag[outside] += w
                inner = other >= 0
                rows.append(me[inner])
                cols.append(other[inner])
                vals.append(np.full(int(inner.sum()), -w))
        rows.append(np.arange(n))
        cols.append(np.arange(n))
        vals.append(diag)
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n))

    def assemble_divergence(self):
        """Blocks ``[D_0, ..., D_{d-1}]`` mapping face unknowns to fluid cells."""
        g = self.grid
        cidx = self.cell_index
        blocks = []
        for c in range(self.d):
            fidx = self.face_index[c]
            n_f = int((fidx >= 0).sum())
            # face i feeds cell i with -1/h and cell i-1 with +1/h
            own = cidx[self.fluid_face[c]]
            lower = np.roll(cidx, 1, axis=c)[self.fluid_face[c]]
            f = fidx[self.fluid_face[c]]
            w = g.inv_h[c]
            rows = np.concatenate([own, lower])
            cols = np.concatenate([f, f])
            vals = np.concatenate([np.full(n_f, -w), np.full(n_f, w)])
            blocks.append(sp.csr_matrix((vals, (rows, cols)),
                                        shape=(int(self.fluid_cell.sum()), n_f)))
        return blocks

    # -- packing between grid arrays and unknown vectors ---------------
    def pack_velocity(self, u):
        return np.concatenate([u[c][self.fluid_face[c]] for c in range(self.d)])

    def unpack_velocity(self, x):
        out = np.zeros((self.d,) + self.grid.shape)
        start = 0
        for c in range(self.d):
            n = int(self.fluid_face[c].sum())
            out[c][self.fluid_face[c]] = x[start:start + n]
            start += n
        return out

    def pack_cells(self, p):
        return np.asarray(p)[self.fluid_cell]

    def unpack_cells(self, x):
        out = np.zeros(self.grid.shape)
        out[self.fluid_cell] = x
        return out
