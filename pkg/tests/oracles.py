"""Independent reference implementations used by the tests.

Everything here is written with plain loops / dense NumPy / exact fractions
and shares no code with the package, so agreement is a genuine cross-check.
"""
import math
from fractions import Fraction

import numpy as np


def mac_stokes_dense(fluid, h, mu=1.0, mass=0.0):
    """Dense blocks (K, D) of the 2D wall-bounded MAC Stokes operator.

    ``fluid`` is a boolean (n0, n1) cell mask on the box with spacing ``h``.
    Face (c, i, j) is the lower face of cell (i, j) along axis c; it is an
    unknown iff it is interior (index >= 1 along c) and both adjacent cells
    are fluid. Returns K (mass + mu * -Lap, solid neighbours = 0, tangential
    wall ghosts at half a cell), D (cell divergence) and the face list.
    """
    n0, n1 = fluid.shape
    faces = []
    for c in range(2):
        for i in range(n0):
            for j in range(n1):
                lo = (i - 1, j) if c == 0 else (i, j - 1)
                if lo[c] < 0:
                    continue
                if fluid[i, j] and fluid[lo]:
                    faces.append((c, i, j))
    index = {f: k for k, f in enumerate(faces)}
    cells = [(i, j) for i in range(n0) for j in range(n1) if fluid[i, j]]
    cindex = {cell: k for k, cell in enumerate(cells)}
    nf = len(faces)
    w = 1.0 / (h * h)
    K = np.zeros((nf, nf))
    shape = (n0, n1)
    for (c, i, j), r in index.items():
        K[r, r] += mass
        for a in range(2):
            for s in (1, -1):
                q = [i, j]
                q[a] += s
                if q[a] < 0 or q[a] >= shape[a]:
                    # outside the box: wall normal to a
                    K[r, r] += mu * (w if a == c else 2.0 * w)
                    continue
                K[r, r] += mu * w
                nb = index.get((c, q[0], q[1]))
                if nb is not None:
                    K[r, nb] -= mu * w
    D = np.zeros((len(cells), nf))
    for (c, i, j), col in index.items():
        lo = (i - 1, j) if c == 0 else (i, j - 1)
        D[cindex[(i, j)], col] -= 1.0 / h
        D[cindex[lo], col] += 1.0 / h
    return K, D, faces, cells


def stokes_lagrange_solve(K, D, f, g, groups):
    """Solve K u - D^T p = f, D u = g with sum(p) = 0 on each group of cells."""
    nf, nc = K.shape[0], D.shape[0]
    ng = len(groups)
    M = np.zeros((nf + nc + ng, nf + nc + ng))
    M[:nf, :nf] = K
    M[:nf, nf:nf + nc] = -D.T
    M[nf:nf + nc, :nf] = D
    for k, grp in enumerate(groups):
        for cidx in grp:
            M[nf + cidx, nf + nc + k] = 1.0
            M[nf + nc + k, nf + cidx] = 1.0
    x = np.linalg.solve(M, np.concatenate([f, g, np.zeros(ng)]))
    return x[:nf], x[nf:nf + nc]


def cell_groups(fluid):
    """Connected components (4-neighbour) of the fluid cells, as lists of cell ranks."""
    n0, n1 = fluid.shape
    cells = [(i, j) for i in range(n0) for j in range(n1) if fluid[i, j]]
    rank = {c: k for k, c in enumerate(cells)}
    seen, groups = set(), []
    for c in cells:
        if c in seen:
            continue
        stack, grp = [c], []
        seen.add(c)
        while stack:
            i, j = stack.pop()
            grp.append(rank[(i, j)])
            for q in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                if q in rank and q not in seen:
                    seen.add(q)
                    stack.append(q)
        groups.append(sorted(grp))
    return groups


def thomas_fraction(lower, diag, upper, rhs):
    """Exact tridiagonal solve in rational arithmetic."""
    n = len(diag)
    c = [Fraction(0)] * n
    d = [Fraction(0)] * n
    c[0] = Fraction(upper[0]) / diag[0] if n > 1 else Fraction(0)
    d[0] = Fraction(rhs[0]) / diag[0]
    for i in range(1, n):
        m = Fraction(diag[i]) - Fraction(lower[i - 1]) * c[i - 1]
        c[i] = Fraction(upper[i]) / m if i < n - 1 else Fraction(0)
        d[i] = (Fraction(rhs[i]) - Fraction(lower[i - 1]) * d[i - 1]) / m
    x = [Fraction(0)] * n
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def sigma_closed_form(d, eps, a):
    """sigma_eps written out directly from its defining formula."""
    if d == 3:
        return math.sqrt(eps ** 3 / a)
    return eps * math.sqrt(-math.log(a / eps))


def dirichlet_poincare_box(d):
    """Continuous Poincare constant of the unit box with Dirichlet data."""
    return 1.0 / math.sqrt(d * math.pi ** 2)


def dirichlet_poincare_discrete(n, d):
    """Exact smallest eigenvalue of the n^d cell-centred Dirichlet Laplacian (h = 1/n).

    Ghost values at the wall are reflected (weight 2 on the boundary row), so
    the 1D eigenvalue solves a tridiagonal problem; computed densely.
    """
    h = 1.0 / n
    T = np.zeros((n, n))
    for i in range(n):
        T[i, i] = 2.0
        if i > 0:
            T[i, i - 1] = -1.0
        if i < n - 1:
            T[i, i + 1] = -1.0
    T[0, 0] += 1.0
    T[-1, -1] += 1.0
    lam1 = np.linalg.eigvalsh(T / h ** 2).min()
    return 1.0 / math.sqrt(d * lam1)
