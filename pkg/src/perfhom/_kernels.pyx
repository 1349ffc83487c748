# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels on 3D staggered (MAC) arrays.

All arrays are C-contiguous float64 (fields) or uint8 (masks) of shape
(n0, n1, n2). A 2D problem is passed with n2 == 1 and ``inv_h[2] == 0``.
Face index ``i`` along axis ``c`` of component ``c`` is the face on the lower
side of cell ``i``. ``periodic[a]`` selects wrap-around, otherwise the axis
is closed by no-slip walls. Every output element is written by exactly one
iteration and all scratch state is local to the per-point helpers, so
results do not depend on the thread count.
"""
from cython.parallel cimport prange


ctypedef double[:, :, ::1] field_t
ctypedef unsigned char[:, :, ::1] mask_t


cdef inline double _val(field_t u, mask_t m, Py_ssize_t i, Py_ssize_t j, Py_ssize_t k) noexcept nogil:
    return u[i, j, k] if m[i, j, k] else 0.0


cdef inline double _lap_axis(field_t u, mask_t m, Py_ssize_t i, Py_ssize_t j, Py_ssize_t k,
                             int a, Py_ssize_t na, bint per, double w, double wall,
                             double up) noexcept nogil:
    # contribution of axis ``a`` to -Lap at (i, j, k)
    cdef Py_ssize_t pos, fwd, bwd
    cdef double s = 0.0
    if a == 0:
        pos = i
    elif a == 1:
        pos = j
    else:
        pos = k
    fwd = pos + 1
    bwd = pos - 1
    # forward neighbour
    if fwd < na or per:
        if fwd == na:
            fwd = 0
        if a == 0:
            s += w * (up - _val(u, m, fwd, j, k))
        elif a == 1:
            s += w * (up - _val(u, m, i, fwd, k))
        else:
            s += w * (up - _val(u, m, i, j, fwd))
    else:
        s += wall * up
    # backward neighbour
    if bwd >= 0 or per:
        if bwd < 0:
            bwd = na - 1
        if a == 0:
            s += w * (up - _val(u, m, bwd, j, k))
        elif a == 1:
            s += w * (up - _val(u, m, i, bwd, k))
        else:
            s += w * (up - _val(u, m, i, j, bwd))
    else:
        s += wall * up
    return s


def face_laplacian(double[:, :, ::1] u, unsigned char[:, :, ::1] mask, int comp,
                   int[::1] periodic, double[::1] inv_h2, double[:, :, ::1] out,
                   int num_threads=1):
    """out = -Lap(u) on masked unknowns; solid neighbours count as zero.

    ``comp`` is the velocity component (0..2) or -1 for cell-centred data.
    Tangential wall ghosts sit half a cell outside and get weight 2.
    """
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double w0 = inv_h2[0], w1 = inv_h2[1], w2 = inv_h2[2]
    cdef bint p0 = periodic[0] != 0, p1 = periodic[1] != 0, p2 = periodic[2] != 0
    cdef double g0 = w0 if comp == 0 else 2.0 * w0
    cdef double g1 = w1 if comp == 1 else 2.0 * w1
    cdef double g2 = w2 if comp == 2 else 2.0 * w2
    cdef double s, up
    for i in prange(n0, nogil=True, num_threads=num_threads, schedule='static'):
        for j in range(n1):
            for k in range(n2):
                if not mask[i, j, k]:
                    out[i, j, k] = 0.0
                    continue
                up = u[i, j, k]
                s = _lap_axis(u, mask, i, j, k, 0, n0, p0, w0, g0, up)
                s = s + _lap_axis(u, mask, i, j, k, 1, n1, p1, w1, g1, up)
                if w2 != 0.0:
                    s = s + _lap_axis(u, mask, i, j, k, 2, n2, p2, w2, g2, up)
                out[i, j, k] = s


def divergence(double[:, :, ::1] u0, double[:, :, ::1] u1, double[:, :, ::1] u2,
               int[::1] periodic, double[::1] inv_h, double[:, :, ::1] out,
               int num_threads=1):
    """Cell-centred divergence of a face field (solid faces must hold zero)."""
    cdef Py_ssize_t n0 = out.shape[0], n1 = out.shape[1], n2 = out.shape[2]
    cdef Py_ssize_t i, j, k, ip, jp, kp
    cdef double h0 = inv_h[0], h1 = inv_h[1], h2 = inv_h[2]
    cdef bint p0 = periodic[0] != 0, p1 = periodic[1] != 0, p2 = periodic[2] != 0
    cdef double s, hi
    for i in prange(n0, nogil=True, num_threads=num_threads, schedule='static'):
        for j in range(n1):
            for k in range(n2):
                ip = i + 1
                if ip < n0:
                    hi = u0[ip, j, k]
                elif p0:
                    hi = u0[0, j, k]
                else:
                    hi = 0.0
                s = h0 * (hi - u0[i, j, k])
                jp = j + 1
                if jp < n1:
                    hi = u1[i, jp, k]
                elif p1:
                    hi = u1[i, 0, k]
                else:
                    hi = 0.0
                s = s + h1 * (hi - u1[i, j, k])
                if h2 != 0.0:
                    kp = k + 1
                    if kp < n2:
                        hi = u2[i, j, kp]
                    elif p2:
                        hi = u2[i, j, 0]
                    else:
                        hi = 0.0
                    s = s + h2 * (hi - u2[i, j, k])
                out[i, j, k] = s


def gradient(double[:, :, ::1] p, unsigned char[:, :, ::1] mask, int comp,
             int[::1] periodic, double[::1] inv_h, double[:, :, ::1] out,
             int num_threads=1):
    """Face gradient of a cell field along ``comp``; zero on solid faces."""
    cdef Py_ssize_t n0 = p.shape[0], n1 = p.shape[1], n2 = p.shape[2]
    cdef Py_ssize_t i, j, k, lo
    cdef double w = inv_h[comp]
    cdef bint per = periodic[comp] != 0
    for i in prange(n0, nogil=True, num_threads=num_threads, schedule='static'):
        for j in range(n1):
            for k in range(n2):
                if not mask[i, j, k]:
                    out[i, j, k] = 0.0
                    continue
                if comp == 0:
                    lo = i - 1
                    if lo < 0:
                        if not per:
                            out[i, j, k] = 0.0
                            continue
                        lo = n0 - 1
                    out[i, j, k] = w * (p[i, j, k] - p[lo, j, k])
                elif comp == 1:
                    lo = j - 1
                    if lo < 0:
                        if not per:
                            out[i, j, k] = 0.0
                            continue
                        lo = n1 - 1
                    out[i, j, k] = w * (p[i, j, k] - p[i, lo, k])
                else:
                    lo = k - 1
                    if lo < 0:
                        if not per:
                            out[i, j, k] = 0.0
                            continue
                        lo = n2 - 1
                    out[i, j, k] = w * (p[i, j, k] - p[i, j, lo])


cdef inline Py_ssize_t _wrap(Py_ssize_t i, Py_ssize_t n) noexcept nogil:
    if i < 0:
        return i + n
    if i >= n:
        return i - n
    return i


cdef inline double _edge_flux(field_t adv, Py_ssize_t i, Py_ssize_t j, Py_ssize_t k,
                              int comp, int a, Py_ssize_t n0, Py_ssize_t n1,
                              Py_ssize_t n2) noexcept nogil:
    # advecting velocity (component a) at the midpoint of faces (i,j,k) and (i,j,k) + e_a
    cdef Py_ssize_t q0 = i, q1 = j, q2 = k, r0, r1, r2
    if a == 0:
        q0 = _wrap(i + 1, n0)
    elif a == 1:
        q1 = _wrap(j + 1, n1)
    else:
        q2 = _wrap(k + 1, n2)
    if a == comp:
        return 0.5 * (adv[i, j, k] + adv[q0, q1, q2])
    # faces of component a straddling the comp-face position
    r0 = q0
    r1 = q1
    r2 = q2
    if comp == 0:
        r0 = _wrap(r0 - 1, n0)
    elif comp == 1:
        r1 = _wrap(r1 - 1, n1)
    else:
        r2 = _wrap(r2 - 1, n2)
    return 0.5 * (adv[r0, r1, r2] + adv[q0, q1, q2])


cdef inline double _conv_axis(field_t adv, field_t v, mask_t m, Py_ssize_t i, Py_ssize_t j,
                              Py_ssize_t k, int comp, int a, bint per, double hh,
                              Py_ssize_t n0, Py_ssize_t n1, Py_ssize_t n2) noexcept nogil:
    cdef Py_ssize_t pos, na, f0 = i, f1 = j, f2 = k, b0 = i, b1 = j, b2 = k
    cdef double s = 0.0
    if a == 0:
        pos = i
        na = n0
    elif a == 1:
        pos = j
        na = n1
    else:
        pos = k
        na = n2
    # forward edge (p, p + e_a)
    if pos + 1 < na or per:
        if a == 0:
            f0 = _wrap(i + 1, n0)
        elif a == 1:
            f1 = _wrap(j + 1, n1)
        else:
            f2 = _wrap(k + 1, n2)
        if m[f0, f1, f2]:
            s += hh * _edge_flux(adv, i, j, k, comp, a, n0, n1, n2) * v[f0, f1, f2]
    # backward edge (p - e_a, p)
    if pos > 0 or per:
        if a == 0:
            b0 = _wrap(i - 1, n0)
        elif a == 1:
            b1 = _wrap(j - 1, n1)
        else:
            b2 = _wrap(k - 1, n2)
        if m[b0, b1, b2]:
            s -= hh * _edge_flux(adv, b0, b1, b2, comp, a, n0, n1, n2) * v[b0, b1, b2]
    return s


def convection(double[:, :, ::1] a0, double[:, :, ::1] a1, double[:, :, ::1] a2,
               double[:, :, ::1] v, unsigned char[:, :, ::1] mask, int comp,
               int[::1] periodic, double[::1] inv_h, double[:, :, ::1] out,
               int num_threads=1):
    """Skew-symmetric convection of face component ``v`` by the field (a0, a1, a2).

    out[p] = sum_a inv_h[a]/2 * (F(p, p+e_a) v[p+e_a] - F(p-e_a, p) v[p-e_a]),
    restricted to masked faces, so <out, v> == 0 up to rounding.
    """
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1], n2 = v.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double hh0 = 0.5 * inv_h[0], hh1 = 0.5 * inv_h[1], hh2 = 0.5 * inv_h[2]
    cdef bint p0 = periodic[0] != 0, p1 = periodic[1] != 0, p2 = periodic[2] != 0
    cdef double s
    for i in prange(n0, nogil=True, num_threads=num_threads, schedule='static'):
        for j in range(n1):
            for k in range(n2):
                if not mask[i, j, k]:
                    out[i, j, k] = 0.0
                    continue
                s = _conv_axis(a0, v, mask, i, j, k, comp, 0, p0, hh0, n0, n1, n2)
                s = s + _conv_axis(a1, v, mask, i, j, k, comp, 1, p1, hh1, n0, n1, n2)
                if hh2 != 0.0:
                    s = s + _conv_axis(a2, v, mask, i, j, k, comp, 2, p2, hh2, n0, n1, n2)
                out[i, j, k] = s


def dot(double[::1] x, double[::1] y):
    """Serial dot product with a fixed summation order."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    with nogil:
        i = 0
        while i + 3 < n:
            s0 += x[i] * y[i]
            s1 += x[i + 1] * y[i + 1]
            s2 += x[i + 2] * y[i + 2]
            s3 += x[i + 3] * y[i + 3]
            i += 4
        while i < n:
            s0 += x[i] * y[i]
            i += 1
    return (s0 + s1) + (s2 + s3)
