"""Pure-NumPy versions of the stencil kernels in ``_kernels.pyx``.

Same signatures and semantics; ``num_threads`` is accepted and ignored.
"""
import numpy as np


def _fwd(x, a, periodic):
    """Value at index + 1 along ``a``; zero past a wall."""
    if periodic:
        return np.roll(x, -1, axis=a)
    out = np.zeros_like(x)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    src[a] = slice(1, None)
    dst[a] = slice(None, -1)
    out[tuple(dst)] = x[tuple(src)]
    return out


def _bwd(x, a, periodic):
    """Value at index - 1 along ``a``; zero past a wall."""
    if periodic:
        return np.roll(x, 1, axis=a)
    out = np.zeros_like(x)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    src[a] = slice(None, -1)
    dst[a] = slice(1, None)
    out[tuple(dst)] = x[tuple(src)]
    return out


def _edge(n, a, end):
    sl = [slice(None)] * 3
    sl[a] = n - 1 if end else 0
    return tuple(sl)


def face_laplacian(u, mask, comp, periodic, inv_h2, out, num_threads=1):
    m = mask.astype(bool)
    um = np.where(m, u, 0.0)
    s = np.zeros_like(u)
    for a in range(3):
        w = inv_h2[a]
        if w == 0.0:
            continue
        per = bool(periodic[a])
        s += w * (2.0 * um - _fwd(um, a, per) - _bwd(um, a, per))
        if not per and a != comp:
            # ghost half a cell outside the wall
            for end in (False, True):
                sl = _edge(u.shape[a], a, end)
                s[sl] += w * um[sl]
    out[...] = np.where(m, s, 0.0)


def divergence(u0, u1, u2, periodic, inv_h, out, num_threads=1):
    s = np.zeros_like(out)
    for a, ua in enumerate((u0, u1, u2)):
        if inv_h[a] == 0.0:
            continue
        s += inv_h[a] * (_fwd(ua, a, bool(periodic[a])) - ua)
    out[...] = s


def gradient(p, mask, comp, periodic, inv_h, out, num_threads=1):
    per = bool(periodic[comp])
    g = inv_h[comp] * (p - np.roll(p, 1, axis=comp))
    if not per:
        g[_edge(p.shape[comp], comp, False)] = 0.0
    out[...] = np.where(mask.astype(bool), g, 0.0)


def convection(a0, a1, a2, v, mask, comp, periodic, inv_h, out, num_threads=1):
    m = mask.astype(bool)
    adv = (a0, a1, a2)
    s = np.zeros_like(v)
    for a in range(3):
        if inv_h[a] == 0.0:
            continue
        per = bool(periodic[a])
        nxt = np.roll(adv[a], -1, axis=a)
        if a == comp:
            flux = 0.5 * (adv[a] + nxt)
        else:
            flux = 0.5 * (nxt + np.roll(nxt, 1, axis=comp))
        edge = m & _fwd(m, a, per).astype(bool)
        g = np.where(edge, flux, 0.0)
        s += 0.5 * inv_h[a] * (g * _fwd(v, a, per) - _bwd(g * v, a, per))
    out[...] = np.where(m, s, 0.0)


def dot(x, y):
    return float(np.dot(x, y))
