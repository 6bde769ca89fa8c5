"""Small numerical kernels shared by the model, solver and Laplace modules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

_SMALL1 = 1e-5
_SMALL2 = 1e-3


def phi1(z):
    """(e^z - 1) / z, with phi1(0) = 1; real or complex, vectorized."""
    z = np.asarray(z)
    small = np.abs(z) < _SMALL1
    zs = np.where(small, 1.0, z)
    out = np.where(small, 1.0 + z / 2.0 + z * z / 6.0, np.expm1(zs) / zs)
    return out[()] if out.ndim == 0 else out


def phi2(z):
    """(e^z - 1 - z) / z^2, with phi2(0) = 1/2."""
    z = np.asarray(z)
    small = np.abs(z) < _SMALL2
    zs = np.where(small, 1.0, z)
    series = 0.5 + z / 6.0 + z**2 / 24.0 + z**3 / 120.0 + z**4 / 720.0
    out = np.where(small, series, (np.expm1(zs) - zs) / (zs * zs))
    return out[()] if out.ndim == 0 else out


def dq(a, b):
    """Divided difference (e^a - e^b)/(a - b), equal to e^a when a == b.

    Written as e^max * phi1(-|a - b|) for real arguments so that neither
    factor overflows when the quotient itself is representable.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return np.exp(b) * phi1(a - b)
    hi = np.maximum(a, b)
    return np.exp(hi) * phi1(-np.abs(a - b))


def cell_weights(z):
    """Weights for integrating an exponential against a linear function on a cell.

    For a cell of width h, decay rate kappa and z = kappa*h, with u in [0, h]
    the local coordinate and values fa, fb at the cell ends:

        int_0^h e^{-kappa (h-u)} f(u) du = h * (wf_a * fa + wf_b * fb)
        int_0^h e^{-kappa u}     f(u) du = h * (wb_a * fa + wb_b * fb)

    Returns (wf_a, wf_b, wb_a, wb_b). z may be complex.
    """
    p1 = phi1(-np.asarray(z))
    p2 = phi2(-np.asarray(z))
    return p1 - p2, p2, p2, p1 - p2


def int_exp(r, K, a, b):
    """Vectorized int_a^b exp(r*y + K) dy for real scalar r; a may be -inf, b may be +inf.

    Empty intervals (b <= a) give 0. Exponents are combined before
    exponentiating so long intervals do not overflow.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    K = np.asarray(K, dtype=float)
    a, b, K = np.broadcast_arrays(a, b, K)
    out = np.zeros(a.shape)
    ok = b > a
    if not np.any(ok):
        return out
    fa = np.isfinite(a)
    fb = np.isfinite(b)
    both = ok & fa & fb
    if np.any(both):
        L = b[both] - a[both]
        if r > 0:
            out[both] = L * np.exp(r * b[both] + K[both]) * phi1(-r * L)
        else:
            out[both] = L * np.exp(r * a[both] + K[both]) * phi1(r * L)
    up = ok & fa & ~fb
    if np.any(up):
        if r >= 0:
            raise ValueError("divergent exponential integral on [a, inf)")
        out[up] = np.exp(r * a[up] + K[up]) / (-r)
    down = ok & ~fa & fb
    if np.any(down):
        if r <= 0:
            raise ValueError("divergent exponential integral on (-inf, b]")
        out[down] = np.exp(r * b[down] + K[down]) / r
    if np.any(ok & ~fa & ~fb):
        raise ValueError("doubly infinite exponential integral")
    return out


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(n)


def composite_gl(f, a, b, panels: int, order: int = 16):
    """Composite Gauss-Legendre of a vectorized f over per-row intervals [a_i, b_i].

    ``f`` receives an array of shape (n, panels*order) and returns values of
    the same shape. Returns an array of shape (n,).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    t, w = gauss_legendre(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    left = edges[:-1]
    width = edges[1] - edges[0]
    u = (left[:, None] + width * (t[None, :] + 1.0) / 2.0).ravel()
    wu = np.tile(w * width / 2.0, panels)
    L = (b - a)[:, None]
    y = a[:, None] + L * u[None, :]
    vals = f(y)
    return (vals * wu[None, :]).sum(axis=1) * L[:, 0]


def linear_recurrence(r, x):
    """y[n] = x[n] + r * y[n-1] with y[-1] = 0."""
    r = complex(r) if np.iscomplexobj(r) else float(r)
    return lfilter([1.0], [1.0, -r], x)
