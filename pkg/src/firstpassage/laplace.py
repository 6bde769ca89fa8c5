"""Laplace-domain identities for F: explicit transform, residual certificate, C0, psi+."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._numerics import cell_weights, gauss_legendre, phi1
from .model import (
    Atom,
    DomainError,
    ExpNegative,
    ExpPositive,
    LevyModel,
    RootReport,
    Tabulated,
    Uniform,
    find_roots,
    phi,
    phi_prime,
    phi_second,
)
from .solver import GridFunction

__all__ = [
    "C0Constant",
    "StabilityError",
    "nu_plus_divided",
    "R_apply",
    "F_hat_explicit_pos",
    "equa_laplace_rhs",
    "equa_laplace_residual",
    "relative_residual",
    "C0",
    "wiener_hopf_plus",
    "wiener_hopf_minus",
    "derivative_at_zero",
]


class StabilityError(RuntimeError):
    """A limit evaluation did not stabilize."""


_DD_SWITCH = 1e-4
_WH_EPS = (1e-8, 1e-6)
_WH_TOL = 1e-6


def nu_plus_divided(model: LevyModel, a, b):
    """int_{y>0} (e^{-a y} - e^{-b y}) / (a - b) nu(dy); the derivative of nu_hat_plus when a == b."""
    a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
    cplx = np.iscomplexobj(a) or np.iscomplexobj(b)
    out = np.zeros(a.shape, dtype=complex if cplx else float)
    if not model.has_positive_jumps:
        return out[()] if out.ndim == 0 else out
    d = a - b
    close = np.abs(d) <= _DD_SWITCH * (1.0 + np.abs(a))
    if np.any(~close):
        aa, bb = a[~close], b[~close]
        fa = model.laplace(aa, 0, "pos")
        fb = model.laplace(bb, 0, "pos")
        out[~close] = (fa - fb) / (aa - bb)
    if np.any(close):
        m = (a[close] + b[close]) / 2.0
        dd = d[close]
        out[close] = model.laplace(m, 1, "pos") + dd**2 / 24.0 * model.laplace(m, 3, "pos")
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# exponential moments of a grid function and the R operator
# ---------------------------------------------------------------------------


class _Moments:
    """M(s, L) = int_0^L e^{-s b} h(b) db for the interpolated grid function h."""

    def __init__(self, h: GridFunction, s: complex):
        self.h = h
        self.s = complex(s)
        step = h.h
        v = h.values
        _, _, wa, wb = cell_weights(self.s * step)
        cells = np.exp(-self.s * h.x[:-1]) * step * (wa * v[:-1] + wb * v[1:])
        self.cum = np.concatenate(([0.0], np.cumsum(cells)))

    def __call__(self, L):
        L = np.atleast_1d(np.asarray(L, dtype=float))
        h = self.h
        s = self.s
        out = np.empty(L.shape, dtype=complex)
        inside = L <= h.x_max
        if np.any(inside):
            Li = L[inside]
            k = np.minimum((Li / h.h).astype(int), h.n_points - 2)
            ell = Li - h.x[k]
            _, _, wa, wb = cell_weights(s * ell)
            vk = h.values[k]
            vL = h(Li)
            out[inside] = self.cum[k] + np.exp(-s * h.x[k]) * ell * (wa * vk + wb * vL)
        if np.any(~inside):
            over = L[~inside] - h.x_max
            rate = s + h.tail_rate
            tail = h.values[-1] * np.exp(-s * h.x_max) * over * phi1(-rate * over)
            out[~inside] = self.cum[-1] + tail
        return out

    def total(self):
        rate = self.s + self.h.tail_rate
        if not rate.real > 0:
            raise DomainError("transform of the grid function diverges at this q")
        return self.cum[-1] + self.h.values[-1] * np.exp(-self.s * self.h.x_max) / rate


def _neg_part(model: LevyModel, h: GridFunction, q: complex) -> complex:
    """N(q) = int_{y<0} nu(dy) int_0^{-y} e^{-q (b + y)} h(b) db."""
    q = complex(q)
    Mq = _Moments(h, q)
    total = 0j
    reach = 0.0
    for comp in model.jumps:
        if not comp.has_negative:
            continue
        if isinstance(comp, (Atom, Tabulated)):
            y, w = comp.points()
            neg = y < 0
            L = -y[neg]
            reach = max(reach, float(L.max()))
            total += np.sum(w[neg] * np.exp(q * L) * Mq(L))
        elif isinstance(comp, ExpNegative):
            lam, beta, d = comp.intensity, comp.rate, comp.offset
            if not q.real < beta:
                raise DomainError("R needs Re q below the negative exponential rate")
            Mb = _Moments(h, beta)
            near = np.exp(q * d) * Mq(d)[0] if d > 0 else 0.0
            far = math.exp(beta * d) * (Mb.total() - (Mb(d)[0] if d > 0 else 0.0))
            total += lam * beta / (beta - q) * (near + far)
        elif isinstance(comp, Uniform):
            L1, L2 = -min(comp.b, 0.0), -comp.a
            reach = max(reach, L2)
            dens = comp.intensity / (comp.b - comp.a)
            total += dens * _uniform_neg(h, Mq, q, L1, L2)
        else:
            raise TypeError(f"unsupported jump component {comp!r}")
    if reach > h.x_max:
        warnings.warn("negative jumps reach beyond x_max; using the tail extrapolation",
                      RuntimeWarning, stacklevel=3)
    return complex(total)


def _uniform_neg(h: GridFunction, Mq: _Moments, q: complex, L1: float, L2: float) -> complex:
    """int_{L1}^{L2} e^{qL} M(q, L) dL by per-cell Gauss-Legendre, doubling until stable."""
    inner = h.x[(h.x > L1) & (h.x < L2)]
    edges = np.concatenate(([L1], inner, [L2]))
    if L2 > h.x_max:
        width = 1.0 / (abs(q) + h.tail_rate + 1.0)
        start = max(L1, h.x_max)
        extra = np.linspace(start, L2, max(2, math.ceil((L2 - start) / width) + 1))
        edges = np.unique(np.concatenate((edges[edges <= start], extra)))
    prev = None
    for order in (4, 8, 16, 32, 64):
        t, w = gauss_legendre(order)
        a, b = edges[:-1, None], edges[1:, None]
        nodes = (a + (b - a) * (t[None, :] + 1) / 2).ravel()
        wts = ((b - a) * w[None, :] / 2).ravel()
        val = np.sum(wts * np.exp(q * nodes) * Mq(nodes))
        if prev is not None and abs(val - prev) <= 1e-10 * max(1.0, abs(val)):
            return complex(val)
        prev = val
    raise StabilityError("Gauss-Legendre doubling for the uniform R term did not stabilize")


def R_apply(model: LevyModel, h: GridFunction, q) -> complex:
    """Rh(q) = int_{y<0} nu(dy) int_0^{-y} (e^{-q (b + y)} - 1) h(b) db."""
    if not model.has_negative_jumps:
        return 0j
    return _neg_part(model, h, q) - _neg_part(model, h, 0.0)


# ---------------------------------------------------------------------------
# explicit transform and residual
# ---------------------------------------------------------------------------


def _roots(model, theta, roots):
    return roots if roots is not None else find_roots(model, theta)


def _explicit_raw(model, theta, mu, rho, q, g0s):
    num = (q - g0s) / 2.0 + nu_plus_divided(model, q + rho, mu) - nu_plus_divided(model, g0s + rho, mu)
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / (phi(model, q) - theta)


def F_hat_explicit_pos(model: LevyModel, theta: float, mu: float, rho: float, q,
                       roots: RootReport | None = None):
    """Transform of F for models without negative jumps, vectorized in q.

    F decays like e^{-gamma0 x}, so the transform converges for Re q > -gamma0.
    """
    if model.has_negative_jumps:
        raise DomainError("the explicit transform needs a jump measure without negative jumps")
    q = np.asarray(q, dtype=complex)
    if theta == 0 and model.mean_x1 >= 0 and (mu == 0 and rho == 0 or not model.has_positive_jumps):
        if np.any(q.real <= 0):
            raise DomainError("Re q must be positive")
        out = 1.0 / q
        return out[()] if out.ndim == 0 else out
    roots = _roots(model, theta, roots)
    if np.any(q.real <= -roots.gamma0):
        raise DomainError(f"Re q must exceed -gamma0 = {-roots.gamma0}")
    g0s = roots.gamma0_star
    out = np.asarray(_explicit_raw(model, theta, mu, rho, q, g0s), dtype=complex)
    # q = gamma0* is a removable point: use the mean over a small circle around q
    r = 1e-3 * (1.0 + abs(g0s))
    near = np.abs(q - g0s) < r
    if np.any(near):
        ang = np.exp(2j * np.pi * np.arange(16) / 16)
        pts = q[near][:, None] + 2 * r * ang[None, :]
        out[near] = _explicit_raw(model, theta, mu, rho, pts, g0s).mean(axis=1)
    return out[()] if out.ndim == 0 else out


def equa_laplace_rhs(model: LevyModel, theta: float, mu: float, rho: float, F: GridFunction, q,
                     roots: RootReport | None = None) -> complex:
    """(q - g*)/2 + nu+[q + rho, mu] - nu+[g* + rho, mu] + RF(q) - RF(g*)."""
    q = complex(q)
    g0s = _roots(model, theta, roots).gamma0_star
    val = (q - g0s) / 2.0
    val += complex(nu_plus_divided(model, q + rho, mu)) - complex(nu_plus_divided(model, g0s + rho, mu))
    if model.has_negative_jumps:
        val += _neg_part(model, F, q) - _neg_part(model, F, g0s)
    return val


def equa_laplace_residual(model: LevyModel, theta: float, mu: float, rho: float, F: GridFunction, q,
                          roots: RootReport | None = None) -> complex:
    """(phi(q) - theta) F_hat_num(q) minus the right-hand side of the transform identity."""
    q = complex(q)
    if not q.real > 0:
        raise DomainError("Re q must be positive")
    roots = _roots(model, theta, roots)
    lhs = (complex(phi(model, q)) - theta) * complex(F.laplace(q))
    return lhs - equa_laplace_rhs(model, theta, mu, rho, F, q, roots)


def relative_residual(model: LevyModel, theta: float, mu: float, rho: float, F: GridFunction, q,
                      roots: RootReport | None = None) -> tuple[complex, float]:
    """Residual and its size relative to |(phi(q) - theta) F_hat_num(q)|."""
    q = complex(q)
    roots = _roots(model, theta, roots)
    res = equa_laplace_residual(model, theta, mu, rho, F, q, roots)
    scale = abs((complex(phi(model, q)) - theta) * complex(F.laplace(q)))
    if scale == 0:
        raise DomainError("q is a zero of phi - theta; the relative residual is undefined there")
    return res, abs(res) / scale


# ---------------------------------------------------------------------------
# C0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class C0Constant:
    theta: float
    mu: float
    rho: float
    value: float
    branch: str

    def to_dict(self) -> dict:
        return {"theta": self.theta, "mu": self.mu, "rho": self.rho, "value": self.value, "branch": self.branch}


def _critical_integral(model: LevyModel, mu: float, rho: float) -> float:
    """(2/d^2) int_{y>0} e^{-rho y} (e^{d y} - 1 - d y) nu(dy), d = rho - mu."""
    d = rho - mu
    if abs(d) > 0.05:
        f = lambda s, k=0: float(np.real(model.laplace(s, k, "pos")))
        return 2.0 / d**2 * (f(mu) - f(rho) + d * f(rho, 1))
    # series: sum_k d^k/(k+2)! int y^{k+2} e^{-rho y} nu(dy)
    total = 0.0
    for k in range(16):
        moment = float(np.real((-1) ** (k + 2) * model.laplace(rho, k + 2, "pos")))
        total += d**k / math.factorial(k + 2) * moment
    return 2.0 * total


def C0(model: LevyModel, theta: float, mu: float = 0.0, rho: float = 0.0,
       roots: RootReport | None = None, e_tol: float = 1e-12) -> C0Constant:
    """Limit of e^{gamma0 x} F(x) as x -> inf, for models without negative jumps."""
    if model.has_negative_jumps:
        raise DomainError("C0 is available for jump measures without negative jumps")
    roots = _roots(model, theta, roots)
    if theta == 0 and abs(model.mean_x1) <= e_tol:
        val = (1.0 + _critical_integral(model, mu, rho)) / float(phi_second(model, 0.0))
        branch = "critical"
    else:
        g0, g0s = roots.gamma0, roots.gamma0_star
        num = (-g0 - g0s) / 2.0
        num += float(nu_plus_divided(model, rho - g0, mu)) - float(nu_plus_divided(model, g0s + rho, mu))
        val = num / float(phi_prime(model, -g0))
        branch = "regular"
    if not val > 0:
        raise DomainError(f"C0 evaluated to a nonpositive value {val}")
    return C0Constant(float(theta), float(mu), float(rho), float(val), branch)


# ---------------------------------------------------------------------------
# Wiener-Hopf
# ---------------------------------------------------------------------------


def wiener_hopf_plus(model: LevyModel, theta: float, q_real, F: GridFunction | None = None,
                     roots: RootReport | None = None):
    """psi+(q) = E exp(i q S) at an independent exponential time, S the running supremum.

    Equals 1 + i q F_hat(theta, 0, 0, -i q), the transform being approached
    from Re > 0. Uses the explicit transform unless a grid solution F (for
    mu = rho = 0) is given.
    """
    if not theta > 0:
        raise DomainError("psi+ needs theta > 0")
    q = np.atleast_1d(np.asarray(q_real, dtype=float))
    if F is None:
        roots = _roots(model, theta, roots)

        def fhat(s):
            return F_hat_explicit_pos(model, theta, 0.0, 0.0, s, roots)
    else:
        def fhat(s):
            return F.laplace(s)

    vals = []
    for eps in _WH_EPS:
        vals.append(1.0 + 1j * q * fhat(eps - 1j * q))
    diff = np.abs(vals[0] - vals[1])
    if np.any(diff > _WH_TOL * np.maximum(1.0, np.abs(vals[0]))):
        raise StabilityError(f"psi+ limit unstable, max change {diff.max():.3e}")
    out = np.where(q == 0, 1.0 + 0j, vals[0])
    return out[0] if np.ndim(q_real) == 0 else out


def wiener_hopf_minus(model: LevyModel, theta: float, q_real, F: GridFunction | None = None):
    """E exp(i q (X - S)) at the exponential time, by dividing the full factor by psi+."""
    q = np.asarray(q_real, dtype=float)
    full = theta / (theta - phi(model, -1j * q))
    return full / wiener_hopf_plus(model, theta, q_real, F)


# ---------------------------------------------------------------------------
# F'(0+)
# ---------------------------------------------------------------------------


def derivative_at_zero(model: LevyModel, theta: float, mu: float, rho: float,
                       F: GridFunction | None = None, roots: RootReport | None = None) -> float:
    """Right derivative of F at 0 from the boundary condition of the integro-differential form.

    A grid solution F is needed only when the model has negative jumps.
    """
    roots = _roots(model, theta, roots)
    g0s = roots.gamma0_star
    val = model.c0 + g0s / 2.0 + float(nu_plus_divided(model, g0s + rho, mu))
    if model.has_negative_jumps:
        if F is None:
            raise ValueError("a grid solution is needed for models with negative jumps")
        val += _neg_part(model, F, g0s).real
    return -2.0 * val
