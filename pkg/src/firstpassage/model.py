"""Levy jump-diffusion models X_t = B_t - c0 t + J_t with finite jump activity.

The jump measure is a list of parametric components. Every component knows
its Laplace transform (and q-derivatives), its exponential integrals over
intervals, how to sample jump sizes and how to drop its mass near zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy.optimize import brentq

from ._numerics import composite_gl, int_exp, phi1

__all__ = [
    "DomainError",
    "NoRootError",
    "JumpComponent",
    "Atom",
    "ExpPositive",
    "ExpNegative",
    "Uniform",
    "Tabulated",
    "LevyModel",
    "RootReport",
    "component_from_dict",
    "phi",
    "phi_prime",
    "phi_second",
    "nu_hat",
    "nu_hat_plus",
    "mean_x1",
    "alpha_theta",
    "find_roots",
    "truncate_measure",
]


class DomainError(ValueError):
    """Argument outside the exponential-moment strip or otherwise invalid."""


class NoRootError(RuntimeError):
    """phi(q) = theta has no admissible root on the requested side."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


_SIDES = (None, "pos", "neg")
_DE_SWITCH = 1e-2


def _zeros(q):
    z = np.zeros(np.shape(q))
    return z[()] if z.ndim == 0 else z


def _side_interval(side):
    if side is None:
        return -math.inf, math.inf
    if side == "pos":
        return 0.0, math.inf
    if side == "neg":
        return -math.inf, 0.0
    raise ValueError(f"side must be one of {_SIDES}")


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------


class JumpComponent:
    """Interface shared by the jump-measure components."""

    kind: ClassVar[str]

    # support as a closed hull (lo, hi); densities put no mass on the ends
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def mass(self) -> float:
        raise NotImplementedError

    def moment(self, k: int) -> float:
        """int y^k nu(dy)."""
        return float(np.real((-1) ** k * self.laplace(0.0, k)))

    def radius_pos(self) -> float:
        """Largest s with int_1^inf e^{sy} nu(dy) finite."""
        return math.inf

    def radius_neg(self) -> float:
        """Largest s with int_{-inf}^{-1} e^{-sy} nu(dy) finite."""
        return math.inf

    def laplace(self, q, k: int = 0, side: str | None = None):
        """int (-y)^k e^{-qy} nu(dy) over the chosen half line (k-th q-derivative)."""
        raise NotImplementedError

    def exp_integral(self, p: float, lo, hi, y0, c):
        """int_{(lo,hi]} exp(p (y - y0) + c) nu(dy), vectorized over lo, hi, y0, c."""
        raise NotImplementedError

    def div_exp_integral(self, p1: float, p2: float, lo, hi, y0, c):
        """int_{(lo,hi]} e^c (e^{p1 u} - e^{p2 u}) / (p1 - p2) nu(dy), u = y - y0 >= 0.

        Equals int e^c u e^{p1 u} nu(dy) when p1 == p2.
        """
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def truncate(self, eps: float) -> list["JumpComponent"]:
        """The component restricted to |y| >= eps (possibly empty or split)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def has_positive(self) -> bool:
        return self.support()[1] > 0

    @property
    def has_negative(self) -> bool:
        return self.support()[0] < 0


class _PointMasses(JumpComponent):
    """Finite sums of weighted atoms."""

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def support(self):
        y, _ = self.points()
        return float(y.min()), float(y.max())

    def mass(self):
        return float(self.points()[1].sum())

    def laplace(self, q, k=0, side=None):
        y, w = self.points()
        lo, hi = _side_interval(side)
        keep = (y > lo) & (y < hi)
        y, w = y[keep], w[keep]
        q = np.asarray(q)
        terms = w * (-y) ** k * np.exp(-np.multiply.outer(q, y))
        return terms.sum(axis=-1)

    def _masked(self, lo, hi, y0, c):
        y, w = self.points()
        lo, hi, y0, c = (np.asarray(v, dtype=float)[..., None] for v in (lo, hi, y0, c))
        inside = (y > lo) & (y <= hi)
        return y, w, inside, y0, c

    def exp_integral(self, p, lo, hi, y0, c):
        y, w, inside, y0, c = self._masked(lo, hi, y0, c)
        expo = np.where(inside, p * (y - y0) + c, -np.inf)
        return (w * np.exp(expo)).sum(axis=-1)

    def div_exp_integral(self, p1, p2, lo, hi, y0, c):
        y, w, inside, y0, c = self._masked(lo, hi, y0, c)
        u = np.where(inside, y - y0, 0.0)
        pmax = max(p1, p2)
        expo = np.where(inside, pmax * u + c, -np.inf)
        vals = w * u * np.exp(expo) * phi1(-abs(p1 - p2) * u)
        return vals.sum(axis=-1)

    def sample(self, rng, n):
        y, w = self.points()
        return rng.choice(y, size=n, p=w / w.sum())


@dataclass(frozen=True)
class Atom(_PointMasses):
    """Point mass w at location y != 0."""

    y: float
    w: float
    kind: ClassVar[str] = "atom"

    def __post_init__(self):
        if not math.isfinite(self.y) or self.y == 0:
            raise ValueError("atom location must be finite and nonzero")
        if not self.w > 0 or not math.isfinite(self.w):
            raise ValueError("atom mass must be positive and finite")

    def points(self):
        return np.array([float(self.y)]), np.array([float(self.w)])

    def truncate(self, eps):
        return [self] if abs(self.y) >= eps else []

    def to_dict(self):
        return {"kind": self.kind, "y": self.y, "w": self.w}


@dataclass(frozen=True)
class Tabulated(_PointMasses):
    """Weights on a finite set of nonzero points."""

    y: tuple[float, ...]
    w: tuple[float, ...]
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        object.__setattr__(self, "w", tuple(float(v) for v in self.w))
        if len(self.y) == 0 or len(self.y) != len(self.w):
            raise ValueError("tabulated component needs matching, nonempty y and w")
        if any(v == 0 or not math.isfinite(v) for v in self.y):
            raise ValueError("tabulated points must be finite and nonzero")
        if any(v < 0 or not math.isfinite(v) for v in self.w) or sum(self.w) <= 0:
            raise ValueError("tabulated weights must be nonnegative with positive total")

    def points(self):
        y = np.asarray(self.y)
        w = np.asarray(self.w)
        keep = w > 0
        return y[keep], w[keep]

    def truncate(self, eps):
        kept = [(y, w) for y, w in zip(self.y, self.w) if abs(y) >= eps and w > 0]
        if not kept:
            return []
        if len(kept) == len(self.y):
            return [self]
        ys, ws = zip(*kept)
        return [Tabulated(ys, ws)]

    def to_dict(self):
        return {"kind": self.kind, "y": list(self.y), "w": list(self.w)}


class _Density(JumpComponent):
    """Components with a density on an interval."""

    def density(self, y):
        raise NotImplementedError

    def _clip(self, lo, hi):
        s_lo, s_hi = self.support()
        return np.maximum(np.asarray(lo, dtype=float), s_lo), np.minimum(
            np.asarray(hi, dtype=float), s_hi
        )

    def _decay(self, p: float) -> float:
        """Decay rate of density(y) e^{p y} as y -> +inf (inf if bounded support)."""
        return math.inf

    def div_exp_integral(self, p1, p2, lo, hi, y0, c):
        lo, hi, y0, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lo, hi, y0, c)))
        delta = p1 - p2
        pmax = max(p1, p2)
        a, b = self._clip(lo, hi)
        decay = self._decay(pmax)
        span = b - a
        if 0 < decay < math.inf:
            span = np.minimum(span, 1.0 / decay)
        out = np.zeros(lo.shape)
        nonempty = b > a
        close = nonempty & (np.abs(delta) * span < _DE_SWITCH)
        far = nonempty & ~close
        if np.any(far):
            e1 = self.exp_integral(p1, lo[far], hi[far], y0[far], c[far])
            e2 = self.exp_integral(p2, lo[far], hi[far], y0[far], c[far])
            out[far] = (e1 - e2) / delta
        if np.any(close):
            out[close] = self._de_quadrature(pmax, abs(delta), a[close], b[close], y0[close], c[close], decay)
        return out

    def _de_quadrature(self, pmax, adelta, a, b, y0, c, decay):
        if not np.all(np.isfinite(b)):
            if not decay > 0:
                raise DomainError("divergent exponential integral")
            b = np.where(np.isfinite(b), b, a + 45.0 / decay)
        length = float(np.max(b - a))
        rate = max(1.0, abs(pmax), decay if math.isfinite(decay) else 0.0)
        panels = int(min(4000, max(2, math.ceil(length * rate / 2.0))))

        def f(y):
            u = y - y0[:, None]
            return self.density(y) * u * np.exp(pmax * u + c[:, None]) * phi1(-adelta * u)

        return composite_gl(f, a, b, panels)


@dataclass(frozen=True)
class ExpPositive(_Density):
    """Density intensity*rate*exp(-rate (y - offset)) on y > offset >= 0."""

    intensity: float
    rate: float
    offset: float = 0.0
    kind: ClassVar[str] = "exp_pos"

    def __post_init__(self):
        if not (self.intensity > 0 and self.rate > 0 and self.offset >= 0):
            raise ValueError("exp_pos needs intensity > 0, rate > 0, offset >= 0")

    def support(self):
        return float(self.offset), math.inf

    def mass(self):
        return float(self.intensity)

    def radius_pos(self):
        return float(self.rate)

    def density(self, y):
        y = np.asarray(y)
        lam, beta, d = self.intensity, self.rate, self.offset
        return np.where(y > d, lam * beta * np.exp(-beta * np.maximum(y - d, 0.0)), 0.0)

    def _decay(self, p):
        return self.rate - p

    def laplace(self, q, k=0, side=None):
        if side == "neg":
            return _zeros(q)
        q = np.asarray(q)
        lam, beta, d = self.intensity, self.rate, self.offset
        if np.any(np.real(q) <= -beta):
            raise DomainError("Re q must exceed -rate for an exp_pos component")
        e = np.exp(-q * d)
        v = 1.0 / (beta + q)
        total = 0
        for j in range(k + 1):
            m = k - j
            total = total + math.comb(k, j) * (-d) ** j * (-1) ** m * math.factorial(m) * v ** (m + 1)
        return lam * beta * e * total

    def exp_integral(self, p, lo, hi, y0, c):
        a, b = self._clip(lo, hi)
        lam, beta, d = self.intensity, self.rate, self.offset
        K = -p * np.asarray(y0, dtype=float) + np.asarray(c, dtype=float) + beta * d
        return lam * beta * int_exp(p - beta, K, a, b)

    def sample(self, rng, n):
        return self.offset + rng.exponential(1.0 / self.rate, size=n)

    def truncate(self, eps):
        if self.offset >= eps:
            return [self]
        lam = self.intensity * math.exp(-self.rate * (eps - self.offset))
        return [ExpPositive(lam, self.rate, eps)]

    def to_dict(self):
        out = {"kind": self.kind, "intensity": self.intensity, "rate": self.rate}
        if self.offset:
            out["offset"] = self.offset
        return out


@dataclass(frozen=True)
class ExpNegative(_Density):
    """Density intensity*rate*exp(rate (y + offset)) on y < -offset <= 0."""

    intensity: float
    rate: float
    offset: float = 0.0
    kind: ClassVar[str] = "exp_neg"

    def __post_init__(self):
        if not (self.intensity > 0 and self.rate > 0 and self.offset >= 0):
            raise ValueError("exp_neg needs intensity > 0, rate > 0, offset >= 0")

    def support(self):
        return -math.inf, -float(self.offset)

    def mass(self):
        return float(self.intensity)

    def radius_neg(self):
        return float(self.rate)

    def density(self, y):
        y = np.asarray(y)
        lam, beta, d = self.intensity, self.rate, self.offset
        return np.where(y < -d, lam * beta * np.exp(beta * np.minimum(y + d, 0.0)), 0.0)

    def _decay(self, p):
        # support is bounded above; the quadrature never needs a right tail
        return math.inf

    def laplace(self, q, k=0, side=None):
        if side == "pos":
            return _zeros(q)
        q = np.asarray(q)
        lam, beta, d = self.intensity, self.rate, self.offset
        if np.any(np.real(q) >= beta):
            raise DomainError("Re q must be below rate for an exp_neg component")
        e = np.exp(q * d)
        v = 1.0 / (beta - q)
        total = 0
        for j in range(k + 1):
            m = k - j
            total = total + math.comb(k, j) * d**j * math.factorial(m) * v ** (m + 1)
        return lam * beta * e * total

    def exp_integral(self, p, lo, hi, y0, c):
        a, b = self._clip(lo, hi)
        lam, beta, d = self.intensity, self.rate, self.offset
        K = -p * np.asarray(y0, dtype=float) + np.asarray(c, dtype=float) + beta * d
        return lam * beta * int_exp(p + beta, K, a, b)

    def sample(self, rng, n):
        return -self.offset - rng.exponential(1.0 / self.rate, size=n)

    def truncate(self, eps):
        if self.offset >= eps:
            return [self]
        lam = self.intensity * math.exp(-self.rate * (eps - self.offset))
        return [ExpNegative(lam, self.rate, eps)]

    def to_dict(self):
        out = {"kind": self.kind, "intensity": self.intensity, "rate": self.rate}
        if self.offset:
            out["offset"] = self.offset
        return out


@dataclass(frozen=True)
class Uniform(_Density):
    """Density intensity/(b - a) on (a, b)."""

    a: float
    b: float
    intensity: float
    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError("uniform needs finite a < b")
        if not self.intensity > 0:
            raise ValueError("uniform intensity must be positive")

    def support(self):
        return float(self.a), float(self.b)

    def mass(self):
        return float(self.intensity)

    def density(self, y):
        y = np.asarray(y)
        return np.where((y > self.a) & (y < self.b), self.intensity / (self.b - self.a), 0.0)

    def _sided(self, side):
        lo, hi = _side_interval(side)
        return max(self.a, lo), min(self.b, hi)

    def laplace(self, q, k=0, side=None):
        a, b = self._sided(side)
        if b <= a:
            return _zeros(q)
        q = np.asarray(q)
        dens = self.intensity / (self.b - self.a)
        L = b - a
        if k == 0:
            return dens * L * np.exp(-q * a) * phi1(-q * L)
        # derivatives by composite Gauss-Legendre resolved against oscillation and growth
        qf = np.atleast_1d(q).ravel()
        scale = max(1.0, float(np.max(np.abs(qf)))) * L
        t, w = _gl_nodes(int(min(2000, max(2, math.ceil(scale / 2.0)))))
        y = a + L * t
        vals = (-y) ** k * np.exp(-np.multiply.outer(qf, y))
        res = dens * L * (vals @ w)
        return res.reshape(q.shape) if q.ndim else res[0]

    def exp_integral(self, p, lo, hi, y0, c):
        a, b = self._clip(lo, hi)
        K = -p * np.asarray(y0, dtype=float) + np.asarray(c, dtype=float)
        return self.intensity / (self.b - self.a) * int_exp(p, K, a, b)

    def sample(self, rng, n):
        return rng.uniform(self.a, self.b, size=n)

    def truncate(self, eps):
        dens = self.intensity / (self.b - self.a)
        pieces = []
        for lo, hi in ((self.a, min(self.b, -eps)), (max(self.a, eps), self.b)):
            if hi > lo:
                pieces.append((lo, hi))
        if len(pieces) == 1 and pieces[0] == (self.a, self.b):
            return [self]
        return [Uniform(lo, hi, dens * (hi - lo)) for lo, hi in pieces]

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "intensity": self.intensity}


def _gl_nodes(panels: int, order: int = 16):
    """Composite Gauss-Legendre nodes/weights on [0, 1]."""
    from ._numerics import gauss_legendre

    t, w = gauss_legendre(order)
    left = np.arange(panels) / panels
    x = (left[:, None] + (t[None, :] + 1.0) / (2.0 * panels)).ravel()
    wx = np.tile(w / (2.0 * panels), panels)
    return x, wx


_KINDS = {cls.kind: cls for cls in (Atom, ExpPositive, ExpNegative, Uniform, Tabulated)}


def component_from_dict(d: dict) -> JumpComponent:
    """Build a component from its JSON form, e.g. {"kind": "exp_pos", "intensity": 1, "rate": 2}."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ValueError("jump component must be an object with a 'kind' field")
    kind = d["kind"]
    if kind not in _KINDS:
        raise ValueError(f"unknown jump kind {kind!r}; expected one of {sorted(_KINDS)}")
    args = {k: v for k, v in d.items() if k != "kind"}
    try:
        return _KINDS[kind](**args)
    except TypeError as exc:
        raise ValueError(f"bad fields for {kind}: {exc}") from None


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyModel:
    """Drift c0, unit Brownian volatility and a finite jump measure."""

    c0: float
    jumps: tuple[JumpComponent, ...] = ()
    lam: float = field(init=False)
    mean_x1: float = field(init=False)
    r_nu: float = field(init=False)
    r_nu_star: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "jumps", tuple(self.jumps))
        if not math.isfinite(self.c0):
            raise ValueError("c0 must be finite")
        for j in self.jumps:
            if not isinstance(j, JumpComponent):
                raise TypeError(f"not a jump component: {j!r}")
        lam = sum(j.mass() for j in self.jumps)
        if not math.isfinite(lam):
            raise ValueError("jump measure must have finite mass")
        object.__setattr__(self, "lam", float(lam))
        object.__setattr__(self, "mean_x1", -self.c0 + sum(j.moment(1) for j in self.jumps))
        object.__setattr__(
            self, "r_nu", min([j.radius_pos() for j in self.jumps if j.has_positive], default=math.inf)
        )
        object.__setattr__(
            self,
            "r_nu_star",
            min([j.radius_neg() for j in self.jumps if j.has_negative], default=math.inf),
        )

    @property
    def has_positive_jumps(self) -> bool:
        return any(j.has_positive for j in self.jumps)

    @property
    def has_negative_jumps(self) -> bool:
        return any(j.has_negative for j in self.jumps)

    def to_dict(self) -> dict:
        return {"c0": self.c0, "jumps": [j.to_dict() for j in self.jumps]}

    @classmethod
    def from_dict(cls, d: dict) -> "LevyModel":
        if not isinstance(d, dict) or "c0" not in d:
            raise ValueError("model must be an object with a 'c0' field")
        jumps = d.get("jumps", [])
        if not isinstance(jumps, list):
            raise ValueError("'jumps' must be a list")
        return cls(float(d["c0"]), tuple(component_from_dict(j) for j in jumps))

    # convenience sums over components

    def laplace(self, q, k: int = 0, side: str | None = None):
        q = np.asarray(q)
        total = np.zeros(q.shape, dtype=complex if np.iscomplexobj(q) else float)
        for j in self.jumps:
            total = total + j.laplace(q, k, side)
        return total[()] if total.ndim == 0 else total

    def exp_integral(self, p, lo, hi, y0, c):
        shape = np.broadcast(*(np.asarray(v) for v in (lo, hi, y0, c))).shape
        total = np.zeros(shape)
        for j in self.jumps:
            total = total + j.exp_integral(p, lo, hi, y0, c)
        return total

    def div_exp_integral(self, p1, p2, lo, hi, y0, c):
        shape = np.broadcast(*(np.asarray(v) for v in (lo, hi, y0, c))).shape
        total = np.zeros(shape)
        for j in self.jumps:
            total = total + j.div_exp_integral(p1, p2, lo, hi, y0, c)
        return total

    def sample_jumps(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n iid jump sizes from nu / lambda."""
        masses = np.array([j.mass() for j in self.jumps])
        which = rng.choice(len(self.jumps), size=n, p=masses / masses.sum())
        out = np.empty(n)
        for idx, comp in enumerate(self.jumps):
            sel = which == idx
            cnt = int(sel.sum())
            if cnt:
                out[sel] = comp.sample(rng, cnt)
        return out


def _check_strip(model: LevyModel, q, side: str | None = None):
    re = np.real(np.asarray(q))
    lo = -model.r_nu if side != "neg" else -math.inf
    hi = model.r_nu_star if side != "pos" else math.inf
    if np.any(re <= lo) or np.any(re >= hi):
        raise DomainError(f"Re q must lie in ({lo}, {hi})")


def nu_hat(model: LevyModel, q, k: int = 0):
    """int e^{-qy} nu(dy), or its k-th q-derivative."""
    _check_strip(model, q)
    return model.laplace(q, k)


def nu_hat_plus(model: LevyModel, q, k: int = 0):
    """int_{y>0} e^{-qy} nu(dy), or its k-th q-derivative."""
    _check_strip(model, q, side="pos")
    return model.laplace(q, k, side="pos")


def phi(model: LevyModel, q):
    """phi(q) = q^2/2 + c0 q + nu_hat(q) - lambda; real for real q."""
    _check_strip(model, q)
    q = np.asarray(q)
    out = q * q / 2.0 + model.c0 * q + model.laplace(q) - model.lam
    return out[()] if np.ndim(out) == 0 else out


def phi_prime(model: LevyModel, q):
    _check_strip(model, q)
    q = np.asarray(q)
    out = q + model.c0 + model.laplace(q, 1)
    return out[()] if np.ndim(out) == 0 else out


def phi_second(model: LevyModel, q):
    _check_strip(model, q)
    out = 1.0 + model.laplace(np.asarray(q), 2)
    return out[()] if np.ndim(out) == 0 else out


def mean_x1(model: LevyModel) -> float:
    """E(X_1) = -c0 + int y nu(dy)."""
    return model.mean_x1


def alpha_theta(model: LevyModel, theta: float) -> float:
    """sqrt(c0^2 + 2 (lambda + theta))."""
    if theta < 0:
        raise DomainError("theta must be nonnegative")
    return math.sqrt(model.c0**2 + 2.0 * (model.lam + theta))


# ---------------------------------------------------------------------------
# roots
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootReport:
    """Roots -gamma0 <= 0 <= gamma0_star of phi(q) = theta."""

    theta: float
    gamma0: float
    gamma0_star: float
    brackets: dict
    residuals: tuple[float, float]
    q_min: float

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "gamma0": self.gamma0,
            "gamma0_star": self.gamma0_star,
            "brackets": {k: list(v) for k, v in self.brackets.items()},
            "residuals": list(self.residuals),
            "q_min": self.q_min,
        }


def _polish(f, fp, a, b, tol):
    """Bracketed root of an increasing-or-decreasing f on [a, b]: Brent, then Newton."""
    r = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    best, best_res = r, abs(f(r))
    for _ in range(4):
        if best_res <= tol * 1e-3:
            break
        d = fp(best)
        if d == 0:
            break
        nxt = best - f(best) / d
        if not (min(a, b) <= nxt <= max(a, b)):
            break
        res = abs(f(nxt))
        if res >= best_res:
            break
        best, best_res = nxt, res
    return best, best_res


def find_roots(model: LevyModel, theta: float) -> RootReport:
    """Roots of phi(q) = theta bracketed by the zeros of C_theta inside the moment strip."""
    if theta < 0 or not math.isfinite(theta):
        raise DomainError("theta must be finite and nonnegative")
    theta = float(theta)
    alpha = alpha_theta(model, theta)
    c0 = model.c0
    qa0, qb0 = -c0 - alpha, alpha - c0
    tol = 1e-12 * max(1.0, theta)

    if model.lam == 0:
        g0, g0s = max(0.0, c0 + alpha), max(0.0, alpha - c0)
        return RootReport(theta, g0, g0s, {"negative": (qa0, 0.0), "positive": (0.0, qb0)},
                          (0.0, 0.0), -c0)

    def inset(r):
        return r - 1e-10 * max(1.0, r) if math.isfinite(r) else math.inf

    lo = max(qa0, -inset(model.r_nu))
    hi = min(qb0, inset(model.r_nu_star))

    def f(q):
        return float(phi(model, q)) - theta

    def fp(q):
        return float(phi_prime(model, q))

    # minimizer of the convex phi on the bracket
    dlo, dhi = fp(lo), fp(hi)
    if dlo >= 0:
        qmin = lo
    elif dhi <= 0:
        qmin = hi
    else:
        qmin = brentq(fp, lo, hi, xtol=1e-15, maxiter=500)

    diag = {"theta": theta, "strip": [-model.r_nu, model.r_nu_star], "bracket": [lo, hi], "q_min": qmin}

    # negative side
    right = min(qmin, 0.0)
    if theta == 0 and qmin >= 0:
        g0, res0 = 0.0, 0.0
    else:
        if not f(lo) > 0:
            raise NoRootError("phi(q) - theta does not change sign on the negative side", diag)
        if f(right) > 0:
            raise NoRootError("phi(q) - theta is positive on the whole negative bracket", diag)
        r, res0 = _polish(f, fp, lo, right, tol) if f(right) < 0 else (right, 0.0)
        g0 = -r
        if lo > qa0 and abs(r - lo) <= 1e-9 * max(1.0, abs(lo)):
            raise NoRootError("negative root sits on the edge of the moment strip", diag)
    # positive side
    left = max(qmin, 0.0)
    if theta == 0 and qmin <= 0:
        g0s, res1 = 0.0, 0.0
    else:
        if not f(hi) > 0:
            raise NoRootError("phi(q) - theta does not change sign on the positive side", diag)
        if f(left) > 0:
            raise NoRootError("phi(q) - theta is positive on the whole positive bracket", diag)
        r, res1 = _polish(f, fp, left, hi, tol) if f(left) < 0 else (left, 0.0)
        g0s = r
        if hi < qb0 and abs(r - hi) <= 1e-9 * max(1.0, abs(hi)):
            raise NoRootError("positive root sits on the edge of the moment strip", diag)
    if max(res0, res1) > tol:
        raise NoRootError("root residual above tolerance", {**diag, "residuals": [res0, res1]})
    return RootReport(
        theta, float(g0), float(g0s), {"negative": (lo, right), "positive": (left, hi)},
        (float(res0), float(res1)), float(qmin),
    )


def truncate_measure(model: LevyModel, n: int) -> LevyModel:
    """Remove the jump mass inside (-1/n, 1/n)."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    eps = 1.0 / n
    parts: list[JumpComponent] = []
    for j in model.jumps:
        parts.extend(j.truncate(eps))
    return LevyModel(model.c0, tuple(parts))
