"""Grid representation of F and the contraction solve G = F0 + F1 + Lambda G.

Lambda is applied in its Green's-function form

    Lambda G(x) = int_0^inf k(x, s) J(s) ds,     J(s) = int nu(dy) G~(s - y),
    k(x, s) = exp(-c0 (x - s)) (exp(-alpha |x - s|) - exp(-alpha (x + s))) / alpha,

where G~ is G on [0, inf) and 0 below. Both the s-integral and the jump
convolution are evaluated cell by cell in closed form against the linear
interpolant of G, through first-order recursions, so one application costs
O(n) per jump component.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from ._numerics import cell_weights, dq, linear_recurrence, phi1
from .model import (
    Atom,
    ExpNegative,
    ExpPositive,
    LevyModel,
    Tabulated,
    Uniform,
    alpha_theta,
    find_roots,
    phi,
)

__all__ = [
    "HypothesisError",
    "QuadratureError",
    "GridFunction",
    "SolveReport",
    "LambdaOperator",
    "eval_F0",
    "eval_F1",
    "apply_lambda",
    "contraction_constant",
    "choose_gamma",
    "solve_fixed_point",
    "ide_residual",
]


class HypothesisError(ValueError):
    """The requested case lies outside the hypotheses of the fixed-point solver."""


class QuadratureError(RuntimeError):
    """A quadrature failed to stabilize."""


# ---------------------------------------------------------------------------
# grid functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on the uniform grid of [0, x_max], exponential tail beyond x_max."""

    x_max: float
    n_points: int
    values: np.ndarray
    tail_rate: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if self.n_points < 2 or vals.shape != (self.n_points,):
            raise ValueError("values must have shape (n_points,) with n_points >= 2")
        if not self.x_max > 0:
            raise ValueError("x_max must be positive")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def h(self) -> float:
        return self.x_max / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.n_points)

    def __call__(self, z, left: float = 0.0):
        """Linear interpolation, exponential tail, ``left`` for z < 0."""
        z = np.asarray(z, dtype=float)
        v = self.values
        inside = np.interp(z, self.x, v)
        tail = v[-1] * np.exp(-self.tail_rate * np.maximum(z - self.x_max, 0.0))
        out = np.where(z > self.x_max, tail, inside)
        out = np.where(z < 0, left, out)
        return out[()] if out.ndim == 0 else out

    def weighted_norm(self, gamma: float) -> float:
        """sup_x e^{gamma x} |f(x)| over the grid."""
        return float(np.max(np.exp(gamma * self.x) * np.abs(self.values)))

    def laplace(self, q):
        """int_0^inf e^{-qx} f(x) dx: exact on each cell for the interpolant, closed-form tail.

        Needs Re q > -tail_rate.
        """
        q = np.asarray(q, dtype=complex)
        flat = q.ravel()
        h = self.h
        v = self.values
        out = np.empty(flat.shape, dtype=complex)
        for i, s in enumerate(flat):
            wa, wb = _bwd_weights(s * h)
            starts = np.exp(-s * self.x[:-1])
            body = h * np.sum(starts * (wa * v[:-1] + wb * v[1:]))
            tail = v[-1] * np.exp(-s * self.x_max) / (s + self.tail_rate)
            out[i] = body + tail
        return out.reshape(q.shape)[()] if q.ndim == 0 else out.reshape(q.shape)

    def with_values(self, values, tail_rate: float | None = None) -> "GridFunction":
        return GridFunction(self.x_max, self.n_points, values,
                            self.tail_rate if tail_rate is None else tail_rate)

    def to_csv(self, path, report: "SolveReport | None" = None) -> None:
        """Write "x,value" rows plus a JSON sidecar with the tail rate and report."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for xi, vi in zip(self.x, self.values):
                w.writerow([f"{xi:.17g}", f"{vi:.17g}"])
        side = {"x_max": self.x_max, "n_points": self.n_points, "tail_rate": self.tail_rate}
        if report is not None:
            side["report"] = report.to_dict()
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=2))


def _bwd_weights(z):
    _, _, wa, wb = cell_weights(z)
    return wa, wb


def _fwd_weights(z):
    wa, wb, _, _ = cell_weights(z)
    return wa, wb


# ---------------------------------------------------------------------------
# F0 and F1
# ---------------------------------------------------------------------------


def eval_F0(model: LevyModel, theta: float, x):
    """exp(-(c0 + alpha_theta) x): passage before the first jump."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    out = np.exp(-(model.c0 + alpha_theta(model, theta)) * x)
    return out[()] if out.ndim == 0 else out


def eval_F1(model: LevyModel, theta: float, mu: float, rho: float, x):
    """Contribution of passage by the first jump, with the diffusion killed beforehand.

    Closed form of int_{y>0} nu(dy) int_{x-y}^{x} u(x, a) e^{-mu (a+y-x) - rho (x-a)} da,
    u being the resolvent density of the killed Brownian part.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0) or min(theta, mu, rho) < 0:
        raise ValueError("theta, mu, rho and x must be nonnegative")
    out = np.zeros(x.shape)
    if not model.has_positive_jumps:
        return float(out[0]) if scalar else out
    alpha = alpha_theta(model, theta)
    k1 = model.c0 + alpha
    k2 = alpha - model.c0
    zero = np.zeros_like(x)
    inf = np.full_like(x, np.inf)
    # levels a in [0, x], jumps y <= x
    t1 = model.div_exp_integral(-mu, k1 - rho, zero, x, zero, -k1 * x)
    # levels a < 0, jumps y > x
    t2 = model.div_exp_integral(-mu, -(rho + k2), x, inf, x, -rho * x)
    # levels a in [0, x], jumps y > x
    tail = model.exp_integral(-mu, x, inf, x, zero)
    t3 = x * dq(-rho * x, -(k1 + mu) * x) * tail
    # image term of the killed kernel
    t4 = -model.div_exp_integral(-mu, -(rho + k2), zero, inf, zero, -k1 * x)
    out = np.maximum((t1 + t2 + t3 + t4) / alpha, 0.0)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Lambda
# ---------------------------------------------------------------------------


class LambdaOperator:
    """Lambda_theta on the grid [0, x_max] with n_points nodes.

    Internally the grid is padded beyond x_max (where G follows its tail)
    until the kernel's decay exp(-(alpha - c0) s) has dropped below e^-28.
    """

    def __init__(self, model: LevyModel, theta: float, x_max: float, n_points: int,
                 tail_rate: float, pad: float = 28.0):
        self.model = model
        self.theta = float(theta)
        self.alpha = alpha_theta(model, theta)
        self.k1 = model.c0 + self.alpha
        self.k2 = self.alpha - model.c0
        self.x_max = float(x_max)
        self.n = int(n_points)
        self.h = self.x_max / (self.n - 1)
        self.tail_rate = float(tail_rate)
        if self.tail_rate < 0:
            raise ValueError("tail_rate must be nonnegative")
        cells = (self.n - 1)
        if self.k2 > 0:
            n_pad = min(math.ceil(pad / (self.k2 * self.h)), 4 * cells)
        else:
            n_pad = 4 * cells
        self.n_ext = self.n + n_pad
        self.s = self.h * np.arange(self.n_ext)
        self.s_end = self.s[-1]
        h = self.h
        self._wf = _fwd_weights(self.k1 * h)
        self._wb = _bwd_weights(self.k2 * h)
        self._r1 = math.exp(-self.k1 * h)
        self._r2 = math.exp(-self.k2 * h)
        self._decay_x = np.exp(-self.k1 * self.s[: self.n])
        self._comp = [self._prepare(j) for j in model.jumps]

    # per-component precomputation
    def _prepare(self, comp):
        h = self.h
        if isinstance(comp, (ExpPositive, ExpNegative)):
            beta = comp.rate
            w = _fwd_weights(beta * h) if isinstance(comp, ExpPositive) else _bwd_weights(beta * h)
            return ("exp", comp, w, math.exp(-beta * h))
        if isinstance(comp, (Atom, Tabulated)):
            y, w = comp.points()
            pos = (y > 0) & (y < self.s_end)
            idx = np.searchsorted(self.s, y[pos], side="left")
            ell = self.s[idx] - y[pos]
            corr = None
            if np.any(pos):
                # exact weights on the partial cell [y, s_idx] and the linear ones they replace
                wf_a, wf_b = _fwd_weights(self.k1 * ell)
                wb_a, wb_b = _bwd_weights(self.k2 * ell)
                damp = np.exp(-self.k2 * (h - ell))
                corr = (idx, ell, w[pos], wf_a, wf_b, damp * wb_a, damp * wb_b, y[pos])
            return ("points", comp, (y, w), corr)
        if isinstance(comp, Uniform):
            return ("uniform", comp, None, None)
        raise TypeError(f"unsupported jump component {comp!r}")

    # helpers on the extended grid
    def _extend(self, values):
        v = np.asarray(values, dtype=float)
        ext = np.empty(self.n_ext)
        ext[: self.n] = v
        ext[self.n:] = v[-1] * np.exp(-self.tail_rate * (self.s[self.n:] - self.x_max))
        return ext

    def _gtilde(self, g, z):
        z = np.asarray(z, dtype=float)
        inside = np.interp(z, self.s, g)
        tail = g[-1] * np.exp(-self.tail_rate * np.maximum(z - self.s_end, 0.0))
        out = np.where(z > self.s_end, tail, inside)
        return np.where(z < 0, 0.0, out)

    def _primitive(self, g, cum, z):
        """int_0^z G~ for arbitrary z."""
        z = np.asarray(z, dtype=float)
        zc = np.clip(z, 0.0, self.s_end)
        k = np.minimum((zc / self.h).astype(int), self.n_ext - 2)
        d = zc - self.s[k]
        gz = np.interp(zc, self.s, g)
        inside = cum[k] + d * (g[k] + gz) / 2.0
        over = np.maximum(z - self.s_end, 0.0)
        tail = cum[-1] + g[-1] * over * phi1(-self.tail_rate * over)
        return np.where(z > self.s_end, tail, np.where(z < 0, 0.0, inside))

    def jump_convolution(self, g_ext):
        """J(s) = int nu(dy) G~(s - y) on the extended grid, plus cell corrections."""
        h = self.h
        s = self.s
        J = np.zeros(self.n_ext)
        corr_f = np.zeros(self.n_ext - 1)
        corr_b = np.zeros(self.n_ext - 1)
        cum = None
        for kind, comp, data, extra in self._comp:
            if kind == "exp":
                (wa, wb), r = data, extra
                lb = comp.intensity * comp.rate
                cells = lb * h * (wa * g_ext[:-1] + wb * g_ext[1:])
                if isinstance(comp, ExpPositive):
                    J0 = linear_recurrence(r, np.concatenate(([0.0], cells)))
                    if comp.offset:
                        J0 = np.where(s >= comp.offset, np.interp(s - comp.offset, s, J0), 0.0)
                    J += J0
                else:
                    start = lb * g_ext[-1] / (comp.rate + self.tail_rate)
                    rev = linear_recurrence(r, np.concatenate(([start], cells[::-1])))
                    J0 = rev[::-1]
                    if comp.offset:
                        z = s + comp.offset
                        J0 = np.where(z > self.s_end,
                                      start * np.exp(-self.tail_rate * (z - self.s_end)),
                                      np.interp(z, s, J0))
                    J += J0
            elif kind == "points":
                y, w = data
                for yi, wi in zip(y, w):
                    J += wi * self._gtilde(g_ext, s - yi)
                if extra is not None:
                    idx, ell, ws, wf_a, wf_b, wb_a, wb_b, _ = extra
                    a_val = ws * g_ext[0]
                    b_val = ws * np.interp(ell, s, g_ext)
                    k = idx - 1
                    lin_f = h * self._wf[1] * b_val
                    lin_b = h * self._wb[1] * b_val
                    np.add.at(corr_f, k, ell * (wf_a * a_val + wf_b * b_val) - lin_f)
                    np.add.at(corr_b, k, ell * (wb_a * a_val + wb_b * b_val) - lin_b)
            else:
                if cum is None:
                    cum = np.concatenate(([0.0], np.cumsum(h * (g_ext[:-1] + g_ext[1:]) / 2.0)))
                dens = comp.intensity / (comp.b - comp.a)
                J += dens * (self._primitive(g_ext, cum, s - comp.a) - self._primitive(g_ext, cum, s - comp.b))
        return J, corr_f, corr_b

    def apply(self, values) -> np.ndarray:
        if self.model.lam == 0:
            return np.zeros(self.n)
        g_ext = self._extend(values)
        J, corr_f, corr_b = self.jump_convolution(g_ext)
        h = self.h
        cf = h * (self._wf[0] * J[:-1] + self._wf[1] * J[1:]) + corr_f
        cb = h * (self._wb[0] * J[:-1] + self._wb[1] * J[1:]) + corr_b
        I1 = linear_recurrence(self._r1, np.concatenate(([0.0], cf)))
        start = J[-1] / (self.k2 + self.tail_rate)
        I2 = linear_recurrence(self._r2, np.concatenate(([start], cb[::-1])))[::-1]
        out = (I1[: self.n] + I2[: self.n] - self._decay_x * I2[0]) / self.alpha
        return out

    def jump_term(self, values) -> np.ndarray:
        """J(x) = int nu(dy) G~(x - y) on the original grid."""
        J, _, _ = self.jump_convolution(self._extend(values))
        return J[: self.n]

    def __call__(self, g: GridFunction) -> GridFunction:
        return g.with_values(self.apply(g.values))


def apply_lambda(model: LevyModel, theta: float, g: GridFunction) -> GridFunction:
    """Lambda_theta g on g's grid, using g's tail rate beyond x_max."""
    op = LambdaOperator(model, theta, g.x_max, g.n_points, g.tail_rate)
    return op(g)


# ---------------------------------------------------------------------------
# contraction constant
# ---------------------------------------------------------------------------


def contraction_constant(model: LevyModel, theta: float, gamma: float) -> float:
    """c = nu_hat(-gamma) / (nu_hat(-gamma) - phi(-gamma) + theta)."""
    nh = float(np.real(model.laplace(-gamma)))
    return nh / (nh - float(phi(model, -gamma)) + theta)


def choose_gamma(model: LevyModel, theta: float, gamma0: float) -> tuple[float, float]:
    """Admissible weight gamma minimizing the contraction constant, and that constant."""
    upper = min(model.r_nu, gamma0)
    if not upper > 0:
        raise HypothesisError("no admissible weight: need min(r_nu, gamma0) > 0")
    eps = 1e-6 * upper
    lo, hi = eps, upper * (1 - 1e-6)

    def c(g):
        return contraction_constant(model, theta, g)

    res = minimize_scalar(c, bounds=(lo, hi), method="bounded", options={"xatol": 1e-8 * upper})
    cval, g = min([(res.fun, res.x), (c(lo), lo), (c(hi), hi)])
    if not (0 < cval < 1 and float(phi(model, -g)) < theta):
        raise HypothesisError("no admissible weight with contraction constant below 1")
    return float(g), float(cval)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


@dataclass
class SolveReport:
    iterations: int
    c_theta_gamma: float
    gamma: float
    a_priori_bound: float
    achieved_delta: float
    tol: float
    gamma0: float
    gamma0_star: float
    tail_rate: float
    converged: bool
    exact_constant: bool = False
    deltas: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


def default_x_max(model: LevyModel, theta: float, gamma0: float) -> float:
    alpha = alpha_theta(model, theta)
    return max(10.0 / gamma0 if gamma0 > 0 else 0.0, 20.0 / alpha)


def solve_fixed_point(model: LevyModel, theta: float, mu: float = 0.0, rho: float = 0.0, *,
                      x_max: float | None = None, n_points: int = 2001, tol: float = 1e-10,
                      gamma: float | None = None, max_iter: int = 10_000):
    """Iterate G <- F0 + F1 + Lambda G until the weighted change is below tol (1 - c).

    Returns (GridFunction, SolveReport). The iterate's tail beyond x_max is
    extrapolated at rate gamma0(theta).
    """
    if min(theta, mu, rho) < 0:
        raise HypothesisError("theta, mu and rho must be nonnegative")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    if theta == 0 and model.mean_x1 >= 0:
        if mu == 0 and rho == 0 or not model.has_positive_jumps:
            xm = x_max or 10.0
            g = GridFunction(xm, n_points, np.ones(n_points), 0.0)
            rep = SolveReport(0, 1.0, 0.0, 0.0, 0.0, tol, 0.0, 0.0, 0.0, True, True)
            return g, rep
        raise HypothesisError(
            "theta = 0 with E(X1) >= 0: passage is certain but F with mu or rho > 0 "
            "has no decaying solution to iterate towards"
        )
    roots = find_roots(model, theta)
    g0 = roots.gamma0
    if x_max is None:
        x_max = default_x_max(model, theta, g0)
    grid_x = np.linspace(0.0, x_max, n_points)
    source = eval_F0(model, theta, grid_x) + eval_F1(model, theta, mu, rho, grid_x)
    if model.lam == 0:
        g = GridFunction(x_max, n_points, source, g0)
        rep = SolveReport(1, 0.0, g0, 0.0, 0.0, tol, g0, roots.gamma0_star, g0, True)
        return g, rep
    if gamma is None:
        gamma, c = choose_gamma(model, theta, g0)
    else:
        if not (0 < gamma < model.r_nu) or float(phi(model, -gamma)) >= theta:
            raise HypothesisError("gamma must lie in (0, r_nu) with phi(-gamma) < theta")
        c = contraction_constant(model, theta, gamma)
    op = LambdaOperator(model, theta, x_max, n_points, tail_rate=g0)
    weight = np.exp(gamma * grid_x)
    G = source.copy()
    deltas = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        G_new = source + op.apply(G)
        delta = float(np.max(weight * np.abs(G_new - G)))
        deltas.append(delta)
        G = G_new
        if delta <= tol * (1 - c):
            converged = True
            break
    norm_G = float(np.max(weight * np.abs(G)))
    K = norm_G + c / (1 - c) * deltas[-1]
    bound = c ** (it + 1) * K
    rep = SolveReport(it, c, gamma, bound, deltas[-1], tol, g0, roots.gamma0_star, g0,
                      converged, False, deltas)
    if not converged:
        raise QuadratureError(f"fixed-point iteration did not converge in {max_iter} steps")
    return GridFunction(x_max, n_points, G, g0), rep


# ---------------------------------------------------------------------------
# integro-differential residual
# ---------------------------------------------------------------------------


def source_g(model: LevyModel, mu: float, rho: float, x):
    """g(x) = -int_{[x, inf)} e^{-mu (y - x) - rho x} nu(dy) for x > 0."""
    x = np.asarray(x, dtype=float)
    # (lo, hi] convention: shifting lo down by one ulp includes an atom sitting at x
    lo = np.nextafter(x, -np.inf)
    return -model.exp_integral(-mu, lo, np.full_like(x, np.inf), x, -rho * x)


def ide_residual(model: LevyModel, theta: float, mu: float, rho: float, F: GridFunction):
    """Interior residual of F''/2 + c0 F' + int (F~(x-y) - F(x)) nu(dy) - theta F - g.

    Derivatives are central second-order differences. Returns (x, residual,
    scale) on the interior nodes; scale is the sum of the absolute sizes of
    the terms, for forming a relative residual.
    """
    h = F.h
    v = F.values
    x = F.x
    d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    d1 = (v[2:] - v[:-2]) / (2 * h)
    op = LambdaOperator(model, theta, F.x_max, F.n_points, F.tail_rate)
    J = op.jump_term(v)[1:-1]
    mid = v[1:-1]
    g = source_g(model, mu, rho, x[1:-1])
    terms = (0.5 * d2, model.c0 * d1, J, -(model.lam + theta) * mid, -g)
    res = sum(terms)
    scale = sum(np.abs(t) for t in terms)
    return x[1:-1], res, scale
