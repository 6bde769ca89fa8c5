from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from firstpassage.laplace import (
    C0,
    F_hat_explicit_pos,
    R_apply,
    StabilityError,
    derivative_at_zero,
    equa_laplace_residual,
    relative_residual,
    wiener_hopf_minus,
    wiener_hopf_plus,
)
from firstpassage.model import (
    Atom,
    DomainError,
    ExpNegative,
    ExpPositive,
    LevyModel,
    Tabulated,
    Uniform,
    alpha_theta,
    find_roots,
    phi,
    phi_prime,
)
from firstpassage.solver import GridFunction, solve_fixed_point

SPEC_POS = LevyModel(1.0, (ExpPositive(1.0, 1.5),))
TWO_SIDED = LevyModel(0.4, (ExpPositive(0.6, 2.0), ExpNegative(0.4, 3.0)))


def _gl_panels(edges, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a, b = np.asarray(edges[:-1]), np.asarray(edges[1:])
    half = 0.5 * (b - a)
    return (half[:, None] * nodes + (0.5 * (a + b))[:, None]).ravel(), (half[:, None] * weights).ravel()


def R_quadrature(model, g: GridFunction, q):
    """Double integral of (e^{-q(b+y)} - 1) g(b) over 0 < b < -y against nu on y < 0.

    Both integrals are Gauss-Legendre on panels that respect the kinks of the
    linear interpolant g, so the result is exact up to smooth-function error.
    """
    nodes = g.x

    def inner(y):
        top = -y
        cuts = np.concatenate((nodes[nodes < top], np.arange(g.x_max, top, 0.05), [top]))
        edges = np.unique(cuts[cuts <= top])
        b, w = _gl_panels(edges, 6)
        return float(np.sum(w * (np.exp(-q * (b + y)) - 1) * g(b)))

    tot = 0.0
    for j in model.jumps:
        if isinstance(j, (Atom, Tabulated)):
            for y, w in zip(*j.points()):
                if y < 0:
                    tot += w * inner(y)
            continue
        if isinstance(j, ExpNegative):
            # e^{-q(b + y)} grows like e^{-q y}: the y-integrand decays at rate beta - q
            lo, hi = -j.offset - 40 / (j.rate - q), -j.offset
        elif isinstance(j, Uniform) and j.a < 0:
            lo, hi = j.a, min(j.b, 0.0)
        else:
            continue
        breaks = np.concatenate(([lo, hi], -nodes, np.arange(lo, hi, 0.1)))
        edges = np.unique(breaks[(breaks >= lo) & (breaks <= hi)])
        ys, ws = _gl_panels(edges, 4)
        tot += sum(w * j.density(y) * inner(y) for y, w in zip(ys, ws))
    return tot


# ---------------------------------------------------------------------------
# R
# ---------------------------------------------------------------------------


def test_R_examples():
    one = GridFunction(5.0, 101, np.ones(101), 0.0)
    assert R_apply(SPEC_POS, one, 1.0) == 0
    zero = GridFunction(5.0, 101, np.zeros(101), 0.0)
    assert R_apply(TWO_SIDED, zero, 1.0) == 0
    atom = LevyModel(0.0, (Atom(-1.0, 2.0),))
    assert complex(R_apply(atom, one, 1.0)) == pytest.approx(2 * (math.e - 2), rel=1e-12)


@pytest.mark.parametrize(
    "model",
    [
        LevyModel(0.0, (Atom(-0.73, 1.0), Tabulated((-1.5, 0.4), (0.5, 0.5)))),
        LevyModel(0.0, (ExpNegative(1.0, 2.0),)),
        LevyModel(0.0, (ExpNegative(1.0, 1.5, 0.3),)),
        LevyModel(0.0, (Uniform(-2.0, 1.0, 1.0),)),
    ],
)
@pytest.mark.parametrize("q", [0.3, 1.0])
def test_R_matches_quadrature(model, q):
    n, x_max = 401, 8.0
    x = np.linspace(0, x_max, n)
    g = GridFunction(x_max, n, np.exp(-0.7 * x) * (1 + 0.3 * np.cos(x)), tail_rate=0.7)
    ref = R_quadrature(model, g, q)
    assert complex(R_apply(model, g, q)).real == pytest.approx(ref, rel=1e-8, abs=1e-12)


# ---------------------------------------------------------------------------
# explicit transform
# ---------------------------------------------------------------------------


def test_explicit_brownian():
    assert complex(F_hat_explicit_pos(LevyModel(0.0), 2.0, 0.0, 0.0, 1.0)) == pytest.approx(1 / 3)


@pytest.mark.parametrize("q", [0.3, 1.0, 2.0 + 1j, 5.0])
def test_explicit_ruin_identity(q):
    m = LevyModel(1.0, (ExpPositive(1.0, 1.5),))
    E = m.mean_x1
    assert E < 0
    expected = 1 / q + E / complex(phi(m, q))
    assert complex(F_hat_explicit_pos(m, 0.0, 0.0, 0.0, q)) == pytest.approx(expected, rel=1e-12)


def test_explicit_trivial_case():
    m = LevyModel(-0.5, (ExpPositive(1.0, 2.0),))
    assert complex(F_hat_explicit_pos(m, 0.0, 0.0, 0.0, 0.7 + 0.2j)) == pytest.approx(1 / (0.7 + 0.2j))


def test_explicit_rejects_negative_jumps():
    with pytest.raises(DomainError):
        F_hat_explicit_pos(TWO_SIDED, 1.0, 0.0, 0.0, 1.0)


@pytest.mark.parametrize("theta, mu, rho", [(0.5, 0.2, 0.1), (0.0, 0.0, 0.0), (1.0, 0.3, 0.3)])
def test_explicit_matches_solver_transform(theta, mu, rho):
    g, _ = solve_fixed_point(SPEC_POS, theta, mu, rho)
    for q in (0.5, 1.0, 2.0):
        a = complex(F_hat_explicit_pos(SPEC_POS, theta, mu, rho, q))
        b = complex(g.laplace(q))
        assert abs(a - b) / abs(a) < 1e-3


def test_explicit_continuous_at_removable_point():
    theta, mu, rho = 0.5, 0.2, 0.1
    gs = find_roots(SPEC_POS, theta).gamma0_star
    at = complex(F_hat_explicit_pos(SPEC_POS, theta, mu, rho, gs))
    for d in (1e-2, 1e-4, -1e-4):
        near = complex(F_hat_explicit_pos(SPEC_POS, theta, mu, rho, gs + d))
        assert abs(near - at) < 5 * abs(d) + 1e-9
    assert np.isfinite(at)


@pytest.mark.parametrize("theta, mu, rho", [(0.5, 0.2, 0.1), (1.0, 0.3, 0.3), (2.0, 0.0, 1.0)])
def test_shifted_transform_tends_to_C0(theta, mu, rho):
    g0 = find_roots(SPEC_POS, theta).gamma0
    f = lambda q: (q * complex(F_hat_explicit_pos(SPEC_POS, theta, mu, rho, q - g0))).real
    a, b = f(1e-2), f(1e-3)
    rich = (10 * b - a) / 9
    assert rich == pytest.approx(C0(SPEC_POS, theta, mu, rho).value, rel=2e-2)


# ---------------------------------------------------------------------------
# residual certificate
# ---------------------------------------------------------------------------


def test_residual_exact_brownian():
    m = LevyModel(0.3)
    theta = 1.0
    k = 0.3 + alpha_theta(m, theta)
    n, x_max = 40001, 20.0
    x = np.linspace(0, x_max, n)
    F = GridFunction(x_max, n, np.exp(-k * x), k)
    assert abs(equa_laplace_residual(m, theta, 0.0, 0.0, F, 1.0)) < 1e-8


def test_residual_exact_spectrally_negative():
    m = LevyModel(0.2, (ExpNegative(1.0, 1.0),))
    theta = 0.5
    g0 = find_roots(m, theta).gamma0
    n, x_max = 16001, 30.0
    x = np.linspace(0, x_max, n)
    F = GridFunction(x_max, n, np.exp(-g0 * x), g0)
    for q in (0.25, 0.5, 0.9):
        assert relative_residual(m, theta, 0.0, 0.0, F, q)[1] < 1e-6


def test_residual_detects_perturbation():
    theta = 0.5
    g, _ = solve_fixed_point(SPEC_POS, theta, x_max=60.0, n_points=6001)
    q = 1.0
    base = equa_laplace_residual(SPEC_POS, theta, 0.0, 0.0, g, q)
    bumped = g.with_values(g.values + 0.01)
    shift = equa_laplace_residual(SPEC_POS, theta, 0.0, 0.0, bumped, q) - base
    expected = (complex(phi(SPEC_POS, q)) - theta) * 0.01 * complex(
        GridFunction(g.x_max, g.n_points, np.ones(g.n_points), g.tail_rate).laplace(q))
    assert abs(shift - expected) / abs(expected) < 1e-10
    assert abs(expected) == pytest.approx(abs(complex(phi(SPEC_POS, q)) - theta) * 0.01 / q, rel=0.05)
    assert abs(shift) > 100 * abs(base)


def test_relative_residual_undefined_at_zero_of_phi_minus_theta():
    m = LevyModel(0.5, (ExpPositive(0.6, 2.0), ExpNegative(0.4, 3.0)))
    g, _ = solve_fixed_point(m, 1.0, n_points=501)
    assert find_roots(m, 1.0).gamma0_star == pytest.approx(1.0)
    with pytest.raises(DomainError):
        relative_residual(m, 1.0, 0.0, 0.0, g, find_roots(m, 1.0).gamma0_star)


# ---------------------------------------------------------------------------
# C0
# ---------------------------------------------------------------------------


def test_C0_trivial_and_ruin_values():
    assert C0(LevyModel(-0.5, (ExpPositive(1.0, 2.0),)), 0.0).value == pytest.approx(1.0)
    m = LevyModel(1.0, (ExpPositive(1.0, 1.5),))
    g0 = find_roots(m, 0.0).gamma0
    expected = -float(phi_prime(m, 0.0)) / float(phi_prime(m, -g0))
    c = C0(m, 0.0)
    assert c.branch == "regular" and c.value == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("mu, rho", [(0.0, 0.0), (0.1, 0.3), (0.5, 0.1), (0.2, 0.2 + 1e-4)])
def test_C0_critical_is_limit_of_regular(mu, rho):
    m = LevyModel(1.0 / 1.5, (ExpPositive(1.0, 1.5),))
    crit = C0(m, 0.0, mu, rho, e_tol=1e-12)
    assert crit.branch == "critical" and crit.value > 0
    assert C0(m, 1e-10, mu, rho).value == pytest.approx(crit.value, rel=1e-5)


def test_C0_critical_large_mu_tends_to_inverse_curvature():
    m = LevyModel(1.0 / 1.5, (ExpPositive(1.0, 1.5),))
    inv = 1 / (1 + 2 * 1.0 / 1.5**2)
    assert C0(m, 0.0, 200.0, 0.0).value == pytest.approx(inv, rel=2e-2)


def test_C0_matches_solver_tail():
    theta, mu, rho = 0.5, 0.2, 0.1
    g, rep = solve_fixed_point(SPEC_POS, theta, mu, rho)
    i = (g.n_points - 1) // 2
    assert math.exp(rep.gamma0 * g.x[i]) * g.values[i] == pytest.approx(
        C0(SPEC_POS, theta, mu, rho).value, rel=5e-3)


# ---------------------------------------------------------------------------
# Wiener-Hopf
# ---------------------------------------------------------------------------


def test_psi_plus_examples():
    m = LevyModel(0.0)
    assert wiener_hopf_plus(m, 2.0, 0.0) == 1.0
    assert complex(wiener_hopf_plus(m, 2.0, 1.0)) == pytest.approx(1 + 1j / (2 - 1j), abs=1e-7)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=20), st.floats(0.1, 3.0))
def test_psi_plus_is_a_characteristic_function(qs, theta):
    v = wiener_hopf_plus(SPEC_POS, theta, np.array(qs))
    assert np.all(np.abs(v) <= 1 + 1e-6)
    w = wiener_hopf_minus(SPEC_POS, theta, np.array(qs))
    assert np.all(np.abs(w) <= 1 + 1e-6)


def test_psi_plus_from_grid_solution():
    g, _ = solve_fixed_point(TWO_SIDED, 1.0, x_max=40.0, n_points=8001)
    qs = np.linspace(-5, 5, 41)
    v = wiener_hopf_plus(TWO_SIDED, 1.0, qs, F=g)
    assert np.all(np.abs(v) <= 1 + 1e-4)
    assert v[20] == 1.0


def test_psi_plus_requires_positive_theta():
    with pytest.raises(DomainError):
        wiener_hopf_plus(SPEC_POS, 0.0, 1.0)


def test_psi_plus_instability_is_reported():
    # a grid solution with a non-decaying tail makes the boundary limit move
    g = GridFunction(2.0, 3, np.ones(3), 0.0)
    with pytest.raises(StabilityError):
        wiener_hopf_plus(SPEC_POS, 1.0, 0.5, F=g)


# ---------------------------------------------------------------------------
# F'(0+)
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "model, theta, mu, rho",
    [(TWO_SIDED, 1.0, 0.5, 0.3), (SPEC_POS, 0.5, 0.2, 0.1)],
)
def test_derivative_at_zero(model, theta, mu, rho):
    g, _ = solve_fixed_point(model, theta, mu, rho, n_points=8001)
    v, h = g.values, g.h
    num = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    assert num == pytest.approx(derivative_at_zero(model, theta, mu, rho, g), rel=1e-3)


def test_derivative_at_zero_brownian():
    m = LevyModel(0.3)
    assert derivative_at_zero(m, 1.0, 0.0, 0.0) == pytest.approx(-(0.3 + alpha_theta(m, 1.0)))
