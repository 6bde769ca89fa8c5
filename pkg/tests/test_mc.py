from __future__ import annotations

import math

import numpy as np
import pytest

from firstpassage.mc import MCConfig, default_horizon, estimate_F, simulate, simulate_passage
from firstpassage.model import Atom, ExpNegative, ExpPositive, LevyModel, Uniform
from firstpassage.solver import solve_fixed_point

TWO_SIDED = LevyModel(0.5, (ExpPositive(0.6, 2.0), ExpNegative(0.4, 3.0)))
SPEC_POS = LevyModel(1.0, (ExpPositive(1.0, 1.5),))


def within(a, b, k=3.0):
    return abs(a.value - b.value) <= k * (a.std_err + b.std_err)


def test_config_validation():
    with pytest.raises(ValueError):
        MCConfig(dt=0.0)
    with pytest.raises(ValueError):
        MCConfig(dt=0.1, horizon=5.0)
    with pytest.raises(ValueError):
        MCConfig(n_paths=0)
    assert MCConfig(**MCConfig(seed=3).to_dict()) == MCConfig(seed=3)


@pytest.mark.parametrize(
    "model",
    [TWO_SIDED, LevyModel(0.2, (Atom(0.7, 0.5), Uniform(-1.0, 2.0, 0.8))), SPEC_POS],
)
def test_passage_invariants(model):
    b = simulate(model, 1.0, MCConfig(n_paths=8000, dt=0.05, seed=11), theta=0.5)
    hit = ~b.censored
    jump = b.via_jump
    # overshoot + undershoot is the jump size, bit for bit
    assert np.all(b.K[jump] + b.L[jump] == b.jump_size[jump])
    assert np.all(b.K[jump] > 0) and np.all(b.L[jump] >= 0)
    assert np.all(b.K[hit & ~jump] == 0) and np.all(b.L[hit & ~jump] == 0)
    assert np.all(b.via_jump[b.K > 0])
    assert np.all(np.isinf(b.T[b.censored])) and np.all(np.isfinite(b.T[hit]))


def test_atom_jump_crossing():
    y = 2.0
    model = LevyModel(0.0, (Atom(y, 5.0),))
    rng = np.random.default_rng(5)
    cfg = MCConfig(dt=0.01, horizon=10.0)
    seen = 0
    for _ in range(200):
        s = simulate_passage(model, 1.0, cfg, rng)
        if s.via_jump:
            assert s.K + s.L == y and s.K > 0
            seen += 1
        else:
            assert s.K == 0 and s.L == 0
    assert seen > 50


def test_upward_drift_hits_eventually():
    model = LevyModel(-1.0)
    short = estimate_F(model, 0.0, 0, 0, 2.0, MCConfig(n_paths=4000, dt=0.01, horizon=1.0))
    long = estimate_F(model, 0.0, 0, 0, 2.0, MCConfig(n_paths=4000, dt=0.01, horizon=20.0))
    assert short.hit_fraction < 0.6
    assert long.hit_fraction > 0.999


def test_brownian_time_transform():
    model = LevyModel(0.0)
    e = estimate_F(model, 2.0, 0, 0, 1.0, MCConfig(n_paths=100_000, dt=0.01, seed=4))
    assert abs(e.value - math.exp(-2.0)) <= 3 * e.std_err
    assert not e.flagged


def test_small_level_passes_immediately():
    e = estimate_F(TWO_SIDED, 1.0, 0, 0, 1e-4, MCConfig(n_paths=4000, dt=1e-3, seed=2))
    assert abs(e.value - 1.0) <= 3 * e.std_err + 2e-3


def test_large_overshoot_penalty():
    cfg = MCConfig(n_paths=20_000, dt=0.02, seed=8)
    base = estimate_F(SPEC_POS, 0.5, 0.0, 0.0, 1.0, cfg)
    steep = estimate_F(SPEC_POS, 0.5, 50.0, 0.0, 1.0, cfg)
    assert steep.value < base.value - 3 * base.std_err
    _, b = estimate_F(SPEC_POS, 0.5, 0.0, 0.0, 1.0, cfg, return_samples=True)
    diffusive = np.mean(np.where(~b.censored & ~b.via_jump, np.exp(-0.5 * np.where(b.censored, 0, b.T)), 0.0))
    assert steep.value == pytest.approx(diffusive, abs=0.01)


def test_two_sided_matches_solver():
    g, _ = solve_fixed_point(TWO_SIDED, 1.0)
    e = estimate_F(TWO_SIDED, 1.0, 0, 0, 1.0, MCConfig(n_paths=40_000, dt=0.01, seed=1))
    assert abs(e.value - float(g(1.0))) <= 3 * e.std_err


@pytest.mark.parametrize(
    "field, ladder",
    [("theta", [0.2, 0.5, 1.0]), ("mu", [0.0, 0.5, 2.0]), ("rho", [0.0, 0.5, 2.0]), ("x", [0.5, 1.0, 2.0])],
)
def test_monotone_in_each_parameter(field, ladder):
    cfg = MCConfig(n_paths=10_000, dt=0.05, seed=6)
    base = {"theta": 0.5, "mu": 0.3, "rho": 0.3, "x": 1.0}
    ests = []
    for v in ladder:
        p = {**base, field: v}
        ests.append(estimate_F(TWO_SIDED, p["theta"], p["mu"], p["rho"], p["x"], cfg))
    for a, b in zip(ests[:-1], ests[1:]):
        assert b.value <= a.value + 3 * (a.std_err + b.std_err)


def test_bridge_correction_direction():
    model = LevyModel(0.0)
    on = estimate_F(model, 2.0, 0, 0, 1.0, MCConfig(n_paths=20_000, dt=1e-2, seed=9))
    off = estimate_F(model, 2.0, 0, 0, 1.0, MCConfig(n_paths=20_000, dt=1e-2, seed=9, bridge_correction=False))
    assert on.value >= off.value
    assert off.value < math.exp(-2.0) - 3 * off.std_err


def test_reproducible_across_threads():
    base = MCConfig(n_paths=10_000, dt=0.02, seed=42, block_size=1024)
    a = estimate_F(TWO_SIDED, 1.0, 0.2, 0.1, 1.0, base)
    b = estimate_F(TWO_SIDED, 1.0, 0.2, 0.1, 1.0, MCConfig(**{**base.to_dict(), "threads": 8}))
    c = estimate_F(TWO_SIDED, 1.0, 0.2, 0.1, 1.0, base)
    assert a == b == c
    d = estimate_F(TWO_SIDED, 1.0, 0.2, 0.1, 1.0, MCConfig(**{**base.to_dict(), "seed": 43}))
    assert d != a


def test_default_horizon_and_truncation_bound():
    assert default_horizon(TWO_SIDED, 0.5, 1.0, 0.01) == pytest.approx(40.0)
    assert default_horizon(SPEC_POS, 0.0, 1.0, 0.01) == pytest.approx(50 / abs(SPEC_POS.mean_x1))
    e = estimate_F(TWO_SIDED, 0.01, 0, 0, 1.0, MCConfig(n_paths=2000, dt=0.05, horizon=5.0))
    assert e.truncation_bound == pytest.approx(math.exp(-0.05)) and e.flagged
    e = estimate_F(SPEC_POS, 0.0, 0, 0, 1.0, MCConfig(n_paths=2000, dt=0.05))
    assert e.truncation_bound < 1e-6 and not e.flagged


def test_samples_csv(tmp_path):
    b = simulate(TWO_SIDED, 1.0, MCConfig(n_paths=50, dt=0.05, seed=3), theta=1.0)
    p = tmp_path / "s.csv"
    b.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "path_id,T,K,L,via_jump,censored" and len(lines) == 51


def test_small_runs_are_flagged():
    e = estimate_F(SPEC_POS, 1.0, 0, 0, 1.0, MCConfig(n_paths=500, dt=0.05))
    assert e.flagged and e.truncation_bound < e.std_err
