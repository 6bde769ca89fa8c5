"""Monte Carlo estimation of F(theta, mu, rho, x) = E[exp(-theta T - mu K - rho L); T < inf].

Paths advance from jump time to jump time; in between, the Brownian part is
sampled exactly on sub-steps of length at most dt and a crossing of the level
inside a sub-step is detected with the exact Brownian-bridge probability.
The crossing time inside the sub-step is drawn from its exact conditional law,
which is an inverse Gaussian after the change of variable s = dt t/(dt - t).

Paths are simulated in fixed-size blocks, each with its own child seed, so
the estimate is bitwise reproducible for a given seed whatever the number of
worker threads.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .model import LevyModel, find_roots

__all__ = ["MCConfig", "MCEstimate", "PassageSample", "PassageBatch",
           "default_horizon", "simulate_block", "simulate_passage", "simulate", "estimate_F"]


@dataclass(frozen=True)
class MCConfig:
    n_paths: int = 10_000
    dt: float = 0.01
    horizon: float | None = None
    seed: int = 0
    bridge_correction: bool = True
    threads: int = 1
    block_size: int = 4096

    def __post_init__(self):
        if self.n_paths < 1 or self.block_size < 1 or self.threads < 1:
            raise ValueError("n_paths, block_size and threads must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon is not None and self.horizon < 100 * self.dt:
            raise ValueError("horizon must be at least 100 dt")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PassageSample:
    T: float
    K: float
    L: float
    via_jump: bool
    censored: bool
    jump_size: float = math.nan


@dataclass(frozen=True, eq=False)
class PassageBatch:
    T: np.ndarray
    K: np.ndarray
    L: np.ndarray
    via_jump: np.ndarray
    censored: np.ndarray
    jump_size: np.ndarray

    def __len__(self):
        return len(self.T)

    @staticmethod
    def concat(batches) -> "PassageBatch":
        fields = ("T", "K", "L", "via_jump", "censored", "jump_size")
        return PassageBatch(*(np.concatenate([getattr(b, f) for b in batches]) for f in fields))

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "T", "K", "L", "via_jump", "censored"])
            for i in range(len(self)):
                w.writerow([i, f"{self.T[i]:.17g}", f"{self.K[i]:.17g}", f"{self.L[i]:.17g}",
                            int(self.via_jump[i]), int(self.censored[i])])


MIN_REPORTED_PATHS = 1000


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_err: float
    n_paths: int
    hit_fraction: float
    truncation_bound: float
    horizon: float
    flagged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def default_horizon(model: LevyModel, theta: float, x: float, dt: float) -> float:
    floor = 100.0 * dt
    if theta > 0:
        return max(floor, 20.0 / theta)
    E = model.mean_x1
    if E < 0:
        return max(floor, 50.0 / abs(E))
    if E > 0:
        return max(floor, 20.0 * (x + 1.0) / E)
    return max(floor, 1000.0)


def simulate_block(model: LevyModel, x: float, n: int, dt: float, horizon: float,
                   rng: np.random.Generator, bridge_correction: bool = True) -> PassageBatch:
    """n independent passages over level x > 0, censored at the horizon."""
    if not x > 0:
        raise ValueError("x must be positive")
    lam = model.lam
    c0 = model.c0
    T = np.full(n, np.inf)
    K = np.zeros(n)
    L = np.zeros(n)
    via = np.zeros(n, dtype=bool)
    jsize = np.full(n, np.nan)
    # D = x - X is the distance below the level
    D = np.full(n, float(x))
    t = np.zeros(n)
    nxt = rng.exponential(1.0 / lam, size=n) if lam > 0 else np.full(n, np.inf)
    active = np.arange(n)
    while active.size:
        ta, Da, ja = t[active], D[active], nxt[active]
        cap = np.minimum(dt, horizon - ta)
        to_jump = ja - ta
        jumps_now = to_jump <= cap
        step = np.where(jumps_now, to_jump, cap)
        z = rng.standard_normal(active.size)
        Db = Da + c0 * step - np.sqrt(step) * z
        crossed = Db <= 0
        if bridge_correction:
            maybe = ~crossed & (step > 0)
            p = np.zeros(active.size)
            p[maybe] = np.exp(-2.0 * Da[maybe] * Db[maybe] / step[maybe])
            u = rng.random(active.size)
            crossed |= maybe & (u < p)
        if np.any(crossed):
            idx = np.flatnonzero(crossed)
            if bridge_correction:
                d = Da[idx]
                gap = np.maximum(np.abs(Db[idx]), 1e-300)
                s = rng.wald(d * step[idx] / gap, d * d)
                tau = step[idx] * s / (step[idx] + s)
            else:
                tau = step[idx]
            T[active[idx]] = ta[idx] + tau
        t_new = np.where(jumps_now, ja, ta + step)
        D[active] = Db
        t[active] = t_new
        live = ~crossed
        at_jump = live & jumps_now
        if np.any(at_jump):
            idx = np.flatnonzero(at_jump)
            y = model.sample_jumps(rng, idx.size)
            pre = Db[idx]
            post = pre - y
            hit = post < 0
            g = active[idx[hit]]
            Lh = pre[hit]
            yh = y[hit]
            # whichever of K, L is >= y/2 makes the other's subtraction exact, so K + L == y
            Kh = yh - Lh
            Lh = np.where(Lh < yh / 2, yh - Kh, Lh)
            T[g] = ja[idx[hit]]
            K[g], L[g], via[g], jsize[g] = Kh, Lh, True, yh
            D[active[idx]] = post
            keep = idx[~hit]
            nxt[active[keep]] = ja[keep] + rng.exponential(1.0 / lam, size=keep.size)
            live[idx[hit]] = False
        live &= t_new < horizon
        active = active[live]
    censored = ~np.isfinite(T)
    return PassageBatch(T, K, L, via, censored, jsize)


def simulate_passage(model: LevyModel, x: float, config: MCConfig, rng: np.random.Generator,
                     theta: float = 0.0) -> PassageSample:
    """One passage; the rng stream is advanced in place."""
    horizon = config.horizon or default_horizon(model, theta, x, config.dt)
    b = simulate_block(model, x, 1, config.dt, horizon, rng, config.bridge_correction)
    return PassageSample(float(b.T[0]), float(b.K[0]), float(b.L[0]), bool(b.via_jump[0]),
                         bool(b.censored[0]), float(b.jump_size[0]))


def simulate(model: LevyModel, x: float, config: MCConfig, theta: float = 0.0) -> PassageBatch:
    """config.n_paths passages, in path order, reproducible from config.seed."""
    horizon = config.horizon or default_horizon(model, theta, x, config.dt)
    n_blocks = -(-config.n_paths // config.block_size)
    seeds = np.random.SeedSequence(config.seed).spawn(n_blocks)
    sizes = [min(config.block_size, config.n_paths - i * config.block_size) for i in range(n_blocks)]

    def run(i):
        rng = np.random.Generator(np.random.PCG64(seeds[i]))
        return simulate_block(model, x, sizes[i], config.dt, horizon, rng, config.bridge_correction)

    if config.threads == 1:
        blocks = [run(i) for i in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as ex:
            blocks = list(ex.map(run, range(n_blocks)))
    return PassageBatch.concat(blocks)


def _truncation_bound(model, theta, x, horizon, censored_fraction):
    if theta > 0:
        return math.exp(-theta * horizon)
    E = model.mean_x1
    if E < 0:
        g0 = find_roots(model, 0.0).gamma0
        return math.exp(-g0 * (x + abs(E) * horizon))
    return float(censored_fraction)


def estimate_F(model: LevyModel, theta: float, mu: float, rho: float, x: float,
               config: MCConfig, return_samples: bool = False):
    """Sample mean of exp(-theta T - mu K - rho L) with censored paths contributing 0."""
    if min(theta, mu, rho) < 0:
        raise ValueError("theta, mu and rho must be nonnegative")
    horizon = config.horizon or default_horizon(model, theta, x, config.dt)
    cfg = MCConfig(config.n_paths, config.dt, horizon, config.seed, config.bridge_correction,
                   config.threads, config.block_size)
    b = simulate(model, x, cfg, theta)
    hit = ~b.censored
    w = np.zeros(len(b))
    w[hit] = np.exp(-theta * b.T[hit] - mu * b.K[hit] - rho * b.L[hit])
    n = len(b)
    value = float(np.sum(w) / n)
    se = float(np.std(w, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    bound = _truncation_bound(model, theta, x, horizon, 1.0 - hit.mean())
    # flagged: truncation could exceed the sampling error, or too few paths to report
    est = MCEstimate(value, se, n, float(hit.mean()), bound, horizon, bound > se or n < MIN_REPORTED_PATHS)
    return (est, b) if return_samples else est
