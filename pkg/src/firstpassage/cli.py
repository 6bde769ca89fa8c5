"""Command-line front end: roots | solve | laplace | invert | mc | compare.

The run configuration is a JSON document:

    {
      "model":  {"c0": 0.5, "jumps": [{"kind": "exp_pos", "intensity": 1.0, "rate": 2.0}]},
      "params": {"theta": 1.0, "mu": 0.0, "rho": 0.0},
      "grid":   {"x_max": 20.0, "n_points": 2001, "gamma": null},
      "mc":     {"n_paths": 20000, "dt": 0.01, "horizon": null, "seed": 0, "threads": 1},
      "outputs": "out"
    }

Only "model" is required. Errors are printed to stderr as JSON; exit codes are
2 for configuration errors, 3 for violated hypotheses, 4 for numerical
failures and 1 when compare finds routes that disagree.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .invert import InversionError, InversionSpec, invert_with_error
from .laplace import F_hat_explicit_pos, StabilityError, relative_residual
from .mc import MCConfig, estimate_F
from .model import DomainError, LevyModel, NoRootError, find_roots
from .solver import HypothesisError, QuadratureError, solve_fixed_point

EXIT_DISAGREE = 1
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


@dataclass
class RunConfig:
    model: LevyModel
    theta: float = 0.0
    mu: float = 0.0
    rho: float = 0.0
    x_max: float | None = None
    n_points: int = 2001
    gamma: float | None = None
    mc: MCConfig = field(default_factory=MCConfig)
    outputs: str = "."

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict) or "model" not in d:
            raise ConfigError("config must be a JSON object with a 'model' field")
        try:
            model = LevyModel.from_dict(d["model"])
            params = d.get("params", {}) or {}
            grid = d.get("grid", {}) or {}
            mc = d.get("mc", {}) or {}
            unknown = set(params) - {"theta", "mu", "rho"}
            if unknown:
                raise ConfigError(f"unknown params fields {sorted(unknown)}")
            theta, mu, rho = (float(params.get(k, 0.0)) for k in ("theta", "mu", "rho"))
            if min(theta, mu, rho) < 0:
                raise ConfigError("theta, mu and rho must be nonnegative")
            x_max = grid.get("x_max")
            n_points = int(grid.get("n_points", 2001))
            if n_points < 2 or (x_max is not None and not float(x_max) > 0):
                raise ConfigError("grid needs n_points >= 2 and x_max > 0")
            return cls(model, theta, mu, rho,
                       None if x_max is None else float(x_max), n_points,
                       grid.get("gamma"), MCConfig(**mc), str(d.get("outputs", ".")))
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "params": {"theta": self.theta, "mu": self.mu, "rho": self.rho},
            "grid": {"x_max": self.x_max, "n_points": self.n_points, "gamma": self.gamma},
            "mc": self.mc.to_dict(),
            "outputs": self.outputs,
        }


def _parse_list(text: str | None, kind=float, default=None):
    if text is None:
        return default
    try:
        return [kind(t.strip().replace(" ", "")) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from None


def _solve(cfg: RunConfig, tol: float):
    return solve_fixed_point(cfg.model, cfg.theta, cfg.mu, cfg.rho, x_max=cfg.x_max,
                             n_points=cfg.n_points, tol=tol, gamma=cfg.gamma)


def _explicit_transform(cfg: RunConfig):
    if cfg.model.has_negative_jumps:
        raise DomainError("invert needs a jump measure without negative jumps")
    roots = None
    if not (cfg.theta == 0 and cfg.model.mean_x1 >= 0):
        roots = find_roots(cfg.model, cfg.theta)
    return lambda s: F_hat_explicit_pos(cfg.model, cfg.theta, cfg.mu, cfg.rho, s, roots)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_roots(cfg: RunConfig, args) -> int:
    rep = find_roots(cfg.model, cfg.theta)
    print(json.dumps(rep.to_dict()))
    return 0


def cmd_solve(cfg: RunConfig, args) -> int:
    g, rep = _solve(cfg, args.tol or 1e-10)
    out = Path(args.out)
    g.to_csv(out / "solution.csv", rep)
    d = rep.to_dict()
    d.pop("deltas")
    print(json.dumps(d))
    return 0


def cmd_laplace(cfg: RunConfig, args) -> int:
    qs = _parse_list(args.q, complex, [0.5, 1.0, 2.0])
    g, _ = _solve(cfg, args.tol or 1e-10)
    roots = find_roots(cfg.model, cfg.theta)
    rows = []
    for q in qs:
        res, rel = relative_residual(cfg.model, cfg.theta, cfg.mu, cfg.rho, g, q, roots)
        rows.append((q.real, q.imag, res.real, res.imag, rel))
    _write_csv(Path(args.out) / "residuals.csv", ["re_q", "im_q", "re_res", "im_res", "rel_res"], rows)
    print(json.dumps({"max_rel_res": max(r[-1] for r in rows)}))
    return 0


def cmd_invert(cfg: RunConfig, args) -> int:
    xs = _parse_list(args.x, float, [1.0])
    fhat = _explicit_transform(cfg)
    rows = [(x, *invert_with_error(fhat, x, InversionSpec())) for x in xs]
    _write_csv(Path(args.out) / "invert.csv", ["x", "value", "method_error_estimate"], rows)
    return 0


def cmd_mc(cfg: RunConfig, args) -> int:
    xs = _parse_list(args.x, float, [1.0])
    rows = []
    for x in xs:
        e = estimate_F(cfg.model, cfg.theta, cfg.mu, cfg.rho, x, cfg.mc)
        rows.append((x, e.value, e.std_err, e.n_paths, e.hit_fraction, e.truncation_bound, e.horizon, e.flagged))
    _write_csv(Path(args.out) / "mc.csv",
               ["x", "value", "std_err", "n_paths", "hit_fraction", "truncation_bound", "horizon", "flagged"], rows)
    return 0


def cmd_compare(cfg: RunConfig, args) -> int:
    xs = _parse_list(args.x, float, [1.0])
    tol = args.tol or 1e-3
    g, _ = _solve(cfg, 1e-10)
    fhat = None if cfg.model.has_negative_jumps else _explicit_transform(cfg)
    rows = []
    ok = True
    for x in xs:
        s = float(g(x)) if x <= g.x_max else float("nan")
        inv = invert_with_error(fhat, x)[0] if fhat is not None else float("nan")
        e = estimate_F(cfg.model, cfg.theta, cfg.mu, cfg.rho, x, cfg.mc)
        band = max(tol, 3 * e.std_err)
        d_si = abs(s - inv)
        d_sm = abs(s - e.value)
        d_im = abs(inv - e.value)
        for d, lim in ((d_si, tol), (d_sm, band), (d_im, band)):
            if not math.isnan(d) and d > lim:
                ok = False
        rows.append((x, s, inv, e.value, e.std_err, d_si, d_sm, d_im))
    _write_csv(Path(args.out) / "compare.csv",
               ["x", "solve", "invert", "mc", "mc_std_err", "diff_solve_invert", "diff_solve_mc",
                "diff_invert_mc"], rows)
    print(json.dumps({"agree": ok, "tol": tol}))
    return 0 if ok else EXIT_DISAGREE


COMMANDS = {
    "roots": cmd_roots,
    "solve": cmd_solve,
    "laplace": cmd_laplace,
    "invert": cmd_invert,
    "mc": cmd_mc,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="firstpassage", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="path to the JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (default: config 'outputs')")
    p.add_argument("--seed", type=int, default=None, help="Monte Carlo seed override")
    p.add_argument("--tol", type=float, default=None,
                   help="solver tolerance (solve, laplace) or route-agreement tolerance (compare)")
    p.add_argument("--x", default=None, help="comma-separated x values")
    p.add_argument("--q", default=None, help="comma-separated transform arguments (complex allowed)")
    return p


def _error(kind: str, exc: BaseException, code: int) -> int:
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
    diag = getattr(exc, "diagnostics", None)
    if diag:
        payload["diagnostics"] = diag
    print(json.dumps(payload, default=str), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = RunConfig.from_dict(raw)
        if args.seed is not None:
            cfg.mc = replace(cfg.mc, seed=args.seed)
        args.out = args.out or cfg.outputs
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _error("config", exc, EXIT_CONFIG)
    except (HypothesisError, NoRootError, DomainError) as exc:
        return _error("hypothesis", exc, EXIT_HYPOTHESIS)
    except (QuadratureError, InversionError, StabilityError, FloatingPointError) as exc:
        return _error("numerical", exc, EXIT_NUMERICAL)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
