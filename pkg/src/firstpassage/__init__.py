"""First-passage transforms (time, overshoot, undershoot) of jump-diffusion Levy processes."""

from __future__ import annotations

from .invert import InversionError, InversionSpec, invert_at, invert_many, invert_with_error
from .laplace import (
    C0,
    C0Constant,
    F_hat_explicit_pos,
    R_apply,
    StabilityError,
    derivative_at_zero,
    equa_laplace_residual,
    relative_residual,
    wiener_hopf_minus,
    wiener_hopf_plus,
)
from .mc import MCConfig, MCEstimate, PassageBatch, PassageSample, estimate_F, simulate, simulate_passage
from .model import (
    Atom,
    DomainError,
    ExpNegative,
    ExpPositive,
    LevyModel,
    NoRootError,
    RootReport,
    Tabulated,
    Uniform,
    alpha_theta,
    find_roots,
    mean_x1,
    nu_hat,
    nu_hat_plus,
    phi,
    phi_prime,
    phi_second,
    truncate_measure,
)
from .solver import (
    GridFunction,
    HypothesisError,
    LambdaOperator,
    QuadratureError,
    SolveReport,
    apply_lambda,
    contraction_constant,
    eval_F0,
    eval_F1,
    ide_residual,
    solve_fixed_point,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
