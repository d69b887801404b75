"""Conditional gradient sliding: an accelerated outer scheme whose prox step
is solved inexactly by Frank-Wolfe.

Outer epochs restart the inner loop from the previous output. Per epoch the
inner loop runs a fixed budget of N = ceil(8 sqrt(L/sigma_hat)) accelerated
steps with

    gamma_k = 2/(k+1),  beta_k = 3L/k,
    eta_{t,k} = 8 L delta0 2^{-t} / (sigma_hat N k),

which halves the optimality gap per epoch until the statistical floor of the
underlying estimation problem. Gradient cost per epoch is exactly n*N
component evaluations (N full passes).
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, SubsolverError
from .fw_subsolver import SubproblemSpec, default_max_fw_iters, solve_subproblem
from .ledger import CostLedger
from .model import (
    ParamMatrix,
    Problem,
    full_gradient,
    objective_lower_bound,
    objective_value,
)
from .nuclear_ball import NuclearBall, contains, wolfe_gap
from .trace import TraceContext, make_record


@dataclass
class CgsConfig:
    L: float
    sigma_hat: float
    delta0: float
    outer_iters: int
    rho: float
    theta0: ParamMatrix
    seed: int = 0
    # Optional early stop on the full-gradient Wolfe gap at theta_t; costs one
    # extra full gradient + LO per epoch, so the exact counter law only holds
    # when it is left unset.
    gap_tol: float | None = None
    max_fw_iters: int | None = None

    def __post_init__(self):
        if not (self.L >= self.sigma_hat > 0):
            raise ValueError("need L >= sigma_hat > 0")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be >= 1")
        if self.rho <= 0:
            raise ValueError("rho must be positive")


def inner_iters(cfg) -> int:
    return int(math.ceil(8.0 * math.sqrt(cfg.L / cfg.sigma_hat)))


def schedule(cfg, t: int, k: int):
    """(N_t, gamma_k, beta_k, eta_{t,k}) for outer index t, inner index k."""
    n_t = inner_iters(cfg)
    gamma = 2.0 / (k + 1.0)
    beta = 3.0 * cfg.L / k
    eta = 8.0 * cfg.L * cfg.delta0 * 2.0 ** (-t) / (cfg.sigma_hat * n_t * k)
    return n_t, gamma, beta, eta


def default_delta0(p: Problem, theta0: ParamMatrix, rho: float) -> float:
    """Certified initial-gap estimate f(theta0) - (lower bound of f on the ball)."""
    gap = objective_value(p, theta0) - objective_lower_bound(p, rho)
    return max(gap, np.finfo(float).tiny)


def _run_sliding(
    p, ball, cfg, ledger, rng, epoch_gradient_factory, trace_ctx, epoch_callback=None
):
    """Shared CGS/STORC driver; the factory supplies each epoch's gradient map.

    STORC in its exact-gradient (bypass) regime goes through the identical
    code path as CGS, which is what makes their trajectories bit-for-bit equal.
    epoch_callback(t, theta_t), when given, observes each epoch output.
    """
    theta = np.array(cfg.theta0, dtype=float, copy=True)
    if theta.shape != (p.dim, p.dim):
        raise SolverError(f"theta0 has shape {theta.shape}, expected ({p.dim}, {p.dim})")
    if not contains(ball, theta):
        raise SolverError("theta0 is infeasible for the nuclear ball")
    n_inner = inner_iters(cfg)
    records = []
    started = time.perf_counter()
    for t in range(1, cfg.outer_iters + 1):
        x = theta.copy()
        y = theta.copy()
        grad_at = epoch_gradient_factory(t, y)
        max_gap = 0.0
        for k in range(1, n_inner + 1):
            _, gamma, beta, eta = schedule(cfg, t, k)
            z = (1.0 - gamma) * y + gamma * x
            grad = grad_at(z)
            cap = cfg.max_fw_iters
            if cap is None:
                cap = default_max_fw_iters(beta, ball.radius, eta)
            spec = SubproblemSpec(
                beta=beta,
                center=x,
                linear_term=grad,
                eta=eta,
                warm_start=x,
                max_fw_iters=cap,
            )
            try:
                x, fin_gap, _ = solve_subproblem(spec, ball, ledger, rng=rng)
            except SubsolverError as exc:
                raise SolverError(
                    f"subproblem failed at outer t={t}, inner k={k}: {exc}"
                ) from exc
            y = (1.0 - gamma) * y + gamma * x
            if fin_gap > max_gap:
                max_gap = fin_gap
        theta = y
        wall_ms = (time.perf_counter() - started) * 1e3
        records.append(
            make_record(
                theta,
                t,
                objective_value(p, theta),
                ledger,
                wall_ms,
                max_gap,
                trace_ctx,
            )
        )
        if epoch_callback is not None:
            epoch_callback(t, theta)
        if cfg.gap_tol is not None:
            g = full_gradient(p, theta, ledger)
            gap, _ = wolfe_gap(ball, g, theta, ledger, rng=rng)
            if gap <= cfg.gap_tol:
                break
    return theta, records


def run_cgs(
    p: Problem,
    ball: NuclearBall,
    cfg: CgsConfig,
    ledger: CostLedger,
    trace_ctx: TraceContext | None = None,
    rng: np.random.Generator | None = None,
    epoch_callback=None,
):
    """Run the batch solver; returns (theta_T, list of TraceRecord per epoch)."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    def factory(t, y0):
        return lambda z: full_gradient(p, z, ledger)

    return _run_sliding(p, ball, cfg, ledger, rng, factory, trace_ctx, epoch_callback)
