"""Frank-Wolfe solver for the sliding subproblem

    min_{||x||_* <= rho}  g(x) = (beta/2) ||x - center||_F^2 + <linear_term, x>

terminated when the Wolfe gap drops below eta. Since g is convex the gap
bounds the suboptimality, so g(x_out) - g* <= eta on exit. Steps use the
closed-form exact line search for quadratics, which never increases g, and
every iterate stays feasible as a convex combination of feasible points.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import SubsolverError
from .ledger import CostLedger
from .model import ParamMatrix
from .nuclear_ball import NuclearBall, _power_top_pair


@dataclass
class SubproblemSpec:
    beta: float
    center: ParamMatrix
    linear_term: ParamMatrix
    eta: float
    warm_start: ParamMatrix
    max_fw_iters: int

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.max_fw_iters < 1:
            raise ValueError("max_fw_iters must be >= 1")


def default_max_fw_iters(beta: float, rho: float, eta: float) -> int:
    # ~4x the O(beta D^2 / eta) requirement, guards against tolerance pathologies.
    return int(math.ceil(8.0 * beta * (2.0 * rho) ** 2 / eta)) + 16


def solve_subproblem(
    spec: SubproblemSpec,
    ball: NuclearBall,
    ledger: CostLedger,
    rng: np.random.Generator | None = None,
):
    """Run FW from the warm start until the gap is <= eta.

    Returns (x_out, final_gap, iters) where iters counts x-updates; the
    terminating gap check costs one extra LO call, so LO calls = iters + 1.
    Raises SubsolverError when max_fw_iters updates were not enough.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    x = np.array(spec.warm_start, dtype=float, copy=True)
    center = np.asarray(spec.center, dtype=float)
    linear = np.asarray(spec.linear_term, dtype=float)
    beta = spec.beta
    gap = math.inf
    for it in range(spec.max_fw_iters + 1):
        grad = beta * (x - center) + linear
        if not np.any(grad):
            return x, 0.0, it
        ledger.lo_calls += 1
        u, _, top_vec = _power_top_pair(ball, grad, rng)
        atom = -ball.radius * np.outer(u, top_vec)
        gap = float(np.vdot(grad, x) - np.vdot(grad, atom))
        if gap <= spec.eta:
            return x, gap, it
        if it == spec.max_fw_iters:
            break
        d = x - atom
        dn2 = float(np.vdot(d, d))
        step = min(1.0, gap / (beta * dn2)) if dn2 > 0 else 1.0
        x -= step * d
    raise SubsolverError(
        f"Frank-Wolfe spent {spec.max_fw_iters} iterations, gap {gap:.3e} > eta {spec.eta:.3e}",
        last_gap=gap,
        iters=spec.max_fw_iters,
    )
