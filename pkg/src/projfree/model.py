"""Finite-sum matrix-regression objective and its gradient oracles.

The loss is f(Theta) = (1/n) sum_i f_i(Theta) with

    f_i(Theta) = 0.5 * (y_i - <X_i, Theta>)^2                       (convex)
    f_i(Theta) = 0.5 * [(y_i - <Z_i, Theta>)^2 - vec(Theta)' Sw vec(Theta)]
                                                                    (non-convex)

where <A, B> = tr(A'B) and Sw is the (diagonal) covariance of the additive
noise on the sensing matrices. The non-convex correction term is carried by
every component so that the components average exactly to the full loss.

Designs are stored flattened row-major, one row per sample, so <X_i, Theta>
is a single length-d^2 dot product and batch quantities are matrix products.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteValue
from .ledger import CostLedger

# Dense d x d iterate; everything downstream treats it as an ndarray.
ParamMatrix = np.ndarray


@dataclass(frozen=True)
class Problem:
    """Immutable problem data; safe for concurrent reads.

    designs   : (n, d*d) float array, row i is vec(X_i) (or vec(Z_i)).
    responses : (n,) float array.
    noise_cov : diagonal of Sw as a (d*d,) array, or None for the convex loss.
    smoothness_L      : smoothness constant of the averaged loss (top
                        eigenvalue of the population design second moment).
    lower_smoothness_l: lower-smoothness constant of the components
                        (0 for the convex loss, lambda_max(Sw) otherwise).
    rsc_sigma_hat     : effective restricted-strong-convexity constant used
                        by the solver schedules.
    """

    designs: np.ndarray
    responses: np.ndarray
    noise_cov: np.ndarray | None
    smoothness_L: float
    lower_smoothness_l: float
    rsc_sigma_hat: float
    kind: str
    dim: int = field(init=False)

    def __post_init__(self):
        designs = np.ascontiguousarray(np.asarray(self.designs, dtype=float))
        responses = np.asarray(self.responses, dtype=float)
        if designs.ndim != 2 or designs.shape[0] < 1:
            raise DimensionMismatch("designs must be a nonempty (n, d*d) array")
        d = int(round(designs.shape[1] ** 0.5))
        if d * d != designs.shape[1]:
            raise DimensionMismatch(
                f"design row length {designs.shape[1]} is not a perfect square"
            )
        if responses.shape != (designs.shape[0],):
            raise DimensionMismatch("responses must have one entry per design row")
        if self.kind not in ("convex", "nonconvex"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if (self.noise_cov is not None) != (self.kind == "nonconvex"):
            raise ValueError("kind must be nonconvex exactly when noise_cov is set")
        if self.noise_cov is not None:
            noise = np.asarray(self.noise_cov, dtype=float)
            if noise.shape != (d * d,) or np.any(noise < 0):
                raise ValueError("noise_cov must be a nonnegative vector of length d*d")
            object.__setattr__(self, "noise_cov", noise)
        if not (self.smoothness_L >= self.rsc_sigma_hat > 0):
            raise ValueError("need smoothness_L >= rsc_sigma_hat > 0")
        object.__setattr__(self, "designs", designs)
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "dim", d)

    @property
    def n(self) -> int:
        return self.designs.shape[0]


def _check_theta(p: Problem, theta: ParamMatrix) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (p.dim, p.dim):
        raise DimensionMismatch(
            f"iterate has shape {theta.shape}, problem expects ({p.dim}, {p.dim})"
        )
    return theta


def objective_value(p: Problem, theta: ParamMatrix) -> float:
    """Averaged loss at theta. Deterministic; does not touch any ledger."""
    theta = _check_theta(p, theta)
    v = theta.ravel()
    resid = p.designs @ v - p.responses
    value = 0.5 * float(resid @ resid) / p.n
    if p.noise_cov is not None:
        value -= 0.5 * float(v @ (p.noise_cov * v))
    if not np.isfinite(value):
        raise NonFiniteValue("objective evaluated to a non-finite value")
    return value


def full_gradient(p: Problem, theta: ParamMatrix, ledger: CostLedger) -> ParamMatrix:
    """(1/n) sum_i grad f_i(theta). Counts one full pass and n component evals."""
    theta = _check_theta(p, theta)
    v = theta.ravel()
    resid = p.designs @ v - p.responses
    g = p.designs.T @ resid
    g /= p.n
    if p.noise_cov is not None:
        g -= p.noise_cov * v
    ledger.full_grad_passes += 1
    ledger.component_grad_evals += p.n
    if not np.all(np.isfinite(g)):
        raise NonFiniteValue("gradient contains non-finite entries")
    return g.reshape(p.dim, p.dim)


def component_gradient(
    p: Problem, i: int, theta: ParamMatrix, ledger: CostLedger
) -> ParamMatrix:
    """Gradient of the single component f_i (noise correction included)."""
    if not 0 <= i < p.n:
        raise IndexError(f"component index {i} out of range for n={p.n}")
    theta = _check_theta(p, theta)
    v = theta.ravel()
    row = p.designs[i]
    g = (float(row @ v) - p.responses[i]) * row
    if p.noise_cov is not None:
        g = g - p.noise_cov * v
    ledger.component_grad_evals += 1
    return g.reshape(p.dim, p.dim)


def vr_gradient(
    p: Problem,
    z: ParamMatrix,
    anchor: ParamMatrix,
    anchor_grad: ParamMatrix,
    m: int,
    rng: np.random.Generator,
    ledger: CostLedger,
) -> ParamMatrix:
    """Variance-reduced gradient estimate at z, anchored at `anchor`.

    Draws m indices uniformly with replacement and returns
    (1/m) sum_j [grad f_j(z) - grad f_j(anchor)] + anchor_grad, which is an
    unbiased estimate of grad f(z) given anchor_grad = grad f(anchor).

    If m >= n the sampled estimate is replaced by the exact full gradient
    (zero variance dominates every variance requirement and is cheaper);
    no random numbers are consumed in that case. A sampled call counts
    2m component evals (each index touches z and the anchor); the bypass
    counts as one full pass.
    """
    if m < 1:
        raise ValueError("minibatch size m must be >= 1")
    if m >= p.n:
        return full_gradient(p, z, ledger)
    z = _check_theta(p, z)
    anchor = _check_theta(p, anchor)
    idx = rng.integers(0, p.n, size=m)
    rows = p.designs[idx]
    diff = z.ravel() - anchor.ravel()
    # grad f_j(z) - grad f_j(anchor) = X_j <X_j, z - anchor> (- Sw (z - anchor));
    # the response terms cancel in the difference.
    g = rows.T @ (rows @ diff)
    g /= m
    if p.noise_cov is not None:
        g -= p.noise_cov * diff
    ledger.component_grad_evals += 2 * m
    return g.reshape(p.dim, p.dim) + anchor_grad


def objective_lower_bound(p: Problem, rho: float) -> float:
    """Certified lower bound on f over the nuclear ball of radius rho.

    The convex loss is nonnegative. For the non-convex loss the quadratic
    correction is bounded by 0.5 * lambda_max(Sw) * ||Theta||_F^2 and
    ||Theta||_F <= ||Theta||_* <= rho on the feasible set.
    """
    if p.noise_cov is None:
        return 0.0
    return -0.5 * float(np.max(p.noise_cov)) * rho * rho
