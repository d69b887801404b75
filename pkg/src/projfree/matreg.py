"""Matrix-regression instance generators and curvature diagnostics.

Instances follow the simulation recipe: a rank-r ground truth with equal
singular values summing to the requested nuclear norm; sensing matrices with
vec(X_i) ~ N(0, Sigma_x), Sigma_x = diag(L, sigma_hat, ..., sigma_hat);
responses y_i = <X_i, Theta*> + eps_i with eps_i ~ N(0, nu^2). The
errors-in-variables variant observes Z_i = X_i + W_i with
vec(W_i) ~ N(0, w_scale * sigma_hat * I) and uses the bias-corrected loss,
which is non-convex whenever n < d^2.

The effective curvature handed to the solvers applies the restricted-strong-
convexity discount: sigma_hat/2 for the convex loss and sigma_hat/4 for the
corrected loss (valid once lambda_max(Sigma_w) <= lambda_min(Sigma_x)/4,
hence the w_scale <= 1/4 constraint).
"""

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .ledger import CostLedger
from .model import ParamMatrix, Problem, full_gradient, objective_value
from .nuclear_ball import nuclear_norm


@dataclass(frozen=True)
class GroundTruth:
    theta_star: ParamMatrix
    r: int
    nuclear_norm: float


@dataclass(frozen=True)
class GenSpec:
    """Generator parameters; n = alpha * r * d."""

    d: int
    r: int
    alpha: int
    L: float
    sigma_hat: float
    rho: float
    seed: int = 0
    label_noise_std: float = 0.1  # nu; not pinned by the source recipe
    w_scale: float = 0.0  # Sigma_w = w_scale * sigma_hat * I (0: convex)

    def __post_init__(self):
        if self.d < 1 or self.r < 1 or self.alpha < 1:
            raise ConfigError("d, r, alpha must be positive integers")
        if self.r > self.d:
            raise ConfigError("rank r cannot exceed dimension d")
        if not (self.L >= self.sigma_hat > 0):
            raise ConfigError("need L >= sigma_hat > 0")
        if self.rho <= 0:
            raise ConfigError("rho must be positive")
        if not 0.0 <= self.w_scale <= 0.25:
            raise ConfigError(
                "w_scale must lie in [0, 0.25] (lambda_max(Sigma_w) <= lambda_min(Sigma_x)/4)"
            )
        if self.label_noise_std < 0:
            raise ConfigError("label_noise_std must be nonnegative")

    @property
    def n(self) -> int:
        return self.alpha * self.r * self.d


def make_ground_truth(
    d: int, r: int, nuclear_norm_target: float, rng: np.random.Generator
) -> GroundTruth:
    """Rank-r target U S V' with equal singular values nuclear_norm/r and
    QR-orthonormalized Gaussian factors."""
    if r > d:
        raise ConfigError("rank r cannot exceed dimension d")
    u, _ = np.linalg.qr(rng.standard_normal((d, r)))
    v, _ = np.linalg.qr(rng.standard_normal((d, r)))
    s = np.full(r, nuclear_norm_target / r)
    return GroundTruth(theta_star=(u * s) @ v.T, r=r, nuclear_norm=nuclear_norm_target)


def _design_scales(spec: GenSpec) -> np.ndarray:
    scales = np.full(spec.d * spec.d, np.sqrt(spec.sigma_hat))
    scales[0] = np.sqrt(spec.L)
    return scales


def generate_convex(
    spec: GenSpec, truth: GroundTruth, rng: np.random.Generator
) -> Problem:
    X = rng.standard_normal((spec.n, spec.d * spec.d)) * _design_scales(spec)
    y = X @ truth.theta_star.ravel()
    if spec.label_noise_std > 0:
        y = y + spec.label_noise_std * rng.standard_normal(spec.n)
    return Problem(
        designs=X,
        responses=y,
        noise_cov=None,
        smoothness_L=spec.L,
        lower_smoothness_l=0.0,
        rsc_sigma_hat=spec.sigma_hat / 2.0,
        kind="convex",
    )


def generate_nonconvex(
    spec: GenSpec, truth: GroundTruth, rng: np.random.Generator
) -> Problem:
    if spec.w_scale <= 0:
        raise ConfigError("generate_nonconvex needs w_scale > 0")
    X = rng.standard_normal((spec.n, spec.d * spec.d)) * _design_scales(spec)
    y = X @ truth.theta_star.ravel()
    if spec.label_noise_std > 0:
        y = y + spec.label_noise_std * rng.standard_normal(spec.n)
    w_var = spec.w_scale * spec.sigma_hat
    Z = X + np.sqrt(w_var) * rng.standard_normal(X.shape)
    return Problem(
        designs=Z,
        responses=y,
        noise_cov=np.full(spec.d * spec.d, w_var),
        smoothness_L=spec.L,
        lower_smoothness_l=w_var,
        rsc_sigma_hat=spec.sigma_hat / 4.0,
        kind="nonconvex",
    )


def generate(spec: GenSpec, truth: GroundTruth, rng: np.random.Generator) -> Problem:
    if spec.w_scale > 0:
        return generate_nonconvex(spec, truth, rng)
    return generate_convex(spec, truth, rng)


# --- curvature diagnostics -------------------------------------------------


@dataclass
class RscMarginReport:
    """Empirical check of the restricted-strong-convexity inequality.

    raw[i] is the first-order error E(Delta) of the i-th sampled pair;
    margins[c] holds E(Delta) - sigma_c ||Delta||_F^2 + c*xi*d/n * ||Delta||_*^2
    over the sampled pairs; fractions[c] is the share with nonnegative margin.
    A soft diagnostic: the inequality holds with high probability only, and
    its absolute constant is unspecified, so multipliers 1, 4, 16 are reported.
    """

    pairs: int
    sigma_c: float
    tau_base: float
    fractions: dict
    margins: dict
    raw: np.ndarray


def random_feasible(rng: np.random.Generator, d: int, rho: float) -> np.ndarray:
    """A random point of the nuclear ball (Gaussian direction, uniform radius)."""
    A = rng.standard_normal((d, d))
    return A * (rho * rng.uniform() / nuclear_norm(A))


def rsc_margin(
    p: Problem,
    rho: float,
    pairs: int,
    rng: np.random.Generator,
    multipliers=(1, 4, 16),
) -> RscMarginReport:
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    sigma_c = p.rsc_sigma_hat
    tau_base = p.smoothness_L * p.dim / p.n  # xi(Sigma_x) = lambda_max for this family
    scratch = CostLedger()
    raw = np.empty(pairs)
    fro2 = np.empty(pairs)
    nuc2 = np.empty(pairs)
    for i in range(pairs):
        u = random_feasible(rng, p.dim, rho)
        v = random_feasible(rng, p.dim, rho)
        delta = v - u
        grad_u = full_gradient(p, u, scratch)
        raw[i] = (
            objective_value(p, v)
            - objective_value(p, u)
            - float(np.vdot(grad_u, delta))
        )
        fro2[i] = float(np.vdot(delta, delta))
        nuc2[i] = nuclear_norm(delta) ** 2
    scale = np.maximum(np.abs(raw), sigma_c * fro2) + 1e-30
    margins = {}
    fractions = {}
    for c in multipliers:
        margin = raw - sigma_c * fro2 + c * tau_base * nuc2
        margins[c] = margin
        fractions[c] = float(np.mean(margin >= -1e-9 * scale))
    return RscMarginReport(
        pairs=pairs,
        sigma_c=sigma_c,
        tau_base=tau_base,
        fractions=fractions,
        margins=margins,
        raw=raw,
    )


@dataclass
class ConeCheckResult:
    ok: bool
    slack: float
    lhs: float
    rhs: float
    boundary_gap: float  # rho - ||theta_ref||_*; the bound assumes this ~ 0


def cone_check(
    theta_t: ParamMatrix,
    theta_hat_ref: ParamMatrix,
    truth: GroundTruth,
    rho: float,
) -> ConeCheckResult:
    """Membership of theta_t - theta_hat in the decomposability cone:

        ||D||_* <= 2 sqrt(2r) ||D||_F + 2 ||D*||_* + 2 sqrt(2r) ||D*||_F

    with D* = theta_hat - theta* and sqrt(2r) the subspace compatibility of
    the doubled rank-r subspace. Reports (never raises) when theta_hat sits
    strictly inside the ball, where the derivation's premise fails.
    """
    phi_bar = np.sqrt(2.0 * truth.r)
    d_hat = theta_t - theta_hat_ref
    d_star = theta_hat_ref - truth.theta_star
    lhs = nuclear_norm(d_hat)
    rhs = (
        2.0 * phi_bar * float(np.linalg.norm(d_hat))
        + 2.0 * nuclear_norm(d_star)
        + 2.0 * phi_bar * float(np.linalg.norm(d_star))
    )
    slack = rhs - lhs
    return ConeCheckResult(
        ok=bool(slack >= -1e-9 * max(1.0, rhs)),
        slack=slack,
        lhs=lhs,
        rhs=rhs,
        boundary_gap=rho - nuclear_norm(theta_hat_ref),
    )


def second_moment_matvec(p: Problem, v: np.ndarray) -> np.ndarray:
    """Hessian-vector product of the loss: (X'X/n) v (- Sw v)."""
    out = p.designs.T @ (p.designs @ v)
    out /= p.n
    if p.noise_cov is not None:
        out -= p.noise_cov * v
    return out


def gamma_extreme_eigs(p: Problem, rng: np.random.Generator, iters: int = 400):
    """(lambda_min, lambda_max) estimates of the loss Hessian by power
    iteration, the minimum via the shifted operator c*I - H. A negative
    minimum witnesses non-convexity (guaranteed for the corrected loss when
    n < d^2)."""
    d2 = p.dim * p.dim

    def top_eig(matvec):
        v = rng.standard_normal(d2)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(iters):
            w = matvec(v)
            lam = float(v @ w)
            nw = np.linalg.norm(w)
            if nw == 0:
                return 0.0, v
            v = w / nw
        return lam, v

    lam_dom, _ = top_eig(lambda v: second_moment_matvec(p, v))
    shift = abs(lam_dom) * 1.5 + 1.0
    lam_shifted, _ = top_eig(lambda v: shift * v - second_moment_matvec(p, v))
    lam_min = shift - lam_shifted
    lam_max = max(lam_dom, lam_min)
    return lam_min, lam_max


# --- serialization ----------------------------------------------------------

_MAGIC = b"PROJFREEMR1\x00"
_HEADER = struct.Struct("<12sHBBIIddd")


def save_problem(path, p: Problem, sidecar: dict | None = None) -> None:
    """Flat binary container (header + row-major designs + responses + noise
    diagonal) plus a JSON metadata sidecar next to it."""
    path = str(path)
    has_noise = p.noise_cov is not None
    header = _HEADER.pack(
        _MAGIC,
        1,
        1 if p.kind == "nonconvex" else 0,
        1 if has_noise else 0,
        p.dim,
        p.n,
        p.smoothness_L,
        p.lower_smoothness_l,
        p.rsc_sigma_hat,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(p.designs, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(p.responses, dtype="<f8").tobytes())
        if has_noise:
            fh.write(np.ascontiguousarray(p.noise_cov, dtype="<f8").tobytes())
    meta = {
        "d": p.dim,
        "n": p.n,
        "kind": p.kind,
        "constants": {
            "smoothness_L": p.smoothness_L,
            "lower_smoothness_l": p.lower_smoothness_l,
            "rsc_sigma_hat": p.rsc_sigma_hat,
        },
    }
    if sidecar:
        meta.update(sidecar)
    with open(_sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sidecar_path(path: str) -> str:
    return path[: -len(".bin")] + ".json" if path.endswith(".bin") else path + ".json"


def load_problem(path):
    """Inverse of save_problem; returns (Problem, sidecar dict or None)."""
    path = str(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size or blob[:12] != _MAGIC:
        raise ConfigError(f"{path}: not a projfree instance file")
    magic, version, kind_flag, has_noise, d, n, L, l, sigma_hat = _HEADER.unpack_from(
        blob
    )
    if version != 1:
        raise ConfigError(f"{path}: unsupported container version {version}")
    d2 = d * d
    offset = _HEADER.size
    expected = offset + 8 * (n * d2 + n + (d2 if has_noise else 0))
    if len(blob) != expected:
        raise ConfigError(f"{path}: truncated instance file")
    designs = np.frombuffer(blob, dtype="<f8", count=n * d2, offset=offset).reshape(
        n, d2
    )
    offset += 8 * n * d2
    responses = np.frombuffer(blob, dtype="<f8", count=n, offset=offset)
    offset += 8 * n
    noise = None
    if has_noise:
        noise = np.frombuffer(blob, dtype="<f8", count=d2, offset=offset)
    p = Problem(
        designs=designs.copy(),
        responses=responses.copy(),
        noise_cov=None if noise is None else noise.copy(),
        smoothness_L=L,
        lower_smoothness_l=l,
        rsc_sigma_hat=sigma_hat,
        kind="nonconvex" if kind_flag else "convex",
    )
    sidecar = None
    try:
        with open(_sidecar_path(path)) as fh:
            sidecar = json.load(fh)
    except FileNotFoundError:
        pass
    return p, sidecar


def genspec_to_dict(spec: GenSpec) -> dict:
    return asdict(spec)
