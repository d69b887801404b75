"""Independent verification oracles used by the tests.

These deliberately avoid the code paths they are used to check: the SVD here
is a hand-rolled one-sided Jacobi (not LAPACK, not power iteration), the
l1-ball projection is bisection water-filling (not the sort-based rule), and
gradients are checked against central finite differences.
"""

import numpy as np

_TINY = np.finfo(float).tiny


def finite_difference_gradient(f, theta, h=1e-5):
    """Central differences of a scalar function of a matrix."""
    g = np.zeros_like(theta, dtype=float)
    it = np.nditer(theta, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        tp = theta.copy()
        tp[idx] += h
        tm = theta.copy()
        tm[idx] -= h
        g[idx] = (f(tp) - f(tm)) / (2.0 * h)
    return g


def jacobi_svd(A, max_sweeps=60, tol=1e-14):
    """One-sided Jacobi SVD: A = U diag(s) V'. Returns (U, s, V), s descending."""
    U = np.array(A, dtype=float, copy=True)
    n = U.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                ui = U[:, i].copy()
                uj = U[:, j].copy()
                a = float(ui @ ui)
                b = float(uj @ uj)
                c = float(ui @ uj)
                denom = max(np.sqrt(a * b), _TINY)
                off = max(off, abs(c) / denom)
                if abs(c) <= tol * denom:
                    continue
                zeta = (b - a) / (2.0 * c)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta == 0.0:
                    t = 1.0
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                U[:, i] = cs * ui - sn * uj
                U[:, j] = sn * ui + cs * uj
                vi = V[:, i].copy()
                vj = V[:, j].copy()
                V[:, i] = cs * vi - sn * vj
                V[:, j] = sn * vi + cs * vj
        if off <= tol:
            break
    s = np.sqrt(np.sum(U * U, axis=0))
    order = np.argsort(s)[::-1]
    s = s[order]
    U = U[:, order]
    V = V[:, order]
    with np.errstate(invalid="ignore", divide="ignore"):
        U = np.where(s > _TINY, U / np.where(s > _TINY, s, 1.0), 0.0)
    return U, s, V


def jacobi_singular_values(A):
    return jacobi_svd(A)[1]


def jacobi_sigma_max(A):
    return float(jacobi_singular_values(A)[0])


def jacobi_nuclear_norm(A):
    return float(jacobi_singular_values(A).sum())


def l1_project_bisection(v, z, iters=200):
    """Water-filling by bisection on the threshold (oracle for the sort rule)."""
    v = np.asarray(v, dtype=float)
    if float(v.sum()) <= z:
        return v.copy()
    lo, hi = 0.0, float(v.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if float(np.maximum(v - mid, 0.0).sum()) > z:
            lo = mid
        else:
            hi = mid
    return np.maximum(v - 0.5 * (lo + hi), 0.0)


def oracle_project_nuclear(X, rho):
    """Projection onto the nuclear ball via the Jacobi SVD + bisection route."""
    U, s, V = jacobi_svd(X)
    if float(s.sum()) <= rho:
        return np.array(X, dtype=float, copy=True)
    return (U * l1_project_bisection(s, rho)) @ V.T


def oracle_wolfe_gap(grad, x, rho):
    """<grad, x> - min over the ball of <grad, s>, via the Jacobi sigma_max."""
    return float(np.vdot(grad, x)) + rho * jacobi_sigma_max(grad)


def random_in_ball(rng, d, rho, svd=np.linalg.svd):
    """Random feasible point (Gaussian direction, uniform radius fraction)."""
    A = rng.standard_normal((d, d))
    nuc = float(svd(A, compute_uv=False).sum())
    return A * (rho * rng.uniform() / nuc)
