"""Shared fixtures: desk-scale instances and their certified references.

The heavy runs (d=30 instances used by several acceptance criteria) are
session-scoped so each is generated and solved once.
"""

import time
from dataclasses import dataclass

import numpy as np
import pytest

from projfree import (
    CgsConfig,
    CostLedger,
    GenSpec,
    NuclearBall,
    TraceContext,
    compute_reference,
    run_cgs,
)
from projfree.cgs import default_delta0
from projfree.experiment import make_instance


@dataclass
class Instance:
    gen: GenSpec
    truth: object
    problem: object
    ball: NuclearBall
    ref: object

    @property
    def ctx(self):
        return TraceContext(
            theta_ref=self.ref.theta,
            f_ref=self.ref.f_value,
            theta_star=self.truth.theta_star,
        )


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("refcache")


def _make(gen, seed, tol, cache_dir):
    truth, problem = make_instance(gen, seed)
    ball = NuclearBall(radius=gen.rho, dim=gen.d)
    ref = compute_reference(problem, ball, tol, cache_dir=cache_dir)
    return Instance(gen=gen, truth=truth, problem=problem, ball=ball, ref=ref)


@pytest.fixture(scope="session")
def crit3_convex(cache_dir):
    gen = GenSpec(
        d=30, r=2, alpha=10, L=10.0, sigma_hat=1.0, rho=50.0, seed=1, label_noise_std=3.0
    )
    return _make(gen, 1, 1e-10, cache_dir)


@pytest.fixture(scope="session")
def crit3_nonconvex(cache_dir):
    gen = GenSpec(
        d=30,
        r=2,
        alpha=10,
        L=10.0,
        sigma_hat=1.0,
        rho=50.0,
        seed=1,
        label_noise_std=3.0,
        w_scale=0.1,
    )
    return _make(gen, 1, 1e-10, cache_dir)


@pytest.fixture(scope="session")
def crit5_convex(cache_dir):
    gen = GenSpec(d=30, r=2, alpha=100, L=10.0, sigma_hat=1.0, rho=50.0, seed=3)
    return _make(gen, 3, 1e-10, cache_dir)


@pytest.fixture(scope="session")
def tiny_convex(cache_dir):
    gen = GenSpec(d=6, r=2, alpha=4, L=2.0, sigma_hat=1.0, rho=8.0, seed=11)
    return _make(gen, 11, 1e-11, cache_dir)


@dataclass
class CgsRun:
    cfg: CgsConfig
    ledger: CostLedger
    trace: list
    theta: np.ndarray
    iterates: list
    delta0: float
    runtime_s: float
    gaps: list


def _cgs_run(inst, outer_iters, seed):
    theta0 = np.zeros((inst.gen.d, inst.gen.d))
    d0 = default_delta0(inst.problem, theta0, inst.gen.rho)
    cfg = CgsConfig(
        L=inst.problem.smoothness_L,
        sigma_hat=inst.problem.rsc_sigma_hat,
        delta0=d0,
        outer_iters=outer_iters,
        rho=inst.gen.rho,
        theta0=theta0,
        seed=seed,
    )
    ledger = CostLedger()
    iterates = []
    started = time.perf_counter()
    theta, trace = run_cgs(
        inst.problem,
        inst.ball,
        cfg,
        ledger,
        trace_ctx=inst.ctx,
        epoch_callback=lambda t, th: iterates.append(th.copy()),
    )
    runtime = time.perf_counter() - started
    return CgsRun(
        cfg=cfg,
        ledger=ledger,
        trace=trace,
        theta=theta,
        iterates=iterates,
        delta0=d0,
        runtime_s=runtime,
        gaps=[r.gap_to_ref for r in trace],
    )


@pytest.fixture(scope="session")
def crit3_convex_run(crit3_convex):
    return _cgs_run(crit3_convex, outer_iters=10, seed=1)


@pytest.fixture(scope="session")
def crit3_nonconvex_run(crit3_nonconvex):
    return _cgs_run(crit3_nonconvex, outer_iters=10, seed=1)
