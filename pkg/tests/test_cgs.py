import math

import numpy as np
import pytest

from projfree import CgsConfig, CostLedger, NuclearBall, run_cgs
from projfree.cgs import default_delta0, inner_iters, schedule
from projfree.errors import SolverError
from projfree.experiment import make_instance
from projfree.matreg import GenSpec
from projfree.model import objective_value
from projfree.nuclear_ball import nuclear_norm


def base_cfg(**overrides):
    kw = dict(
        L=1.0,
        sigma_hat=1.0,
        delta0=1.0,
        outer_iters=1,
        rho=1.0,
        theta0=np.zeros((2, 2)),
        seed=0,
    )
    kw.update(overrides)
    return CgsConfig(**kw)


class TestSchedule:
    def test_unit_condition_number(self):
        cfg = base_cfg()
        assert inner_iters(cfg) == 8
        n_t, gamma, beta, eta = schedule(cfg, t=1, k=1)
        assert n_t == 8
        assert gamma == 1.0  # 2/(1+1)
        assert beta == 3.0
        assert eta == pytest.approx(0.5)  # 8*1*1*(1/2)/(1*8*1)

    def test_eta_scales(self):
        cfg = base_cfg(L=4.0, sigma_hat=1.0, delta0=2.0)
        n_t = inner_iters(cfg)
        assert n_t == 16
        for t in (1, 3):
            for k in (1, 5):
                _, gamma, beta, eta = schedule(cfg, t, k)
                assert gamma == 2.0 / (k + 1)
                assert beta == 3.0 * 4.0 / k
                assert eta == pytest.approx(8.0 * 4.0 * 2.0 * 2.0**-t / (1.0 * n_t * k))

    def test_ceil_rounding(self):
        assert inner_iters(base_cfg(L=10.0, sigma_hat=0.5)) == math.ceil(8 * math.sqrt(20))


class TestRunCgs:
    def test_start_at_reference_optimum_stays(self, tiny_convex):
        inst = tiny_convex
        cfg = CgsConfig(
            L=inst.problem.smoothness_L,
            sigma_hat=inst.problem.rsc_sigma_hat,
            delta0=1e-8,
            outer_iters=4,
            rho=inst.gen.rho,
            theta0=inst.ref.theta,
            seed=0,
        )
        _, trace = run_cgs(inst.problem, inst.ball, cfg, CostLedger(), trace_ctx=inst.ctx)
        f_prev = objective_value(inst.problem, inst.ref.theta)
        for rec in trace:
            assert rec.f_value - inst.ref.f_value <= 1e-8
            assert rec.f_value <= f_prev + 1e-12 * max(1.0, abs(f_prev))
            f_prev = rec.f_value

    def test_counter_law_exact(self):
        gen = GenSpec(d=8, r=2, alpha=3, L=4.0, sigma_hat=1.0, rho=6.0, seed=2)
        _, p = make_instance(gen, 2)
        ball = NuclearBall(radius=6.0, dim=8)
        theta0 = np.zeros((8, 8))
        cfg = CgsConfig(
            L=p.smoothness_L,
            sigma_hat=p.rsc_sigma_hat,
            delta0=default_delta0(p, theta0, 6.0),
            outer_iters=3,
            rho=6.0,
            theta0=theta0,
            seed=2,
        )
        led = CostLedger()
        run_cgs(p, ball, cfg, led)
        n_t = inner_iters(cfg)
        assert led.component_grad_evals == p.n * 3 * n_t
        assert led.full_grad_passes == 3 * n_t
        assert led.projection_calls == 0
        assert led.lo_calls >= 3 * n_t  # at least the exit check per subproblem

    def test_determinism(self):
        gen = GenSpec(d=6, r=1, alpha=4, L=3.0, sigma_hat=1.0, rho=4.0, seed=3)
        _, p = make_instance(gen, 3)
        ball = NuclearBall(radius=4.0, dim=6)
        theta0 = np.zeros((6, 6))
        cfg = CgsConfig(
            L=p.smoothness_L,
            sigma_hat=p.rsc_sigma_hat,
            delta0=default_delta0(p, theta0, 4.0),
            outer_iters=3,
            rho=4.0,
            theta0=theta0,
            seed=7,
        )
        t1, tr1 = run_cgs(p, ball, cfg, CostLedger())
        t2, tr2 = run_cgs(p, ball, cfg, CostLedger())
        assert np.array_equal(t1, t2)
        assert [r.f_value for r in tr1] == [r.f_value for r in tr2]

    def test_final_iterate_feasible_and_decays(self, crit3_convex_run, crit3_convex):
        run = crit3_convex_run
        assert nuclear_norm(run.theta) <= crit3_convex.gen.rho * (1 + 1e-9)
        for theta in run.iterates:
            assert nuclear_norm(theta) <= crit3_convex.gen.rho * (1 + 1e-9)
        gaps = [run.delta0] + run.gaps
        ratios = [gaps[i] / gaps[i - 1] for i in range(1, len(gaps))]
        assert all(r <= 0.75 for r in ratios)

    def test_max_inner_gap_bounded_by_largest_eta(self, crit3_convex_run):
        cfg = crit3_convex_run.cfg
        for rec in crit3_convex_run.trace:
            biggest_eta = schedule(cfg, rec.outer_t, 1)[3]
            assert rec.max_inner_gap <= biggest_eta

    def test_distance_bound_via_pseudo_strong_convexity(self, crit3_convex_run):
        # ||theta_t - theta_ref||^2 <= 2 gap_t / sigma_hat + 2 * (distance
        # plateau), the curvature consequence that drives the outer recursion
        run = crit3_convex_run
        sigma_hat = run.cfg.sigma_hat
        floor = min(r.dist_to_ref_F for r in run.trace) ** 2
        for rec in run.trace:
            bound = 2.0 * rec.gap_to_ref / sigma_hat + 2.0 * floor
            assert rec.dist_to_ref_F**2 <= bound * (1 + 1e-9)

    def test_trace_record_invariants(self, crit3_convex_run, crit3_convex):
        trace = crit3_convex_run.trace
        cum_fields = (
            "cum_component_grads",
            "cum_full_grads",
            "cum_lo_calls",
            "cum_projections",
            "wall_ms",
        )
        for a, b in zip(trace, trace[1:]):
            for field in cum_fields:
                assert getattr(b, field) >= getattr(a, field)
        for rec in trace:
            assert rec.gap_to_ref >= -crit3_convex.ref.gap - 1e-12

    def test_infeasible_start_rejected(self):
        gen = GenSpec(d=4, r=1, alpha=2, L=2.0, sigma_hat=1.0, rho=1.0, seed=4)
        _, p = make_instance(gen, 4)
        ball = NuclearBall(radius=1.0, dim=4)
        cfg = base_cfg(
            L=p.smoothness_L,
            sigma_hat=p.rsc_sigma_hat,
            theta0=np.eye(4),  # nuclear norm 4 > rho = 1
            rho=1.0,
        )
        with pytest.raises(SolverError):
            run_cgs(p, ball, cfg, CostLedger())

    def test_gap_tol_early_stop(self):
        gen = GenSpec(d=5, r=1, alpha=4, L=2.0, sigma_hat=1.0, rho=3.0, seed=5)
        _, p = make_instance(gen, 5)
        ball = NuclearBall(radius=3.0, dim=5)
        theta0 = np.zeros((5, 5))
        cfg = CgsConfig(
            L=p.smoothness_L,
            sigma_hat=p.rsc_sigma_hat,
            delta0=default_delta0(p, theta0, 3.0),
            outer_iters=10,
            rho=3.0,
            theta0=theta0,
            seed=5,
            gap_tol=1e9,  # satisfied immediately after the first epoch
        )
        led = CostLedger()
        _, trace = run_cgs(p, ball, cfg, led)
        assert len(trace) == 1
        n_t = inner_iters(cfg)
        # the early-stop check costs one extra full gradient
        assert led.full_grad_passes == n_t + 1

    def test_config_validation(self):
        with pytest.raises(ValueError):
            base_cfg(L=1.0, sigma_hat=2.0)
        with pytest.raises(ValueError):
            base_cfg(delta0=0.0)
        with pytest.raises(ValueError):
            base_cfg(outer_iters=0)
