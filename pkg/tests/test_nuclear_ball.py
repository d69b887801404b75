import numpy as np
import pytest
from numpy.testing import assert_allclose

from projfree import CostLedger, NuclearBall
from projfree.errors import PowerIterationError
from projfree.nuclear_ball import (
    contains,
    l1_ball_project,
    linear_oracle,
    nuclear_norm,
    project,
    wolfe_gap,
)

from oracles import (
    jacobi_nuclear_norm,
    jacobi_sigma_max,
    jacobi_singular_values,
    jacobi_svd,
    l1_project_bisection,
    oracle_wolfe_gap,
    random_in_ball,
)


def test_jacobi_oracle_self_check():
    # the oracle itself on a hand-computable case
    A = np.diag([3.0, 1.0, 2.0])
    assert_allclose(jacobi_singular_values(A), [3.0, 2.0, 1.0], atol=1e-12)
    U, s, V = jacobi_svd(np.random.default_rng(0).standard_normal((5, 5)))
    assert_allclose(U @ np.diag(s) @ V.T, U @ np.diag(s) @ V.T, atol=0)
    assert_allclose(U.T @ U, np.eye(5), atol=1e-10)
    assert_allclose(V.T @ V, np.eye(5), atol=1e-10)


class TestLinearOracle:
    def test_diagonal(self):
        ball = NuclearBall(radius=1.0, dim=2)
        led = CostLedger()
        S = linear_oracle(ball, np.diag([2.0, 1.0]), led)
        # entries converge at the square root of the Rayleigh tolerance; the
        # oracle objective is the tight contract
        assert_allclose(S, [[-1.0, 0.0], [0.0, 0.0]], atol=1e-4)
        assert float(np.vdot(np.diag([2.0, 1.0]), S)) == pytest.approx(-2.0, abs=1e-9)
        assert led.lo_calls == 1

    def test_zero_gradient(self):
        ball = NuclearBall(radius=5.0, dim=3)
        led = CostLedger()
        S = linear_oracle(ball, np.zeros((3, 3)), led)
        assert np.array_equal(S, np.zeros((3, 3)))
        assert led.lo_calls == 1

    def test_matches_full_svd_and_dominates(self):
        rng = np.random.default_rng(12)
        ball = NuclearBall(radius=3.0, dim=20)
        led = CostLedger()
        for _ in range(20):
            G = rng.standard_normal((20, 20))
            S = linear_oracle(ball, G, led, rng=rng)
            obj = float(np.vdot(G, S))
            smax = jacobi_sigma_max(G)
            assert abs(obj + 3.0 * smax) <= 1e-8 * 3.0 * smax
            for _ in range(50):
                X = random_in_ball(rng, 20, 3.0)
                assert obj <= float(np.vdot(G, X)) + 1e-9 * 3.0 * smax

    def test_output_is_extreme_point(self):
        rng = np.random.default_rng(13)
        ball = NuclearBall(radius=2.5, dim=8)
        for _ in range(10):
            S = linear_oracle(ball, rng.standard_normal((8, 8)), CostLedger(), rng=rng)
            s = jacobi_singular_values(S)
            assert s[0] == pytest.approx(2.5, rel=1e-12)
            assert s[1] <= 1e-10 * s[0]  # rank 1
            assert jacobi_nuclear_norm(S) == pytest.approx(2.5, rel=1e-10)

    def test_nonconvergence_error(self):
        ball = NuclearBall(radius=1.0, dim=6, power_iter_tol=0.0, power_iter_max=3)
        rng = np.random.default_rng(14)
        G = np.diag([2.0, 1.0, 0.5, 0.4, 0.3, 0.2])
        with pytest.raises(PowerIterationError) as err:
            linear_oracle(ball, G, CostLedger(), rng=rng)
        assert err.value.residual is not None


class TestL1BallProject:
    def test_examples(self):
        assert_allclose(l1_ball_project(np.array([3.0, 1.0]), 2.0), [2.0, 0.0])
        assert_allclose(l1_ball_project(np.array([0.5, 0.5]), 2.0), [0.5, 0.5])
        assert_allclose(l1_ball_project(np.array([1.0, 1.0, 1.0]), 1.5), [0.5] * 3)

    def test_against_bisection_oracle(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            v = np.abs(rng.standard_normal(rng.integers(1, 12)))
            z = float(rng.uniform(0.1, 3.0))
            assert_allclose(l1_ball_project(v, z), l1_project_bisection(v, z), atol=1e-10)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            l1_ball_project(np.array([1.0]), 0.0)
        with pytest.raises(ValueError):
            l1_ball_project(np.array([-1.0]), 1.0)


class TestProject:
    def test_diagonal_water_filling(self):
        # bisection oracle on (3, 1) at z=2 gives threshold 1 -> (2, 0)
        assert_allclose(l1_project_bisection(np.array([3.0, 1.0]), 2.0), [2.0, 0.0], atol=1e-12)
        ball = NuclearBall(radius=2.0, dim=2)
        led = CostLedger()
        P = project(ball, np.diag([3.0, 1.0]), led)
        assert_allclose(P, np.diag([2.0, 0.0]), atol=1e-12)
        assert led.projection_calls == 1

    def test_interior_point_unchanged(self):
        ball = NuclearBall(radius=2.0, dim=2)
        X = 0.5 * np.eye(2)
        P = project(ball, X, CostLedger())
        assert np.array_equal(P, X)

    def test_variational_inequality(self):
        rng = np.random.default_rng(16)
        ball = NuclearBall(radius=2.0, dim=10)
        for _ in range(5):
            X = 3.0 * rng.standard_normal((10, 10))
            P = project(ball, X, CostLedger())
            assert nuclear_norm(P) <= 2.0 + 1e-9
            scale = max(1.0, float(np.linalg.norm(X)))
            for _ in range(200):
                Y = random_in_ball(rng, 10, 2.0)
                assert float(np.vdot(X - P, Y - P)) <= 1e-8 * scale

    def test_idempotent(self):
        rng = np.random.default_rng(17)
        ball = NuclearBall(radius=1.5, dim=7)
        X = rng.standard_normal((7, 7))
        P1 = project(ball, X, CostLedger())
        P2 = project(ball, P1, CostLedger())
        assert np.linalg.norm(P1 - P2) <= 1e-10


class TestWolfeGap:
    def test_zero_gradient(self):
        ball = NuclearBall(radius=1.0, dim=3)
        gap, atom = wolfe_gap(ball, np.zeros((3, 3)), np.eye(3) / 3, CostLedger())
        assert gap == 0.0
        assert np.array_equal(atom, np.zeros((3, 3)))

    def test_zero_at_oracle_point(self):
        rng = np.random.default_rng(18)
        ball = NuclearBall(radius=2.0, dim=6)
        G = rng.standard_normal((6, 6))
        atom = linear_oracle(ball, G, CostLedger(), rng=rng)
        gap, _ = wolfe_gap(ball, G, atom, CostLedger(), rng=rng)
        assert abs(gap) <= 1e-7 * 2.0 * jacobi_sigma_max(G)

    def test_matches_full_svd_oracle(self):
        rng = np.random.default_rng(19)
        ball = NuclearBall(radius=1.7, dim=15)
        for _ in range(20):
            G = rng.standard_normal((15, 15))
            x = random_in_ball(rng, 15, 1.7)
            led = CostLedger()
            gap, _ = wolfe_gap(ball, G, x, led, rng=rng)
            expected = oracle_wolfe_gap(G, x, 1.7)
            assert abs(gap - expected) <= 1e-7 * max(1.0, abs(expected))
            assert led.lo_calls == 1

    def test_nonnegative_on_feasible_points(self):
        rng = np.random.default_rng(20)
        ball = NuclearBall(radius=1.0, dim=8)
        for _ in range(50):
            G = rng.standard_normal((8, 8))
            x = random_in_ball(rng, 8, 1.0)
            gap, _ = wolfe_gap(ball, G, x, CostLedger(), rng=rng)
            assert gap >= -1e-9


def test_frobenius_below_nuclear():
    rng = np.random.default_rng(21)
    for _ in range(50):
        X = rng.standard_normal((6, 6))
        assert np.linalg.norm(X) <= nuclear_norm(X) * (1 + 1e-12)


def test_contains_and_diameter():
    ball = NuclearBall(radius=2.0, dim=4)
    assert ball.diameter == 4.0
    assert contains(ball, np.zeros((4, 4)))
    assert not contains(ball, np.eye(4))  # nuclear norm 4 > 2
