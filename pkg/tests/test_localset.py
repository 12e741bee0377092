import math

import numpy as np
import pytest

from szolp.gradient import DegenerateMarginError
from szolp.localset import LocalFeasibleSet, build_local_set, contains, max_step
from szolp.oracle import Problem, SampleLedger
from szolp.problems import random_qp


def ball_set(center=(0.0, 0.0), f=-1.0, g=(0.0, 0.0), M=2.0):
    return LocalFeasibleSet(np.array(center), np.array([f]), np.array([g]), np.array([M]))


class TestMembership:
    def test_center(self):
        assert contains(ball_set(), [0.0, 0.0])

    def test_closed_form_radius(self):
        # -1 + 2 * 2 r^2 <= 0  <=>  r <= 0.5
        s = ball_set()
        assert contains(s, [0.5, 0.0])
        assert not contains(s, [0.5 + 1e-9, 0.0])
        assert contains(s, [0.3, 0.4])

    def test_tiny_M_gives_large_ball(self):
        s = ball_set(M=1e-8)
        assert contains(s, [1000.0, 0.0])

    def test_intersection(self):
        s = LocalFeasibleSet(np.zeros(2), np.array([-1.0, -1.0]),
                             np.array([[0.0, 0.0], [4.0, 0.0]]), np.array([2.0, 2.0]))
        # first piece alone allows x = (0.4, 0); the second does not
        assert ball_set().contains([0.4, 0.0])
        assert not s.contains([0.4, 0.0])
        assert s.contains([-0.4, 0.0])


class TestMaxStep:
    def test_flat_gradient(self):
        assert max_step(ball_set(), np.array([1.0, 0.0])) == pytest.approx(0.5)

    def test_descending_gradient(self):
        # 4 b^2 - b - 1 = 0  ->  b = (1 + sqrt 17) / 8
        s = ball_set(g=(-1.0, 0.0))
        beta = max_step(s, np.array([1.0, 0.0]))
        assert beta == pytest.approx((1 + math.sqrt(17)) / 8, rel=1e-14)
        assert beta == pytest.approx(0.640388, abs=1e-6)

    def test_ascending_gradient_uses_stable_root(self):
        # 4 b^2 + 1e8 b - 1 = 0 has root ~1e-8; the naive formula cancels
        s = ball_set(g=(1e8, 0.0))
        beta = max_step(s, np.array([1.0, 0.0]))
        assert beta == pytest.approx(2.0 / (1e8 + math.sqrt(1e16 + 16)), rel=1e-12)

    def test_minimum_over_constraints(self):
        # radii 0.5 and 0.3 along e1: f = -1 (M=2) and f = -0.36 (M=2)
        s = LocalFeasibleSet(np.zeros(1), np.array([-1.0, -0.36]), np.zeros((2, 1)),
                             np.array([2.0, 2.0]))
        assert max_step(s, np.array([1.0])) == pytest.approx(0.3)

    def test_unconstrained(self):
        s = LocalFeasibleSet(np.zeros(2), np.zeros(0), np.zeros((0, 2)), np.zeros(0))
        assert max_step(s, np.array([1.0, 0.0])) == math.inf

    def test_zero_direction(self):
        with pytest.raises(ValueError):
            max_step(ball_set(), np.zeros(2))

    def test_boundary_point_is_member(self):
        s = ball_set(g=(-1.0, 0.5))
        d = np.array([0.6, -0.4])
        beta = max_step(s, d)
        assert s.contains(beta * d * (1 - 1e-12))
        assert not s.contains(beta * d * (1 + 1e-9))

    def test_bisection_agrees(self, rng):
        for _ in range(50):
            m, d = rng.integers(1, 6), rng.integers(1, 5)
            s = LocalFeasibleSet(rng.standard_normal(d), -rng.uniform(0.1, 2, m),
                                 rng.standard_normal((m, d)), rng.uniform(0.1, 3, m))
            v = rng.standard_normal(d)
            assert max_step(s, v, bisection=True) == pytest.approx(max_step(s, v), abs=1e-9)


class TestBuild:
    def test_sampled_set_is_inner_approximation(self, rng):
        for _ in range(20):
            prob = random_qp(rng)
            lset = build_local_set(prob, prob.x0, 0.05, SampleLedger())
            for _ in range(5):
                v = rng.standard_normal(prob.dimension)
                v /= np.abs(v).sum()
                beta = max_step(lset, v)
                assert np.all(prob.evaluator(prob.x0 + beta * v)[1:] < 0)

    def test_samples_d_plus_one(self):
        prob = random_qp(np.random.default_rng(0), d=3, m=2)
        led = SampleLedger()
        build_local_set(prob, prob.x0, 0.05, led, center_values=prob.evaluator(prob.x0))
        assert len(led) == 4

    def test_degenerate_margin(self):
        prob = Problem(1, lambda x: np.array([x[0], x[0] - 1.0]), 1, L=1.0, M=1.0)
        with pytest.raises(DegenerateMarginError):
            build_local_set(prob, np.array([1.0 - 1e-14]), 0.05, SampleLedger())
