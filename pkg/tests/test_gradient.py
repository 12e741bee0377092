import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szolp.gradient import (NU_FLOOR, DegenerateMarginError, GradientEstimate,
                            estimate_gradients, nu_of_eps, nu_star, safety_margin)
from szolp.oracle import Problem, SampleLedger


def scalar(f, d):
    return Problem(d, lambda x: np.array([f(x)]), 0, L=1.0, M=1.0)


class TestEstimate:
    def test_affine_is_exact(self):
        c = np.array([1.5, -2.0, 0.25])
        est = estimate_gradients(scalar(lambda x: c @ x + 3.0, 3), [0.3, 0.1, -2.0], 0.37,
                                 SampleLedger())
        np.testing.assert_allclose(est.grad(0), c, rtol=0, atol=1e-12)

    def test_square_error_equals_bound(self):
        # (f(1.1) - f(1)) / 0.1 = 2.1; true 2, error M nu / 2 = 0.1
        est = estimate_gradients(scalar(lambda x: x[0] ** 2, 1), [1.0], 0.1, SampleLedger())
        assert est.grad(0)[0] == pytest.approx(2.1, abs=1e-12)
        assert GradientEstimate.error_bound(1, 2.0, 0.1) == pytest.approx(0.1)

    def test_bilinear(self):
        est = estimate_gradients(scalar(lambda x: x[0] * x[1], 2), [1.0, 1.0], 0.01,
                                 SampleLedger())
        np.testing.assert_allclose(est.grad(0), [1.0, 1.0], atol=1e-12)

    def test_sample_count_and_tags(self):
        led = SampleLedger()
        prob = Problem(4, lambda x: np.array([x.sum(), x[0] - 5, x[1] - 5]), 2, L=1.0, M=1.0)
        est = estimate_gradients(prob, np.zeros(4), 0.1, led, indices=[0, 2])
        assert len(led) == 5
        assert {r.purpose for r in led.records} == {"probe"}
        assert est.jacobian.shape == (3, 4)
        assert np.all(np.isnan(est.jacobian[1]))
        np.testing.assert_allclose(est.jacobian[2], [0, 1, 0, 0], atol=1e-12)
        np.testing.assert_array_equal(est.values, [0.0, -5.0, -5.0])

    @pytest.mark.parametrize("nu", [0.0, -1e-3])
    def test_nonpositive_step(self, nu):
        with pytest.raises(ValueError):
            estimate_gradients(scalar(lambda x: x[0], 1), [0.0], nu, SampleLedger())

    @settings(max_examples=60, deadline=None)
    @given(d=st.integers(1, 6), seed=st.integers(0, 2**32 - 1),
           log_nu=st.floats(-5, 0))
    def test_error_bound_on_quadratics(self, d, seed, log_nu):
        r = np.random.default_rng(seed)
        B = r.standard_normal((d, d))
        Q = B + B.T
        x = r.uniform(-3, 3, d)
        nu = 10.0 ** log_nu
        est = estimate_gradients(scalar(lambda z: 0.5 * z @ Q @ z, d), x, nu, SampleLedger())
        err = np.linalg.norm(est.grad(0) - Q @ x)
        bound = GradientEstimate.error_bound(d, np.linalg.norm(Q, 2), nu)
        assert err <= bound + 1e-9 / nu


class TestSchedules:
    def test_nu_of_eps_with_reference_constants(self):
        assert nu_of_eps(0.05, 11, 0.13) == pytest.approx(0.2319318, abs=1e-7)

    @pytest.mark.parametrize("d", [1, 4, 11])
    def test_nu_of_eps_inversion(self, d):
        assert nu_of_eps(0.13 * math.sqrt(d) / 2, d, 0.13) == pytest.approx(1.0)

    def test_margin(self):
        assert safety_margin([9.0, -0.2, -0.1], 0.5) == pytest.approx(0.2)
        assert safety_margin([0.0, -1.0], 1.0) == pytest.approx(1.0)
        assert safety_margin([3.0], 0.5) == math.inf

    def test_margin_needs_strict_feasibility(self):
        with pytest.raises(ValueError):
            safety_margin([0.0, -1.0, 0.0], 1.0)

    def test_nu_star_margin_branch(self):
        assert nu_star(10.0, 0.2, 4, 1.0) == pytest.approx(0.1)

    def test_nu_star_error_branch(self):
        assert nu_star(0.05, 1e9, 11, 0.13) == pytest.approx(0.2319318, abs=1e-7)

    def test_nu_star_tie(self):
        nu = nu_of_eps(0.05, 4, 0.5)
        assert nu_star(0.05, nu * 2.0, 4, 0.5) == pytest.approx(nu)

    def test_floor(self):
        with pytest.raises(DegenerateMarginError):
            nu_star(0.05, NU_FLOOR / 10, 1, 1.0)
