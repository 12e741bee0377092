import numpy as np
import pytest

from szolp.oracle import OracleError, SampleLedger, evaluate, is_strictly_feasible
from szolp.powerflow import OpfDecision, constraint_layout, opf_problem, solve_power_flow
from szolp.gradient import safety_margin

from test_powerflow import two_bus


class TestLayout:
    def test_case30_dimensions(self, opf30):
        assert opf30.dimension == 11
        # 6 generators x 2 P bounds, 30 buses x 2 U bounds, 41 rated branches
        assert opf30.n_constraints == 12 + 60 + 41
        assert len(opf30.constraint_names) == opf30.n_constraints

    def test_reactive_limits_optional(self, case30):
        p = opf_problem(case30, q_limits=True)
        assert p.n_constraints == 113 + 12
        assert constraint_layout(case30, True)[-2:] == ["Qg13_max", "Qg13_min"]

    def test_two_bus_toy(self):
        assert opf_problem(two_bus()).dimension == 1
        assert opf_problem(two_bus()).n_constraints == 2 + 4
        assert opf_problem(two_bus(rate=100.0)).n_constraints == 2 + 4 + 1

    def test_names(self, case30):
        names = constraint_layout(case30)
        assert names[:4] == ["Pg1_max", "Pg1_min", "Pg2_max", "Pg2_min"]
        assert "V30_min" in names and "I1-2_max" in names


class TestDecision:
    def test_round_trip(self, case30):
        dec = OpfDecision.from_case(case30)
        x = dec.to_vector(case30.base_mva)
        np.testing.assert_allclose(x, [60, 40, 30, 25, 30, 106, 104, 102, 101, 102, 101])
        back = OpfDecision.from_vector(x, case30.n_gen, case30.base_mva)
        np.testing.assert_allclose(back.p_gen, dec.p_gen)
        np.testing.assert_allclose(back.v_set, dec.v_set)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            OpfDecision.from_vector(np.zeros(3), 6, 100.0)


class TestEvaluator:
    def test_start_is_strictly_feasible(self, opf30):
        v = opf30.evaluator(opf30.x0)
        assert is_strictly_feasible(v)
        assert safety_margin(v, 0.5) > 0

    def test_objective_uses_solved_slack(self, case30, opf30):
        x = opf30.x0
        sol = solve_power_flow(case30, case30.Pg[1:], case30.Vg)
        pg = np.concatenate([[sol.slack_p * 100.0], case30.Pg[1:]])
        c = case30.cost
        expected = float(np.sum(c[:, 0] * pg ** 2 + c[:, 1] * pg + c[:, 2]))
        assert opf30.evaluator(x)[0] == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(863.965, abs=1e-3)

    def test_constraint_values_in_scaled_units(self, case30, opf30):
        names = opf30.constraint_names
        v = opf30.evaluator(opf30.x0)[1:]
        # generator 2 runs at 60 MW against an 80 MW maximum
        assert v[names.index("Pg2_max")] == pytest.approx(-20.0)
        # bus 1 is held at 1.06 p.u. with a 1.10 p.u. ceiling: -4 percent
        assert v[names.index("V1_max")] == pytest.approx(-4.0)
        unscaled = opf_problem(case30, scale=1.0)
        np.testing.assert_allclose(unscaled.evaluator(unscaled.x0)[1:], v / 100.0, atol=1e-12)

    def test_divergence_is_an_oracle_error(self, opf30):
        x = opf30.x0.copy()
        x[5:] = 20.0  # 0.2 p.u. voltage set-points
        with pytest.raises(OracleError):
            evaluate(opf30, x, "probe", SampleLedger())

    def test_scale_must_be_positive(self, case30):
        with pytest.raises(ValueError):
            opf_problem(case30, scale=0.0)
