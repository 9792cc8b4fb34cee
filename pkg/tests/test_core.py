import numpy as np
import pytest

from entrydyn import (
    DomainError,
    ErevRothRatio,
    GameParams,
    LearningRule,
    Logistic,
    payoff,
    predicted_time_scales,
    update_propensity,
)

BASIC = LearningRule.BASIC_REINFORCEMENT
FICT = LearningRule.FICTITIOUS_STOCHASTIC


def make_params(n=1000, c=500, h=0.01, m=100, rule=BASIC):
    return GameParams(n, c, h, m, rule)


class TestGameParams:
    def test_derived_quantities(self):
        p = make_params()
        assert p.tau == 0.01
        assert p.kappa == 0.5
        assert p.r == 1000.0

    def test_capacity_bounds(self):
        with pytest.raises(ValueError, match="capacity"):
            make_params(c=0)
        with pytest.raises(ValueError, match="capacity"):
            make_params(c=1001)
        # c = N is the saturated edge; the single-agent enumeration cases need it
        assert make_params(n=1, c=1).kappa == 1.0

    def test_rejects_bad_scalars(self):
        with pytest.raises(ValueError):
            make_params(h=0.0)
        with pytest.raises(ValueError):
            make_params(h=-0.01)
        with pytest.raises(ValueError):
            make_params(m=0)
        with pytest.raises(ValueError):
            GameParams(10, 5, 0.1, 10, BASIC, outside_payoff=0.5)

    def test_rule_must_be_enum(self):
        with pytest.raises(TypeError):
            GameParams(10, 5, 0.1, 10, "basic_reinforcement")


class TestProbabilityModels:
    def test_logistic_center_value(self):
        assert Logistic(1.0, 0.0).prob(0.0) == 0.5

    def test_logistic_saturation(self):
        m = Logistic(1.0, 0.0)
        assert abs(m.prob(20.0) - 1.0) <= 1e-8
        assert m.prob(-20.0) <= 1e-8

    def test_logistic_derivative_identity(self):
        grid = np.linspace(-30, 30, 601)
        for s, q0 in [(1.0, 0.0), (0.5, 1.3), (2.0, -4.0)]:
            m = Logistic(s, q0)
            p = m.prob(grid)
            assert np.max(np.abs(m.dprob(grid) - p * (1 - p) / s)) <= 1e-12

    def test_ratio_model_values(self):
        m = ErevRothRatio(1.0)
        assert m.prob(1.0) == 0.5
        assert m.dprob(1.0) == pytest.approx(0.25, abs=1e-12)

    def test_ratio_model_rejects_negative(self):
        m = ErevRothRatio(1.0)
        with pytest.raises(DomainError):
            m.prob(-0.1)
        with pytest.raises(DomainError):
            m.dprob(np.array([0.5, -1e-9]))

    def test_ratio_derivative_matches_finite_difference(self):
        m = ErevRothRatio(0.7)
        q = np.linspace(0.1, 5.0, 50)
        eps = 1e-6
        fd = (m.prob(q + eps) - m.prob(q - eps)) / (2 * eps)
        assert np.max(np.abs(m.dprob(q) - fd)) <= 1e-7

    @pytest.mark.parametrize(
        "model", [Logistic(1.0, 0.0), Logistic(0.3, 2.0), ErevRothRatio(1.5)]
    )
    def test_strictly_increasing(self, model):
        if isinstance(model, ErevRothRatio):
            grid = np.linspace(0.0, 20.0, 500)
        else:
            # stay out of the saturated tails where float p hits exactly 1
            grid = model.center + model.scale * np.linspace(-8.0, 8.0, 500)
        p = model.prob(grid)
        assert np.all(np.diff(p) > 0)
        assert np.all(p >= 0) and np.all(p <= 1)


class TestPayoff:
    def test_outsider_gets_nothing(self):
        p = make_params(n=20, c=10)
        for m in range(21):
            assert payoff(False, m, p) == 0.0

    def test_entrant_at_capacity(self):
        p = make_params(n=20, c=10)
        assert payoff(True, 10, p) == 0.0

    def test_overcrowded_entrant(self):
        p = make_params(n=20, c=10, h=0.01)
        assert payoff(True, 12, p) == pytest.approx(-0.02, abs=1e-15)

    def test_entrant_count_range(self):
        p = make_params(n=20, c=10)
        with pytest.raises(ValueError):
            payoff(True, -1, p)
        with pytest.raises(ValueError):
            payoff(False, 21, p)
        # an entrant is part of the count, so m = 0 is inconsistent
        with pytest.raises(ValueError):
            payoff(True, 0, p)


class TestUpdatePropensity:
    def test_basic_entrant(self):
        p = make_params(n=20, c=10, h=0.01)
        assert update_propensity(0.5, True, 12, p) == pytest.approx(0.48, abs=1e-15)

    def test_basic_outsider_frozen(self):
        p = make_params(n=20, c=10, h=0.01)
        for m in range(21):
            assert update_propensity(0.5, False, m, p) == 0.5

    def test_fictitious_outsider_at_near_capacity(self):
        p = make_params(n=20, c=10, h=0.01, rule=FICT)
        assert update_propensity(0.5, False, 9, p) == pytest.approx(0.5, abs=1e-15)

    def test_mesh_preservation(self):
        # increments are h * integer, so lattice points map to lattice points
        rng = np.random.default_rng(5)
        for rule in (BASIC, FICT):
            p = make_params(n=20, c=10, h=0.01, rule=rule)
            q_off = 0.137
            for _ in range(100):
                k = int(rng.integers(-50, 50))
                q = q_off + k * p.payoff_scale
                entered = bool(rng.integers(2))
                m = int(rng.integers(1 if entered else 0, 21))
                q_next = update_propensity(q, entered, m, p)
                steps = (q_next - q_off) / p.payoff_scale
                assert abs(steps - round(steps)) <= 1e-9

    def test_basic_update_equals_payoff(self):
        p = make_params(n=20, c=10, h=0.01)
        for entered in (False, True):
            for m in range(1 if entered else 0, 21):
                gain = update_propensity(1.2, entered, m, p) - 1.2
                assert gain == pytest.approx(payoff(entered, m, p), abs=1e-15)


class TestPredictedTimeScales:
    def test_acceptance_parameters(self):
        ts = predicted_time_scales(make_params())
        assert ts.aggregate_learning == pytest.approx(0.001, rel=1e-12)
        assert ts.sorting == pytest.approx(0.2, rel=1e-12)

    def test_second_parameter_set(self):
        p = make_params(n=100, c=50, h=0.1, m=10)
        assert p.r == 100.0
        ts = predicted_time_scales(p)
        assert ts.aggregate_learning == pytest.approx(0.01, rel=1e-12)
        assert ts.sorting == pytest.approx(0.2, rel=1e-12)

    def test_ratio_is_two_over_h(self):
        for n, c, h, m in [(1000, 500, 0.01, 100), (64, 16, 0.5, 7), (10, 3, 1.5, 2)]:
            p = make_params(n=n, c=c, h=h, m=m)
            ts = predicted_time_scales(p)
            assert ts.sorting / ts.aggregate_learning == pytest.approx(2.0 / h, rel=1e-12)
            if h < 2.0:
                assert ts.sorting > ts.aggregate_learning
