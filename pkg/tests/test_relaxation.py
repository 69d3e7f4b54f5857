"""Fractional relaxation: exact envelope, L1 marcher, comparison principle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfcx

from subdiff.kernels import TimeGrid, default_grading, l1_weights
from subdiff.relaxation import (
    comparison_check,
    random_subsolution,
    relaxation_solution,
    solve_relaxation_l1,
)

EPS = float(np.finfo(float).eps)


class TestRelaxationSolution:
    def test_half_order_closed_form(self):
        # V(t) = V0 E_{1/2}(-mu sqrt(t)) = V0 erfcx(mu sqrt(t))
        t = np.linspace(0.0, 20.0, 200)
        got = relaxation_solution(0.5, 2.0, 3.0, t)
        np.testing.assert_allclose(got, 3.0 * erfcx(2.0 * np.sqrt(t)), rtol=0, atol=1e-9)

    def test_order_one_is_exponential(self):
        t = np.array([0.0, 0.5, 2.0])
        np.testing.assert_allclose(relaxation_solution(1.0, 1.5, 1.0, t), np.exp(-1.5 * t), rtol=1e-14)

    def test_scalar_input_gives_scalar(self):
        out = relaxation_solution(0.5, 1.0, 1.0, 2.0)
        assert isinstance(out, float)

    def test_zero_rate_is_constant(self):
        t = np.linspace(0.0, 5.0, 11)
        np.testing.assert_allclose(relaxation_solution(0.4, 0.0, 2.5, t), 2.5, rtol=0)

    def test_validation(self):
        with pytest.raises(ValueError):
            relaxation_solution(0.5, -1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            relaxation_solution(0.5, 1.0, 1.0, -0.5)


class TestL1Marcher:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
    def test_converges_to_exact_solution(self, alpha):
        mu, v0, T = 1.0, 1.0, 2.0
        errs = []
        for M in (64, 256):
            tg = TimeGrid.graded(T, M, (2.0 - alpha) / alpha)
            V = solve_relaxation_l1(alpha, mu, v0, tg)
            exact = relaxation_solution(alpha, mu, v0, tg.nodes)
            errs.append(np.max(np.abs(V - exact)))
        assert errs[0] < 6e-3
        # graded-mesh rate is M^-(2-a), so halving twice gains at least 4x
        assert errs[1] < errs[0] / 4.0

    def test_discrete_solution_is_positive_and_decreasing(self):
        tg = TimeGrid.uniform(10.0, 200)
        V = solve_relaxation_l1(0.5, 3.0, 1.0, tg)
        assert np.all(V > 0.0)
        assert np.all(np.diff(V) < 0.0)

    def test_satisfies_its_own_difference_equation(self):
        alpha, mu = 0.6, 2.0
        tg = TimeGrid.graded(1.0, 24, 2.0)
        V = solve_relaxation_l1(alpha, mu, 1.0, tg)
        w = l1_weights(alpha, tg)
        resid = w.apply_all(V) + mu * V[1:]
        np.testing.assert_allclose(resid, 0.0, atol=200.0 * EPS * np.max(np.abs(w.row(tg.steps))))

    def test_mu_zero_stays_constant(self):
        tg = TimeGrid.uniform(1.0, 16)
        np.testing.assert_allclose(solve_relaxation_l1(0.5, 0.0, 4.0, tg), 4.0, rtol=1e-14)


class TestComparisonCheck:
    def test_exact_envelope_passes_with_unit_slack_and_margin_zero(self):
        tg = TimeGrid.uniform(5.0, 50)
        obs = relaxation_solution(0.5, 1.0, 2.0, tg.nodes)
        cert = comparison_check(obs, tg, 0.5, 1.0, 2.0, slack=1.0)
        assert cert.passed
        np.testing.assert_allclose(cert.margins, 0.0, atol=1e-12)

    def test_inflated_observation_fails(self):
        tg = TimeGrid.uniform(5.0, 50)
        obs = 1.2 * relaxation_solution(0.5, 1.0, 1.0, tg.nodes)
        cert = comparison_check(obs, tg, 0.5, 1.0, 1.0, slack=1.05)
        assert not cert.passed
        assert cert.margins.min() < 0.0

    def test_discrete_marcher_sits_under_slack_envelope(self):
        # needs the graded startup: on a coarse uniform grid the first-node
        # value of the marcher can overshoot the envelope by more than 5%
        for alpha in (0.3, 0.5, 0.8):
            tg = TimeGrid.graded(20.0, 400, default_grading(alpha))
            V = solve_relaxation_l1(alpha, 2.0, 1.0, tg)
            cert = comparison_check(V, tg, alpha, 2.0, 1.0, slack=1.05)
            assert cert.passed, f"alpha={alpha}: min margin {cert.margins.min()}"

    def test_tail_exponent_recovers_alpha(self):
        # on W = (V0 E_a(-mu t^a))^2 the fitted L2-norm exponent is -alpha;
        # mu and T are chosen deep inside the algebraic regime
        for alpha in (0.3, 0.5, 0.8):
            tg = TimeGrid.uniform(1e4, 800)
            W = relaxation_solution(alpha, 10.0, 1.0, tg.nodes) ** 2
            cert = comparison_check(W, tg, alpha, 10.0, 1.0, slack=3.0)
            np.testing.assert_allclose(cert.tail_exponent, -alpha, atol=0.02)

    def test_tail_exponent_nan_on_short_history(self):
        tg = TimeGrid.uniform(1.0, 4)
        obs = np.ones(5)
        cert = comparison_check(obs, tg, 0.5, 0.0, 1.0, slack=1.1)
        assert np.isnan(cert.tail_exponent)
        assert cert.passed

    def test_validation(self):
        tg = TimeGrid.uniform(1.0, 8)
        with pytest.raises(ValueError):
            comparison_check(np.ones(9), tg, 0.5, 1.0, 1.0, slack=0.9)
        with pytest.raises(ValueError):
            comparison_check(np.ones(7), tg, 0.5, 1.0, 1.0)


class TestRandomSubsolutions:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
    def test_never_exceed_discrete_supersolution(self, alpha):
        rng = np.random.default_rng(7)
        tg = TimeGrid.uniform(3.0, 48)
        for _ in range(50):
            mu = 10.0 ** rng.uniform(-1.0, 1.5)
            w0 = 10.0 ** rng.uniform(-1.0, 1.0)
            W = random_subsolution(alpha, mu, tg, rng, w0=w0)
            V = solve_relaxation_l1(alpha, mu, w0, tg)
            tol = 64.0 * (tg.steps + 4) * EPS * max(np.max(np.abs(V)), np.max(np.abs(W)))
            assert np.min(V - W) >= -tol

    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        alpha=st.floats(0.1, 0.9),
        graded=st.booleans(),
    )
    def test_subsolution_property(self, seed, alpha, graded):
        rng = np.random.default_rng(seed)
        tg = TimeGrid.graded(2.0, 32, 2.5) if graded else TimeGrid.uniform(2.0, 32)
        mu = 10.0 ** rng.uniform(-1.0, 1.5)
        W = random_subsolution(alpha, mu, tg, rng)
        V = solve_relaxation_l1(alpha, mu, 1.0, tg)
        tol = 64.0 * (tg.steps + 4) * EPS * max(np.max(np.abs(V)), np.max(np.abs(W)), 1.0)
        assert np.min(V - W) >= -tol

    def test_starts_at_or_below_w0(self):
        rng = np.random.default_rng(1)
        tg = TimeGrid.uniform(1.0, 8)
        for _ in range(20):
            W = random_subsolution(0.5, 1.0, tg, rng, w0=2.0)
            assert W[0] <= 2.0
