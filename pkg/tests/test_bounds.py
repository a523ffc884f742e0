import math

import numpy as np
import pytest

from zoomforge.bounds import (
    assess,
    bound_table,
    jacobian_entropy_rate,
    linear_rate_bound,
    log_jacobian_range,
    render_text,
    report_lines,
    sufficiency_threshold,
    verdicts,
)
from zoomforge.dynamics import BenchmarkPlant, LinearModel, ModulatedGain
from zoomforge.shared.errors import NotApplicableError
from zoomforge.shared.models.reports import Estimate


def test_linear_rate_bound_counts_unstable_modes():
    assert linear_rate_bound([2.0, 0.5, -3.0]) == pytest.approx(math.log2(6.0))
    assert linear_rate_bound([0.5, 0.9]) == 0.0


def test_sufficiency_threshold():
    model = BenchmarkPlant(dimension=2, b=1.0)
    assert sufficiency_threshold(model) == pytest.approx(2 * math.log2(1.5) + 1)

    class Plain(LinearModel):
        @property
        def certificate(self):
            return None

    with pytest.raises(NotApplicableError):
        sufficiency_threshold(Plain(gains=[2.0]))


def test_linear_v_hat_is_exact(states_only):
    model = LinearModel(dimension=2, gains=[2.0, 3.0])
    x = np.random.default_rng(0).normal(size=(3, 50, 2))
    estimate = jacobian_entropy_rate(model, states_only(x))
    assert estimate.label == "exact"
    assert estimate.stderr == 0.0
    assert estimate.value == pytest.approx(linear_rate_bound(model.eigenvalues()))


def test_v_hat_averages_the_tail(states_only):
    model = BenchmarkPlant(dimension=1, b=1.0)
    # the second half sits at x = 0 where the slope is 1.5
    x = np.concatenate([np.full((2, 50, 1), math.pi), np.zeros((2, 51, 1))], axis=1)
    estimate = jacobian_entropy_rate(model, states_only(x), burn_in=0.5)
    assert estimate.label == "empirical"
    assert estimate.value == pytest.approx(math.log2(1.5))


def test_v_hat_lies_between_the_declared_bounds(states_only):
    model = BenchmarkPlant(dimension=2, b=1.2)
    x = np.random.default_rng(1).normal(scale=3.0, size=(4, 400, 2))
    report = assess(model, states_only(x), capacity=6.0)
    lo, hi = log_jacobian_range(model)
    assert (report.l_inf, report.m_sup) == (lo, hi)
    assert report.consistent()


def test_verdicts_compare_capacity_with_the_bounds():
    report = verdicts(Estimate(value=2.0, stderr=0.0, label="exact"), 2.0, 2.0, capacity=1.0, linear_bound=2.0, sufficiency=3.0)
    assert not report.verdicts.ams_necessary
    assert not report.verdicts.phr_necessary
    assert report.verdicts.sufficiency is False
    report = verdicts(Estimate(value=2.0), 2.0, 2.0, capacity=2.0)
    assert report.verdicts.ams_necessary and report.verdicts.phr_necessary
    assert report.verdicts.sufficiency is None


def test_report_lines_name_every_verdict():
    report = verdicts(Estimate(value=1.0), 1.0, 1.0, capacity=math.log2(65), sufficiency=2.7)
    lines = report_lines(report)
    assert "C ≥ V_hat: satisfied" in lines
    assert any(line.startswith("C ≥ L_inf:") for line in lines)
    assert "Bounds" in render_text(bound_table(report, "Bounds"))


def test_v_hat_averages_noise_dependent_jacobians(states_only):
    # log2 |det J| = 2 log2 c + θ Σ tanh w_i, whose average over symmetric noise is 2 log2 c
    model = ModulatedGain(dimension=2, c=3.0, theta=0.5)
    x = np.random.default_rng(2).normal(size=(4, 400, 2))
    estimate = jacobian_entropy_rate(model, states_only(x), inner_draws=16, stream=model.noise_stream(5))
    assert estimate.label == "empirical"
    assert estimate.value == pytest.approx(2 * math.log2(3.0), abs=0.03)
    assert 0.0 < estimate.stderr < 0.05

    single = jacobian_entropy_rate(model, states_only(x), inner_draws=1, stream=model.noise_stream(5))
    assert single.value != estimate.value

    lo, hi = log_jacobian_range(model)
    assert (lo, hi) == pytest.approx((2 * (math.log2(3.0) - 0.5), 2 * (math.log2(3.0) + 0.5)))
