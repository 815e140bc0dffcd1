"""Mean-demand maps, the inverse boundary policy, revenue curves, sampling."""

import math

import numpy as np
import pytest
from conftest import linear_model, logistic_model

from priceflow import inverse_mean_demand, mean_demand, revenue_cost, sample_capacity
from priceflow.demand import (
    PriceStatus,
    RevenueCurve,
    check_revenue_convexity,
    capacity_pmf,
    mean_demand_derivative,
)
from priceflow.errors import DomainError

GAMMA = 0.3 * math.sqrt(3.0) / math.pi


def test_mean_demand_linear_endpoints():
    m = linear_model(10.0)
    assert mean_demand(m, 10.0) == pytest.approx(1.0)
    assert mean_demand(m, 15.0) == pytest.approx(0.0)


def test_mean_demand_logistic_midpoint_scaled():
    m = logistic_model(10.0, n=4)
    assert mean_demand(m, 13.0) == pytest.approx(2.0)


def test_mean_demand_rejects_out_of_domain():
    with pytest.raises(DomainError):
        mean_demand(linear_model(10.0), 9.0)


def test_inverse_linear_midpoint():
    x, status = inverse_mean_demand(linear_model(10.0), 0.5)
    assert x == pytest.approx(12.5)
    assert status is PriceStatus.INTERIOR


def test_inverse_logistic_midpoint():
    x, status = inverse_mean_demand(logistic_model(10.0), 0.5)
    assert x == pytest.approx(13.0)
    assert status is PriceStatus.INTERIOR


def test_inverse_zero_demand_logistic_caps_price():
    m = logistic_model(10.0)
    x, status = inverse_mean_demand(m, 0.0)
    assert status is PriceStatus.MARKET_CLOSED
    # The cap is exactly the price at which mean demand hits the floor.
    assert mean_demand(m, x) == pytest.approx(1e-9, rel=1e-6)
    assert mean_demand(m, x) <= 1e-9 * (1 + 1e-6)


def test_inverse_zero_demand_linear_is_boundary():
    m = linear_model(10.0)
    x, status = inverse_mean_demand(m, 0.0)
    assert status is PriceStatus.MARKET_CLOSED
    assert x == pytest.approx(15.0)


def test_inverse_ceiling_clamp_logistic():
    m = logistic_model(10.0)
    x, status = inverse_mean_demand(m, 1.0)  # sup of the open range
    assert status is PriceStatus.CLAMPED_CEILING
    assert mean_demand(m, x) == pytest.approx(1.0 - 1e-9, rel=1e-12)


def test_inverse_forward_identity_interior():
    for m in (linear_model(7.0, n=3), logistic_model(5.0, n=2), linear_model(-0.3, n=2)):
        sup = m.count * float(m.response.range_sup)
        for z in np.linspace(0.05, 0.95, 19) * sup:
            x, status = inverse_mean_demand(m, float(z))
            assert status is PriceStatus.INTERIOR
            assert mean_demand(m, x) == pytest.approx(float(z), rel=1e-9)


def test_revenue_cost_values():
    m = linear_model(10.0)
    assert revenue_cost(m, 0.0) == 0.0
    assert revenue_cost(m, 0.5) == pytest.approx(-6.25)
    assert revenue_cost(logistic_model(10.0), 0.0) == 0.0


def test_revenue_cost_midpoint_convexity():
    m = linear_model(10.0)
    assert revenue_cost(m, 0.25) + revenue_cost(m, 0.75) >= 2 * revenue_cost(m, 0.5) - 1e-12


def test_revenue_curve_second_differences(rng):
    # 100 random parameterizations across both built-in kinds.
    for _ in range(50):
        q = float(rng.uniform(0.5, 50.0))
        n = int(rng.integers(1, 5))
        m = linear_model(q, n=n)
        zs = np.linspace(0.0, RevenueCurve(m).z_max, 1000)
        vals = RevenueCurve(m).evaluate(zs)
        scale = float(np.abs(vals).max())
        assert np.diff(vals, 2).min() >= -1e-7 * max(scale, 1.0)
    for _ in range(50):
        q = float(rng.uniform(0.5, 50.0)) * (1 if rng.random() < 0.5 else -1)
        gamma = float(rng.uniform(0.05, 0.5))
        m = logistic_model(q, beta=1.3, gamma=gamma, n=int(rng.integers(1, 5)))
        curve = RevenueCurve(m)
        zs = np.linspace(0.0, curve.z_max, 1000)
        vals = curve.evaluate(zs)
        scale = float(np.abs(vals).max())
        assert check_revenue_convexity(m) >= -1e-7 * max(scale, 1.0)


def test_mean_demand_derivative_negative_everywhere(rng):
    for _ in range(20):
        q = float(rng.uniform(0.2, 30.0))
        m = linear_model(q) if rng.random() < 0.5 else logistic_model(q)
        dom = m.domain
        if dom.hi is not None:
            xs = np.linspace(dom.lo, dom.hi, 102)[1:-1]
        else:
            xs = np.linspace(m.response.center - 8 * m.response.width,
                             m.response.center + 8 * m.response.width, 100)
        for x in xs:
            assert mean_demand_derivative(m, float(x)) < 0.0


def test_sample_capacity_degenerate(rng):
    m = linear_model(10.0)
    assert all(sample_capacity(m, 15.0, rng) == 0 for _ in range(20))  # p = 0
    assert all(sample_capacity(m, 10.0, rng) == 1 for _ in range(20))  # p = 1


def test_sample_capacity_poisson_mean(rng):
    # lambda = 2.0: empirical mean of 1e5 draws within 3 sigma of 2.0.
    m = linear_model(10.0, n=4, family="poisson")
    draws = np.array([sample_capacity(m, 12.5, rng) for _ in range(100_000)])
    assert abs(draws.mean() - 2.0) <= 3.0 * math.sqrt(2.0 / 100_000)


def test_sampling_deterministic_per_seed():
    m = logistic_model(8.0, n=3)
    a = [sample_capacity(m, 9.0, np.random.default_rng(7)) for _ in range(10)]
    b = [sample_capacity(m, 9.0, np.random.default_rng(7)) for _ in range(10)]
    assert a == b


def test_capacity_pmf_binomial_exact():
    m = linear_model(10.0, n=2)
    ks, probs, tail = capacity_pmf(m, 12.5)  # p = 0.5
    assert ks.tolist() == [0, 1, 2]
    assert probs.tolist() == pytest.approx([0.25, 0.5, 0.25])
    assert tail == 0.0


def test_capacity_pmf_poisson_truncation():
    m = linear_model(10.0, n=1, family="poisson")
    ks, probs, tail = capacity_pmf(m, 12.5, poisson_eps=1e-9)  # lambda = 0.5
    assert tail <= 1e-9
    assert probs.sum() == pytest.approx(1.0, abs=2e-9)
    assert probs[0] == pytest.approx(math.exp(-0.5))
