import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impact_hedge.closed_form import (
    ExpUtilitySpec,
    PutBlockSpec,
    affine_case,
    burgers_tanh,
    call_z_limits,
    exp_utility_surface,
    exp_utility_z,
    logcosh_hedge_field,
    logcosh_value,
    put_hedges,
    replication_cost,
    shock_offset,
)
from impact_hedge.model import Affine, Call, LogCoshPut, eval_payoff


@pytest.fixture(scope="module")
def affine_spec():
    # h_M = 0, instrument s = 100 + 20 x, exponential utility gamma = 0.5
    return ExpUtilitySpec(gamma=0.5, h_M=Affine(0.0, 0.0), s=Affine(100.0, 20.0),
                          b=0.0, beta=0.0, sigma=1.0)


def test_quadrature_reproduces_affine_case(affine_spec):
    for (x, t, y) in [(0.0, 0.0, 1.0), (0.5, 0.25, -2.0), (-1.0, 0.9, 0.3)]:
        exact = affine_case(0.0, 100.0, 20.0, 0.5, 1.0, x, t, y)
        assert exp_utility_surface(affine_spec, x, t, y, T=1.0) == pytest.approx(
            exact.p, abs=1e-10 * (1 + abs(exact.p)))
        assert exp_utility_z(affine_spec, x, t, y, T=1.0) == pytest.approx(
            exact.z, abs=1e-9)


def test_surface_requires_future_horizon(affine_spec):
    with pytest.raises(ValueError):
        exp_utility_surface(affine_spec, 0.0, 1.0, 1.0, T=1.0)


def test_affine_volume_inverse():
    case = affine_case(0.0, 100.0, 20.0, 0.5, 1.0, 0.0, 0.0, 1.5)
    assert case.z_inverse(case.z) == pytest.approx(1.5)


@settings(max_examples=40, deadline=None)
@given(y=st.floats(-30.0, 30.0))
def test_call_z_between_saturation_limits(y):
    spec = ExpUtilitySpec(gamma=1.0, h_M=Affine(0.0, 0.0), s=Call(0.0),
                          b=0.0, beta=0.0, sigma=1.0)
    z = exp_utility_z(spec, 0.0, 0.0, y, T=1.0)
    lower = call_z_limits(1.0, 0.0, 0.0, 1.0).lower
    assert z > lower - 1e-9


def test_call_limit_stable_deep_in_the_money():
    # Phi(d) underflows for d = -40 in naive form; erfcx keeps it finite
    lim = call_z_limits(1.0, 0.0, 40.0, 1.0)
    assert np.isfinite(lim.lower)
    assert lim.lower == pytest.approx(-40.0, rel=1e-2)  # ~ -d for deep ITM
    assert lim.upper_unbounded


def test_burgers_tanh_satisfies_pde():
    h = 1e-4
    x = np.linspace(-2, 2, 17)
    t = 0.37
    u = lambda xx, tt: burgers_tanh(0.8, 0.1, xx, tt)
    u_t = (u(x, t + h) - u(x, t - h)) / (2 * h)
    u_x = (u(x + h, t) - u(x - h, t)) / (2 * h)
    u_xx = (u(x + h, t) - 2 * u(x, t) + u(x - h, t)) / (h * h)
    assert np.max(np.abs(u_t + 0.5 * u_xx - 0.8 * u(x, t) * u_x)) < 1e-6


def test_shock_offset_formula():
    assert shock_offset(10.0, 0.1, 100.0, 100.0, 1.0, 1.0) == pytest.approx(-1.0)
    assert shock_offset(2.0, 0.5, 3.0, 1.0, 1.0, 0.0) == pytest.approx(2.0)


@pytest.fixture(scope="module")
def block():
    return PutBlockSpec(lam=10.0, gamma=0.1, b=100.0, c=1.0, K=100.0, T=1.0)


def test_logcosh_terminal_matches_put_block_payoff(block):
    # at t = T the hedge value equals the (negated) liability
    h_L = LogCoshPut(block.lam, block.gamma, block.K, scale=-1.0)
    x = np.linspace(90.0, 110.0, 41)
    w = x - block.b
    assert np.allclose(logcosh_value(block, w, block.T),
                       eval_payoff(h_L, x), atol=1e-12)


def test_hedge_field_range_and_monotonicity(block):
    w = np.linspace(-8, 8, 101)
    y = logcosh_hedge_field(block, w, 0.3)
    assert np.all(y <= 0.0) and np.all(y >= -2 * block.lam)
    assert np.all(np.diff(y) >= 0)  # short more stock as the put goes ITM


def test_impact_hedge_buys_back_slower_than_bachelier(block):
    hedges = put_hedges(block, 0.0, 0.0)
    assert -2 * block.lam < hedges.y_impact < 0
    assert hedges.y_bachelier == pytest.approx(-2 * block.lam * 0.5)  # ATM: Phi(0)


def test_replication_cost_nonlinearity():
    big = PutBlockSpec(lam=100.0, gamma=0.1, b=100.0, c=1.0, K=100.0, T=1.0)
    exact, approx = replication_cost(big)
    assert exact == pytest.approx(1993.0685, abs=1e-3)
    assert approx == 2000.0
    assert abs(exact - approx) / approx < 0.005


def test_replication_cost_small_block_is_sublinear(block):
    exact, approx = replication_cost(block)
    assert 0.0 < exact < approx
