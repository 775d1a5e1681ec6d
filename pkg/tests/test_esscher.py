import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impact_hedge.esscher import (
    MomentScreenError,
    atoms,
    density,
    esscher_expect,
    monotonicity_scan,
    tail_limit_check,
)


@pytest.fixture(scope="module")
def coin():
    return atoms([0.0, 1.0], [0.5, 0.5])


@settings(max_examples=200)
@given(y=st.floats(-40.0, 40.0))
def test_two_atom_mean_is_logistic(coin, y):
    expected = 1.0 / (1.0 + np.exp(-y))
    assert esscher_expect(coin, lambda x: x, y) == pytest.approx(expected, abs=1e-12)


@given(y=st.floats(-30.0, 30.0))
def test_symmetric_measure_gives_odd_mean(y):
    m = atoms([-1.0, 0.0, 1.0], [0.25, 0.5, 0.25])
    plus = esscher_expect(m, lambda x: x, y)
    minus = esscher_expect(m, lambda x: x, -y)
    assert plus == pytest.approx(-minus, abs=1e-12)


def test_zero_tilt_recovers_plain_mean(coin):
    assert esscher_expect(coin, lambda x: x, 0.0) == pytest.approx(0.5)


def test_tilted_mean_monotone_for_monotone_objectives(coin):
    ys = np.linspace(-20, 20, 81)
    for phi in (lambda x: x, lambda x: x ** 3, lambda x: (x > 0.5).astype(float)):
        assert monotonicity_scan(coin, phi, ys).monotone


def test_density_discretization_tilts_correctly():
    x = np.linspace(0.0, 1.0, 4001)
    uni = density(x, np.ones_like(x))
    # strong negative tilt concentrates near the lower boundary, mean ~ 1/|y|
    m = esscher_expect(uni, lambda x: x, -100.0)
    assert m == pytest.approx(0.01, abs=2e-4)
    assert m <= 0.01


def test_tail_limits_hit_support_bounds(coin):
    rep = tail_limit_check(coin, lambda x: x, 40.0)
    assert rep.lower_gap < 1e-12
    assert rep.upper_gap < 1e-12


def test_moment_screen_fires_on_overflowing_tilt(coin):
    with pytest.raises(MomentScreenError), np.errstate(over="ignore", invalid="ignore"):
        esscher_expect(coin, lambda x: x, 1e309)


def test_infinite_objective_on_charged_atom_rejected(coin):
    with pytest.raises(ValueError, match="infinite"), np.errstate(divide="ignore"):
        esscher_expect(coin, lambda x: 1.0 / x, 0.0)


def test_atoms_validate():
    with pytest.raises(ValueError):
        atoms([0.0, 1.0], [0.5, -0.5])
    with pytest.raises(ValueError):
        atoms([1.0, 0.0], [0.5, 0.5])
