import numpy as np
import pytest

from impact_hedge.closed_form import affine_family
from impact_hedge.model import Affine, FactorModel, LogCoshPut, QuadraticDriver, constant
from impact_hedge.pde import SpaceTimeGrid, build_family
from impact_hedge.simulate import (
    SaturationError,
    SimpleStrategy,
    hedge_plan,
    pnl_bsde,
    pnl_direct,
    replication_test,
    simulate_paths,
)


@pytest.fixture(scope="module")
def model():
    return FactorModel(f0=0.0, drift=constant(0.0), vol=constant(1.0), horizon=1.0)


def test_paths_deterministic_per_seed(model):
    a = simulate_paths(model, 64, 16, seed=42)
    b = simulate_paths(model, 64, 16, seed=42)
    c = simulate_paths(model, 64, 16, seed=43)
    assert np.array_equal(a.factor, b.factor)
    assert not np.array_equal(a.factor, c.factor)


def test_paths_are_substream_stable(model):
    # adding paths must not perturb existing ones (per-path substreams)
    small = simulate_paths(model, 32, 4, seed=9)
    big = simulate_paths(model, 32, 8, seed=9)
    assert np.array_equal(small.factor, big.factor[:4])


def test_path_moments(model):
    ens = simulate_paths(model, 200, 4000, seed=1)
    terminal = ens.factor[:, -1]
    assert terminal.mean() == pytest.approx(0.0, abs=0.06)
    assert terminal.std() == pytest.approx(1.0, abs=0.05)


def test_strategy_positions_on_grid():
    s = SimpleStrategy(np.array([0.0, 0.5]), np.array([1.0, -1.0]))
    times = np.linspace(0.0, 1.0, 5)
    pos = s.positions_on(times, 2)
    # one entry per interval (t_j, t_{j+1}]; the jump at 0.5 takes effect after it
    assert pos.shape == (2, 4)
    assert np.array_equal(pos[0], [1.0, 1.0, -1.0, -1.0])


@pytest.fixture(scope="module")
def zero_gamma_family():
    grid = SpaceTimeGrid(-5.0, 5.0, 201, 32, 1.0)
    return affine_family(0.0, 100.0, 20.0, 0.0, grid, np.linspace(-2.0, 2.0, 9))


def test_flat_strategy_has_zero_pnl(model, zero_gamma_family):
    ens = simulate_paths(model, 32, 8, seed=3)
    strategy = SimpleStrategy(np.array([]), np.zeros((0,)))
    pnl = pnl_direct(ens, strategy, zero_gamma_family)
    assert np.all(pnl.per_path == 0.0)


def test_direct_and_bsde_pnl_agree(model):
    # quadratic driver: both accumulations approximate the same I(Y)
    grid = SpaceTimeGrid(-6.0, 6.0, 241, 200, 1.0)
    driver = QuadraticDriver(0.25)
    family = build_family(model, driver, Affine(0.0, 0.0), Affine(0.0, 1.0),
                          np.linspace(-2.0, 2.0, 17), grid)
    ens = simulate_paths(model, 200, 64, seed=11)
    positions = np.where(ens.factor[:, :-1] > 0.0, -1.0, -0.5)
    strategy = SimpleStrategy(ens.times[:-1], positions)
    direct = pnl_direct(ens, strategy, family)
    bsde = pnl_bsde(ens, strategy, family, driver)
    gap = np.abs(direct.per_path - bsde.per_path)
    assert np.mean(gap) < 0.05
    assert np.max(gap) < 0.3


@pytest.fixture(scope="module")
def put_plan():
    model = FactorModel(f0=100.0, drift=constant(0.0), vol=constant(1.0), horizon=1.0)
    grid = SpaceTimeGrid(92.0, 108.0, 161, 200, 1.0)
    h_M, s = Affine(0.0, 0.0), Affine(0.0, 1.0)
    h_L = LogCoshPut(2.0, 0.25, 100.0, scale=-1.0)
    driver = QuadraticDriver(0.25)
    family = build_family(model, driver, h_M, s, np.linspace(-5.0, 1.0, 49), grid)
    plan = hedge_plan(model, driver, h_M, h_L, s, family, grid)
    return model, family, plan, h_L, s


def test_hedge_plan_cost_positive_for_liability(put_plan):
    _, _, plan, _, _ = put_plan
    assert plan.initial_cost > 0.0
    assert plan.saturation_fraction == 0.0


def test_replication_residual_small(put_plan):
    model, family, plan, h_L, s = put_plan
    ens = simulate_paths(model, 400, 128, seed=5)
    rep = replication_test(plan, ens, family, h_L, s)
    assert rep.rms < 0.05 * plan.initial_cost
    assert rep.mean == pytest.approx(0.0, abs=0.05 * plan.initial_cost)


def test_narrow_volume_grid_saturates():
    model = FactorModel(f0=100.0, drift=constant(0.0), vol=constant(1.0), horizon=1.0)
    grid = SpaceTimeGrid(92.0, 108.0, 81, 50, 1.0)
    h_M, s = Affine(0.0, 0.0), Affine(0.0, 1.0)
    h_L = LogCoshPut(2.0, 0.25, 100.0, scale=-1.0)
    driver = QuadraticDriver(0.25)
    family = build_family(model, driver, h_M, s, np.linspace(-0.5, 0.5, 5), grid)
    with pytest.raises(SaturationError, match="volume grid"):
        hedge_plan(model, driver, h_M, h_L, s, family, grid)
