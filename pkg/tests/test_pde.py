import numpy as np
import pytest
from scipy.special import ndtr

from impact_hedge.model import Affine, Call, FactorModel, QuadraticDriver, ZeroDriver, constant
from impact_hedge.pde import (
    PdeFailure,
    SpaceTimeGrid,
    build_family,
    default_grid,
    first_derivative,
    invert_z,
    solve_semilinear,
)


@pytest.fixture(scope="module")
def affine_family():
    model = FactorModel(f0=0.0, drift=constant(0.0), vol=constant(1.0), horizon=1.0)
    grid = SpaceTimeGrid(-5.0, 5.0, 201, 200, 1.0)
    return build_family(
        model, QuadraticDriver(0.5), Affine(0.0, 0.0), Affine(100.0, 20.0),
        np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), grid,
    )


def test_first_derivative_exact_for_quadratics():
    x = np.linspace(0.0, 1.0, 11)
    v = 3.0 * x * x - 2.0 * x + 1.0
    d = first_derivative(v[:, None], x[1] - x[0])[:, 0]
    assert np.allclose(d, 6.0 * x - 2.0, atol=1e-12)


def test_affine_case_matches_closed_form(affine_family):
    grid = affine_family.grid
    tt, xx = np.meshgrid(grid.times, grid.x)
    for i, y in enumerate(affine_family.y_grid):
        exact = -y * (100.0 + 20.0 * xx) - (1.0 - tt) * 0.5 * y * y * 400.0 / 2.0
        assert np.max(np.abs(affine_family.p[i] - exact)) < 1e-6
        assert np.max(np.abs(affine_family.z[i] - 20.0 * y)) < 1e-6


def test_zero_driver_call_matches_gaussian_price():
    # oracle: E[(F_T - k)_+] under F_T ~ N(x, T - t), the arithmetic call value
    model = FactorModel(f0=0.0, drift=constant(0.0), vol=constant(1.0), horizon=1.0)
    grid = SpaceTimeGrid(-8.0, 8.0, 801, 800, 1.0)
    surf = solve_semilinear(model, ZeroDriver(), Call(0.0), grid)
    for x in (-1.0, 0.0, 0.7):
        tau = 1.0
        d = x / np.sqrt(tau)
        oracle = x * ndtr(d) + np.sqrt(tau) * np.exp(-0.5 * d * d) / np.sqrt(2 * np.pi)
        assert surf.at(x, 0.0) == pytest.approx(oracle, abs=2e-3)


def test_time_refinement_reduces_error():
    model = FactorModel(f0=0.0, drift=constant(0.0), vol=constant(1.0), horizon=1.0)

    def error(nt):
        grid = SpaceTimeGrid(-8.0, 8.0, 401, nt, 1.0)
        surf = solve_semilinear(model, ZeroDriver(), Call(0.0), grid)
        oracle = 1.0 / np.sqrt(2 * np.pi)
        return abs(surf.at(0.0, 0.0) - oracle)

    e_coarse, e_fine = error(50), error(400)
    assert e_fine < e_coarse


def test_family_z_monotone_in_volume(affine_family):
    assert affine_family.z_monotonicity_gap() > 0.0


def test_invert_z_roundtrip(affine_family):
    # Z(x, t, y) = 20 y for this family, so inverting 20 * 1.5 gives y = 1.5
    res = invert_z(affine_family, 0.3, 0.25, 30.0)
    assert res.saturated == "none"
    assert res.y == pytest.approx(1.5, abs=1e-9)


def test_invert_z_saturation_flags(affine_family):
    assert invert_z(affine_family, 0.0, 0.5, -1e6).saturated == "low"
    assert invert_z(affine_family, 0.0, 0.5, +1e6).saturated == "high"


def test_nonfinite_terminal_rejected():
    model = FactorModel(f0=0.0, drift=constant(0.0), vol=constant(1.0), horizon=1.0)
    grid = SpaceTimeGrid(-1.0, 1.0, 21, 10, 1.0)
    with pytest.raises(PdeFailure), np.errstate(divide="ignore", invalid="ignore"):
        solve_semilinear(model, ZeroDriver(), lambda x: x / 0.0, grid)


def test_grid_horizon_mismatch_rejected():
    model = FactorModel(f0=0.0, drift=constant(0.0), vol=constant(1.0), horizon=2.0)
    grid = SpaceTimeGrid(-1.0, 1.0, 21, 10, 1.0)
    with pytest.raises(ValueError, match="horizon"):
        solve_semilinear(model, ZeroDriver(), Affine(0.0, 1.0), grid)


def test_default_grid_covers_diffusion_range():
    model = FactorModel(f0=2.0, drift=constant(0.0), vol=constant(0.5), horizon=4.0)
    grid = default_grid(model, nx=101, nt=50)
    assert grid.x_min < 2.0 - 5.0 and grid.x_max > 2.0 + 5.0  # 6 sigma sqrt(T) wide


def test_surface_interpolation_consistency(affine_family):
    # p_at on grid nodes reproduces stored values
    g = affine_family.grid
    assert affine_family.p_at(g.x[7], g.times[3], -1.0) == affine_family.p[1, 7, 3]
