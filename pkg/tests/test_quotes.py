import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impact_hedge.closed_form import affine_family
from impact_hedge.pde import SpaceTimeGrid
from impact_hedge.quotes import (
    QuoteContext,
    QuoteUnavailableError,
    check_axioms,
    export_curve_csv,
    price_curve,
    quote,
)


@pytest.fixture(scope="module")
def ctx():
    grid = SpaceTimeGrid(-5.0, 5.0, 101, 100, 1.0)
    fam = affine_family(0.0, 100.0, 20.0, 0.5, grid, np.linspace(-4.0, 4.0, 33))
    return QuoteContext(fam, 0.0, 0.0)


def test_spot_values(ctx):
    assert quote(ctx, 0.0, 1.0) == pytest.approx(200.0, abs=1e-9)
    assert -quote(ctx, 0.0, -1.0) == pytest.approx(0.0, abs=1e-9)


def test_zero_volume_is_free(ctx):
    for z in np.linspace(-2, 2, 9):
        assert quote(ctx, z, 0.0) == 0.0


@settings(max_examples=100)
@given(
    z=st.floats(-1.5, 1.5),
    y=st.floats(-1.5, 1.5),
)
def test_round_trip_cancels(ctx, z, y):
    sell = quote(ctx, z, y)
    buy_back = quote(ctx, z - y, -y)
    # telescopes up to one ulp of rounding in the volume arithmetic
    assert abs(sell + buy_back) <= 1e-12 * (1.0 + abs(sell))


def test_convexity_and_bid_ask(ctx):
    span = np.linspace(-1.0, 1.0, 21)
    report = check_axioms(ctx, span, span)
    assert report.min_convexity >= -1e-10
    assert report.max_bid_ask_violation <= 1e-10
    assert report.max_zero_volume == 0.0


def test_volume_outside_grid_rejected(ctx):
    with pytest.raises(QuoteUnavailableError):
        quote(ctx, 0.0, 10.0)
    with pytest.raises(QuoteUnavailableError):
        quote(ctx, -5.0, 0.5)


def test_context_validates_location(ctx):
    with pytest.raises(ValueError):
        QuoteContext(ctx.family, 99.0, 0.0)
    with pytest.raises(ValueError):
        QuoteContext(ctx.family, 0.0, 1.0)  # t = T excluded


def test_curve_export_schema(ctx, tmp_path):
    curve = price_curve(ctx, 0.0, np.linspace(-1, 1, 5))
    path = tmp_path / "curve.csv"
    export_curve_csv(curve, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "z,y,price"
    assert len(lines) == 6
    # 17-significant-digit floats round-trip
    z, y, p = lines[3].split(",")
    assert float(p) == curve.prices[2]
