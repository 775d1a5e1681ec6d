"""Quoting rule of the Market: P_t(z, y) from an indifference surface family,
plus the axiom audit (round-trip, convexity, bid-ask, zero volume).

The module is stateless; the Market's inventory z is tracked by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pde import SurfaceFamily

__all__ = [
    "QuoteContext",
    "PriceCurve",
    "AxiomReport",
    "QuoteUnavailableError",
    "quote",
    "quote_many",
    "price_curve",
    "check_axioms",
    "export_curve_csv",
]


class QuoteUnavailableError(ValueError):
    """A required volume falls outside the family's volume grid."""

    def __init__(self, volume: float):
        super().__init__(f"volume {volume:g} outside the family's y-grid")
        self.volume = volume


@dataclass(frozen=True)
class QuoteContext:
    family: SurfaceFamily
    x: float
    t: float

    def __post_init__(self):
        g = self.family.grid
        if not (g.x_min <= self.x <= g.x_max):
            raise ValueError(f"x={self.x} outside the family grid")
        if not (0.0 <= self.t < g.horizon):
            raise ValueError(f"t={self.t} must lie in [0, T)")


@dataclass
class PriceCurve:
    z: float
    y_grid: np.ndarray
    prices: np.ndarray


@dataclass
class AxiomReport:
    max_round_trip: float
    min_convexity: float  # min second difference of y -> P(z, y)
    max_bid_ask_violation: float  # max of -P(z,-y) - P(z,y); should be <= 0
    max_zero_volume: float


def _check_volume(family: SurfaceFamily, vol) -> None:
    vol = np.asarray(vol, dtype=float)
    lo, hi = family.y_grid[0], family.y_grid[-1]
    bad = (vol < lo) | (vol > hi)
    if np.any(bad):
        raise QuoteUnavailableError(float(np.asarray(vol)[bad].flat[0]))


def quote(ctx: QuoteContext, z: float, y: float) -> float:
    """Selling price for y units given Market inventory z:
    p(x, t, -z) - p(x, t, y - z), the indifference difference."""
    _check_volume(ctx.family, [-z, y - z])
    pre = ctx.family.p_at(ctx.x, ctx.t, -z)
    post = ctx.family.p_at(ctx.x, ctx.t, y - z)
    return pre - post


def quote_many(family: SurfaceFamily, x, t, z, y):
    """Vectorized quote over arrays of (x, t, z, y)."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_volume(family, -z)
    _check_volume(family, y - z)
    return family.p_at(x, t, -z) - family.p_at(x, t, y - z)


def price_curve(ctx: QuoteContext, z: float, y_grid: Sequence[float]) -> PriceCurve:
    y_grid = np.asarray(y_grid, dtype=float)
    prices = np.array([quote(ctx, z, y) for y in y_grid])
    return PriceCurve(z=float(z), y_grid=y_grid, prices=prices)


def check_axioms(ctx: QuoteContext, z_grid: Sequence[float], y_grid: Sequence[float]) -> AxiomReport:
    """Audit the quoting axioms on a (z, y) product grid; report-only."""
    z_grid = np.asarray(z_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)

    max_rt = 0.0
    max_zero = 0.0
    min_conv = np.inf
    max_ba = -np.inf
    for z in z_grid:
        prices = np.array([quote(ctx, z, y) for y in y_grid])
        for y, p in zip(y_grid, prices):
            back = quote(ctx, z - y, -y)
            max_rt = max(max_rt, abs(p + back) / (1.0 + abs(p)))
            ba = -quote(ctx, z, -y) - p
            max_ba = max(max_ba, ba)
        max_zero = max(max_zero, abs(quote(ctx, z, 0.0)))
        if len(y_grid) >= 3:
            d2 = np.diff(prices, 2)
            min_conv = min(min_conv, float(d2.min()))
    return AxiomReport(
        max_round_trip=float(max_rt),
        min_convexity=float(min_conv),
        max_bid_ask_violation=float(max_ba),
        max_zero_volume=float(max_zero),
    )


def export_curve_csv(curve: PriceCurve, path) -> None:
    """CSV with header z,y,price at 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("z,y,price\n")
        for y, p in zip(curve.y_grid, curve.prices):
            fh.write("%.17g,%.17g,%.17g\n" % (curve.z, y, p))
