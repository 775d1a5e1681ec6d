"""Path simulation, Large-trader P&L (direct and BSDE form), the replicating
strategy of the perfect-hedging theorem, and replication-error measurement.

Per-path RNG substreams are derived from (seed, path index), so ensembles are
reproducible under any parallel schedule.  Per-path sums are accumulated with
math.fsum, making reports independent of reduction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import DriverSpec, FactorModel, PayoffSpec, eval_driver, eval_payoff
from .pde import (
    PriceSurface,
    SpaceTimeGrid,
    SurfaceFamily,
    first_derivative,
    invert_z_field,
    solve_hedge_value,
)
from .quotes import quote_many

__all__ = [
    "PathEnsemble",
    "SimpleStrategy",
    "HedgePlan",
    "PnLReport",
    "SaturationError",
    "simulate_paths",
    "pnl_direct",
    "pnl_bsde",
    "hedge_plan",
    "replication_test",
    "export_paths_csv",
    "export_pnl_csv",
]


class SaturationError(RuntimeError):
    """Too many hedge positions pinned at the volume-grid boundary."""


@dataclass
class PathEnsemble:
    times: np.ndarray          # (n_steps + 1,)
    factor: np.ndarray         # (n_paths, n_steps + 1)
    dW: np.ndarray             # (n_paths, n_steps)
    seed: int

    @property
    def n_paths(self) -> int:
        return self.factor.shape[0]

    @property
    def n_steps(self) -> int:
        return self.dW.shape[1]


@dataclass
class SimpleStrategy:
    """Piecewise-constant predictable position, Y_0 = 0.

    The position decided at jump_times[j] is in force on
    (jump_times[j], jump_times[j+1]]; values may be shared across paths
    (shape (n_jumps,)) or per-path (shape (n_paths, n_jumps)).
    """

    jump_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.jump_times = np.asarray(self.jump_times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.jump_times) <= 0):
            raise ValueError("jump times must be strictly increasing")
        if self.values.shape[-1] != len(self.jump_times):
            raise ValueError("values must match jump_times along the last axis")

    def positions_on(self, times: np.ndarray, n_paths: int) -> np.ndarray:
        """Position in force on (times[j], times[j+1]] for j = 0..len(times)-2."""
        vals = self.values if self.values.ndim == 2 else self.values[None, :]
        vals = np.broadcast_to(vals, (n_paths, vals.shape[-1]))
        idx = np.searchsorted(self.jump_times, times[:-1], side="right") - 1
        out = np.zeros((n_paths, len(times) - 1))
        live = idx >= 0
        out[:, live] = vals[:, idx[live]]
        return out


@dataclass
class PnLReport:
    per_path: np.ndarray
    mean: float = field(init=False)
    rms: float = field(init=False)
    max_abs: float = field(init=False)
    n_clipped_paths: int = 0

    def __post_init__(self):
        v = np.asarray(self.per_path, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite P&L entries")
        self.mean = float(v.mean())
        self.rms = float(np.sqrt(np.mean(v * v)))
        self.max_abs = float(np.max(np.abs(v)))


def simulate_paths(model: FactorModel, n_steps: int, n_paths: int, seed: int) -> PathEnsemble:
    """Euler-Maruyama paths of dF = mu dt + sigma dW, one Philox substream per path."""
    if n_steps < 1 or n_paths < 1:
        raise ValueError("need n_steps >= 1 and n_paths >= 1")
    times = np.linspace(0.0, model.horizon, n_steps + 1)
    dt = model.horizon / n_steps
    sq = math.sqrt(dt)
    dW = np.empty((n_paths, n_steps))
    for i in range(n_paths):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i,)))
        )
        dW[i] = sq * rng.standard_normal(n_steps)
    factor = np.empty((n_paths, n_steps + 1))
    factor[:, 0] = model.f0
    for j in range(n_steps):
        x = factor[:, j]
        t = float(times[j])
        mu = np.broadcast_to(model.drift(x, t), x.shape)
        sig = np.broadcast_to(model.vol(x, t), x.shape)
        factor[:, j + 1] = x + mu * dt + sig * dW[:, j]
    return PathEnsemble(times=times, factor=factor, dW=dW, seed=int(seed))


def _clip_x(family: SurfaceFamily, x: np.ndarray):
    """Constant extrapolation outside the surface grid; count affected paths."""
    g = family.grid
    clipped = np.clip(x, g.x_min, g.x_max)
    n_out = int(np.any((x < g.x_min) | (x > g.x_max), axis=-1).sum()) if x.ndim == 2 else 0
    return clipped, n_out


def _factor_at_jumps(ensemble: PathEnsemble, jump_times: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(ensemble.times, jump_times)
    if not np.allclose(ensemble.times[idx], jump_times, atol=1e-12):
        raise ValueError("jump times must lie on the ensemble time grid")
    return ensemble.factor[:, idx]


def pnl_direct(ensemble: PathEnsemble, strategy: SimpleStrategy,
               family: SurfaceFamily) -> PnLReport:
    """Terminal P&L I(Y) = Y_T s(F_T) - sum of quotes paid at each jump."""
    if family.s is None:
        raise ValueError("family must carry its s payoff")
    n_paths = ensemble.n_paths
    jt = strategy.jump_times
    if len(jt) and jt[-1] >= ensemble.times[-1]:
        raise ValueError("no quoting at t = T; last jump must be before the horizon")
    vals = strategy.values if strategy.values.ndim == 2 else strategy.values[None, :]
    vals = np.broadcast_to(vals, (n_paths, len(jt)))

    terms = np.empty((n_paths, len(jt) + 1))
    fx = _factor_at_jumps(ensemble, jt) if len(jt) else np.empty((n_paths, 0))
    fx, n_clipped = _clip_x(family, fx)
    prev = np.zeros(n_paths)
    for j, t in enumerate(jt):
        trade = vals[:, j] - prev
        paid = quote_many(family, fx[:, j], float(t), -prev, trade)
        terms[:, j] = -paid
        prev = vals[:, j]
    s_T = eval_payoff(family.s, ensemble.factor[:, -1])
    y_T = vals[:, -1] if len(jt) else np.zeros(n_paths)
    terms[:, -1] = y_T * np.asarray(s_T)
    per_path = np.array([math.fsum(row) for row in terms])
    return PnLReport(per_path, n_clipped_paths=n_clipped)


def pnl_bsde(ensemble: PathEnsemble, strategy: SimpleStrategy,
             family: SurfaceFamily, driver: DriverSpec) -> PnLReport:
    """Lemma-style P&L: h_M(F_T) - p(f0,0,0) - int g(Z^Y) dt + int Z^Y dW,
    with left-point Riemann/Ito sums on the ensemble grid."""
    if family.h_M is None:
        raise ValueError("family must carry its h_M payoff")
    n_paths, n_steps = ensemble.n_paths, ensemble.n_steps
    dt = float(ensemble.times[1] - ensemble.times[0])
    pos = strategy.positions_on(ensemble.times, n_paths)

    fx, n_clipped = _clip_x(family, ensemble.factor[:, :-1])
    z = family.z_at(fx, ensemble.times[None, :-1], pos)
    gvals = np.empty_like(z)
    for j in range(n_steps):
        gvals[:, j] = np.broadcast_to(
            eval_driver(driver, z[:, j], float(ensemble.times[j])), (n_paths,)
        )
    h_m_T = np.asarray(eval_payoff(family.h_M, ensemble.factor[:, -1]), dtype=float)
    p00 = family.p_at(ensemble.factor[0, 0], 0.0, 0.0)

    per_path = np.empty(n_paths)
    for i in range(n_paths):
        per_path[i] = math.fsum(
            [h_m_T[i], -p00]
            + list(-gvals[i] * dt)
            + list(z[i] * ensemble.dW[i])
        )
    return PnLReport(per_path, n_clipped_paths=n_clipped)


@dataclass
class HedgePlan:
    value_surface: PriceSurface
    z_star: np.ndarray          # (nx, nt+1)
    strategy_field: np.ndarray  # (nx, nt+1), volumes Y*(x, t)
    initial_cost: float
    saturation_fraction: float

    def position_at(self, family: SurfaceFamily, x, t):
        from .pde import _interp_xt

        return _interp_xt(family.grid, self.strategy_field, x, t)


def hedge_plan(model: FactorModel, driver: DriverSpec, h_M: PayoffSpec,
               h_L: PayoffSpec, s: PayoffSpec, family: SurfaceFamily,
               grid: SpaceTimeGrid, saturation_threshold: float = 0.05) -> HedgePlan:
    """Hedge value v, its Z* field, the feedback strategy Y* = Z^-(Z*), and
    the initial replication cost p(f0, 0, 0) - v(f0, 0)."""
    if grid is not family.grid and (
        grid.nx != family.grid.nx or grid.nt != family.grid.nt
        or grid.x_min != family.grid.x_min or grid.x_max != family.grid.x_max
    ):
        raise ValueError("hedge grid must coincide with the family grid")
    v = solve_hedge_value(model, driver, h_M, h_L, s, grid)
    x = grid.x
    sig = np.array(
        [np.broadcast_to(model.vol(x, t), x.shape) for t in grid.times]
    ).T
    z_star = -sig * first_derivative(v.values, grid.dx)
    y_star, sat = invert_z_field(family, z_star, family.z)
    sat_fraction = float(np.mean(sat != 0))
    if sat_fraction > saturation_threshold:
        raise SaturationError(
            f"{100 * sat_fraction:.1f}% of hedge volumes saturated; widen the volume grid"
        )
    p00 = family.p_at(model.f0, 0.0, 0.0)
    v00 = v.at(model.f0, 0.0)
    return HedgePlan(
        value_surface=v,
        z_star=z_star,
        strategy_field=y_star,
        initial_cost=float(p00 - v00),
        saturation_fraction=sat_fraction,
    )


def replication_test(plan: HedgePlan, ensemble: PathEnsemble,
                     family: SurfaceFamily, h_L: PayoffSpec,
                     s: PayoffSpec) -> PnLReport:
    """Per-path residual initial_cost + I(Y*) + H_L for the step-rebalanced
    hedge; the position over (t_j, t_{j+1}] is decided from (F_{t_j}, t_j)."""
    n_paths = ensemble.n_paths
    fx, n_clipped = _clip_x(family, ensemble.factor[:, :-1])
    positions = np.empty((n_paths, ensemble.n_steps))
    from .pde import _interp_xt

    for j in range(ensemble.n_steps):
        positions[:, j] = _interp_xt(
            family.grid, plan.strategy_field, fx[:, j], float(ensemble.times[j])
        )
    strategy = SimpleStrategy(ensemble.times[:-1], positions)
    pnl = pnl_direct(ensemble, strategy, family)
    h_l_T = np.asarray(
        eval_payoff(h_L, eval_payoff(s, ensemble.factor[:, -1])), dtype=float
    )
    residual = plan.initial_cost + pnl.per_path + h_l_T
    return PnLReport(residual, n_clipped_paths=max(n_clipped, pnl.n_clipped_paths))


# ---------------------------------------------------------------------------
# export


def export_paths_csv(ensemble: PathEnsemble, positions: Optional[np.ndarray],
                     quotes_paid: Optional[np.ndarray], path) -> None:
    """CSV: path,time,factor,position,quote_paid (blank columns if absent)."""
    with open(path, "w") as fh:
        fh.write("path,time,factor,position,quote_paid\n")
        for i in range(ensemble.n_paths):
            for j, t in enumerate(ensemble.times):
                pos = "" if positions is None or j >= positions.shape[1] else (
                    "%.17g" % positions[i, j])
                paid = "" if quotes_paid is None or j >= quotes_paid.shape[1] else (
                    "%.17g" % quotes_paid[i, j])
                fh.write("%d,%.17g,%.17g,%s,%s\n" % (i, t, ensemble.factor[i, j], pos, paid))


def export_pnl_csv(pnl: PnLReport, path, residuals: Optional[np.ndarray] = None) -> None:
    """CSV: path,pnl,residual."""
    with open(path, "w") as fh:
        fh.write("path,pnl,residual\n")
        for i, v in enumerate(pnl.per_path):
            res = "" if residuals is None else "%.17g" % residuals[i]
            fh.write("%d,%.17g,%s\n" % (i, v, res))
