"""Semilinear pricing PDE: indifference surfaces, Z-field, volume inversion.

The solver marches backward in time with an implicit discretization of the
drift/diffusion operator and an explicit driver term, optionally corrected
by a fixed-point sweep.  Boundary rows impose a vanishing second spatial
derivative (all payoffs of interest are asymptotically affine).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from .model import DriverSpec, FactorModel, PayoffSpec, eval_driver, eval_payoff

__all__ = [
    "SpaceTimeGrid",
    "PriceSurface",
    "SurfaceFamily",
    "InversionResult",
    "PdeFailure",
    "solve_semilinear",
    "build_family",
    "invert_z",
    "invert_z_field",
    "solve_hedge_value",
    "export_family_csv",
]

Terminal = Union[PayoffSpec, Callable[[np.ndarray], np.ndarray]]


class PdeFailure(RuntimeError):
    """Non-finite values or a diverging driver fixed point during a solve."""


@dataclass(frozen=True)
class SpaceTimeGrid:
    x_min: float
    x_max: float
    nx: int
    nt: int
    horizon: float

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        if self.nx < 3 or self.nt < 1:
            raise ValueError("need nx >= 3 and nt >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.nt + 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.horizon / self.nt


def default_grid(model: FactorModel, nx: int, nt: int, width: float = 6.0) -> SpaceTimeGrid:
    """f0 +/- width * sigma_max * sqrt(T); Gaussian tail mass < 1e-8 at width 6."""
    xs = np.linspace(model.f0 - 1.0, model.f0 + 1.0, 41)
    sig_max = max(
        float(np.max(np.broadcast_to(model.vol(xs, t), xs.shape)))
        for t in np.linspace(0.0, model.horizon, 9)
    )
    half = width * sig_max * np.sqrt(model.horizon)
    return SpaceTimeGrid(model.f0 - half, model.f0 + half, nx, nt, model.horizon)


@dataclass
class PriceSurface:
    """Solution values indexed (x-node, t-node); values[:, -1] is the terminal."""

    grid: SpaceTimeGrid
    values: np.ndarray
    terminal: Terminal

    def at(self, x, t):
        """Bilinear interpolation in (x, t)."""
        return _interp_xt(self.grid, self.values, x, t)


@dataclass
class InversionResult:
    y: float
    saturated: str  # "none" | "low" | "high"


@dataclass
class SurfaceFamily:
    """Indifference surfaces p(x, t, y) and their Z-field over a volume grid."""

    grid: SpaceTimeGrid
    y_grid: np.ndarray
    p: np.ndarray  # (ny, nx, nt+1)
    z: np.ndarray  # (ny, nx, nt+1)
    h_M: Optional[PayoffSpec] = None
    s: Optional[PayoffSpec] = None

    def __post_init__(self):
        y = np.asarray(self.y_grid, dtype=float)
        if y.ndim != 1 or np.any(np.diff(y) <= 0):
            raise ValueError("y_grid must be strictly increasing")
        self.y_grid = y

    def surface(self, i: int) -> PriceSurface:
        return PriceSurface(self.grid, self.p[i], None)

    def p_at(self, x, t, y):
        """Trilinear interpolation of p at (x, t, volume)."""
        return _interp_family(self.grid, self.y_grid, self.p, x, t, y)

    def z_at(self, x, t, y):
        return _interp_family(self.grid, self.y_grid, self.z, x, t, y)

    def z_profile(self, x, t) -> np.ndarray:
        """Z(x, t, y_i) for every volume node; (x, t) interpolated bilinearly."""
        return np.array([_interp_xt(self.grid, self.z[i], x, t) for i in range(len(self.y_grid))])

    def z_monotonicity_gap(self) -> float:
        """min over (x, t, adjacent y) of the y-increments of Z (diagnostic)."""
        return float(np.min(np.diff(self.z, axis=0)))


# ---------------------------------------------------------------------------
# solver


def _terminal_values(terminal: Terminal, x: np.ndarray) -> np.ndarray:
    if callable(terminal) and not hasattr(terminal, "value"):
        return np.asarray(terminal(x), dtype=float)
    return np.asarray(eval_payoff(terminal, x), dtype=float)


def first_derivative(values: np.ndarray, dx: float) -> np.ndarray:
    """Second-order d/dx along axis 0: central interior, one-sided at the ends."""
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dx)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dx)
    return out


def _banded_operator(grid: SpaceTimeGrid, model: FactorModel, t: float) -> np.ndarray:
    """I - dt*A in solve_banded layout (2 super-, 2 sub-diagonals).

    A p = mu p_x + sigma^2/2 p_xx with central differences; boundary rows
    carry only the one-sided drift term (p_xx = 0 there).
    """
    x = grid.x
    dx, dt = grid.dx, grid.dt
    mu = np.broadcast_to(model.drift(x, t), x.shape).astype(float)
    sig = np.broadcast_to(model.vol(x, t), x.shape).astype(float)
    n = grid.nx

    ab = np.zeros((5, n))
    # interior rows i: sub = dt*(mu/(2dx) - s2/(2dx^2)) etc. for (I - dt A)
    s2 = 0.5 * sig * sig
    lo = -dt * (-mu / (2.0 * dx) + s2 / (dx * dx))   # coefficient of p[i-1]
    di = 1.0 - dt * (-2.0 * s2 / (dx * dx))          # coefficient of p[i]
    hi = -dt * (mu / (2.0 * dx) + s2 / (dx * dx))    # coefficient of p[i+1]

    # solve_banded layout: ab[u + i - j, j] = M[i, j] with u = 2
    ab[2, :] = di
    ab[1, 1:] = hi[:-1]   # M[i, i+1]
    ab[3, :-1] = lo[1:]   # M[i, i-1]

    # boundary rows: M[0, :] from 1 - dt*mu*(-3, 4, -1)/(2dx)
    c0 = dt * mu[0] / (2.0 * dx)
    ab[2, 0] = 1.0 + 3.0 * c0
    ab[1, 1] = -4.0 * c0
    ab[0, 2] = c0
    cn = dt * mu[-1] / (2.0 * dx)
    ab[2, -1] = 1.0 - 3.0 * cn
    ab[3, -2] = 4.0 * cn
    ab[4, -3] = -cn
    return ab


def solve_semilinear(
    model: FactorModel,
    driver: DriverSpec,
    terminal: Terminal,
    grid: SpaceTimeGrid,
    fixed_point_tol: float = 1e-10,
    max_sweeps: int = 20,
) -> PriceSurface:
    """Backward solve of p_t + mu p_x + sigma^2/2 p_xx = g(-sigma p_x, t).

    Terminal condition imposed exactly at t = T; interior residual is
    O(dx^2 + dt).  The driver is evaluated explicitly from the previous
    time level, then corrected by fixed-point sweeps on the current level.
    """
    if abs(grid.horizon - model.horizon) > 1e-12:
        raise ValueError("grid horizon must match the model horizon")
    x = grid.x
    values = np.empty((grid.nx, grid.nt + 1))
    values[:, -1] = _terminal_values(terminal, x)
    if not np.all(np.isfinite(values[:, -1])):
        raise PdeFailure("non-finite terminal values")

    times = grid.times
    dt = grid.dt
    static = model.drift.time_independent and model.vol.time_independent
    ab = _banded_operator(grid, model, times[0]) if static else None

    for n in range(grid.nt - 1, -1, -1):
        t = times[n]
        ab_n = ab if static else _banded_operator(grid, model, t)
        sig = np.broadcast_to(model.vol(x, t), x.shape).astype(float)
        p_next = values[:, n + 1]

        p_curr = p_next
        for sweep in range(max_sweeps + 1):
            z = -sig * first_derivative(p_curr, grid.dx)
            gval = np.broadcast_to(eval_driver(driver, z, t), x.shape)
            rhs = p_next - dt * gval
            p_new = solve_banded((2, 2), ab_n, rhs)
            if not np.all(np.isfinite(p_new)):
                bad = int(np.argmax(~np.isfinite(p_new)))
                raise PdeFailure(
                    f"non-finite value at x-node {bad} (x={x[bad]:g}), t={t:g}"
                )
            gap = float(np.max(np.abs(p_new - p_curr)))
            p_curr = p_new
            if sweep > 0 and gap <= fixed_point_tol * (1.0 + float(np.max(np.abs(p_new)))):
                break
        else:
            raise PdeFailure(f"driver fixed point did not converge at t={t:g}")
        values[:, n] = p_curr

    return PriceSurface(grid, values, terminal)


def build_family(
    model: FactorModel,
    driver: DriverSpec,
    h_M: PayoffSpec,
    s: PayoffSpec,
    y_grid: Sequence[float],
    grid: SpaceTimeGrid,
) -> SurfaceFamily:
    """One semilinear solve per volume y, terminal h_M(x) - y s(x), plus Z."""
    y_grid = np.asarray(y_grid, dtype=float)
    ny = len(y_grid)
    p = np.empty((ny, grid.nx, grid.nt + 1))
    z = np.empty_like(p)
    x = grid.x
    sig = np.array(
        [np.broadcast_to(model.vol(x, t), x.shape) for t in grid.times]
    ).T  # (nx, nt+1)
    for i, y in enumerate(y_grid):
        def terminal(xv, _y=y):
            return eval_payoff(h_M, xv) - _y * eval_payoff(s, xv)

        try:
            p[i] = solve_semilinear(model, driver, terminal, grid).values
        except PdeFailure as exc:
            raise PdeFailure(f"y={y:g}: {exc}") from exc
        z[i] = -sig * first_derivative(p[i], grid.dx)
    return SurfaceFamily(grid, y_grid, p, z, h_M=h_M, s=s)


def solve_hedge_value(
    model: FactorModel,
    driver: DriverSpec,
    h_M: PayoffSpec,
    h_L: PayoffSpec,
    s: PayoffSpec,
    grid: SpaceTimeGrid,
) -> PriceSurface:
    """Hedge value surface: the semilinear solve with terminal h_M(x) + h_L(s(x))."""

    def terminal(xv):
        return eval_payoff(h_M, xv) + eval_payoff(h_L, eval_payoff(s, xv))

    return solve_semilinear(model, driver, terminal, grid)


# ---------------------------------------------------------------------------
# inversion


def invert_z_field(family: SurfaceFamily, targets: np.ndarray, zf: np.ndarray,
                   n_bisect: int = 60):
    """Vectorized volume inversion against Z-profiles.

    zf has shape (ny, ...) matching targets (...); returns (y, saturated)
    with saturated in {0: none, -1: low, +1: high}.  Picks the left-most
    bracketing interval ('inf' semantics) and bisects the linear
    interpolant inside it, which is deterministic.
    """
    y_grid = family.y_grid
    targets = np.asarray(targets, dtype=float)
    reached = zf >= targets[None, ...]
    any_reached = reached.any(axis=0)
    first = np.argmax(reached, axis=0)  # left-most index with Z >= target

    sat = np.zeros(targets.shape, dtype=int)
    sat[~any_reached] = 1                    # target above attainable range
    sat[targets < zf[0]] = -1                # target strictly below the lowest Z

    idx = np.clip(first, 1, len(y_grid) - 1)
    z_lo = np.take_along_axis(zf, (idx - 1)[None, ...], axis=0)[0]
    z_hi = np.take_along_axis(zf, idx[None, ...], axis=0)[0]
    lo = y_grid[idx - 1].astype(float)
    hi = y_grid[idx].astype(float)
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        w = (mid - y_grid[idx - 1]) / (y_grid[idx] - y_grid[idx - 1])
        zm = (1.0 - w) * z_lo + w * z_hi
        go_right = zm < targets
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)

    y = hi
    y = np.where(sat == -1, y_grid[0], y)
    y = np.where(sat == 1, y_grid[-1], y)
    return y, sat


_SAT_NAMES = {-1: "low", 0: "none", 1: "high"}


def invert_z(family: SurfaceFamily, x: float, t: float, target_z: float) -> InversionResult:
    """Left-most volume whose interpolated Z reaches target_z (Theorem-2 inf)."""
    grid = family.grid
    if not (grid.x_min <= x <= grid.x_max) or not (0.0 <= t <= grid.horizon):
        raise ValueError(f"(x, t)=({x}, {t}) outside the family grid")
    zf = family.z_profile(x, t)
    y, sat = invert_z_field(family, np.asarray([target_z]), zf[:, None])
    return InversionResult(float(y[0]), _SAT_NAMES[int(sat[0])])


# ---------------------------------------------------------------------------
# interpolation helpers


def _bracket(grid_vals: np.ndarray, q: np.ndarray):
    i = np.clip(np.searchsorted(grid_vals, q, side="right") - 1, 0, len(grid_vals) - 2)
    w = (q - grid_vals[i]) / (grid_vals[i + 1] - grid_vals[i])
    return i, w


def _interp_xt(grid: SpaceTimeGrid, values: np.ndarray, x, t):
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    t_arr = np.broadcast_to(np.asarray(t, dtype=float), x_arr.shape)
    ix, wx = _bracket(grid.x, x_arr)
    it, wt = _bracket(grid.times, t_arr)
    v = (
        (1 - wx) * (1 - wt) * values[ix, it]
        + wx * (1 - wt) * values[ix + 1, it]
        + (1 - wx) * wt * values[ix, it + 1]
        + wx * wt * values[ix + 1, it + 1]
    )
    return v if np.asarray(x).ndim else float(v[0])


def _interp_family(grid: SpaceTimeGrid, y_grid: np.ndarray, cube: np.ndarray, x, t, y):
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    shape = np.broadcast_shapes(x_arr.shape, np.asarray(y).shape, np.asarray(t).shape)
    x_arr = np.broadcast_to(np.asarray(x, dtype=float), shape)
    t_arr = np.broadcast_to(np.asarray(t, dtype=float), shape)
    y_arr = np.broadcast_to(np.asarray(y, dtype=float), shape)
    ix, wx = _bracket(grid.x, x_arr)
    it, wt = _bracket(grid.times, t_arr)
    iy, wy = _bracket(y_grid, y_arr)
    v = np.zeros(shape)
    for dy, fy in ((0, 1 - wy), (1, wy)):
        plane = (
            (1 - wx) * (1 - wt) * cube[iy + dy, ix, it]
            + wx * (1 - wt) * cube[iy + dy, ix + 1, it]
            + (1 - wx) * wt * cube[iy + dy, ix, it + 1]
            + wx * wt * cube[iy + dy, ix + 1, it + 1]
        )
        v = v + fy * plane
    scalar = not (np.asarray(x).ndim or np.asarray(y).ndim or np.asarray(t).ndim)
    return float(v.reshape(-1)[0]) if scalar else v


# ---------------------------------------------------------------------------
# export


def export_family_csv(family: SurfaceFamily, path) -> None:
    """CSV with header x,t,y,p,z; row-major over (y, t, x); 17 significant digits."""
    x = family.grid.x
    times = family.grid.times
    with open(path, "w") as fh:
        fh.write("x,t,y,p,z\n")
        for iy, y in enumerate(family.y_grid):
            for it, t in enumerate(times):
                for ix, xv in enumerate(x):
                    fh.write(
                        "%.17g,%.17g,%.17g,%.17g,%.17g\n"
                        % (xv, t, y, family.p[iy, ix, it], family.z[iy, ix, it])
                    )
