"""Factor dynamics, g-expectation drivers and payoff functions.

Everything here is a pure function of immutable inputs; the PDE and
simulation modules consume these pointwise evaluators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "CoefficientSpec",
    "FactorModel",
    "ZeroDriver",
    "LinearDriver",
    "QuadraticDriver",
    "GoodDealDriver",
    "DriverSpec",
    "Affine",
    "Call",
    "Put",
    "LogCoshPut",
    "TablePayoff",
    "PayoffSpec",
    "eval_driver",
    "eval_payoff",
    "project_min_norm",
    "project_kernel",
    "driver_dimension",
]

LOG2 = float(np.log(2.0))


class InvalidSpecError(ValueError):
    """A domain type violates one of its invariants."""


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class CoefficientSpec:
    """Scalar coefficient c(x, t): constant, affine in x, or tabulated.

    Tables use linear interpolation inside the grid and constant
    extrapolation outside, which keeps the Lipschitz screen meaningful.
    """

    kind: str  # "constant" | "affine" | "time_table" | "xt_table"
    params: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            (v,) = self.params
            if not np.isfinite(v):
                raise InvalidSpecError("constant coefficient must be finite")
        elif self.kind == "affine":
            a0, a1 = self.params
            if not (np.isfinite(a0) and np.isfinite(a1)):
                raise InvalidSpecError("affine coefficients must be finite")
        elif self.kind == "time_table":
            t, v = self.params
            _check_table_axis(np.asarray(t), "time_table t-grid")
            if not np.all(np.isfinite(v)):
                raise InvalidSpecError("time_table values must be finite")
        elif self.kind == "xt_table":
            x, t, v = self.params
            _check_table_axis(np.asarray(x), "xt_table x-grid")
            _check_table_axis(np.asarray(t), "xt_table t-grid")
            if not np.all(np.isfinite(v)):
                raise InvalidSpecError("xt_table values must be finite")
        else:
            raise InvalidSpecError(f"unknown coefficient kind {self.kind!r}")

    @property
    def time_independent(self) -> bool:
        return self.kind in ("constant", "affine")

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(self.params[0], x.shape).copy() if x.ndim else float(self.params[0])
        if self.kind == "affine":
            a0, a1 = self.params
            return a0 + a1 * x
        if self.kind == "time_table":
            tg, vg = self.params
            out = np.interp(float(t), tg, vg)
            return np.broadcast_to(out, x.shape).copy() if x.ndim else float(out)
        # xt_table: linear in x at the two bracketing time slabs, then in t
        xg, tg, vg = (np.asarray(a, dtype=float) for a in self.params)
        tc = np.clip(float(t), tg[0], tg[-1])
        j = min(int(np.searchsorted(tg, tc, side="right")) - 1, len(tg) - 2)
        j = max(j, 0)
        w = 0.0 if tg[j + 1] == tg[j] else (tc - tg[j]) / (tg[j + 1] - tg[j])
        lo = np.interp(x, xg, vg[:, j])
        hi = np.interp(x, xg, vg[:, j + 1])
        out = (1.0 - w) * lo + w * hi
        return out if x.ndim else float(out)

    def lipschitz_in_x(self, x_grid: np.ndarray, t_samples: np.ndarray) -> float:
        """Largest finite-difference slope |dc/dx| over the sampled domain."""
        worst = 0.0
        for t in np.atleast_1d(t_samples):
            v = self(x_grid, float(t))
            v = np.broadcast_to(v, x_grid.shape)
            slopes = np.abs(np.diff(v) / np.diff(x_grid))
            if slopes.size:
                worst = max(worst, float(slopes.max()))
        return worst


def _check_table_axis(g: np.ndarray, name: str) -> None:
    if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
        raise InvalidSpecError(f"{name} must be strictly increasing with >= 2 nodes")


def constant(v: float) -> CoefficientSpec:
    return CoefficientSpec("constant", (float(v),))


def affine_coeff(a0: float, a1: float) -> CoefficientSpec:
    return CoefficientSpec("affine", (float(a0), float(a1)))


@dataclass(frozen=True)
class FactorModel:
    """Economic-factor diffusion dF = mu(F,t) dt + sigma(F,t) dW on [0, T]."""

    f0: float
    drift: CoefficientSpec
    vol: CoefficientSpec
    horizon: float
    sigma_min: float = 1e-12
    lipschitz_bound: float = 1e6

    def __post_init__(self):
        if not self.horizon > 0:
            raise InvalidSpecError("horizon must be positive")
        if not np.isfinite(self.f0):
            raise InvalidSpecError("f0 must be finite")

    def validate_on(self, x_grid: np.ndarray, n_t_samples: int = 9) -> None:
        """Screen sigma positivity and the Lipschitz bound on a grid."""
        x_grid = np.asarray(x_grid, dtype=float)
        ts = np.linspace(0.0, self.horizon, n_t_samples)
        for t in ts:
            sig = np.broadcast_to(self.vol(x_grid, float(t)), x_grid.shape)
            if np.any(sig < self.sigma_min):
                raise InvalidSpecError(
                    f"sigma below sigma_min={self.sigma_min} at t={t}"
                )
        for coeff, name in ((self.drift, "drift"), (self.vol, "vol")):
            lip = coeff.lipschitz_in_x(x_grid, ts)
            if lip > self.lipschitz_bound:
                raise InvalidSpecError(
                    f"{name} Lipschitz screen failed: {lip} > {self.lipschitz_bound}"
                )


# ---------------------------------------------------------------------------
# drivers


@dataclass(frozen=True)
class ZeroDriver:
    """Risk-neutral evaluation: g == 0."""

    def g(self, z, t):
        z = np.asarray(z, dtype=float)
        return np.zeros(z.shape) if z.ndim else 0.0


@dataclass(frozen=True)
class LinearDriver:
    """g(z, t) = G(t) z, the tilted-measure (Girsanov) evaluation."""

    G: CoefficientSpec

    def g(self, z, t):
        z = np.asarray(z, dtype=float)
        g = self.G(0.0, t)
        out = g * z
        return out if z.ndim else float(out)


@dataclass(frozen=True)
class QuadraticDriver:
    """g(z, t) = beta(t) z + gamma z^2 / 2, the exponential-utility driver."""

    gamma: float
    beta: CoefficientSpec = field(default_factory=lambda: constant(0.0))

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidSpecError("quadratic driver requires gamma > 0")

    def g(self, z, t):
        z = np.asarray(z, dtype=float)
        b = self.beta(0.0, t)
        out = b * z + 0.5 * self.gamma * z * z
        return out if z.ndim else float(out)


@dataclass(frozen=True)
class GoodDealDriver:
    """Good-deal-bound driver on d-dimensional noise.

    g(z, t) = -sqrt(Lambda - |P_B(0)|^2) |P_Ker(A)(z)| + z . P_B(0),
    where B = {x : A x = b}.  Note the driver is evaluated as printed in
    its source (an upper, ess-sup evaluation); its first term is concave
    in z, unlike the other variants.
    """

    A: np.ndarray
    b: np.ndarray
    Lambda: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if A.shape[0] != b.shape[0]:
            raise InvalidSpecError("A and b are incompatible")
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise InvalidSpecError("A must have full row rank")
        pb0 = project_min_norm(A, b)
        object.__setattr__(self, "_pb0", pb0)
        slack = self.Lambda - float(pb0 @ pb0)
        if slack <= 0:
            raise InvalidSpecError(
                "good-deal driver requires Lambda > |P_B(0)|^2"
            )
        object.__setattr__(self, "_root", float(np.sqrt(slack)))

    @property
    def dimension(self) -> int:
        return self.A.shape[1]

    def g(self, z, t):
        z = np.asarray(z, dtype=float)
        if self.dimension == 1:
            # kernel of a full-rank 1x1 A is {0}: the driver is linear
            out = float(self._pb0[0]) * z
            return out if z.ndim else float(out)
        if z.shape != (self.dimension,):
            raise InvalidSpecError(
                f"good-deal driver expects a {self.dimension}-vector, got shape {z.shape}"
            )
        zk = project_kernel(self.A, z)
        return float(-self._root * np.linalg.norm(zk) + z @ self._pb0)


DriverSpec = Union[ZeroDriver, LinearDriver, QuadraticDriver, GoodDealDriver]


def driver_dimension(driver: DriverSpec) -> int:
    return driver.dimension if isinstance(driver, GoodDealDriver) else 1


def eval_driver(driver: DriverSpec, z, t: float):
    """Evaluate g(z, t).  Scalar-noise drivers accept arrays elementwise."""
    return driver.g(z, t)


def project_min_norm(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of A x = b via the normal equations A A^T w = b."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    gram = A @ A.T
    try:
        w = cho_solve(cho_factor(gram), b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own
        raise InvalidSpecError("rank-deficient A in project_min_norm") from exc
    return A.T @ w


def project_kernel(A: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Orthogonal projection of z onto the kernel of A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    w = cho_solve(cho_factor(A @ A.T), A @ z)
    return z - A.T @ w


# ---------------------------------------------------------------------------
# payoffs


@dataclass(frozen=True)
class Affine:
    """a0 + a1 x, optionally rescaled."""

    a0: float
    a1: float
    scale: float = 1.0

    def value(self, x):
        return self.scale * (self.a0 + self.a1 * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Call:
    k: float
    scale: float = 1.0

    def value(self, x):
        return self.scale * np.maximum(np.asarray(x, dtype=float) - self.k, 0.0)


@dataclass(frozen=True)
class Put:
    k: float
    scale: float = 1.0

    def value(self, x):
        return self.scale * np.maximum(self.k - np.asarray(x, dtype=float), 0.0)


@dataclass(frozen=True)
class LogCoshPut:
    """Smoothed block of 2*lam puts: lam (K - x + log cosh(lam g (K - x)) / (lam g)).

    Evaluated in overflow-safe form |u| + log1p(e^{-2|u|}) - log 2 for
    u = lam * gamma * (K - x); the raw cosh overflows once |u| > ~700.
    """

    lam: float
    gamma: float
    k: float
    scale: float = 1.0

    def __post_init__(self):
        if self.lam <= 0 or self.gamma <= 0:
            raise InvalidSpecError("LogCoshPut requires lam > 0 and gamma > 0")

    def value(self, x):
        m = self.k - np.asarray(x, dtype=float)
        u = self.lam * self.gamma * m
        logcosh = np.abs(u) + np.log1p(np.exp(-2.0 * np.abs(u))) - LOG2
        return self.scale * (self.lam * m + logcosh / self.gamma)


@dataclass(frozen=True)
class TablePayoff:
    x: tuple
    values: tuple
    scale: float = 1.0

    def __post_init__(self):
        xg = np.asarray(self.x, dtype=float)
        vg = np.asarray(self.values, dtype=float)
        _check_table_axis(xg, "payoff table x-grid")
        if vg.shape != xg.shape or not np.all(np.isfinite(vg)):
            raise InvalidSpecError("payoff table values must be finite and match the grid")
        object.__setattr__(self, "x", tuple(xg))
        object.__setattr__(self, "values", tuple(vg))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        xg = np.asarray(self.x)
        if np.any(x < xg[0]) or np.any(x > xg[-1]):
            raise InvalidSpecError("x outside payoff table domain")
        return self.scale * np.interp(x, xg, np.asarray(self.values))

    def is_monotone(self) -> bool:
        v = np.asarray(self.values) * np.sign(self.scale or 1.0)
        return bool(np.all(np.diff(v) >= 0) or np.all(np.diff(v) <= 0))


PayoffSpec = Union[Affine, Call, Put, LogCoshPut, TablePayoff]


def eval_payoff(payoff: PayoffSpec, x):
    """Evaluate the payoff at x (scalar or array)."""
    out = payoff.value(x)
    return out if np.asarray(x).ndim else float(out)
