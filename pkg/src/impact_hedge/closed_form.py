"""Analytic benchmarks: exponential-utility quadrature surfaces, the affine
quadratic-driver case, the tanh/Burgers hedge family, Bachelier quantities,
replication cost and the call-payoff Z saturation limits.

These serve as independent oracles for the PDE and simulation modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import erfcx, logsumexp, ndtr, roots_hermite

from .model import LOG2, PayoffSpec, eval_payoff
from .pde import SpaceTimeGrid, SurfaceFamily

__all__ = [
    "ExpUtilitySpec",
    "PutBlockSpec",
    "exp_utility_surface",
    "exp_utility_z",
    "affine_case",
    "AffineCase",
    "affine_family",
    "burgers_tanh",
    "burgers_scaled",
    "shock_offset",
    "put_hedges",
    "logcosh_value",
    "replication_cost",
    "call_z_limits",
]

TimeFn = Union[float, Callable[[float], float]]


def _as_fn(v: TimeFn) -> Callable[[float], float]:
    if callable(v):
        return v
    return lambda t, _v=float(v): _v


@dataclass(frozen=True)
class ExpUtilitySpec:
    """Exponential utility with driver g(z,t) = beta(t) z + gamma z^2/2 on
    dF = b(t) dt + sigma(t) dW."""

    gamma: float
    h_M: PayoffSpec
    s: PayoffSpec
    b: TimeFn = 0.0
    beta: TimeFn = 0.0
    sigma: TimeFn = 1.0
    n_nodes: int = 201
    node_doubling_tol: float = 1e-9

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def B(self, t: float) -> float:
        bf, betaf = _as_fn(self.b), _as_fn(self.beta)
        if not (callable(self.b) or callable(self.beta)):
            return (float(self.b) + float(self.beta)) * t
        return quad(lambda u: bf(u) + betaf(u), 0.0, t)[0]

    def sigma_hat(self, t: float, T: float) -> float:
        sf = _as_fn(self.sigma)
        if not callable(self.sigma):
            return abs(float(self.sigma)) * np.sqrt(T - t)
        return np.sqrt(quad(lambda u: sf(u) ** 2, t, T)[0])


class QuadratureError(RuntimeError):
    """Node-doubling (or adaptive-error) disagreement above tolerance."""


def _payoff_kinks(payoff: PayoffSpec):
    name = type(payoff).__name__
    if name in ("Call", "Put"):
        return (float(payoff.k),)
    if name == "TablePayoff":
        return tuple(payoff.x[1:-1])
    return ()


def _log_integrand(spec: ExpUtilitySpec, m: float, sighat: float, y: float):
    g = spec.gamma

    def ell(u):
        u = np.asarray(u, dtype=float)
        payoff = eval_payoff(spec.h_M, u) - y * eval_payoff(spec.s, u)
        return -g * payoff - 0.5 * ((u - m) / sighat) ** 2

    return ell


def _probe(ell, m: float, sighat: float):
    """Locate the integrand mode and a finite window holding all its mass.

    Extreme tilts move the effective Gaussian center far from m, so the
    window is grown until the log-integrand has dropped ~800 nats below
    its peak at both ends (contributions there underflow to zero).
    """
    radius = 10.0 * sighat
    for _ in range(40):
        u = np.linspace(m - radius, m + radius, 4001)
        v = ell(u)
        vmax = float(np.max(v))
        if v[0] < vmax - 800.0 and v[-1] < vmax - 800.0:
            break
        radius *= 2.0
    i = int(np.argmax(v))
    du = u[1] - u[0]
    uu = np.linspace(u[i] - 2 * du, u[i] + 2 * du, 801)
    center = float(uu[np.argmax(ell(uu))])
    live = np.nonzero(v >= vmax - 800.0)[0]
    lo = float(u[max(live[0] - 1, 0)])
    hi = float(u[min(live[-1] + 1, len(u) - 1)])
    return center, lo, hi


def _gh_moments(spec: ExpUtilitySpec, x: float, t: float, T: float, y: float,
                n: int, center: float, m: float, sighat: float):
    """log I0 and the ratio I1/I0 via mode-centered Gauss-Hermite in log space.

    I0 = integral of exp{-gamma(h_M - y s)(u)} N(u; m, sighat^2) du,
    I1 = same with factor (u - m)/sighat^2 (the x-derivative identity).
    """
    ell = _log_integrand(spec, m, sighat, y)
    xi, w = roots_hermite(n)
    u = center + np.sqrt(2.0) * sighat * xi
    with np.errstate(divide="ignore"):
        logw = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)), -np.inf)
    # importance correction for the center shift: e^{xi^2 - ((u-m)/sighat)^2/2}
    # is folded in by evaluating ell directly and adding back xi^2
    terms = logw + xi * xi + ell(u)
    log_i0 = logsumexp(terms) + np.log(np.sqrt(2.0) * sighat) - 0.5 * np.log(2.0 * np.pi * sighat * sighat)
    shift = np.max(terms)
    den = np.sum(np.exp(terms - shift))
    num = np.sum((u - m) * np.exp(terms - shift))
    return log_i0, num / den / (sighat * sighat)


def _quad_moments(spec: ExpUtilitySpec, kinks, y: float, center: float,
                  lo: float, hi: float, m: float, sighat: float):
    """Adaptive quadrature split at payoff kinks (Hermite rules converge too
    slowly across a kink under strong tilts)."""
    ell = _log_integrand(spec, m, sighat, y)
    M = float(ell(center))
    cuts = sorted({k for k in kinks if lo < k < hi} | ({center} if lo < center < hi else set()))
    edges = [lo] + cuts + [hi]
    i0 = i1 = err0 = err1 = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v0, e0 = quad(lambda u: np.exp(ell(u) - M), a, b,
                      limit=200, epsabs=1e-12, epsrel=1e-11)
        v1, e1 = quad(lambda u: (u - m) * np.exp(ell(u) - M), a, b,
                      limit=200, epsabs=1e-12, epsrel=1e-11)
        i0 += v0
        i1 += v1
        err0 += e0
        err1 += e1
    scale1 = abs(i1) + i0 * (sighat + abs(center - m))
    if i0 <= 0 or err0 > 1e-7 * i0 or err1 > 1e-7 * scale1:
        raise QuadratureError(
            f"adaptive quadrature failed (err0={err0:.3e}, err1={err1:.3e}, i0={i0:.3e})"
        )
    log_i0 = M + np.log(i0) - 0.5 * np.log(2.0 * np.pi * sighat * sighat)
    return log_i0, i1 / i0 / (sighat * sighat)


def _moments_validated(spec: ExpUtilitySpec, x: float, t: float, T: float, y: float):
    sighat = spec.sigma_hat(t, T)
    m = x - spec.B(t) + spec.B(T)
    ell = _log_integrand(spec, m, sighat, y)
    center, lo, hi = _probe(ell, m, sighat)
    kinks = _payoff_kinks(spec.h_M) + _payoff_kinks(spec.s)
    if kinks:
        return _quad_moments(spec, kinks, y, center, lo, hi, m, sighat)
    log_i0, ratio = _gh_moments(spec, x, t, T, y, spec.n_nodes, center, m, sighat)
    log_i0_2, ratio_2 = _gh_moments(spec, x, t, T, y, 2 * spec.n_nodes - 1, center, m, sighat)
    p1 = -log_i0 / spec.gamma
    p2 = -log_i0_2 / spec.gamma
    if abs(p1 - p2) > spec.node_doubling_tol * (1.0 + abs(p2)):
        raise QuadratureError(
            f"node doubling disagreement {abs(p1 - p2):.3e} at (x={x}, t={t}, y={y})"
        )
    return log_i0_2, ratio_2


def exp_utility_surface(spec: ExpUtilitySpec, x: float, t: float, y: float,
                        T: float = None) -> float:
    """Indifference price p(x, t, y) = -(1/gamma) log E[exp(-gamma(h_M - y s))]."""
    if T is None:
        raise ValueError("pass the horizon T explicitly")
    if not t < T:
        raise ValueError("requires t < T")
    log_i0, _ = _moments_validated(spec, x, t, T, y)
    return -log_i0 / spec.gamma


def exp_utility_z(spec: ExpUtilitySpec, x: float, t: float, y: float,
                  T: float = None) -> float:
    """Z^y = -sigma(t) p_x via the quadrature identity p_x = -I1/(gamma I0)."""
    if T is None:
        raise ValueError("pass the horizon T explicitly")
    if not t < T:
        raise ValueError("requires t < T")
    _, ratio = _moments_validated(spec, x, t, T, y)
    sigma_t = _as_fn(spec.sigma)(t)
    dpdx = -ratio / spec.gamma
    return -sigma_t * dpdx


# ---------------------------------------------------------------------------
# affine case


@dataclass(frozen=True)
class AffineCase:
    p: float
    z: float
    a: float
    c: float

    def z_inverse(self, z):
        return self.a + np.asarray(z, dtype=float) / self.c


def affine_case(a: float, b: float, c: float, gamma: float, T: float,
                x: float, t: float, y: float) -> AffineCase:
    """p, Z and the volume inverse for s = b + c x, h_M = a s, quadratic driver.

    p = (a - y)(b + c x) - (T - t) gamma (a - y)^2 c^2 / 2,
    Z = -(a - y) c, Z^{-1}(z) = a + z / c.
    """
    if not c > 0:
        raise ValueError("requires c > 0")
    p = (a - y) * (b + c * x) - 0.5 * (T - t) * gamma * (a - y) ** 2 * c * c
    z = -(a - y) * c
    return AffineCase(float(p), float(z), float(a), float(c))


def affine_family(a: float, b: float, c: float, gamma: float,
                  grid: SpaceTimeGrid, y_grid) -> SurfaceFamily:
    """Exact SurfaceFamily for the affine case (closed form, no PDE error)."""
    from .model import Affine

    y_grid = np.asarray(y_grid, dtype=float)
    x = grid.x
    tau = grid.horizon - grid.times  # (nt+1,)
    p = np.empty((len(y_grid), grid.nx, grid.nt + 1))
    z = np.empty_like(p)
    for i, y in enumerate(y_grid):
        lin = (a - y) * (b + c * x)
        p[i] = lin[:, None] - 0.5 * gamma * (a - y) ** 2 * c * c * tau[None, :]
        z[i] = -(a - y) * c
    s = Affine(b, c)
    return SurfaceFamily(grid, y_grid, p, z, h_M=Affine(b, c, scale=a), s=s)


# ---------------------------------------------------------------------------
# Burgers / put block


def burgers_tanh(gamma: float, delta: float, x, t):
    """Traveling-wave solution u = 1 - tanh(gamma x + gamma^2 t + delta) of
    u_t + u_xx/2 = gamma u u_x (backward Burgers)."""
    return 1.0 - np.tanh(gamma * np.asarray(x, dtype=float) + gamma * gamma * t + delta)


def burgers_scaled(gamma: float, delta: float, lam: float, x, t):
    """lambda-rescaling u_lam(x,t) = lam u(lam x, lam^2 t), again a solution."""
    return lam * burgers_tanh(gamma, delta, lam * np.asarray(x, dtype=float), lam * lam * t)


def shock_offset(lam: float, gamma: float, b: float, K: float, c: float, T: float) -> float:
    """Offset delta of the put-block shockwave: lam gamma (b - K) - gamma^2 lam^2 c^2 T."""
    return lam * gamma * (b - K) - gamma ** 2 * lam ** 2 * c ** 2 * T


@dataclass(frozen=True)
class PutBlockSpec:
    """Block of 2*lam smoothed puts on S = b + c W_T under quadratic driver."""

    lam: float
    gamma: float
    b: float
    c: float
    K: float
    T: float
    a: float = 0.0

    def __post_init__(self):
        if not (self.c > 0 and self.lam > 0 and self.gamma >= 0):
            raise ValueError("requires c > 0, lam > 0, gamma >= 0")


def _logcosh(u):
    u = np.abs(np.asarray(u, dtype=float))
    return u + np.log1p(np.exp(-2.0 * u)) - LOG2


@dataclass(frozen=True)
class PutHedges:
    y_impact: float
    y_bachelier: float
    bachelier_price: float


def put_hedges(spec: PutBlockSpec, w, t):
    """Impact hedge, Bachelier hedge, and the Bachelier put value at W_t = w."""
    lam, g, b, c, K, T = spec.lam, spec.gamma, spec.b, spec.c, spec.K, spec.T
    if not t < T:
        raise ValueError("requires t < T")
    s_t = b + c * np.asarray(w, dtype=float)
    arg = g * lam * (s_t - K) - g * g * lam * lam * c * c * (T - t)
    y_impact = -lam * (1.0 - np.tanh(arg))
    d = (K - s_t) / (c * np.sqrt(T - t))
    y_bachelier = -2.0 * lam * ndtr(d)
    price = 2.0 * lam * ((K - s_t) * ndtr(d) + c * np.sqrt(T - t) * _phi(d))
    if np.asarray(w).ndim:
        return PutHedges(y_impact, y_bachelier, price)
    return PutHedges(float(y_impact), float(y_bachelier), float(price))


def _phi(d):
    return np.exp(-0.5 * np.asarray(d, dtype=float) ** 2) / np.sqrt(2.0 * np.pi)


def logcosh_value(spec: PutBlockSpec, x, t):
    """Hedge value v(x, t) for the put block (a = 0, gamma > 0)."""
    lam, g, b, c, K, T = spec.lam, spec.gamma, spec.b, spec.c, spec.K, spec.T
    if g <= 0:
        raise ValueError("closed form needs gamma > 0")
    s = b + c * np.asarray(x, dtype=float)
    arg = lam * g * (s - K) - lam * lam * g * g * c * c * (T - t)
    return lam * (s - K - lam * g * c * c * (T - t) - _logcosh(arg) / (lam * g))


def logcosh_hedge_field(spec: PutBlockSpec, x, t):
    """Y*(x, t) = -lam (1 - tanh(...)) for the put block."""
    lam, g, b, c, K, T = spec.lam, spec.gamma, spec.b, spec.c, spec.K, spec.T
    s = b + c * np.asarray(x, dtype=float)
    return -lam * (1.0 - np.tanh(lam * g * (s - K) - lam * lam * g * g * c * c * (T - t)))


def replication_cost(spec: PutBlockSpec):
    """Exact initial replication cost of the put block and its kinked approximation.

    exact  = lam (K - S0 + lam g c^2 T + logcosh(lam g (K - S0) + lam^2 g^2 c^2 T)/(lam g)),
    approx = 2 lam (K - S0 + lam g c^2 T)_+.
    """
    lam, g, c, K, T = spec.lam, spec.gamma, spec.c, spec.K, spec.T
    if g <= 0:
        raise ValueError("needs gamma > 0")
    s0 = spec.b  # W_0 = 0
    arg = -lam * g * (K - s0) - lam * lam * g * g * c * c * T
    exact = lam * (K - s0 + lam * g * c * c * T + _logcosh(arg) / (lam * g))
    approx = 2.0 * lam * max(K - s0 + lam * g * c * c * T, 0.0)
    return float(exact), float(approx)


# ---------------------------------------------------------------------------
# call saturation limits


@dataclass(frozen=True)
class CallZLimits:
    lower: float
    upper_unbounded: bool = True


def call_z_limits(gamma: float, k: float, w: float, tau: float) -> CallZLimits:
    """Z^y limits for s(x) = (x - k)_+, h_M = 0: finite lower saturation
    -phi(d)/(gamma sqrt(tau) Phi(d)) with d = (k - w)/sqrt(tau); unbounded above.

    The ratio phi/Phi is evaluated via erfcx so that deep-in-the-money
    arguments (Phi(d) underflowing) stay finite and accurate.
    """
    if not (tau > 0 and gamma > 0):
        raise ValueError("requires tau > 0 and gamma > 0")
    d = (k - w) / np.sqrt(tau)
    # phi(d)/Phi(d) = sqrt(2/pi) / erfcx(-d/sqrt(2))
    hazard = np.sqrt(2.0 / np.pi) / erfcx(-d / np.sqrt(2.0))
    return CallZLimits(lower=float(-hazard / (gamma * np.sqrt(tau))))
