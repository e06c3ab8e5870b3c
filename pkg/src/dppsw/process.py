"""Exact probability densities of the noncolliding Brownian motion with drift.

Contents
--------
* free and drifted Gaussian transition densities
* Karlin-McGregor / Lindstrom-Gessel-Viennot determinants
* the drifted noncolliding transition density and its zero-drift h-transform
* the multitime density for equidistant starts ``a rho`` and drifts ``sigma rho``
  together with its images under ``y = e^{sigma x}`` and the ``z`` rescaling
* normalization constants, the partition function and a moment oracle for it
* survival probabilities by quadrature over the Weyl chamber
* geometric Brownian motion transition densities

Every density is accumulated in log space and exponentiated once at the end.
Public density functions accept ``log=True`` to get the :class:`SignedLog`
instead of a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .kernel import ModelParams, weight_w
from .numerics import SignedLog, det_small, gauss_legendre_rule, integrate_against_weight
from .qseries import q_pochhammer
from .swpoly import build_table, eval_R, eval_T

__all__ = [
    "Configuration",
    "DriftSpec",
    "MultitimeSpec",
    "gaussian_p",
    "drifted_p",
    "km_lgv_det",
    "exp_det",
    "bbo_density",
    "h_transform_density",
    "vandermonde",
    "gue_started_at_zero",
    "log_cN_multitime",
    "multitime_density",
    "geo_transition",
    "geo_transition_general",
    "geo_symmetric_kernel",
    "speed_measure_density",
    "geo_km_lgv_det",
    "transformed_density_y",
    "log_CN",
    "biorthogonal_density_z",
    "determinantal_density_z",
    "partition_function",
    "partition_function_quadrature",
    "log_c_hat",
    "t0_ensemble_density",
    "gue_limit_density",
    "weyl_quad",
    "survival_probability",
    "survival_limit",
    "zero_drift_multitime_density",
    "noncolliding_geo_density",
]

_LOG_2PI = math.log(2 * math.pi)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Configuration:
    """Particle positions.

    Parameters
    ----------
    points : sequence of float
    domain : {"real-line", "positive-half-line"}
    ordered : bool
        If set, the points must be strictly increasing (a point of the Weyl
        chamber).
    """

    points: tuple
    domain: str = "real-line"
    ordered: bool = True

    def __post_init__(self):
        pts = tuple(float(p) for p in np.atleast_1d(np.asarray(self.points, dtype=float)))
        object.__setattr__(self, "points", pts)
        if len(pts) == 0:
            raise ValueError("a configuration needs at least one point")
        if not all(math.isfinite(p) for p in pts):
            raise ValueError("configuration points must be finite")
        if self.domain not in ("real-line", "positive-half-line"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == "positive-half-line" and min(pts) <= 0:
            raise ValueError("positive-half-line configurations need all points > 0")
        if self.ordered and any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("ordered configuration must be strictly increasing")

    def __len__(self) -> int:
        return len(self.points)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.points, dtype=dtype)


@dataclass(frozen=True)
class DriftSpec:
    """Drift coefficients, weakly increasing."""

    nu: tuple

    def __post_init__(self):
        nu = tuple(float(v) for v in np.atleast_1d(np.asarray(self.nu, dtype=float)))
        object.__setattr__(self, "nu", nu)
        if any(b < a for a, b in zip(nu, nu[1:])):
            raise ValueError("drifts must be weakly increasing")

    @classmethod
    def special(cls, N: int, sigma: float) -> "DriftSpec":
        """``nu_j = sigma (j - (N + 1) / 2)``."""
        return cls(tuple(sigma * (np.arange(1, N + 1) - (N + 1) / 2)))

    @property
    def distinct(self) -> bool:
        return all(b > a for a, b in zip(self.nu, self.nu[1:]))

    def __len__(self) -> int:
        return len(self.nu)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.nu, dtype=dtype)


@dataclass(frozen=True)
class MultitimeSpec:
    """Configurations observed at increasing times ``t_1 < ... < t_M``."""

    times: tuple
    configurations: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        confs = tuple(c if isinstance(c, Configuration) else Configuration(c) for c in self.configurations)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "configurations", confs)
        if len(times) < 1:
            raise ValueError("need at least one time")
        if len(times) != len(confs):
            raise ValueError("one configuration per time is required")
        if times[0] <= 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must be positive and strictly increasing")
        if len({len(c) for c in confs}) != 1:
            raise ValueError("all configurations must have the same length")

    @property
    def M(self) -> int:
        return len(self.times)

    @property
    def N(self) -> int:
        return len(self.configurations[0])


def _pts(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _finish(value: SignedLog, log: bool):
    return value if log else value.to_real()


# ---------------------------------------------------------------------------
# one-particle transition densities


def gaussian_p(t: float, y, x):
    """Heat kernel ``exp(-(y - x)^2 / 2t) / sqrt(2 pi t)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    y = np.asarray(y, float)
    x = np.asarray(x, float)
    out = np.exp(-((y - x) ** 2) / (2 * t)) / math.sqrt(2 * math.pi * t)
    return float(out) if out.ndim == 0 else out


def drifted_p(t: float, y, x, nu: float):
    """Brownian motion with drift ``nu``: ``e^{nu (y - x) - nu^2 t / 2} p(t, y|x)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    y = np.asarray(y, float)
    x = np.asarray(x, float)
    logv = nu * (y - x) - nu * nu * t / 2 - ((y - x) ** 2) / (2 * t) - 0.5 * math.log(2 * math.pi * t)
    out = np.exp(logv)
    return float(out) if out.ndim == 0 else out


def _log_det_of_exp(L: np.ndarray) -> SignedLog:
    """det[exp(L_jk)] with row and column maxima pulled out first."""
    L = np.asarray(L, float)
    if L.size == 0:
        return SignedLog.one()
    rmax = L.max(axis=1, keepdims=True)
    L = L - rmax
    cmax = L.max(axis=0, keepdims=True)
    L = L - cmax
    d = det_small(np.exp(L))
    return d * SignedLog(1, float(rmax.sum() + cmax.sum()))


def km_lgv_det(t: float, y, x, log: bool = True):
    """Karlin-McGregor determinant ``det[p(t, y_j | x_k)]``.

    Returns a :class:`SignedLog` by default.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    y, x = _pts(y), _pts(x)
    if y.size != x.size:
        raise ValueError("configurations must have equal length")
    L = -((y[:, None] - x[None, :]) ** 2) / (2 * t)
    out = _log_det_of_exp(L) * SignedLog(1, -0.5 * y.size * math.log(2 * math.pi * t))
    return _finish(out, log)


def exp_det(nu, x) -> SignedLog:
    """``det[exp(nu_j x_k)]`` (rows indexed by the drifts)."""
    nu, x = _pts(nu), _pts(x)
    if nu.size != x.size:
        raise ValueError("drift and configuration lengths differ")
    return _log_det_of_exp(nu[:, None] * x[None, :])


def _check_ordered(x, name, strict=True):
    x = _pts(x)
    d = np.diff(x)
    if np.any(d < 0) or (strict and np.any(d == 0)):
        raise ValueError(f"{name} must be {'strictly ' if strict else ''}increasing")
    return x


def bbo_density(t: float, y, x, nu, log: bool = False):
    """Transition density of drifted Brownian motions conditioned never to collide.

    ``e^{-t|nu|^2/2} det[e^{nu_j y_k}] / det[e^{nu_j x_k}] q_N(t, y|x)``.
    Coincident drifts are rejected; for zero drift use
    :func:`h_transform_density`.
    """
    nu = _pts(nu)
    x = _check_ordered(x, "x")
    y = _check_ordered(y, "y", strict=False)
    if np.any(np.diff(nu) <= 0):
        raise ValueError("drifts must be strictly increasing; coincident drifts need the "
                         "dedicated zero-drift density h_transform_density")
    out = (SignedLog(1, -t * float(nu @ nu) / 2) * exp_det(nu, y) / exp_det(nu, x)
           * km_lgv_det(t, y, x))
    return _finish(out, log)


def vandermonde(x) -> SignedLog:
    """``prod_{j<k} (x_k - x_j)`` as a :class:`SignedLog`."""
    x = _pts(x)
    out = SignedLog.one()
    for j in range(x.size):
        for k in range(j + 1, x.size):
            out = out * SignedLog.from_real(x[k] - x[j])
    return out


def h_transform_density(t: float, y, x, log: bool = False):
    """Zero-drift noncolliding density ``h_N(y) / h_N(x) q_N(t, y|x)``."""
    x = _check_ordered(x, "x")
    y = _check_ordered(y, "y", strict=False)
    out = vandermonde(y) / vandermonde(x) * km_lgv_det(t, y, x)
    return _finish(out, log)


def gue_started_at_zero(t: float, y, log: bool = False):
    """All particles started at the origin: GUE eigenvalue density with variance t.

    ``t^{-N^2/2} / ((2 pi)^{N/2} prod_{j<=N} Gamma(j)) h_N(y)^2 e^{-|y|^2 / 2t}``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    y = _check_ordered(y, "y", strict=False)
    N = y.size
    logc = -N * N / 2 * math.log(t) - N / 2 * _LOG_2PI - float(sum(gammaln(j) for j in range(1, N + 1)))
    out = SignedLog(1, logc - float(y @ y) / (2 * t)) * vandermonde(y) ** 2
    return _finish(out, log)


# ---------------------------------------------------------------------------
# the multitime density for the equidistant special case


def _log_expm1(u: float) -> float:
    """log(e^u - 1) for u > 0."""
    return u + math.log(-math.expm1(-u))


def _log_2sinh_pairs(x, scale: float) -> SignedLog:
    """``prod_{j<k} 2 sinh(scale (x_k - x_j) / 2)``."""
    x = _pts(x)
    total = SignedLog.one()
    for j in range(x.size):
        for k in range(j + 1, x.size):
            u = scale * (x[k] - x[j])
            if u == 0:
                return SignedLog.zero()
            au = abs(u)
            total = total * SignedLog(1 if u > 0 else -1, _log_expm1(au) - au / 2)
    return total


def log_cN_multitime(N: int, a: float, sigma: float, t1: float, tM: float) -> float:
    """log of the multitime normalization constant ``c_N(a, sigma, t_1, t_M)``."""
    val = -sum((N - n) * _log_expm1(n * a * sigma) for n in range(1, N))
    val -= N * (N * N - 1) * (sigma ** 2 * tM - 2 * a * sigma + a * a / t1) / 24
    return val


def multitime_density(spec: MultitimeSpec, params: ModelParams, form: str = "sinh", log: bool = False):
    """Joint density of the positions at times ``t_1 < ... < t_M``.

    The process starts from ``a rho`` with drifts ``sigma rho`` (both from
    ``params``; ``params.t`` is ignored).  ``form="sinh"`` uses products of
    ``2 sinh`` factors and is the default.  ``form="exp"`` evaluates the
    equivalent difference-of-exponentials form with plain floats and exists
    for cross-checks only.
    """
    if spec.N != params.N:
        raise ValueError("configuration length differs from params.N")
    N, a, s = params.N, params.a, params.sigma
    t1, tM = spec.times[0], spec.times[-1]
    xs = [_pts(c) for c in spec.configurations]
    x1, xM = xs[0], xs[-1]
    out = SignedLog(1, log_cN_multitime(N, a, s, t1, tM))
    for m in range(spec.M - 1):
        out = out * km_lgv_det(spec.times[m + 1] - spec.times[m], xs[m + 1], xs[m])
    out = out * SignedLog(1, float(np.sum(-x1 ** 2 / (2 * t1))) - N / 2 * math.log(2 * math.pi * t1))
    if form == "sinh":
        out = out * _log_2sinh_pairs(xM, s) * _log_2sinh_pairs(x1, a / t1)
    elif form == "exp":
        out = out * SignedLog.from_real(_exp_form_factor(xM, s)) * SignedLog.from_real(_exp_form_factor(x1, a / t1))
    else:
        raise ValueError(f"unknown form {form!r}")
    return _finish(out, log)


def _exp_form_factor(x: np.ndarray, c: float) -> float:
    """``prod_l (e^{c x_l})^{-(N-1)/2} prod_{j<k} (e^{c x_k} - e^{c x_j})`` in floats."""
    N = x.size
    e = np.exp(c * x)
    val = float(np.prod(e ** (-(N - 1) / 2)))
    for j in range(N):
        for k in range(j + 1, N):
            val *= e[k] - e[j]
    return val


# ---------------------------------------------------------------------------
# geometric Brownian motion


def geo_transition(t: float, y, x, sigma: float):
    """Log-normal transition density of ``X(t) = x exp(sigma B(t))``."""
    return geo_transition_general(t, y, x, sigma, 0.0)


def geo_transition_general(t: float, y, x, sigma: float, nu_tilde: float):
    """Geometric Brownian motion with percentage drift ``(2 nu~ + 1) sigma^2 / 2``.

    ``exp(-(ln(y/x) - nu~ sigma^2 t)^2 / (2 sigma^2 t)) / (y sigma sqrt(2 pi t))``.
    """
    if t <= 0 or sigma <= 0:
        raise ValueError("t and sigma must be positive")
    y = np.asarray(y, float)
    x = np.asarray(x, float)
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("geometric Brownian motion lives on the positive half-line")
    s2t = sigma * sigma * t
    out = np.exp(-((np.log(y / x) - nu_tilde * s2t) ** 2) / (2 * s2t)) / (y * sigma * math.sqrt(2 * math.pi * t))
    return float(out) if out.ndim == 0 else out


def geo_symmetric_kernel(t: float, x, y, sigma: float, nu_tilde: float = 0.0):
    """Transition density with respect to the speed measure; symmetric in x and y."""
    if t <= 0 or sigma <= 0:
        raise ValueError("t and sigma must be positive")
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("arguments must be positive")
    out = (sigma / (2 * math.sqrt(2 * math.pi * t)) * (x * y) ** (-nu_tilde)
           * np.exp(-sigma ** 2 * nu_tilde ** 2 * t / 2 - (np.log(y) - np.log(x)) ** 2 / (2 * sigma ** 2 * t)))
    return float(out) if out.ndim == 0 else out


def speed_measure_density(y, sigma: float, nu_tilde: float = 0.0):
    """``m(dy)/dy = (2 / sigma^2) y^{2 nu~ - 1}``."""
    y = np.asarray(y, float)
    out = 2 / sigma ** 2 * y ** (2 * nu_tilde - 1)
    return float(out) if out.ndim == 0 else out


def geo_km_lgv_det(t: float, y, x, sigma: float) -> SignedLog:
    """``det[p_geo(t, y_j | x_k)]`` as a SignedLog."""
    y, x = _pts(y), _pts(x)
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("geometric configurations must be positive")
    ly, lx = np.log(y), np.log(x)
    L = -((ly[:, None] - lx[None, :]) ** 2) / (2 * sigma ** 2 * t)
    pref = -float(ly.sum()) - y.size * (math.log(sigma) + 0.5 * math.log(2 * math.pi * t))
    return _log_det_of_exp(L) * SignedLog(1, pref)


def _power_pairs(y: np.ndarray, theta: float) -> SignedLog:
    """``prod_l y_l^{-(N-1) theta / 2} prod_{j<k} (y_k^theta - y_j^theta)``, cancellation-free."""
    ly = np.log(y)
    out = SignedLog.one()
    for j in range(y.size):
        for k in range(j + 1, y.size):
            u = theta * (ly[k] - ly[j])
            if u == 0:
                return SignedLog.zero()
            out = out * SignedLog(1 if u > 0 else -1, _log_expm1(abs(u)) + theta * min(ly[j], ly[k])
                                  - theta * (ly[j] + ly[k]) / 2)
    return out


def transformed_density_y(spec: MultitimeSpec, params: ModelParams, log: bool = False):
    """Multitime density of ``y = e^{sigma x}`` on the positive half-line.

    The initial-time factor carries the exponent ``theta(t_1) = a / (sigma t_1)``.
    """
    if spec.N != params.N:
        raise ValueError("configuration length differs from params.N")
    N, a, s = params.N, params.a, params.sigma
    ys = [_pts(c) for c in spec.configurations]
    for y in ys:
        if np.any(y <= 0):
            raise ValueError("y-configurations must be positive")
    t1, tM = spec.times[0], spec.times[-1]
    theta1 = a / (s * t1)
    y1, yM = ys[0], ys[-1]
    out = SignedLog(1, log_cN_multitime(N, a, s, t1, tM))
    out = out * _power_pairs(yM, 1.0)
    for m in range(spec.M - 1):
        out = out * geo_km_lgv_det(spec.times[m + 1] - spec.times[m], ys[m + 1], ys[m], s)
    ly1 = np.log(y1)
    out = out * SignedLog(1, float(np.sum(-ly1 ** 2 / (2 * s * s * t1) - ly1))
                          - N * (math.log(s) + 0.5 * math.log(2 * math.pi * t1)))
    out = out * _power_pairs(y1, theta1)
    return _finish(out, log)


# ---------------------------------------------------------------------------
# the single-time z-space ensemble


def log_CN(params: ModelParams) -> float:
    """log of the single-time normalization ``C_N(a, sigma, t)``."""
    N, a, s, t = params.N, params.a, params.sigma, params.t
    val = -sum((N - n) * _log_expm1(n * a * s) for n in range(1, N))
    val -= N / 12 * ((N + 1) * (2 * N + 1) * s * s * t + 2 * (N * N - 1) * a * s
                     + (N - 1) * (2 * N - 1) * a * a / t)
    return val


def _log_weights(z: np.ndarray, q: float) -> float:
    return float(np.sum(np.log(weight_w(z, q))))


def _check_z(z):
    z = _check_ordered(z, "z", strict=False)
    if np.any(z <= 0):
        raise ValueError("z-configurations must be positive")
    return z


def biorthogonal_density_z(z, params: ModelParams, log: bool = False):
    """``C_N prod w(z_j) prod_{j<k} (z_k - z_j)(z_k^theta - z_j^theta)`` at time ``params.t``."""
    z = _check_z(z)
    if z.size != params.N:
        raise ValueError("configuration length differs from params.N")
    ln_w = float(np.sum(-np.log(z) ** 2 / (2 * params.sigma ** 2 * params.t)))
    ln_w -= z.size * 0.5 * math.log(2 * math.pi * params.sigma ** 2 * params.t)
    out = SignedLog(1, log_CN(params) + ln_w) * vandermonde(z) * vandermonde(z ** params.theta)
    return _finish(out, log)


def determinantal_density_z(z, params: ModelParams, log: bool = False):
    """``prod w(z_j) det[T_{k-1}(z_j)] det[R_{k-1}(z_j)]`` from the biorthogonal polynomials."""
    z = _check_z(z)
    N = params.N
    if z.size != N:
        raise ValueError("configuration length differs from params.N")
    table = build_table(params.theta, params.q, N - 1)
    mT = np.array([[eval_T(table, k, zj) for k in range(N)] for zj in z])
    mR = np.array([[eval_R(table, k, zj) for k in range(N)] for zj in z])
    out = SignedLog(1, _log_weights(z, params.q)) * det_small(mT) * det_small(mR)
    return _finish(out, log)


def partition_function(params: ModelParams) -> SignedLog:
    """``Z = 1 / C_N`` as a SignedLog (the log grows like N^3)."""
    return SignedLog(1, -log_CN(params))


def partition_function_quadrature(params: ModelParams, rule_size: int = 200) -> SignedLog:
    """Independent estimate of Z for small N.

    The Weyl-chamber integral of ``prod w h_N(z) h_N(z^theta)`` equals
    ``det[int z^{j + theta k} w(z) dz]`` (Andreief), and each entry is
    computed by Gauss-Hermite quadrature on the log axis.
    """
    N, theta, q = params.N, params.theta, params.q
    if N > 3:
        raise ValueError("the quadrature oracle is restricted to N <= 3")
    v = -math.log(q)
    mom = np.empty((N, N))
    for j in range(N):
        for k in range(N):
            s = j + theta * k
            mom[j, k] = integrate_against_weight(lambda z, s=s: z ** s, q, rule_size, center=(s + 1) * v)
    return det_small(mom)


def log_c_hat(q0: float, N: int) -> float:
    """log of ``q0^{N(4N^2-1)/6} / prod_{j<N} (q0; q0)_j``."""
    val = N * (4 * N * N - 1) / 6 * math.log(q0)
    for j in range(1, N):
        val -= q_pochhammer(q0, q0, j).logmag
    return val


def t0_ensemble_density(q0: float, z, log: bool = False):
    """Stieltjes-Wigert ensemble ``c_hat prod w(z_j; q0) h_N(z)^2`` (the time ``t0 = a / sigma``)."""
    if not 0 < q0 < 1:
        raise ValueError("q0 must lie in (0, 1)")
    z = _check_z(z)
    out = SignedLog(1, log_c_hat(q0, z.size) + _log_weights(z, q0)) * vandermonde(z) ** 2
    return _finish(out, log)


def gue_limit_density(zt, log: bool = False):
    """q -> 1 limit: GUE density with variance 1/2 in the variables ``z~``."""
    zt = _check_ordered(zt, "z~", strict=False)
    N = zt.size
    logc = N * N / 2 * math.log(2) - N / 2 * _LOG_2PI - float(sum(gammaln(j) for j in range(1, N + 1)))
    out = SignedLog(1, logc - float(zt @ zt)) * vandermonde(zt) ** 2
    return _finish(out, log)


# ---------------------------------------------------------------------------
# Weyl-chamber quadrature and survival probabilities


def weyl_quad(f: Callable[[np.ndarray], np.ndarray], N: int, lo: float, hi: float, nodes: int = 96,
              panels: int = 1) -> float:
    """Integrate ``f`` over ``lo < y_1 < ... < y_N < hi`` by nested Gauss-Legendre.

    ``f`` receives an ``(n_points, N)`` array.  Each level uses ``panels``
    equal sub-intervals with ``nodes`` points each.
    """
    if N < 1 or N > 3:
        raise ValueError("weyl_quad supports 1 <= N <= 3")
    if not hi > lo:
        raise ValueError("need lo < hi")
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, 1.0, panels + 1)
    # composite rule on [0, 1]
    u = np.concatenate([edges[i] + (edges[i + 1] - edges[i]) * (x + 1) / 2 for i in range(panels)])
    uw = np.concatenate([(edges[i + 1] - edges[i]) / 2 * w for i in range(panels)])
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    for _level in range(N):
        start = pts[:, -1] if pts.shape[1] else np.full(pts.shape[0], lo)
        span = hi - start
        new = start[:, None] + span[:, None] * u[None, :]
        pts = np.concatenate([np.repeat(pts, u.size, axis=0), new.reshape(-1, 1)], axis=1)
        wts = (wts[:, None] * span[:, None] * uw[None, :]).reshape(-1)
    return float(np.sum(wts * np.asarray(f(pts), float)))


def _drifted_kmlgv_rows(T: float, Y: np.ndarray, x: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """``q_N^nu(T, y|x)`` for every row of ``Y`` (vectorized, N <= 3)."""
    N = x.size
    P = np.exp(-((Y[:, :, None] - x[None, None, :]) ** 2) / (2 * T)) / math.sqrt(2 * math.pi * T)
    det = np.linalg.det(P) if N > 1 else P[:, 0, 0]
    return np.exp(Y @ nu - float(nu @ x) - float(nu @ nu) * T / 2) * det


def survival_probability(T: float, x, nu, nodes: int = 96, panels: int = 4) -> float:
    """Probability that drifted Brownian motions from ``x`` have not collided by time T.

    Integral of the drift-transformed Karlin-McGregor determinant over the
    Weyl chamber; limited to N <= 3.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    x = _check_ordered(x, "x")
    nu = _check_ordered(nu, "nu", strict=False)
    N = x.size
    if nu.size != N:
        raise ValueError("drift and configuration lengths differ")
    if N > 3:
        raise ValueError("survival_probability by quadrature is limited to N <= 3")
    if N == 1:
        return 1.0
    # every permutation term of the determinant peaks at x_s(j) + nu_j T
    spread = 12 * math.sqrt(T)
    lo = float(x.min() + nu.min() * T - spread)
    hi = float(x.max() + nu.max() * T + spread)
    return weyl_quad(lambda Y: _drifted_kmlgv_rows(T, Y, x, nu), N, lo, hi, nodes, panels)


def survival_limit(x, nu) -> float:
    """Large-time limit ``e^{-nu.x} det[e^{nu_j x_k}]``."""
    x, nu = _pts(x), _pts(nu)
    return (SignedLog(1, -float(nu @ x)) * exp_det(nu, x)).to_real()


# ---------------------------------------------------------------------------
# zero-drift multitime densities and their geometric images


def zero_drift_multitime_density(spec: MultitimeSpec, x0, log: bool = False):
    """Multitime density of the driftless noncolliding motion from ``x0`` (strictly ordered)."""
    x0 = _check_ordered(x0, "x0")
    xs = [_pts(c) for c in spec.configurations]
    out = vandermonde(xs[-1]) * km_lgv_det(spec.times[0], xs[0], x0) / vandermonde(x0)
    for m in range(spec.M - 1):
        out = out * km_lgv_det(spec.times[m + 1] - spec.times[m], xs[m + 1], xs[m])
    return _finish(out, log)


def noncolliding_geo_density(spec: MultitimeSpec, y0, sigma: float, log: bool = False):
    """Multitime density of geometric Brownian motions conditioned never to collide."""
    y0 = _check_ordered(y0, "y0")
    if np.any(y0 <= 0):
        raise ValueError("y0 must be positive")
    ys = [_pts(c) for c in spec.configurations]
    for y in ys:
        if np.any(y <= 0):
            raise ValueError("configurations must be positive")
    out = vandermonde(np.log(ys[-1])) * geo_km_lgv_det(spec.times[0], ys[0], y0, sigma) / vandermonde(np.log(y0))
    for m in range(spec.M - 1):
        out = out * geo_km_lgv_det(spec.times[m + 1] - spec.times[m], ys[m + 1], ys[m], sigma)
    return _finish(out, log)
