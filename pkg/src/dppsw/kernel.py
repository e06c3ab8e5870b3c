"""Correlation kernels of the drifted noncolliding Brownian motion.

The z-space kernel is ``K_N(t; x, y) = sqrt(w(x) w(y)) sum_j R_j(x) T_j(y)``
with ``theta = a / (sigma t)`` and ``q = exp(-sigma^2 t)``.  The real-line
kernel is its pull-back under ``z = exp(sigma x + shift)``.

Every kernel is assembled from per-point basis functions kept in signed-log
form, so nothing overflows before the final sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import LOG_SAFE, det_small, gauss_legendre_rule, signed_logsumexp
from .swpoly import (
    PolyTable,
    basis_log,
    build_table,
    eval_p,
    eval_p_derivative,
    hermite_fn,
    sw_table,
)

__all__ = [
    "ModelParams",
    "KernelHandle",
    "make_kernel",
    "weight_w",
    "weight_sw",
    "kernel_K",
    "kernel_matrix",
    "kernel_K_t0",
    "kernel_mapped",
    "mapped_matrix",
    "density",
    "correlation",
    "correlation_z",
    "gap_probability",
    "kernel_scaled_q1",
    "hermite_kernel",
    "gue_density",
    "semicircle_density",
    "particle_density",
]


@dataclass(frozen=True)
class ModelParams:
    """N particles started at ``a * rho`` with drifts ``sigma * rho`` observed at time t."""

    N: int
    a: float
    sigma: float
    t: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not (self.a > 0 and self.sigma > 0 and self.t > 0):
            raise ValueError("a, sigma and t must all be positive")

    @property
    def theta(self) -> float:
        return self.a / (self.sigma * self.t)

    @property
    def q(self) -> float:
        return math.exp(-self.sigma ** 2 * self.t)

    @property
    def t0(self) -> float:
        return self.a / self.sigma

    @property
    def q0(self) -> float:
        return math.exp(-self.a * self.sigma)

    @property
    def shift(self) -> float:
        """Additive constant in ``ln z = sigma x + shift``."""
        N = self.N
        return (N - 1) * self.a * self.sigma / 2 + (N + 1) * self.sigma ** 2 * self.t / 2

    @property
    def rho(self) -> np.ndarray:
        return np.arange(1, self.N + 1) - (self.N + 1) / 2

    @property
    def initial_points(self) -> np.ndarray:
        return self.a * self.rho

    @property
    def drifts(self) -> np.ndarray:
        return self.sigma * self.rho

    def at_time(self, t: float) -> "ModelParams":
        return ModelParams(self.N, self.a, self.sigma, t)

    def support_range(self, margin_sd: float = 10.0) -> tuple[float, float]:
        """An x-interval outside which the one-point density is negligible."""
        half = (self.a + self.sigma * self.t) * (self.N - 1) / 2 + margin_sd * math.sqrt(self.t) + 2.0
        return -half, half


@dataclass(frozen=True)
class KernelHandle:
    params: ModelParams
    table: PolyTable = field(repr=False)
    shift: float

    @property
    def N(self) -> int:
        return self.params.N


def make_kernel(params: ModelParams) -> KernelHandle:
    table = build_table(params.theta, params.q, params.N - 1)
    return KernelHandle(params, table, params.shift)


# ---------------------------------------------------------------------------
# weights


def _log_weight(z, q):
    v = -math.log(q)
    lz = np.log(z)
    return -lz * lz / (2 * v) - 0.5 * math.log(2 * math.pi * v)


def weight_w(z, q: float):
    """Log-normal weight exp(-(ln z)^2 / (2|ln q|)) / sqrt(2 pi |ln q|)."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("the weight is defined for z > 0 only")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    out = np.exp(_log_weight(z, q))
    return float(out) if out.ndim == 0 else out


def weight_sw(z, sigma: float, t: float):
    """The same weight written as (beta / sqrt(pi)) exp(-beta^2 (ln z)^2), beta = 1/(sigma sqrt(2t))."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("the weight is defined for z > 0 only")
    beta = 1.0 / (sigma * math.sqrt(2 * t))
    out = beta / math.sqrt(math.pi) * np.exp(-(beta * np.log(z)) ** 2)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# basis functions


def _z_basis(handle: KernelHandle, z, extra_log=0.0):
    """Signed logs of R_j(z) sqrt(w(z)) and T_j(z) sqrt(w(z)), j < N."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("z-space kernel arguments must be positive")
    N = handle.N
    half_w = 0.5 * _log_weight(z, handle.table.q) + extra_log
    sr, lr = basis_log(handle.table.R, N, z)
    st, lt = basis_log(handle.table.T, N, z)
    return (sr, lr + half_w), (st, lt + half_w)


def _mapped_basis(handle: KernelHandle, x):
    x = np.asarray(x, dtype=float)
    sigma = handle.params.sigma
    lz = sigma * x + handle.shift
    # square root of the Jacobian dz/dx = sigma z, split evenly between arguments
    return _z_basis(handle, np.exp(lz), extra_log=0.5 * (math.log(sigma) + lz))


def _pair_sum(left, right):
    """sum_j left_j(x) right_j(y) for already broadcast-compatible arrays."""
    sl, ll = left
    sr, lr = right
    sign, logv = signed_logsumexp(sl * sr, ll + lr, axis=0)
    out = sign * np.exp(np.where(sign != 0, logv, 0.0))
    return float(out) if np.ndim(out) == 0 else out


def _outer(left, right):
    """Matrix [sum_j left_j(x_i) right_j(y_k)]_{ik} for 1-D point sets."""
    sl, ll = left
    sr, lr = right
    if np.all(np.abs(ll) < LOG_SAFE) and np.all(np.abs(lr) < LOG_SAFE):
        return (sl * np.exp(ll)).T @ (sr * np.exp(lr))
    sign, logv = signed_logsumexp(sl[:, :, None] * sr[:, None, :], ll[:, :, None] + lr[:, None, :], axis=0)
    return sign * np.exp(np.where(sign != 0, logv, 0.0))


def kernel_K(handle: KernelHandle, x, y):
    """z-space kernel K_N(t; x, y) at broadcast-compatible points."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    left, _ = _z_basis(handle, x)
    _, right = _z_basis(handle, y)
    return _pair_sum(left, right)


def kernel_matrix(handle: KernelHandle, xs, ys=None):
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = xs if ys is None else np.atleast_1d(np.asarray(ys, float))
    left, _ = _z_basis(handle, xs)
    _, right = _z_basis(handle, ys)
    return _outer(left, right)


def kernel_mapped(handle: KernelHandle, x, y):
    """Real-line kernel K_N(t; e^{sigma x + shift}, e^{sigma y + shift}) sigma e^{sigma(x+y)/2 + shift}."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    left, _ = _mapped_basis(handle, x)
    _, right = _mapped_basis(handle, y)
    return _pair_sum(left, right)


def mapped_matrix(handle: KernelHandle, xs, ys=None):
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = xs if ys is None else np.atleast_1d(np.asarray(ys, float))
    left, _ = _mapped_basis(handle, xs)
    _, right = _mapped_basis(handle, ys)
    return _outer(left, right)


def density(handle: KernelHandle, x):
    """One-point density on the real line (diagonal of the mapped kernel)."""
    return kernel_mapped(handle, x, x)


def correlation(handle: KernelHandle, points: Sequence[float]) -> float:
    """N'-point correlation det[K(x_j, x_k)] on the real line."""
    pts = np.atleast_1d(np.asarray(points, float))
    if pts.size > handle.N:
        raise ValueError("correlation order exceeds the particle number")
    return det_small(mapped_matrix(handle, pts)).to_real()


def correlation_z(handle: KernelHandle, points: Sequence[float]) -> float:
    """Same correlation in z-coordinates."""
    pts = np.atleast_1d(np.asarray(points, float))
    if pts.size > handle.N:
        raise ValueError("correlation order exceeds the particle number")
    return det_small(kernel_matrix(handle, pts)).to_real()


def gap_probability(handle: KernelHandle, interval: tuple[float, float], nystrom_size: int = 64) -> float:
    """Probability that no particle lies in ``interval`` (real-line coordinates).

    Fredholm determinant det(I - W^1/2 K W^1/2) on Gauss-Legendre nodes.
    """
    lo, hi = interval
    if not lo < hi:
        raise ValueError("need lo < hi")
    if nystrom_size < 4:
        raise ValueError("nystrom_size must be at least 4")
    rule = gauss_legendre_rule(lo, hi, nystrom_size)
    sw = np.sqrt(rule.weights)
    A = sw[:, None] * mapped_matrix(handle, rule.nodes) * sw[None, :]
    sign, logdet = np.linalg.slogdet(np.eye(nystrom_size) - A)
    return float(sign * np.exp(logdet))


# ---------------------------------------------------------------------------
# the special time t0 = a / sigma (theta = 1)


def _sw_basis(q0, count, z):
    fam = sw_table(float(q0), max(count - 1, 1))
    sg, lg = basis_log(fam, count, z)
    return sg, lg + 0.5 * _log_weight(z, q0)


def _cd_threshold(x):
    return 1e-4 * (1.0 + np.abs(x))


def kernel_K_t0(q0: float, N: int, x, y, form: str = "auto"):
    """Stieltjes-Wigert kernel sqrt(w w) sum_{j<N} p_j(x) p_j(y).

    ``form`` selects the plain sum (``"sum"``), the Christoffel-Darboux
    ratio (``"cd"``; the confluent derivative form on the diagonal), or
    ``"auto"``, which takes the CD ratio unless ``|x - y|`` is below
    ``1e-4 (1 + |x|)`` where the divided difference loses digits.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("kernel arguments must be positive")
    if form == "sum":
        left = _sw_basis(q0, N, x)
        right = _sw_basis(q0, N, y)
        return _pair_sum(left, right)
    if form not in ("cd", "auto"):
        raise ValueError(f"unknown form {form!r}")
    pref = math.sqrt(1 - q0 ** N) / q0 ** (2 * N)
    sqw = np.exp(0.5 * (_log_weight(x, q0) + _log_weight(y, q0)))
    pNx, pNy = eval_p(q0, N, x), eval_p(q0, N, y)
    pMx, pMy = eval_p(q0, N - 1, x), eval_p(q0, N - 1, y)
    diff = x - y
    near = np.abs(diff) < _cd_threshold(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = pref * sqw * (pNx * pMy - pMx * pNy) / diff
    if form == "cd":
        if np.any(diff == 0):
            dN = eval_p_derivative(q0, N, x)
            dM = eval_p_derivative(q0, N - 1, x)
            diag = pref * sqw * (dN * pMx - dM * pNx)
            off = np.where(diff == 0, diag, off)
        return float(off) if off.ndim == 0 else off
    if np.any(near):
        summed = kernel_K_t0(q0, N, x, y, form="sum")
        off = np.where(near, summed, off)
    return float(off) if np.ndim(off) == 0 else off


# ---------------------------------------------------------------------------
# q -> 1 scaling and the zero-drift (GUE) limit


def kernel_scaled_q1(q: float, N: int, xt, yt):
    """Kernel in the rescaled variables z = q^{-3/2} sqrt(2(1-q)) x + q^{-1/2}, with Jacobian."""
    scale = q ** -1.5 * math.sqrt(2 * (1 - q))
    xt, yt = np.broadcast_arrays(np.asarray(xt, float), np.asarray(yt, float))
    zx = scale * xt + q ** -0.5
    zy = scale * yt + q ** -0.5
    if np.any(zx <= 0) or np.any(zy <= 0):
        raise ValueError("rescaled point falls outside the positive half-line")
    return kernel_K_t0(q, N, zx, zy, form="sum") * scale


def hermite_kernel(N: int, x, y):
    """sum_{j<N} phi_j(x) phi_j(y) with Hermite functions phi_j."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    out = np.zeros(x.shape)
    for j in range(N):
        out = out + hermite_fn(j, x) * hermite_fn(j, y)
    return float(out) if out.ndim == 0 else out


def gue_density(N: int, t: float, x, form: str = "sum"):
    """Density of N noncolliding Brownian motions without drift started at 0."""
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, float)
    u = x / math.sqrt(2 * t)
    if form == "sum":
        out = sum(hermite_fn(j, u) ** 2 for j in range(N))
    elif form == "cd":
        out = N * hermite_fn(N, u) ** 2 - math.sqrt(N * (N + 1)) * hermite_fn(N - 1, u) * hermite_fn(N + 1, u)
    else:
        raise ValueError(f"unknown form {form!r}")
    out = np.asarray(out) / math.sqrt(2 * t)
    return float(out) if out.ndim == 0 else out


def semicircle_density(N: int, t: float, x):
    """Large-N semicircle approximation of :func:`gue_density`."""
    x = np.asarray(x, float)
    r2 = 4 * N * t
    out = np.where(x * x <= r2, np.sqrt(np.clip(r2 - x * x, 0, None)) / (2 * math.pi * t), 0.0)
    return float(out) if out.ndim == 0 else out


def particle_density(N: int, a: float, sigma: float, t: float, x):
    """Real-line density; ``a = sigma = 0`` selects the driftless process from the origin."""
    if a == 0 and sigma == 0:
        return gue_density(N, t, x)
    return density(make_kernel(ModelParams(N, a, sigma, t)), x)
