"""Stieltjes-Wigert polynomials, the biorthogonal pair T_n / R_n, and
Hermite polynomials/functions.

All coefficient tables live in log space: a term is ``sign * exp(logc + e*ln x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .numerics import SignedLog, signed_logsumexp
from .qseries import q_binomial, q_derivative, q_pochhammer

__all__ = [
    "ParameterRangeError",
    "PolyTable",
    "build_table",
    "eval_T",
    "eval_R",
    "eval_p",
    "eval_p_derivative",
    "basis_log",
    "sw_table",
    "sw_recurrence_eval",
    "NormalizationConstants",
    "normalization_constants",
    "moment_T",
    "moment_R",
    "hermite",
    "hermite_fn",
    "MAX_DEGREE",
]

MAX_DEGREE = 32
_LOG_FLOAT_MAX = 709.0


class ParameterRangeError(ValueError):
    """Raised when a parameter combination leaves the representable range."""


@dataclass(frozen=True)
class _Family:
    """Coefficients of one polynomial family, rows indexed by degree.

    ``exps[n, l]`` is the power of x carried by term ``l`` of degree ``n``;
    unused slots (l > n) have sign 0.
    """

    exps: np.ndarray
    signs: np.ndarray
    logc: np.ndarray

    def terms(self, n: int) -> list[tuple[float, SignedLog]]:
        return [(float(self.exps[n, l]), SignedLog(int(self.signs[n, l]), float(self.logc[n, l])))
                for l in range(n + 1)]


@dataclass(frozen=True)
class PolyTable:
    theta: float
    q: float
    max_degree: int
    T: _Family = field(repr=False)
    R: _Family = field(repr=False)
    p: _Family = field(repr=False)

    @property
    def coeffs_T(self):
        return [self.T.terms(n) for n in range(self.max_degree + 1)]

    @property
    def coeffs_R(self):
        return [self.R.terms(n) for n in range(self.max_degree + 1)]

    @property
    def coeffs_p(self):
        return [self.p.terms(n) for n in range(self.max_degree + 1)]


def _log_qpoch(a, q, n):
    v = q_pochhammer(a, q, n)
    if v.sign <= 0:
        raise ParameterRangeError("q-Pochhammer symbol is not positive")
    return v.logmag


def _check(theta, q, max_degree):
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if not 0 <= max_degree <= MAX_DEGREE:
        raise ParameterRangeError(f"max_degree must be in [0, {MAX_DEGREE}], got {max_degree}")


def _sw_family(q: float, max_degree: int) -> _Family:
    size = max_degree + 1
    exps = np.zeros((size, size))
    signs = np.zeros((size, size))
    logc = np.full((size, size), -np.inf)
    lq = math.log(q)
    for n in range(size):
        pref = (2 * n + 1) / 4 * lq - 0.5 * _log_qpoch(q, q, n)
        for l in range(n + 1):
            exps[n, l] = l
            signs[n, l] = (-1) ** (n + l)
            logc[n, l] = pref + q_binomial(n, l, q).logmag + (l * l + 0.5 * l) * lq
    return _Family(exps, signs, logc)


@lru_cache(maxsize=256)
def build_table(theta: float, q: float, max_degree: int) -> PolyTable:
    """Coefficient tables of T_n, R_n (at ``theta, q``) and p_n (at ``q``).

    T_n is a polynomial in ``x**theta`` and R_n, p_n are ordinary
    polynomials; every family has ``n + 1`` terms at degree ``n`` with signs
    alternating in the term index.
    """
    theta = float(theta)
    q = float(q)
    _check(theta, q, max_degree)
    size = max_degree + 1
    lq = math.log(q)
    qt = q ** theta
    tex = np.zeros((size, size))
    rex = np.zeros((size, size))
    signs = np.zeros((size, size))
    tlog = np.full((size, size), -np.inf)
    rlog = np.full((size, size), -np.inf)
    for n in range(size):
        lqq = _log_qpoch(q, q, n)
        lqt = _log_qpoch(qt, qt, n)
        t_pref = 0.5 * lqq + (n * theta + 0.5) / 2 * lq - lqt
        r_pref = (n * theta + 0.5) / 2 * lq - 0.5 * lqq
        for l in range(n + 1):
            binom = q_binomial(n, l, qt).logmag
            signs[n, l] = (-1) ** (n + l)
            tex[n, l] = theta * l
            rex[n, l] = l
            tlog[n, l] = t_pref + binom + theta * l * (l * (theta + 1) + 1) / 2 * lq
            rlog[n, l] = r_pref + binom + l * (l * (theta + 1) + (1 - theta) + 1) / 2 * lq
    if not (np.all(np.isfinite(tlog[signs != 0])) and np.all(np.isfinite(rlog[signs != 0]))):
        raise ParameterRangeError("non-finite polynomial coefficient")
    return PolyTable(theta, q, max_degree, _Family(tex, signs, tlog), _Family(rex, signs.copy(), rlog),
                     _sw_family(q, max_degree))


@lru_cache(maxsize=64)
def sw_table(q: float, max_degree: int) -> _Family:
    """Stieltjes-Wigert coefficients alone (no theta dependence)."""
    _check(1.0, q, max_degree)
    return _sw_family(float(q), max_degree)


# ---------------------------------------------------------------------------
# evaluation


def _poly_log(fam: _Family, n: int, x, deriv: bool = False):
    """Signed log value of degree-n member of ``fam`` at points ``x``."""
    x = np.asarray(x, dtype=float)
    exps = fam.exps[n, : n + 1]
    signs = fam.signs[n, : n + 1].copy()
    logc = fam.logc[n, : n + 1].copy()
    if deriv:
        with np.errstate(divide="ignore"):
            logc = logc + np.log(exps)
        signs = np.where(exps == 0, 0.0, signs)
        exps = exps - 1.0
        exps = np.where(signs == 0, 0.0, exps)
    integral = np.all(exps == np.round(exps))
    if np.any(x < 0) and not integral:
        raise ValueError("non-integer powers need x > 0")
    ax = np.abs(x)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(ax)
        # 0 * log(0) must vanish for the constant term
        lterm = np.where(exps == 0, 0.0, exps * lx)
    lterm = np.where((ax == 0) & (exps > 0), -np.inf, lterm)
    s = np.broadcast_to(signs, lterm.shape)
    if integral and np.any(x < 0):
        parity = np.where((x[..., None] < 0) & (np.round(exps) % 2 == 1), -1.0, 1.0)
        s = s * parity
    return signed_logsumexp(s, logc + lterm, axis=-1)


def _to_real(sign, logv):
    if np.any(np.where(sign != 0, logv, 0.0) > _LOG_FLOAT_MAX):
        raise ParameterRangeError("polynomial value overflows double precision")
    out = sign * np.exp(np.where(sign != 0, logv, 0.0))
    return float(out) if np.ndim(out) == 0 else out


def _check_degree(table, n):
    if not 0 <= n <= table.max_degree:
        raise ValueError(f"degree {n} outside table range 0..{table.max_degree}")


def eval_T(table: PolyTable, n: int, x):
    _check_degree(table, n)
    if np.any(np.asarray(x) <= 0) and table.theta != round(table.theta):
        raise ValueError("T_n needs x > 0 for non-integer theta")
    return _to_real(*_poly_log(table.T, n, x))


def eval_R(table: PolyTable, n: int, x):
    _check_degree(table, n)
    return _to_real(*_poly_log(table.R, n, x))


def eval_p(q: float, n: int, x):
    """Stieltjes-Wigert polynomial p_n(x; q) from its explicit sum."""
    return _to_real(*_poly_log(sw_table(float(q), max(n, 1)), n, x))


def eval_p_derivative(q: float, n: int, x):
    """Exact derivative of p_n from the differentiated coefficient table."""
    if n == 0:
        return 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else 0.0
    return _to_real(*_poly_log(sw_table(float(q), n), n, x, deriv=True))


def basis_log(fam: _Family, count: int, x):
    """Signed logs of the first ``count`` members at ``x``: arrays (count, *x.shape)."""
    x = np.asarray(x, dtype=float)
    sg = np.empty((count,) + x.shape)
    lg = np.empty((count,) + x.shape)
    for n in range(count):
        sg[n], lg[n] = _poly_log(fam, n, x)
    return sg, lg


def sw_recurrence_eval(q: float, n: int, x):
    """p_n(x; q) by the three-term recurrence seeded with p_0 and p_1."""
    x = np.asarray(x, dtype=float)
    p0 = np.full_like(x, q ** 0.25)
    if n == 0:
        return float(p0) if p0.ndim == 0 else p0
    p1 = -q ** 0.75 / math.sqrt(1 - q) * (1 - q ** 1.5 * x)
    prev, cur = p0, p1
    for k in range(2, n + 1):
        qk = q ** k
        a = (q ** (2 * k) * x - math.sqrt(q) * (1 + q - qk)) / math.sqrt(1 - qk)
        c = q * q * math.sqrt(1 - q ** (k - 1)) / math.sqrt(1 - qk)
        prev, cur = cur, a * cur - c * prev
    return float(cur) if cur.ndim == 0 else cur


# ---------------------------------------------------------------------------
# normalisation constants and moment integrals


@dataclass(frozen=True)
class NormalizationConstants:
    theta: float
    q: float
    t_n: tuple
    r_n: tuple


def normalization_constants(theta: float, q: float, max_degree: int) -> NormalizationConstants:
    """t_n = int x^n T_n w and r_n = int x^(theta n) R_n w, closed form."""
    _check(theta, q, max_degree)
    lq = math.log(q)
    qt = q ** theta
    t, r = [], []
    for n in range(max_degree + 1):
        lqq = _log_qpoch(q, q, n)
        lqt = _log_qpoch(qt, qt, n)
        t.append(SignedLog(1, 0.5 * lqq + (-(n + 0.5) ** 2 - (theta - 1) * n * n / 2) * lq))
        r.append(SignedLog(1, lqt - 0.5 * lqq + (-(n * theta + 0.5) ** 2 + n * n * theta * (theta - 1) / 2) * lq))
    return NormalizationConstants(theta, q, tuple(t), tuple(r))


def _d_prefactors(theta, q, n):
    lqq = _log_qpoch(q, q, n)
    lqt = _log_qpoch(q ** theta, q ** theta, n)
    lq = math.log(q)
    d = SignedLog((-1) ** n, 0.5 * lqq + (n * theta + 0.5) / 2 * lq - lqt)
    dbar = SignedLog((-1) ** n, (n * theta + 0.5) / 2 * lq - 0.5 * lqq)
    return d, dbar


def moment_T(theta: float, q: float, n: int, m: int) -> float:
    """int_0^inf x^m T_n(x) w(x; q) dx through the q-derivative of x^m at 1.

    Vanishes for m < n and equals t_n for m == n.
    """
    d, _ = _d_prefactors(theta, q, n)
    base = q ** -theta
    dq = q_derivative(lambda x: x ** m, base, n, 1.0)
    scale = d * SignedLog.from_real((1 - base) ** n) * SignedLog(1, -(m + 1) ** 2 / 2 * math.log(q))
    return (scale * SignedLog.from_real(dq)).to_real() if dq != 0 else 0.0


def moment_R(theta: float, q: float, n: int, m: int) -> float:
    """int_0^inf x^(theta m) R_n(x) w(x; q) dx, the dual of :func:`moment_T`."""
    _, dbar = _d_prefactors(theta, q, n)
    base = q ** -theta
    dq = q_derivative(lambda x: x ** m, base, n, 1.0)
    scale = dbar * SignedLog.from_real((1 - base) ** n) * SignedLog(1, -(m * theta + 1) ** 2 / 2 * math.log(q))
    return (scale * SignedLog.from_real(dq)).to_real() if dq != 0 else 0.0


# ---------------------------------------------------------------------------
# Hermite


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n."""
    x = np.asarray(x, dtype=float)
    h0 = np.ones_like(x)
    if n == 0:
        return float(h0) if h0.ndim == 0 else h0
    h1 = 2 * x
    for k in range(1, n):
        h0, h1 = h1, 2 * x * h1 - 2 * k * h0
    return float(h1) if h1.ndim == 0 else h1


def hermite_fn(n: int, x):
    """Hermite function e^{-x^2/2} H_n(x) / sqrt(2^n n! sqrt(pi)).

    Uses the normalised recurrence, which stays in range for large n.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.exp(-x * x / 2) / math.pi ** 0.25
    if n == 0:
        return float(f0) if f0.ndim == 0 else f0
    f1 = math.sqrt(2.0) * x * f0
    for k in range(1, n):
        f0, f1 = f1, math.sqrt(2.0 / (k + 1)) * x * f1 - math.sqrt(k / (k + 1)) * f0
    return float(f1) if f1.ndim == 0 else f1
