"""Numeric foundation: signed log-domain numbers, weighted quadrature,
small determinants, linear fits and density-profile statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import logsumexp, roots_hermite, roots_legendre

__all__ = [
    "SignedLog",
    "signedlog_sum",
    "signed_logsumexp",
    "QuadratureRule",
    "gauss_hermite_rule",
    "gauss_legendre_rule",
    "integrate_against_weight",
    "det_small",
    "ProfileStats",
    "profile_stats",
    "count_local_maxima",
    "linear_fit",
    "DEFAULT_GH_NODES",
]

DEFAULT_GH_NODES = 200
# exp() of anything above this is treated as unsafe in native doubles
LOG_SAFE = 650.0


@dataclass(frozen=True)
class SignedLog:
    """A real number stored as ``sign * exp(logmag)``.

    ``sign`` is one of -1, 0, +1.  For ``sign == 0`` the ``logmag`` field is
    ``-inf`` and carries no information.
    """

    sign: int
    logmag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign == 0:
            object.__setattr__(self, "logmag", -math.inf)

    @classmethod
    def from_real(cls, value: float) -> "SignedLog":
        if value == 0:
            return cls(0, -math.inf)
        if not math.isfinite(value):
            raise ValueError(f"cannot represent non-finite value {value}")
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def one(cls) -> "SignedLog":
        return cls(1, 0.0)

    @classmethod
    def zero(cls) -> "SignedLog":
        return cls(0, -math.inf)

    def to_real(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.logmag)

    __float__ = to_real

    def is_zero(self) -> bool:
        return self.sign == 0

    def __mul__(self, other):
        if not isinstance(other, SignedLog):
            other = SignedLog.from_real(float(other))
        if self.sign == 0 or other.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.logmag + other.logmag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, SignedLog):
            other = SignedLog.from_real(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero SignedLog")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.logmag - other.logmag)

    def __neg__(self):
        return SignedLog(-self.sign, self.logmag)

    def __add__(self, other):
        if not isinstance(other, SignedLog):
            other = SignedLog.from_real(float(other))
        return signedlog_sum([self, other])

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, SignedLog):
            other = SignedLog.from_real(float(other))
        return signedlog_sum([self, -other])

    def __pow__(self, k: int):
        if int(k) != k:
            raise ValueError("only integer powers are supported")
        k = int(k)
        if self.sign == 0:
            if k <= 0:
                raise ZeroDivisionError("0 ** non-positive")
            return SignedLog.zero()
        return SignedLog(self.sign ** (k % 2) if k % 2 else 1, k * self.logmag)

    def inverse(self) -> "SignedLog":
        return SignedLog.one() / self

    def sqrt(self) -> "SignedLog":
        if self.sign < 0:
            raise ValueError("square root of a negative SignedLog")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(1, 0.5 * self.logmag)


def _combine(lpos: float, lneg: float) -> SignedLog:
    """exp(lpos) - exp(lneg) as a SignedLog."""
    if lpos == lneg:
        return SignedLog.zero()
    if lpos > lneg:
        return SignedLog(1, lpos + math.log(-math.expm1(lneg - lpos)))
    return SignedLog(-1, lneg + math.log(-math.expm1(lpos - lneg)))


def signedlog_sum(terms: Iterable[SignedLog]) -> SignedLog:
    """Exact-as-possible sum of signed log numbers.

    Positive and negative parts are accumulated separately with log-sum-exp;
    the final difference of the two dominant masses goes through ``expm1`` so
    that near-cancellation keeps its relative accuracy.
    """
    pos, neg = [], []
    for term in terms:
        if term.sign > 0:
            pos.append(term.logmag)
        elif term.sign < 0:
            neg.append(term.logmag)
    lpos = float(logsumexp(pos)) if pos else -math.inf
    lneg = float(logsumexp(neg)) if neg else -math.inf
    if lneg == -math.inf:
        return SignedLog(1, lpos) if pos else SignedLog.zero()
    if lpos == -math.inf:
        return SignedLog(-1, lneg)
    return _combine(lpos, lneg)


def signed_logsumexp(signs, logs, axis=-1):
    """Vectorised signed log-sum-exp.

    Returns ``(sign, log|sum|)`` arrays reduced over ``axis``.  Entries with
    sign 0 (or log -inf) are ignored.  An exactly vanishing sum gets sign 0
    and log ``-inf``.
    """
    signs = np.asarray(signs, dtype=float)
    logs = np.asarray(logs, dtype=float)
    signs, logs = np.broadcast_arrays(signs, logs)
    logs = np.where(signs == 0, -np.inf, logs)
    m = np.max(logs, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(under="ignore"):
        s = np.sum(signs * np.exp(logs - m), axis=axis)
    m = np.squeeze(m, axis=axis)
    out_sign = np.sign(s)
    with np.errstate(divide="ignore"):
        out_log = np.where(out_sign != 0, np.log(np.abs(s)) + m, -np.inf)
    return out_sign, out_log


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    log_weights: np.ndarray | None = None

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise ValueError("nodes and weights differ in length")
        # re-weighted rules may underflow to zero far from their centre
        if np.any(self.weights < 0):
            raise ValueError("quadrature weights must be non-negative")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")


@lru_cache(maxsize=32)
def _hermite_nodes(n: int):
    x, w = roots_hermite(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _legendre_nodes(n: int):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite_rule(q: float, rule_size: int = DEFAULT_GH_NODES,
                       center: float = 0.0) -> QuadratureRule:
    """Rule on the log axis ``s = ln z`` for ``E[g(s)]``, ``s ~ N(0, |ln q|)``.

    The nodes are Gauss-Hermite abscissae scaled by ``sqrt(2|ln q|)`` and
    shifted to ``center``; the weights absorb the Gaussian re-weighting from
    ``N(center, v)`` back to ``N(0, v)``, so the rule targets the same
    expectation for every centre.  ``log_weights`` keeps the weights that
    underflow in ``weights``.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    v = -math.log(q)
    x, w = _hermite_nodes(int(rule_size))
    s = center + math.sqrt(2.0 * v) * x
    with np.errstate(divide="ignore"):
        logw = np.log(w) - 0.5 * math.log(math.pi) + (center * center - 2.0 * center * s) / (2.0 * v)
    return QuadratureRule(nodes=s, weights=np.exp(logw), kind="gauss-hermite-log-substituted", log_weights=logw)


def gauss_legendre_rule(lo: float, hi: float, n: int) -> QuadratureRule:
    if not hi > lo:
        raise ValueError("need lo < hi")
    x, w = _legendre_nodes(int(n))
    half = 0.5 * (hi - lo)
    return QuadratureRule(nodes=lo + half * (x + 1.0), weights=half * w, kind="gauss-legendre")


def integrate_against_weight(f: Callable, q: float, rule_size: int = DEFAULT_GH_NODES,
                             center: float = 0.0, log_f: bool = False) -> float:
    r"""Compute :math:`\int_0^\infty f(z) w(z;q) dz` for the log-normal weight.

    With ``z = e^s`` the integral is ``E[f(e^s) e^s]`` for ``s ~ N(0, |ln q|)``,
    evaluated with a Gauss-Hermite rule.  ``center`` moves the rule along the
    log axis, which matters when ``f`` grows like a high power of ``z``
    (monomial ``z^n`` puts its mass near ``s = (n+1)|ln q|``).

    ``f`` is called once with the array of ``z`` nodes.  With ``log_f=True``
    it must instead return ``(sign, log|f|)`` arrays, which avoids overflow
    for steep integrands.
    """
    rule = gauss_hermite_rule(q, rule_size, center)
    s = rule.nodes
    z = np.exp(s)
    if log_f:
        sg, lg = f(z)
        sg, lg = np.broadcast_arrays(np.asarray(sg, float), np.asarray(lg, float))
        sign, logv = signed_logsumexp(sg, lg + s + rule.log_weights)
        value = float(sign * np.exp(logv)) if sign != 0 else 0.0
    else:
        with np.errstate(over="ignore"):
            value = float(np.sum(rule.weights * np.asarray(f(z), dtype=float) * z))
    if not math.isfinite(value):
        raise FloatingPointError("non-finite quadrature result: rule too small or integrand out of class")
    return value


# ---------------------------------------------------------------------------
# determinants


def det_small(m) -> SignedLog:
    """Determinant by partially pivoted Gaussian elimination, as a SignedLog.

    Rows and columns are first equilibrated by powers of two so entries of
    very different magnitude do not overflow; the scale factors go straight
    into the log.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("det_small needs a square matrix")
    n = a.shape[0]
    if n > 32:
        raise ValueError("det_small is meant for matrices of size <= 32")
    if n == 0:
        return SignedLog.one()
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    sign = 1
    logdet = 0.0
    for i in range(n):
        row_max = np.max(np.abs(a[i]))
        if row_max == 0:
            return SignedLog.zero()
        e = math.frexp(row_max)[1]
        a[i] = np.ldexp(a[i], -e)
        logdet += e * math.log(2.0)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0.0:
            return SignedLog.zero()
        if p != k:
            a[[k, p]] = a[[p, k]]
            sign = -sign
        pivot = a[k, k]
        if pivot < 0:
            sign = -sign
        logdet += math.log(abs(pivot))
        if k + 1 < n:
            factors = a[k + 1:, k] / pivot
            a[k + 1:, k:] -= np.outer(factors, a[k, k:])
    return SignedLog(sign, logdet)


# ---------------------------------------------------------------------------
# density profiles


@dataclass(frozen=True)
class ProfileStats:
    num_local_maxima: int
    support_width: float
    threshold: float
    grid_step: float
    x_left: float = math.nan
    x_right: float = math.nan


def count_local_maxima(ys) -> int:
    """Strict interior local maxima; a flat run counts once."""
    ys = np.asarray(ys, dtype=float)
    if ys.size < 3:
        return 0
    # collapse plateaus
    keep = np.concatenate(([True], np.diff(ys) != 0))
    y = ys[keep]
    if y.size < 3:
        return 0
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])
    return int(np.count_nonzero(inner))


def profile_stats(xs, ys, threshold: float = 1e-3, mode: str = "outer") -> ProfileStats:
    """Width above ``threshold`` and number of peaks of a sampled profile.

    ``mode="outer"`` measures between the outermost threshold crossings
    (linearly interpolated); ``mode="measure"`` sums the lengths of all
    superlevel intervals instead.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if xs.size >= 2 and np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")
    step = float(np.min(np.diff(xs))) if xs.size >= 2 else 0.0
    nmax = count_local_maxima(ys)
    above = ys > threshold
    if not np.any(above):
        return ProfileStats(nmax, 0.0, threshold, step)

    def crossing(i0, i1):
        # linear interpolation between grid points i0 (below) and i1 (above)
        y0, y1 = ys[i0], ys[i1]
        return xs[i0] + (threshold - y0) * (xs[i1] - xs[i0]) / (y1 - y0)

    idx = np.flatnonzero(above)
    if mode == "outer":
        lo, hi = idx[0], idx[-1]
        x_left = crossing(lo - 1, lo) if lo > 0 else xs[0]
        x_right = crossing(hi + 1, hi) if hi < xs.size - 1 else xs[-1]
        width = x_right - x_left
    elif mode == "measure":
        width = 0.0
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        x_left = x_right = math.nan
        for run in runs:
            a = crossing(run[0] - 1, run[0]) if run[0] > 0 else xs[0]
            b = crossing(run[-1] + 1, run[-1]) if run[-1] < xs.size - 1 else xs[-1]
            width += b - a
            x_left = a if math.isnan(x_left) else x_left
            x_right = b
    else:
        raise ValueError(f"unknown width mode {mode!r}")
    return ProfileStats(nmax, float(max(width, 0.0)), threshold, step, float(x_left), float(x_right))


def linear_fit(ns: Sequence[float], widths: Sequence[float]) -> tuple[float, float]:
    """Least-squares line ``width = c1 * n + c2``; returns ``(c1, c2)``."""
    ns = np.asarray(ns, dtype=float)
    widths = np.asarray(widths, dtype=float)
    if ns.size < 2 or ns.size != widths.size:
        raise ValueError("need at least two (n, width) points")
    if np.ptp(ns) == 0:
        raise ValueError("degenerate fit: all abscissae are equal")
    c1, c2 = np.polyfit(ns, widths, 1)
    return float(c1), float(c2)
