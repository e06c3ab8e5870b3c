"""q-Pochhammer symbols, q-binomial coefficients and the q-derivative."""

from __future__ import annotations

import math
from typing import Callable

from .numerics import SignedLog, signedlog_sum

__all__ = ["q_pochhammer", "q_binomial", "q_derivative"]


def q_pochhammer(a: float, q: float, n: int) -> SignedLog:
    """(a; q)_n = prod_{k<n} (1 - a q^k), accumulated in log space.

    ``q`` is only required to be positive, so bases above one (used by the
    q-derivative with base ``q^-theta``) work as well.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    sign = 1
    logmag = 0.0
    lq = math.log(q)
    for k in range(n):
        aqk = a * math.exp(k * lq)
        factor = 1.0 - aqk
        if factor == 0.0:
            return SignedLog.zero()
        if factor < 0:
            sign = -sign
        # log1p keeps accuracy when a q^k is tiny
        logmag += math.log1p(-aqk) if abs(aqk) < 0.5 else math.log(abs(factor))
    return SignedLog(sign, logmag)


def q_binomial(n: int, ell: int, q: float) -> SignedLog:
    """Gaussian binomial [n, ell]_q as a ratio of q-Pochhammer symbols."""
    if not 0 <= ell <= n:
        raise ValueError(f"need 0 <= ell <= n, got n={n}, ell={ell}")
    if ell == 0 or ell == n:
        return SignedLog.one()
    return q_pochhammer(q, q, n) / (q_pochhammer(q, q, ell) * q_pochhammer(q, q, n - ell))


def q_derivative(f: Callable[[float], float], q_base: float, n: int, x: float) -> float:
    """n-th order q-derivative of ``f`` at ``x``.

    For ``q_base < 1`` the defining sum over ``f(q^l x)`` is used directly.
    For ``q_base > 1`` the sum is rewritten in the reciprocal base
    ``r = 1/q_base``, giving coefficients ``(r^-n; r)_l / (r; r)_l r^(n l)``
    and sample points ``x r^-l``.
    """
    if q_base <= 0 or q_base == 1:
        raise ValueError("q_base must be positive and different from 1")
    if x == 0:
        raise ValueError("the q-derivative is undefined at x = 0")
    if n < 0:
        raise ValueError("order must be non-negative")
    if n == 0:
        return float(f(x))
    terms = []
    if q_base < 1:
        for ell in range(n + 1):
            coef = q_pochhammer(q_base ** -n, q_base, ell) / q_pochhammer(q_base, q_base, ell)
            point = q_base ** ell * x
            terms.append(coef * SignedLog.from_real(q_base ** ell * f(point)))
    else:
        r = 1.0 / q_base
        for ell in range(n + 1):
            coef = q_pochhammer(r ** -n, r, ell) / q_pochhammer(r, r, ell)
            point = x * r ** -ell
            terms.append(coef * SignedLog.from_real(r ** (n * ell) * f(point)))
    total = signedlog_sum(terms)
    prefactor = SignedLog.from_real((1.0 - q_base) ** n * x ** n)
    return (total / prefactor).to_real()
