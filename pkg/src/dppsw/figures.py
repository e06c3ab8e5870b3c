"""Density profiles, profile widths and the figure presets built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import ModelParams, density, gue_density, make_kernel, semicircle_density
from .numerics import linear_fit, profile_stats

__all__ = [
    "PRESETS",
    "WIDTH_NS",
    "WIDTH_CASES",
    "FIT_MIN_N",
    "BOUNDARY_TOL",
    "density_profile",
    "default_range",
    "profile_width",
    "WidthStudy",
    "width_study",
]

# width study defaults: t = 1.5, threshold 1e-3
WIDTH_NS = (1, 5, 9, 13, 17, 21, 25)
WIDTH_CASES = ((1.0, 1.0), (0.5, 0.5), (0.25, 0.25))
FIT_MIN_N = 9
BOUNDARY_TOL = 1e-8

PRESETS = {
    "fig1": {"subcommand": "density", "n": 15, "a": 1.0, "sigma": 1.0, "t": 1.0,
             "xmin": -25.0, "xmax": 25.0, "points": 2001},
    "fig2": {"subcommand": "density", "n_list": [1, 5, 9, 13, 17], "a": 0.0, "sigma": 0.0, "t": 1.0,
             "xmin": -12.0, "xmax": 12.0, "points": 2001},
    "fig3": {"subcommand": "density", "n_list": [1, 5, 9, 13, 17], "a": 1.0, "sigma": 1.0, "t": 1.0,
             "xmin": -25.0, "xmax": 25.0, "points": 2001},
    "fig4": {"subcommand": "width", "n_list": list(WIDTH_NS), "t": 1.5, "eps": 1e-3},
}


def _eval(N: int, a: float, sigma: float, t: float, xs: np.ndarray) -> np.ndarray:
    if a == 0 and sigma == 0:
        return np.asarray(gue_density(N, t, xs), float)
    return np.asarray(density(make_kernel(ModelParams(N, a, sigma, t)), xs), float)


def default_range(N: int, a: float, sigma: float, t: float) -> tuple[float, float]:
    """Symmetric x-range wide enough for the density to be negligible at its ends."""
    if a == 0 and sigma == 0:
        half = 2 * math.sqrt(N * t) + 10 * math.sqrt(t) + 2
        return -half, half
    return ModelParams(N, a, sigma, t).support_range()


def density_profile(N: int, a: float, sigma: float, t: float, xs, companions: bool = False) -> dict:
    """Columns of the one-point density on ``xs``.

    ``a = sigma = 0`` selects the driftless process from the origin.  With
    ``companions`` the driftless density and its semicircle approximation are
    added for comparison.
    """
    xs = np.asarray(xs, float)
    cols = {"x": xs, "density": _eval(N, a, sigma, t, xs)}
    if companions:
        cols["density_no_drift"] = np.asarray(gue_density(N, t, xs), float)
        cols["semicircle"] = np.asarray(semicircle_density(N, t, xs), float)
    return cols


def profile_width(N: int, a: float, sigma: float, t: float, eps: float = 1e-3, step: float = 0.01,
                  check_boundary: bool = True) -> float:
    """Length of the x-range where the density exceeds ``eps`` (outermost crossings)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    lo, hi = default_range(N, a, sigma, t)
    xs = np.arange(lo, hi + step / 2, step)
    ys = _eval(N, a, sigma, t, xs)
    if check_boundary and max(ys[0], ys[-1]) >= BOUNDARY_TOL:
        raise RuntimeError("plot range too narrow: boundary density exceeds tolerance")
    return profile_stats(xs, ys, eps).support_width


@dataclass
class WidthStudy:
    """Widths per case and straight-line fits over ``N >= fit_min_n``."""

    t: float
    eps: float
    ns: tuple
    widths: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    fit_min_n: int = FIT_MIN_N

    def rows(self) -> list[dict]:
        out = []
        for key, ws in self.widths.items():
            for n, w in zip(self.ns, ws):
                out.append({"a": key[0], "sigma": key[1], "N": n, "width": w})
        return out


def width_study(cases=WIDTH_CASES, ns=WIDTH_NS, t: float = 1.5, eps: float = 1e-3,
                include_zero_drift: bool = True, fit_min_n: int = FIT_MIN_N, step: float = 0.01) -> WidthStudy:
    """Widths on the N-list for each ``(a, sigma)`` and the fitted ``(c1, c2)``.

    The driftless case is stored under key ``(0.0, 0.0)`` and is not fitted.
    """
    study = WidthStudy(t=t, eps=eps, ns=tuple(ns), fit_min_n=fit_min_n)
    all_cases = list(cases) + ([(0.0, 0.0)] if include_zero_drift else [])
    for a, s in all_cases:
        key = (float(a), float(s))
        study.widths[key] = [profile_width(n, a, s, t, eps, step) for n in ns]
        if key != (0.0, 0.0):
            sel = [i for i, n in enumerate(ns) if n >= fit_min_n]
            if len(sel) >= 2:
                study.fits[key] = linear_fit([ns[i] for i in sel], [study.widths[key][i] for i in sel])
    return study
