"""Invariant suite behind ``dppsw validate``.

Each check reports a measured error next to its tolerance.  The report is a
JSON-ready dict with a schema version; ``passed`` is true only when every
check passes.  ``faults`` injects deliberate errors for testing the suite
itself (currently ``{"t_n_scale": factor}`` multiplies the closed-form
normalization constants t_n).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import __version__
from .kernel import (
    ModelParams,
    density,
    gue_density,
    hermite_kernel,
    kernel_K,
    kernel_K_t0,
    kernel_scaled_q1,
    make_kernel,
    mapped_matrix,
    weight_w,
)
from .numerics import SignedLog, gauss_legendre_rule, integrate_against_weight
from .process import (
    bbo_density,
    biorthogonal_density_z,
    determinantal_density_z,
    multitime_density,
    MultitimeSpec,
    partition_function,
    partition_function_quadrature,
    survival_limit,
    survival_probability,
    t0_ensemble_density,
    weyl_quad,
)
from .swpoly import _poly_log, build_table, normalization_constants

__all__ = ["SCHEMA", "Check", "run_validation", "CHECKS",
           "moment_error", "biorthonormality_error", "lc_identity_error",
           "projection_trace_errors", "t0_reduction_errors", "hermite_limit_distances",
           "partition_error", "gap_probability_error"]

SCHEMA = "dppsw.validate/1"

PARAM_SETS = ((1.0, 1.0, 1.0), (0.5, 0.5, 1.5), (1.0, 1.0, 0.25))
MOMENT_QS = (0.1, math.exp(-1), 0.9)
BIORTHO_GRID = tuple((th, q) for th in (0.5, 1.0, 2.0) for q in (0.3, math.exp(-1), 0.9))


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""


# ---------------------------------------------------------------------------
# individual measurements (each returns a non-negative error)


def moment_error(q: float, nmax: int = 12) -> float:
    """Max relative error of the quadrature moments against ``q^{-(n+1)^2/2}``."""
    v = -math.log(q)
    worst = 0.0
    for n in range(nmax + 1):
        num = integrate_against_weight(lambda z, n=n: (np.ones_like(z), n * np.log(z)), q,
                                       center=(n + 1) * v, log_f=True)
        exact = math.exp((n + 1) ** 2 / 2 * v)
        worst = max(worst, abs(num / exact - 1))
    return worst


def biorthonormality_error(theta: float, q: float, nmax: int = 10) -> float:
    """``max |int T_n R_m w - delta_nm|`` over ``n, m <= nmax`` by centred quadrature."""
    table = build_table(theta, q, nmax)
    v = -math.log(q)
    worst = 0.0
    for n in range(nmax + 1):
        for m in range(nmax + 1):
            def f(z, n=n, m=m):
                st, lt = _poly_log(table.T, n, z)
                sr, lr = _poly_log(table.R, m, z)
                return st * sr, lt + lr
            val = integrate_against_weight(f, q, center=(theta * n + m + 2) * v / 2, log_f=True)
            worst = max(worst, abs(val - (n == m)))
    return worst


def lc_identity_error(theta: float, q: float, nmax: int = 10, t_n_scale: float = 1.0) -> float:
    """``max |lc(R_n) t_n - 1|, |lc(T_n) r_n - 1|`` from the closed-form constants."""
    table = build_table(theta, q, nmax)
    nc = normalization_constants(theta, q, nmax)
    worst = 0.0
    for n in range(nmax + 1):
        lc_T = SignedLog(int(table.T.signs[n, n]), float(table.T.logc[n, n]))
        lc_R = SignedLog(int(table.R.signs[n, n]), float(table.R.logc[n, n]))
        worst = max(worst, abs((lc_R * nc.t_n[n] * t_n_scale).to_real() - 1))
        worst = max(worst, abs((lc_T * nc.r_n[n]).to_real() - 1))
    return worst


def projection_trace_errors(a: float, sigma: float, t: float, N: int, seed: int = 0,
                            points: int = 3) -> dict:
    """Reproducing and trace errors of the kernel in z-space and on the real line.

    Relative projection errors are scaled by ``max(|K(x,y)|, sqrt(K(x,x) K(y,y)))``
    so that near-zeros of the off-diagonal kernel do not blow up the ratio.
    """
    p = ModelParams(N, a, sigma, t)
    h = make_kernel(p)
    q, c = p.q, p.shift
    v = -math.log(q)
    rng = np.random.default_rng(seed)
    tr_z = integrate_against_weight(lambda z: kernel_K(h, z, z) / weight_w(z, q), q, center=c) - N
    proj_z = 0.0
    for _ in range(points):
        x, y = np.exp(c + rng.normal(0, math.sqrt(v), 2))
        lhs = integrate_against_weight(lambda z: kernel_K(h, x, z) * kernel_K(h, z, y) / weight_w(z, q), q,
                                       center=c)
        rhs = kernel_K(h, x, y)
        scale = max(abs(rhs), math.sqrt(kernel_K(h, x, x) * kernel_K(h, y, y)))
        proj_z = max(proj_z, abs(lhs - rhs) / scale)
    lo, hi = p.support_range()
    r = gauss_legendre_rule(lo, hi, 400)
    tr_x = float(np.sum(r.weights * density(h, r.nodes))) - N
    xs = rng.uniform(lo / 3, hi / 3, points)
    P = (mapped_matrix(h, xs, r.nodes) * r.weights) @ mapped_matrix(h, r.nodes, xs)
    K = mapped_matrix(h, xs)
    D = np.sqrt(np.outer(np.diag(K), np.diag(K)))
    proj_x = float(np.max(np.abs(P - K) / np.maximum(np.abs(K), D)))
    return {"trace_z": abs(tr_z), "proj_z": proj_z, "trace_x": abs(tr_x), "proj_x": proj_x}


def t0_reduction_errors(N: int, a: float = 1.0, sigma: float = 1.0, seed: int = 0, points: int = 6) -> dict:
    """General kernel at ``t0`` vs the Stieltjes-Wigert kernel, and CD vs sum form."""
    p = ModelParams(N, a, sigma, a / sigma)
    h = make_kernel(p)
    rng = np.random.default_rng(seed)
    z = np.exp(p.shift + rng.normal(0, math.sqrt(-math.log(p.q)), (points, 2)))
    zx, zy = z[:, 0], z[:, 1]
    zz = np.concatenate([zx, zx])
    ww = np.concatenate([zy, zx])
    general = kernel_K(h, zz, ww)
    sw_sum = kernel_K_t0(p.q0, N, zz, ww, form="sum")
    sw_cd = kernel_K_t0(p.q0, N, zz, ww, form="cd")
    scale = np.maximum(np.abs(sw_sum), np.sqrt(kernel_K_t0(p.q0, N, zz, zz, "sum") * kernel_K_t0(p.q0, N, ww, ww, "sum")))
    return {"general_vs_sw": float(np.max(np.abs(general - sw_sum) / scale)),
            "cd_vs_sum": float(np.max(np.abs(sw_cd - sw_sum) / scale))}


def hermite_limit_distances(N: int = 3, qs=(0.9, 0.99, 0.999), grid: int = 41) -> list[float]:
    """Sup-norm distance of the rescaled kernel to the Hermite kernel on [-2, 2]^2."""
    u = np.linspace(-2, 2, grid)
    X, Y = np.meshgrid(u, u)
    herm = hermite_kernel(N, X, Y)
    return [float(np.max(np.abs(kernel_scaled_q1(q, N, X, Y) - herm))) for q in qs]


def partition_error(a: float, sigma: float, t: float, N: int) -> float:
    p = ModelParams(N, a, sigma, t)
    closed = partition_function(p)
    oracle = partition_function_quadrature(p)
    return abs(math.expm1(oracle.logmag - closed.logmag)) if oracle.sign == 1 else math.inf


def gap_probability_error(a: float = 1.0, sigma: float = 1.0, t: float = 1.0, interval=(0.0, 1.0)) -> float:
    """Fredholm determinant vs direct quadrature of the N = 2 joint density."""
    from .kernel import gap_probability

    p = ModelParams(2, a, sigma, t)
    h = make_kernel(p)
    fred = gap_probability(h, interval)
    lo, hi = p.support_range()
    J0, J1 = interval

    def joint(Y):
        return np.array([multitime_density(MultitimeSpec((t,), (row,)), p) for row in Y])

    # ordered pairs with no point inside J: both left, both right, or split
    left = weyl_quad(joint, 2, lo, J0, 48, 2)
    right = weyl_quad(joint, 2, J1, hi, 48, 2)
    r1 = gauss_legendre_rule(lo, J0, 96)
    r2 = gauss_legendre_rule(J1, hi, 96)
    Y = np.array([[u, w] for u in r1.nodes for w in r2.nodes])
    W = np.outer(r1.weights, r2.weights).ravel()
    split = float(np.sum(W * joint(Y)))
    return abs(fred - (left + right + split))


# ---------------------------------------------------------------------------
# the suite


def _check(name, measured, tol, detail=""):
    measured = float(measured)
    return Check(name, measured, tol, bool(np.isfinite(measured) and measured < tol), detail)


def _moments(faults):
    return [_check(f"moments.q={q:.6g}", moment_error(q), 1e-9, "n <= 12, relative") for q in MOMENT_QS]


def _biortho(faults):
    out = []
    scale = float(faults.get("t_n_scale", 1.0))
    for th, q in BIORTHO_GRID:
        out.append(_check(f"orthonormality.quadrature.theta={th:g},q={q:.6g}", biorthonormality_error(th, q),
                          1e-8, "n, m <= 10"))
        out.append(_check(f"orthonormality.normalization.theta={th:g},q={q:.6g}",
                          lc_identity_error(th, q, t_n_scale=scale), 1e-10, "lc(R_n) t_n = lc(T_n) r_n = 1"))
    return out


def _projection(faults):
    out = []
    for a, s, t in PARAM_SETS:
        worst = {"trace_z": 0.0, "proj_z": 0.0, "trace_x": 0.0, "proj_x": 0.0}
        for N in range(1, 9):
            e = projection_trace_errors(a, s, t, N, seed=N)
            worst = {k: max(worst[k], e[k]) for k in worst}
        tag = f"a={a:g},sigma={s:g},t={t:g}"
        out.append(_check(f"projection.z.{tag}", worst["proj_z"], 1e-7, "N = 1..8"))
        out.append(_check(f"projection.x.{tag}", worst["proj_x"], 1e-7, "N = 1..8"))
        out.append(_check(f"trace.z.{tag}", worst["trace_z"], 1e-6, "N = 1..8"))
        out.append(_check(f"trace.x.{tag}", worst["trace_x"], 1e-6, "N = 1..8"))
    return out


def _t0(faults):
    g = c = 0.0
    for N in range(1, 11):
        e = t0_reduction_errors(N, seed=N)
        g, c = max(g, e["general_vs_sw"]), max(c, e["cd_vs_sum"])
    return [_check("theta1.general_vs_stieltjes_wigert", g, 1e-9, "N <= 10"),
            _check("christoffel_darboux.cd_vs_sum", c, 1e-9, "N <= 10")]


# the distance decays like sqrt(1 - q); the sequence is extended until it
# has clearly converged, the q = 0.999 value alone is above 0.05
HERMITE_QS = (0.9, 0.99, 0.999, 0.9999, 0.99999)


def _hermite(faults):
    d = hermite_limit_distances(qs=HERMITE_QS)
    mono = all(b < a for a, b in zip(d, d[1:]))
    return [_check(f"q_to_1.hermite_distance.q={HERMITE_QS[-1]:g}", d[-1], 0.05, f"distances {d}"),
            Check("q_to_1.monotone", float(not mono), 0.5, mono, f"distances {d}")]


def _partition(faults):
    out = []
    for a, s, t in PARAM_SETS:
        for N, tol in ((1, 1e-9), (2, 1e-6), (3, 1e-5)):
            out.append(_check(f"partition.N={N}.a={a:g},sigma={s:g},t={t:g}", partition_error(a, s, t, N), tol))
    return out


def _density_forms(faults):
    rng = np.random.default_rng(5)
    exp_sinh = bio = t0 = 0.0
    for N in range(1, 6):
        p = ModelParams(N, 1.0, 1.0, 1.0)
        for _ in range(3):
            xs = [np.sort(rng.normal(0, 1.5, N)) for _ in range(2)]
            spec = MultitimeSpec((0.6, 1.2), xs)
            a = multitime_density(spec, p, form="exp")
            b = multitime_density(spec, p, form="sinh")
            exp_sinh = max(exp_sinh, abs(a / b - 1))
    p = ModelParams(3, 1.0, 1.0, 1.3)
    for _ in range(5):
        z = np.sort(np.exp(p.shift + rng.normal(0, 1, 3)))
        bio = max(bio, abs(determinantal_density_z(z, p) / biorthogonal_density_z(z, p) - 1))
    p0 = ModelParams(3, 1.0, 1.0, 1.0)
    for _ in range(5):
        z = np.sort(np.exp(p0.shift + rng.normal(0, 1, 3)))
        t0 = max(t0, abs(t0_ensemble_density(p0.q0, z) / biorthogonal_density_z(z, p0) - 1))
    return [_check("density.exp_vs_sinh", exp_sinh, 1e-10, "N <= 5, M = 2"),
            _check("density.product_vs_determinantal", bio, 1e-8, "N = 3"),
            _check("density.t0_vs_general", t0, 1e-8, "N = 3")]


def _normalization(faults):
    p = ModelParams(2, 1.0, 1.0, 1.0)
    x0, nu = p.initial_points, p.drifts
    norm = weyl_quad(lambda Y: np.array([bbo_density(1.0, r, x0, nu) for r in Y]), 2, -12, 12, 64, 2)
    ref = gue_density(1, 1.0, 0.0)
    surv = survival_probability(20.0, [-1.0, 1.0], [-1.0, 1.0])
    lim = survival_limit([-1.0, 1.0], [-1.0, 1.0])
    return [_check("normalization.bbo_N2", abs(norm - 1), 1e-5),
            _check("normalization.gaussian_N1", abs(ref - 1 / math.sqrt(2 * math.pi)), 1e-14),
            _check("survival.limit_T20", abs(surv / lim - 1), 1e-2),
            _check("gap_probability.N2", gap_probability_error(), 1e-5, "J = [0, 1]")]


CHECKS: dict[str, Callable] = {
    "moments": _moments,
    "orthonormality": _biortho,
    "projection": _projection,
    "theta1": _t0,
    "q_to_1": _hermite,
    "partition": _partition,
    "density_forms": _density_forms,
    "normalization": _normalization,
}


def run_validation(faults: dict | None = None, groups=None) -> dict:
    """Run the invariant suite and return the report dict."""
    faults = dict(faults or {})
    unknown = set(groups or ()) - set(CHECKS)
    if unknown:
        raise KeyError(f"unknown check groups {sorted(unknown)}")
    checks: list[Check] = []
    for key, fn in CHECKS.items():
        if groups is not None and key not in groups:
            continue
        try:
            checks.extend(fn(faults))
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            checks.append(Check(f"{key}.error", math.inf, 0.0, False, f"{type(exc).__name__}: {exc}"))
    failed = [c.name for c in checks if not c.passed]
    return {
        "schema": SCHEMA,
        "version": __version__,
        "faults": faults,
        "passed": not failed,
        "failures": failed,
        "checks": [asdict(c) for c in checks],
    }
