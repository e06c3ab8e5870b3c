"""Path samplers for the drifted noncolliding Brownian motion.

Two independent routes to the time-t configuration:

``sde``
    Euler-Maruyama for the Doob-transformed diffusion whose drift is
    ``grad ln det[exp(nu_i x_k)]``.  A step that would break the ordering is
    redone as two half steps whose Brownian increments are drawn from the
    bridge between the endpoints, so the driving path is unchanged.
``rejection``
    Free drifted Brownian motions on a time grid up to a horizon T.  A path
    is discarded as soon as two neighbours cross at a grid time, or (with the
    bridge correction on) with the probability that the neighbour gap hit
    zero between grid times.

Paths are processed in fixed blocks; block ``b`` draws from a generator
seeded by ``SeedSequence([seed, b])``, so the output depends only on the
seed and configuration, never on the thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kernel import ModelParams
from .numerics import gauss_legendre_rule

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "AcceptanceError",
    "sde_drift",
    "sample_sde",
    "sample_rejection",
    "sample",
    "empirical_density",
    "histogram_density",
    "bin_averages",
    "l1_to_density",
    "l1_between",
    "BLOCK_SIZE",
]

BLOCK_SIZE = 16384
MIN_ACCEPTANCE = 1e-4


class AcceptanceError(RuntimeError):
    """Rejection sampling accepted too few paths to be useful."""


@dataclass(frozen=True)
class SimConfig:
    """Sampler settings.

    ``dt`` defaults to ``1e-3 t`` and ``horizon_T`` to ``t + 5 t0`` when left
    as None; both are resolved against the sample time.  For the rejection
    sampler ``num_paths`` counts accepted (emitted) samples.
    """

    params: ModelParams
    method: str = "sde"
    dt: float | None = None
    horizon_T: float | None = None
    num_paths: int = 10000
    seed: int = 0
    max_halvings: int = 12
    bridge_correction: bool = True

    def __post_init__(self):
        if self.method not in ("sde", "rejection"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.num_paths < 1:
            raise ValueError("num_paths must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def resolved_dt(self, t: float) -> float:
        return self.dt if self.dt is not None else 1e-3 * t

    def resolved_horizon(self, t: float) -> float:
        T = self.horizon_T if self.horizon_T is not None else t + 5 * self.params.t0
        if T < t:
            raise ValueError("the rejection horizon must not precede the sample time")
        return T


@dataclass
class PathEnsemble:
    """Sampled configurations at time ``t`` (one ordered row per path)."""

    samples: np.ndarray
    accepted: int
    proposed: int
    method: str
    t: float
    dt: float
    horizon_T: float | None = None
    aborted: int = 0
    halvings: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.accepted > self.proposed:
            raise ValueError("accepted cannot exceed proposed")

    @property
    def N(self) -> int:
        return self.samples.shape[1]

    @property
    def acceptance_ratio(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0

    def __len__(self) -> int:
        return self.samples.shape[0]


def _threads() -> int:
    env = os.environ.get("DPPSW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _run_blocks(fn, count: int):
    workers = min(_threads(), count)
    if workers <= 1:
        return [fn(b) for b in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, block])))


def _ordered(x: np.ndarray) -> np.ndarray:
    return np.all(np.diff(x, axis=1) > 0, axis=1)


# ---------------------------------------------------------------------------
# SDE sampler


def _cofactors(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cofactor matrices and determinants of a stack of square matrices."""
    N = M.shape[-1]
    if N == 2:
        cof = np.stack([np.stack([M[:, 1, 1], -M[:, 1, 0]], -1),
                        np.stack([-M[:, 0, 1], M[:, 0, 0]], -1)], 1)
    elif N == 3:
        r0, r1, r2 = M[:, 0], M[:, 1], M[:, 2]
        cof = np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], 1)
    else:
        with np.errstate(all="ignore"):
            det = np.linalg.det(M)
            ok = np.isfinite(det) & (det != 0)
            inv = np.full_like(M, np.nan)
            if np.any(ok):
                inv[ok] = np.linalg.inv(M[ok])
        return np.swapaxes(inv, 1, 2) * det[:, None, None], det
    det = np.einsum("pj,pj->p", M[:, 0], cof[:, 0])
    return cof, det


def sde_drift(X: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """``d/dx_j ln det[exp(nu_i x_k)] = sum_i (M^-1)_{ji} nu_i M_{ij}`` per row of X.

    ``(M^-1)_{ji}`` is the cofactor of entry ``(i, j)`` over the determinant.
    The sum is unchanged by rescaling rows of M, so each row is shifted by
    its maximum exponent before exponentiation.  Rows where M is numerically
    singular come back non-finite.
    """
    X = np.atleast_2d(X)
    P, N = X.shape
    if N == 1:
        return np.broadcast_to(nu, X.shape).astype(float).copy()
    L = nu[None, :, None] * X[:, None, :]
    L = L - L.max(axis=2, keepdims=True)
    M = np.exp(L)
    cof, det = _cofactors(M)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.einsum("pij,i,pij->pj", cof, nu, M) / det[:, None]


def _advance(x, dW, h, depth, rng, nu, cap, stats):
    """One Euler step of size h with increment dW; returns (x_new, ok)."""
    b = sde_drift(x, nu)
    finite = np.all(np.isfinite(b), axis=1)
    xn = x + b * h + dW
    ok = finite & _ordered(xn)
    retry = np.flatnonzero(finite & ~ok)
    if retry.size == 0 or depth >= cap:
        return xn, ok
    stats["halvings"] += int(retry.size)
    d = dW[retry]
    mid = d / 2 + math.sqrt(h / 4) * rng.standard_normal(d.shape)
    x1, ok1 = _advance(x[retry], mid, h / 2, depth + 1, rng, nu, cap, stats)
    x2, ok2 = _advance(x1, d - mid, h / 2, depth + 1, rng, nu, cap, stats)
    xn[retry] = x2
    ok[retry] = ok1 & ok2
    return xn, ok


def _sde_block(params, t, dt, count, rng, cap):
    nu = params.drifts
    steps = max(1, int(round(t / dt)))
    h = t / steps
    x = np.tile(params.initial_points, (count, 1))
    alive = np.ones(count, bool)
    stats = {"halvings": 0}
    sq = math.sqrt(h)
    for _ in range(steps):
        if alive.all():
            dW = sq * rng.standard_normal(x.shape)
            x, ok = _advance(x, dW, h, 0, rng, nu, cap, stats)
            alive &= ok
            continue
        idx = np.flatnonzero(alive)
        dW = sq * rng.standard_normal((idx.size, params.N))
        xn, ok = _advance(x[idx], dW, h, 0, rng, nu, cap, stats)
        x[idx] = xn
        alive[idx[~ok]] = False
    return x[alive], int(count - alive.sum()), stats["halvings"]


def sample_sde(cfg: SimConfig, t: float) -> PathEnsemble:
    """Euler-Maruyama sampler started from ``a rho`` with the h-transform drift."""
    if t <= 0:
        raise ValueError("t must be positive")
    dt = cfg.resolved_dt(t)
    nblocks = -(-cfg.num_paths // BLOCK_SIZE)

    def run(b):
        count = min(BLOCK_SIZE, cfg.num_paths - b * BLOCK_SIZE)
        return _sde_block(cfg.params, t, dt, count, _rng(cfg.seed, b), cfg.max_halvings)

    parts = _run_blocks(run, nblocks)
    samples = np.concatenate([p[0] for p in parts], axis=0)
    aborted = sum(p[1] for p in parts)
    halvings = sum(p[2] for p in parts)
    return PathEnsemble(samples, accepted=samples.shape[0], proposed=cfg.num_paths, method="sde",
                        t=t, dt=dt, aborted=aborted, halvings=halvings)


# ---------------------------------------------------------------------------
# rejection sampler


def _rejection_block(params, t, T, dt, count, rng, bridge):
    nu = params.drifts
    n_t = max(1, int(round(t / dt)))
    h = t / n_t
    n_T = n_t + int(math.ceil((T - t) / h - 1e-9))
    sq = math.sqrt(h)
    x = np.tile(params.initial_points, (count, 1))
    alive = np.arange(count)
    at_t, ids_t = None, None
    for step in range(1, n_T + 1):
        xn = x + nu * h + sq * rng.standard_normal(x.shape)
        keep = _ordered(xn)
        if bridge and params.N > 1:
            g0 = np.diff(x, axis=1)
            g1 = np.diff(xn, axis=1)
            # neighbour gaps diffuse with variance 2 per unit time
            with np.errstate(over="ignore", invalid="ignore"):
                p_cross = np.where((g0 > 0) & (g1 > 0), np.exp(-g0 * g1 / h), 1.0)
            survive = np.prod(1.0 - p_cross, axis=1)
            keep &= rng.random(x.shape[0]) < survive
        if keep.all():
            x = xn
        else:
            x = xn[keep]
            alive = alive[keep]
        if step == n_t:
            at_t, ids_t = x, alive
        if x.shape[0] == 0:
            break
    if at_t is None or alive.size == 0:
        return np.empty((0, params.N)), np.empty(0, int)
    return at_t[np.searchsorted(ids_t, alive)], alive


def sample_rejection(cfg: SimConfig, t: float) -> PathEnsemble:
    """Free drifted paths kept only if they stay ordered up to the horizon.

    Blocks of proposals are simulated until ``num_paths`` samples have been
    accepted; ``proposed`` counts proposals up to the last emitted sample.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    dt = cfg.resolved_dt(t)
    T = cfg.resolved_horizon(t)
    max_proposals = int(math.ceil(cfg.num_paths / MIN_ACCEPTANCE))
    chunks, total_acc, b = [], 0, 0
    workers = _threads()
    while total_acc < cfg.num_paths:
        batch = list(range(b, b + workers))

        def run(k):
            return _rejection_block(cfg.params, t, T, dt, BLOCK_SIZE, _rng(cfg.seed, k), cfg.bridge_correction)

        for k, res in zip(batch, _run_blocks(lambda i: run(batch[i]), len(batch))):
            chunks.append((k, res))
            total_acc += res[0].shape[0]
        b += len(batch)
        proposed = b * BLOCK_SIZE
        if proposed >= 100000 and total_acc < MIN_ACCEPTANCE * proposed:
            raise AcceptanceError(f"acceptance ratio {total_acc / proposed:.2e} is below {MIN_ACCEPTANCE}; "
                                  "the horizon or N is too demanding")
        if proposed >= max_proposals and total_acc < cfg.num_paths:
            raise AcceptanceError("proposal budget exhausted before enough paths were accepted")
    samples, proposed, need = [], 0, cfg.num_paths
    for k, (xs, ids) in sorted(chunks, key=lambda c: c[0]):
        if need == 0:
            break
        take = min(need, xs.shape[0])
        samples.append(xs[:take])
        need -= take
        proposed = k * BLOCK_SIZE + (int(ids[take - 1]) + 1 if need == 0 else BLOCK_SIZE)
    samples = np.concatenate(samples, axis=0)
    return PathEnsemble(samples, accepted=samples.shape[0], proposed=proposed, method="rejection",
                        t=t, dt=dt, horizon_T=T)


def sample(cfg: SimConfig, t: float) -> PathEnsemble:
    """Dispatch on ``cfg.method``."""
    return sample_sde(cfg, t) if cfg.method == "sde" else sample_rejection(cfg, t)


# ---------------------------------------------------------------------------
# density estimates and distances


def empirical_density(ensemble: PathEnsemble, grid, bandwidth: float) -> np.ndarray:
    """Box-kernel estimate of the one-point density at ``grid``.

    Counts particles within ``bandwidth / 2`` (half-open on the right) of each
    grid point, divided by ``num_samples * bandwidth``; the estimate carries
    total mass N.
    """
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    pts = np.sort(ensemble.samples.ravel())
    grid = np.asarray(grid, float)
    lo = np.searchsorted(pts, grid - bandwidth / 2, side="left")
    hi = np.searchsorted(pts, grid + bandwidth / 2, side="left")
    return (hi - lo) / (len(ensemble) * bandwidth)


def histogram_density(ensemble: PathEnsemble, edges) -> np.ndarray:
    """Per-bin density ``count / (num_samples * width)``."""
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    edges = np.asarray(edges, float)
    counts, _ = np.histogram(ensemble.samples.ravel(), bins=edges)
    return counts / (len(ensemble) * np.diff(edges))


def bin_averages(density_fn, edges, nodes: int = 12) -> np.ndarray:
    """Average of ``density_fn`` over each bin by Gauss-Legendre."""
    edges = np.asarray(edges, float)
    out = np.empty(edges.size - 1)
    for i in range(edges.size - 1):
        r = gauss_legendre_rule(edges[i], edges[i + 1], nodes)
        out[i] = np.sum(r.weights * density_fn(r.nodes)) / (edges[i + 1] - edges[i])
    return out


def _edges(lo: float, hi: float, bandwidth: float) -> np.ndarray:
    n = max(1, int(round((hi - lo) / bandwidth)))
    return np.linspace(lo, hi, n + 1)


def l1_to_density(ensemble: PathEnsemble, density_fn, lo: float, hi: float, bandwidth: float = 0.25) -> float:
    """L1 distance between the histogram and the bin-averaged analytic density.

    Mass outside ``[lo, hi)`` on either side is added to the distance.
    """
    edges = _edges(lo, hi, bandwidth)
    emp = histogram_density(ensemble, edges)
    ana = bin_averages(density_fn, edges)
    widths = np.diff(edges)
    N = ensemble.N
    emp_out = N - float(np.sum(emp * widths))
    ana_out = N - float(np.sum(ana * widths))
    return float(np.sum(np.abs(emp - ana) * widths)) + abs(emp_out) + abs(ana_out)


def l1_between(e1: PathEnsemble, e2: PathEnsemble, lo: float, hi: float, bandwidth: float = 0.25) -> float:
    """L1 distance between two histogram estimates on a shared binning."""
    edges = _edges(lo, hi, bandwidth)
    d1 = histogram_density(e1, edges)
    d2 = histogram_density(e2, edges)
    widths = np.diff(edges)
    out1 = e1.N - float(np.sum(d1 * widths))
    out2 = e2.N - float(np.sum(d2 * widths))
    return float(np.sum(np.abs(d1 - d2) * widths)) + abs(out1) + abs(out2)
