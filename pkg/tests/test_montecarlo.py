from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dppsw.kernel import ModelParams, density, make_kernel
from dppsw.montecarlo import (
    AcceptanceError,
    PathEnsemble,
    SimConfig,
    empirical_density,
    histogram_density,
    l1_between,
    l1_to_density,
    sample,
    sample_rejection,
    sample_sde,
    sde_drift,
)
from dppsw.process import survival_probability


def _ensemble(samples):
    s = np.atleast_2d(np.asarray(samples, float))
    return PathEnsemble(s, accepted=s.shape[0], proposed=s.shape[0], method="sde", t=1.0, dt=1e-3)


# --- configuration ---------------------------------------------------------

def test_config_defaults_and_validation():
    p = ModelParams(3, 1.0, 2.0, 1.0)
    cfg = SimConfig(p)
    assert cfg.resolved_dt(2.0) == pytest.approx(2e-3)
    assert cfg.resolved_horizon(1.0) == pytest.approx(1.0 + 5 * 0.5)
    with pytest.raises(ValueError):
        SimConfig(p, method="euler")
    with pytest.raises(ValueError):
        SimConfig(p, dt=-1.0)
    with pytest.raises(ValueError):
        SimConfig(p, horizon_T=0.5).resolved_horizon(1.0)


# --- drift of the conditioned SDE ------------------------------------------

@given(st.integers(2, 5), st.floats(0.3, 2.0), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_drift_special_case_is_coth_sum(N, sigma, seed):
    rng = np.random.default_rng(seed)
    X = np.sort(rng.normal(0, 2, size=(8, N)), axis=1)
    X = X[np.min(np.diff(X, axis=1), axis=1) > 0.05]
    if X.shape[0] == 0:
        return
    nu = sigma * (np.arange(N) - (N - 1) / 2)
    got = sde_drift(X, nu)
    diff = X[:, :, None] - X[:, None, :]
    with np.errstate(divide="ignore"):
        c = 0.5 * sigma / np.tanh(sigma * diff / 2)
    idx = np.arange(N)
    c[:, idx, idx] = 0.0
    np.testing.assert_allclose(got, c.sum(axis=2), rtol=1e-8, atol=1e-10)


# --- SDE sampler -----------------------------------------------------------

def test_single_particle_is_brownian():
    p = ModelParams(1, 1.0, 1.0, 1.0)
    ens = sample_sde(SimConfig(p, dt=0.01, num_paths=20000, seed=11), 1.0)
    assert ens.samples.shape == (20000, 1)
    assert abs(ens.samples.mean()) < 3 / math.sqrt(20000)
    assert ens.samples.var() == pytest.approx(1.0, rel=0.05)


def test_sde_ordering_and_reproducibility():
    p = ModelParams(3, 1.0, 1.0, 0.5)
    cfg = SimConfig(p, dt=5e-3, num_paths=3000, seed=5)
    e1 = sample(cfg, 0.5)
    e2 = sample(cfg, 0.5)
    assert np.all(np.diff(e1.samples, axis=1) > 0)
    np.testing.assert_array_equal(e1.samples, e2.samples)
    e3 = sample(SimConfig(p, dt=5e-3, num_paths=3000, seed=6), 0.5)
    assert not np.array_equal(e1.samples, e3.samples)


def test_sde_independent_of_thread_count(monkeypatch):
    p = ModelParams(2, 1.0, 1.0, 0.5)
    cfg = SimConfig(p, dt=1e-2, num_paths=20000, seed=2)
    monkeypatch.setenv("DPPSW_THREADS", "1")
    a = sample_sde(cfg, 0.5).samples
    monkeypatch.setenv("DPPSW_THREADS", "3")
    b = sample_sde(cfg, 0.5).samples
    np.testing.assert_array_equal(a, b)


def test_sde_step_refinement():
    p = ModelParams(2, 1.0, 1.0, 1.0)
    lo, hi = p.support_range()
    coarse = sample_sde(SimConfig(p, dt=2e-2, num_paths=20000, seed=1), 1.0)
    fine = sample_sde(SimConfig(p, dt=5e-3, num_paths=20000, seed=1), 1.0)
    f = lambda x: density(make_kernel(p), x)  # noqa: E731
    assert l1_to_density(fine, f, lo, hi) < 0.12
    assert l1_to_density(coarse, f, lo, hi) < 0.12


# --- rejection sampler -----------------------------------------------------

def test_rejection_single_particle_accepts_everything():
    p = ModelParams(1, 1.0, 1.0, 1.0)
    ens = sample_rejection(SimConfig(p, "rejection", dt=0.02, num_paths=1000, seed=0), 1.0)
    assert ens.acceptance_ratio == 1.0 and len(ens) == 1000


def test_rejection_acceptance_matches_survival():
    p = ModelParams(2, 1.0, 1.0, 1.0)
    T = 3.0
    ens = sample_rejection(SimConfig(p, "rejection", dt=5e-3, horizon_T=T, num_paths=15000, seed=3), 1.0)
    r = ens.acceptance_ratio
    se = math.sqrt(r * (1 - r) / ens.proposed)
    assert abs(r - survival_probability(T, p.initial_points, p.drifts)) < 2 * se
    assert np.all(np.diff(ens.samples, axis=1) > 0)


def test_rejection_reproducible():
    p = ModelParams(2, 1.0, 1.0, 0.5)
    cfg = SimConfig(p, "rejection", dt=0.01, num_paths=2000, seed=9)
    np.testing.assert_array_equal(sample(cfg, 0.5).samples, sample(cfg, 0.5).samples)


def test_rejection_gives_up_on_hopeless_horizon():
    p = ModelParams(3, 0.01, 0.01, 1.0)
    with pytest.raises(AcceptanceError):
        sample_rejection(SimConfig(p, "rejection", dt=0.05, horizon_T=5.0, num_paths=200, seed=0), 1.0)


# --- density estimates -----------------------------------------------------

def test_single_sample_unit_mass():
    ens = _ensemble([[0.31]])
    grid = np.arange(-10, 11) * 0.1
    est = empirical_density(ens, grid, 0.1)
    assert np.count_nonzero(est) == 1
    assert est[np.argmin(abs(grid - 0.31))] == pytest.approx(1 / 0.1)
    three = _ensemble([[-0.52, 0.11, 0.73]])
    assert np.sum(empirical_density(three, grid, 0.1)) * 0.1 == pytest.approx(3.0)


def test_empirical_density_mass():
    rng = np.random.default_rng(0)
    ens = _ensemble(np.sort(rng.normal(size=(5000, 3)), axis=1))
    grid = np.arange(-8, 8, 0.05)
    est = empirical_density(ens, grid, 0.05)
    assert np.sum(est) * 0.05 == pytest.approx(3.0, abs=1e-3)
    edges = np.linspace(-8, 8, 65)
    assert np.sum(histogram_density(ens, edges) * np.diff(edges)) == pytest.approx(3.0, abs=1e-3)


def test_l1_distances():
    rng = np.random.default_rng(1)
    e1 = _ensemble(rng.normal(size=(40000, 1)))
    e2 = _ensemble(rng.normal(size=(40000, 1)))
    gauss = lambda x: np.exp(-np.asarray(x) ** 2 / 2) / math.sqrt(2 * math.pi)  # noqa: E731
    assert l1_to_density(e1, gauss, -6, 6) < 0.05
    assert l1_between(e1, e2, -6, 6) < 0.05
    shifted = _ensemble(rng.normal(1.0, 1.0, size=(40000, 1)))
    assert l1_to_density(shifted, gauss, -6, 6) > 0.5
