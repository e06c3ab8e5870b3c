from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dppsw.kernel import (
    ModelParams,
    correlation,
    density,
    gap_probability,
    gue_density,
    kernel_K,
    kernel_K_t0,
    kernel_mapped,
    make_kernel,
    mapped_matrix,
    particle_density,
    semicircle_density,
    weight_w,
)
from dppsw.numerics import gauss_legendre_rule


def _gauss(x, t):
    return np.exp(-x * x / (2 * t)) / math.sqrt(2 * math.pi * t)


def _log_grid(params, n=4001):
    # z-space grid uniform in log z, covering the mapped support
    lo, hi = params.support_range()
    u = params.sigma * np.linspace(lo, hi, n) + params.shift
    return u


# --- parameters ------------------------------------------------------------

def test_derived_parameters():
    p = ModelParams(4, 2.0, 0.5, 1.5)
    assert p.theta == pytest.approx(2.0 / (0.5 * 1.5))
    assert p.q == pytest.approx(math.exp(-0.25 * 1.5))
    assert p.t0 == pytest.approx(4.0)
    assert p.at_time(p.t0).theta == pytest.approx(1.0)


@pytest.mark.parametrize("args", [(0, 1, 1, 1), (2, -1, 1, 1), (2, 1, 0, 1), (2, 1, 1, 0)])
def test_invalid_parameters(args):
    with pytest.raises(ValueError):
        ModelParams(*args)


# --- weight ----------------------------------------------------------------

def test_weight_at_one():
    q = 0.3
    assert weight_w(1.0, q) == pytest.approx(1 / math.sqrt(2 * math.pi * abs(math.log(q))))


@given(st.floats(0.05, 0.95), st.floats(-3, 3))
def test_weight_log_symmetry(q, u):
    z = math.exp(u)
    assert weight_w(z, q) == pytest.approx(weight_w(1 / z, q), rel=1e-12)


# --- z-space kernel --------------------------------------------------------

def test_single_particle_kernel():
    p = ModelParams(1, 0.7, 1.3, 0.9)
    h = make_kernel(p)
    for x, y in ((0.5, 2.0), (1.0, 1.0), (3.0, 0.2)):
        expected = math.sqrt(weight_w(x, p.q) * weight_w(y, p.q)) * math.sqrt(p.q)
        assert kernel_K(h, x, y) == pytest.approx(expected, rel=1e-12)


def test_z_trace_and_projection():
    p = ModelParams(5, 1.0, 1.0, 1.0)
    h = make_kernel(p)
    u = _log_grid(p)
    z = np.exp(u)
    diag = np.array([kernel_K(h, v, v) for v in z])
    assert np.trapezoid(diag * z, u) == pytest.approx(5.0, abs=1e-8)
    p4 = ModelParams(4, 1.0, 1.0, 1.0)
    h4 = make_kernel(p4)
    z4 = np.exp(_log_grid(p4))
    for x, y in ((0.3, 2.0), (1.5, 1.5), (5.0, 0.8)):
        lhs = np.trapezoid(kernel_K(h4, x, z4) * kernel_K(h4, z4, y) * z4, np.log(z4))
        assert lhs == pytest.approx(kernel_K(h4, x, y), rel=1e-8)


def test_special_time_kernel_forms():
    q0 = math.exp(-1)
    assert kernel_K_t0(q0, 6, 2.0, 3.0, form="cd") == pytest.approx(kernel_K_t0(q0, 6, 2.0, 3.0, form="sum"), rel=1e-9)
    assert kernel_K_t0(q0, 6, 1.5, 1.5, form="cd") == pytest.approx(kernel_K_t0(q0, 6, 1.5, 1.5, form="sum"), rel=1e-9)
    p = ModelParams(6, 1.0, 1.0, 1.0)  # t = t0
    h = make_kernel(p)
    assert kernel_K(h, 2.0, 3.0) == pytest.approx(kernel_K_t0(p.q, 6, 2.0, 3.0), rel=1e-9)


# --- mapped kernel and density ---------------------------------------------

@pytest.mark.parametrize("a, sigma, t", [(1, 1, 1), (0.5, 2, 0.3), (2, 0.5, 3)])
def test_single_particle_density_is_gaussian(a, sigma, t):
    h = make_kernel(ModelParams(1, a, sigma, t))
    xs = np.linspace(-4, 4, 17)
    np.testing.assert_allclose(density(h, xs), _gauss(xs, t), rtol=1e-11)


def test_mapped_trace_fifteen():
    p = ModelParams(15, 1.0, 1.0, 1.0)
    lo, hi = p.support_range()
    xs = np.linspace(lo, hi, 8001)
    assert np.trapezoid(density(make_kernel(p), xs), xs) == pytest.approx(15.0, abs=1e-6)


def test_mapped_projection():
    p = ModelParams(4, 0.5, 0.5, 1.5)
    h = make_kernel(p)
    lo, hi = p.support_range()
    us = np.linspace(lo, hi, 6001)
    for x, y in ((-1.0, 2.0), (0.4, 0.4)):
        lhs = np.trapezoid(kernel_mapped(h, x, us) * kernel_mapped(h, us, y), us)
        assert lhs == pytest.approx(kernel_mapped(h, x, y), rel=1e-8)


def test_density_positive_and_matrix_diagonal():
    h = make_kernel(ModelParams(5, 1.0, 1.0, 0.5))
    xs = np.linspace(-8, 8, 81)
    d = density(h, xs)
    assert np.all(d > 0)
    np.testing.assert_allclose(np.diag(mapped_matrix(h, xs)), d, rtol=1e-12)


def test_particle_density_wrapper():
    h = make_kernel(ModelParams(3, 1.0, 1.0, 1.0))
    assert particle_density(3, 1.0, 1.0, 1.0, 0.3) == pytest.approx(density(h, 0.3))


# --- correlations and gap probabilities ------------------------------------

def test_correlation_basics():
    h = make_kernel(ModelParams(3, 1.0, 1.0, 1.0))
    assert correlation(h, [0.3]) == pytest.approx(density(h, 0.3))
    assert correlation(h, [0.1, 0.1]) == pytest.approx(0.0, abs=1e-15)


def test_two_point_correlation_normalised():
    p = ModelParams(2, 1.0, 1.0, 1.0)
    h = make_kernel(p)
    lo, hi = p.support_range()
    r = gauss_legendre_rule(lo, hi, 160)
    K = mapped_matrix(h, r.nodes)
    rho2 = np.outer(np.diag(K), np.diag(K)) - K * K.T
    assert r.weights @ rho2 @ r.weights / 2 == pytest.approx(1.0, abs=1e-10)


def test_gap_probability_limits():
    h3 = make_kernel(ModelParams(3, 1.0, 1.0, 1.0))
    assert gap_probability(h3, (100.0, 101.0)) == pytest.approx(1.0, abs=1e-8)
    p2 = ModelParams(2, 1.0, 1.0, 1.0)
    assert abs(gap_probability(make_kernel(p2), p2.support_range(), nystrom_size=128)) < 1e-6


# --- driftless comparison densities ----------------------------------------

def test_gue_density():
    xs = np.linspace(-4, 4, 9)
    np.testing.assert_allclose(gue_density(1, 1.3, xs), _gauss(xs, 1.3), rtol=1e-12)
    grid = np.linspace(-20, 20, 8001)
    assert np.trapezoid(gue_density(17, 1.0, grid), grid) == pytest.approx(17.0, abs=1e-8)
    pts = np.linspace(-9, 9, 37)
    np.testing.assert_allclose(gue_density(9, 1.0, pts, form="cd"), gue_density(9, 1.0, pts, form="sum"),
                               rtol=1e-10, atol=1e-14)


def test_semicircle_mass():
    xs = np.linspace(-10, 10, 20001)
    assert np.trapezoid(semicircle_density(6, 1.5, xs), xs) == pytest.approx(6.0, rel=1e-4)


@pytest.mark.parametrize("interval", [(0.0, 1.0), (-2.0, 0.5), (1.5, 4.0)])
def test_gap_probability_node_doubling(interval):
    h = make_kernel(ModelParams(3, 1.0, 1.0, 1.0))
    assert abs(gap_probability(h, interval, 64) - gap_probability(h, interval, 128)) < 1e-8
