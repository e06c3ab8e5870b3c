from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dppsw.kernel import ModelParams, density, gue_density, make_kernel
from dppsw.numerics import det_small
from dppsw.process import (
    Configuration,
    DriftSpec,
    MultitimeSpec,
    bbo_density,
    biorthogonal_density_z,
    determinantal_density_z,
    drifted_p,
    gaussian_p,
    geo_symmetric_kernel,
    geo_transition,
    geo_transition_general,
    gue_limit_density,
    gue_started_at_zero,
    h_transform_density,
    km_lgv_det,
    log_c_hat,
    multitime_density,
    noncolliding_geo_density,
    partition_function,
    partition_function_quadrature,
    speed_measure_density,
    survival_limit,
    survival_probability,
    t0_ensemble_density,
    transformed_density_y,
    vandermonde,
    weyl_quad,
    zero_drift_multitime_density,
)

ordered2 = st.lists(st.floats(-3, 3), min_size=2, max_size=2, unique=True).map(sorted).filter(
    lambda v: v[1] - v[0] > 1e-3)
ordered3 = st.lists(st.floats(-3, 3), min_size=3, max_size=3, unique=True).map(sorted).filter(
    lambda v: min(np.diff(v)) > 1e-3)


def _rows(fn):
    return lambda Y: np.array([fn(r) for r in Y])


# --- value types -----------------------------------------------------------

def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration((1.0, 0.0))
    with pytest.raises(ValueError):
        Configuration((-1.0, 2.0), domain="positive-half-line")
    c = Configuration((0.0, 1.0))
    assert len(c) == 2 and np.asarray(c).tolist() == [0.0, 1.0]


def test_drift_spec():
    with pytest.raises(ValueError):
        DriftSpec((1.0, 0.0))
    d = DriftSpec.special(3, 2.0)
    assert d.nu == (-2.0, 0.0, 2.0) and d.distinct
    assert not DriftSpec((0.0, 0.0)).distinct


@pytest.mark.parametrize("N, sigma", [(2, 1.0), (3, 0.7), (5, 1.3)])
def test_special_drift_norm(N, sigma):
    nu = np.array(DriftSpec.special(N, sigma).nu)
    assert float(nu @ nu) == pytest.approx(N * (N * N - 1) * sigma ** 2 / 12)


def test_multitime_spec_validation():
    with pytest.raises(ValueError):
        MultitimeSpec((1.0, 0.5), ((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        MultitimeSpec((1.0,), ((0.0, 1.0), (0.0, 1.0)))
    s = MultitimeSpec((0.5, 1.0), ((0.0, 1.0), (0.2, 1.1)))
    assert s.M == 2 and s.N == 2


# --- free transition densities ---------------------------------------------

def test_heat_kernel():
    assert gaussian_p(0.7, 1.2, 1.2) == pytest.approx(1 / math.sqrt(2 * math.pi * 0.7))
    ys = np.linspace(-15, 15, 6001)
    assert np.trapezoid(gaussian_p(1.3, ys, 0.4), ys) == pytest.approx(1.0, abs=1e-12)
    assert np.trapezoid(drifted_p(1.3, ys, 0.4, 0.8), ys) == pytest.approx(1.0, abs=1e-12)


def test_km_lgv_basic():
    assert km_lgv_det(1.0, [0.3], [0.1]).to_real() == pytest.approx(gaussian_p(1.0, 0.3, 0.1))
    assert km_lgv_det(1.0, [0.3, 0.3], [0.0, 1.0]).sign == 0


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_km_lgv_positive(seed):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.normal(0, 2, 4))
    y = np.sort(rng.normal(0, 2, 4))
    if min(np.diff(x)) < 1e-3 or min(np.diff(y)) < 1e-3:
        return
    assert km_lgv_det(rng.uniform(0.1, 3), y, x).sign == 1


def test_vandermonde():
    assert vandermonde([1.0, 3.5]).to_real() == pytest.approx(2.5)
    assert vandermonde([1.0, 2.0, 1.0]).sign == 0
    x = np.array([-1.2, 0.3, 0.9, 2.2])
    assert vandermonde(x).to_real() == pytest.approx(det_small(np.vander(x, increasing=True)).to_real(), rel=1e-10)


# --- noncolliding densities ------------------------------------------------

def test_small_drift_limit():
    y, x = np.array([-0.3, 0.8]), np.array([-0.5, 0.5])
    ratio = bbo_density(1.0, y, x, [-1e-4, 1e-4]) / h_transform_density(1.0, y, x)
    assert ratio == pytest.approx(1.0, rel=1e-3)


def test_coincident_drifts_rejected():
    with pytest.raises(ValueError):
        bbo_density(1.0, [0.0, 1.0], [0.0, 1.0], [0.5, 0.5])


def test_bbo_normalisation_and_chapman_kolmogorov():
    p = ModelParams(2, 1.0, 1.0, 1.0)
    x, nu = p.initial_points, p.drifts
    mass = weyl_quad(_rows(lambda r: bbo_density(1.0, r, x, nu)), 2, -12, 12, 64, 2)
    assert mass == pytest.approx(1.0, abs=1e-6)
    y = np.array([-0.4, 1.1])
    ck = weyl_quad(_rows(lambda r: bbo_density(0.4, r, x, nu) * bbo_density(0.6, y, r, nu)), 2, -12, 12, 64, 2)
    assert ck == pytest.approx(bbo_density(1.0, y, x, nu), abs=1e-6)


def test_gue_from_origin():
    xs = np.linspace(-3, 3, 7)
    np.testing.assert_allclose([gue_started_at_zero(1.3, [v]) for v in xs], gaussian_p(1.3, xs, 0.0), rtol=1e-12)
    mass = weyl_quad(_rows(lambda r: gue_started_at_zero(1.0, r)), 2, -10, 10, 64, 2)
    assert mass == pytest.approx(1.0, abs=1e-8)
    # one-point marginal (both orderings) against the Hermite density
    u, w = np.polynomial.legendre.leggauss(200)
    grid = 10 * u
    for x0 in (-1.5, 0.0, 0.7):
        marg = sum(wi * 10 * gue_started_at_zero(1.0, sorted([x0, g])) for g, wi in zip(grid, w))
        assert marg == pytest.approx(gue_density(2, 1.0, x0), rel=1e-8)


@pytest.mark.parametrize("a, sigma, t", [(1, 1, 1), (0.5, 0.5, 1.5)])
def test_multitime_single_time_normalised(a, sigma, t):
    p = ModelParams(2, a, sigma, t)
    mass = weyl_quad(_rows(lambda r: multitime_density(MultitimeSpec((t,), (r,)), p)), 2, -14, 14, 64, 2)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_multitime_single_particle():
    p = ModelParams(1, 1.0, 1.0, 1.0)
    for x in (-1.0, 0.3):
        assert multitime_density(MultitimeSpec((1.7,), ((x,),)), p) == pytest.approx(gaussian_p(1.7, x, 0.0))


def test_multitime_marginal_consistency():
    p = ModelParams(2, 1.0, 1.0, 1.0)
    y = np.array([-0.6, 1.4])
    joint = weyl_quad(_rows(lambda r: multitime_density(MultitimeSpec((0.5, 1.0), (r, y)), p)), 2, -12, 12, 64, 2)
    assert joint == pytest.approx(multitime_density(MultitimeSpec((1.0,), (y,)), p), rel=1e-7)


@given(ordered3, st.floats(0.2, 2.0))
@settings(max_examples=30, deadline=None)
def test_exp_and_sinh_forms_agree(x, t):
    p = ModelParams(3, 1.0, 1.0, t)
    spec = MultitimeSpec((t,), (tuple(x),))
    assert multitime_density(spec, p, form="exp") == pytest.approx(multitime_density(spec, p), rel=1e-10)


def test_single_time_matches_kernel_density_for_one_particle():
    p = ModelParams(1, 0.6, 1.4, 0.8)
    assert multitime_density(MultitimeSpec((0.8,), ((0.25,),)), p) == pytest.approx(density(make_kernel(p), 0.25))


# --- changes of variables --------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("a, sigma, t", [(1, 1, 1), (0.5, 0.5, 1.5), (1, 1, 0.25)])
def test_density_forms_consistent(N, a, sigma, t):
    rng = np.random.default_rng(N)
    p = ModelParams(N, a, sigma, t)
    x = np.sort(rng.normal(0, 1.5, N))
    d = multitime_density(MultitimeSpec((t,), (x,)), p)
    y = np.exp(sigma * x)
    dy = transformed_density_y(MultitimeSpec((t,), (y,)), p) * np.prod(sigma * y)
    z = np.exp(sigma * x + p.shift)
    dz = biorthogonal_density_z(z, p) * np.prod(sigma * z)
    dd = determinantal_density_z(z, p) * np.prod(sigma * z)
    assert dy == pytest.approx(d, rel=1e-9)
    assert dz == pytest.approx(d, rel=1e-9)
    assert dd == pytest.approx(d, rel=1e-8)


def test_two_time_y_form():
    p = ModelParams(3, 0.7, 1.2, 1.0)
    rng = np.random.default_rng(3)
    xs = [np.sort(rng.normal(0, 1, 3)) for _ in range(2)]
    ys = [np.exp(1.2 * v) for v in xs]
    lhs = transformed_density_y(MultitimeSpec((0.5, 1.1), ys), p) * np.prod(1.2 * ys[0]) * np.prod(1.2 * ys[1])
    assert lhs == pytest.approx(multitime_density(MultitimeSpec((0.5, 1.1), xs), p), rel=1e-9)


def test_single_particle_z_density():
    p = ModelParams(1, 1.0, 2.0, 0.3)
    from dppsw.kernel import weight_w
    assert biorthogonal_density_z([1.7], p) == pytest.approx(weight_w(1.7, p.q) * math.sqrt(p.q), rel=1e-12)


# --- partition function ----------------------------------------------------

def test_partition_single_particle():
    p = ModelParams(1, 0.3, 1.7, 0.9)
    assert partition_function(p).logmag == pytest.approx(1.7 ** 2 * 0.9 / 2, rel=1e-14)


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("a, sigma, t", [(1, 1, 1), (0.5, 0.5, 1.5), (0.7, 1.3, 0.8)])
def test_partition_against_oracle(N, a, sigma, t):
    p = ModelParams(N, a, sigma, t)
    rel = abs(math.expm1(partition_function_quadrature(p).logmag - partition_function(p).logmag))
    assert rel < (1e-6 if N == 2 else 1e-5)


def test_partition_oracle_limited():
    with pytest.raises(ValueError):
        partition_function_quadrature(ModelParams(4, 1, 1, 1))


# --- special time and q -> 1 -----------------------------------------------

def test_special_time_density():
    p = ModelParams(3, 1.0, 1.0, 1.0)
    rng = np.random.default_rng(5)
    for _ in range(3):
        z = np.sort(np.exp(rng.normal(p.shift, 1, 3)))
        assert t0_ensemble_density(p.q0, z) == pytest.approx(biorthogonal_density_z(z, p), rel=1e-8)
    assert log_c_hat(0.4, 1) == pytest.approx(0.5 * math.log(0.4))


def test_special_time_single_particle_normalised():
    q0 = 0.6
    v = -math.log(q0)
    u = np.linspace(-20, 20, 20001) * math.sqrt(v) + 2 * v
    vals = np.array([t0_ensemble_density(q0, [math.exp(s)]) for s in u]) * np.exp(u)
    assert np.trapezoid(vals, u) == pytest.approx(1.0, abs=1e-10)


def _gue_limit_gap(q):
    scale = q ** -1.5 * math.sqrt(2 * (1 - q))
    grid = np.linspace(-2.5, 2.5, 11)
    gap = 0.0
    for i, u in enumerate(grid):
        for v in grid[i + 1:]:
            z = scale * np.array([u, v]) + q ** -0.5
            gap = max(gap, abs(t0_ensemble_density(q, z) * scale ** 2 - gue_limit_density([u, v])))
    return gap


def test_gue_limit_of_special_time_density():
    # the gap shrinks like sqrt(1 - q); at q = 0.999 it is still about 0.026
    gaps = [_gue_limit_gap(q) for q in (0.99, 0.999, 0.9999, 0.99999)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[2] < 1e-2


# --- survival probability --------------------------------------------------

def test_survival():
    assert survival_probability(3.0, [0.0], [1.0]) == 1.0
    vals = [survival_probability(T, [-1, 1], [-1, 1]) for T in (1, 5, 20)]
    lim = survival_limit([-1, 1], [-1, 1])
    assert lim == pytest.approx(1 - math.exp(-4), rel=1e-14)
    assert vals[0] >= vals[1] >= vals[2]
    assert vals[-1] == pytest.approx(lim, rel=1e-2)


# --- geometric Brownian motion ---------------------------------------------

def test_geo_transition():
    u = np.linspace(-12, 12, 12001)
    y = np.exp(0.3 + u)
    assert np.trapezoid(geo_transition(0.8, y, math.exp(0.3), 0.9) * y, u) == pytest.approx(1.0, abs=1e-12)
    for yy in (0.3, 1.0, 4.0):
        assert geo_transition_general(0.8, yy, 1.3, 0.9, 0.0) == pytest.approx(geo_transition(0.8, yy, 1.3, 0.9))


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.1, 2), st.floats(-1, 1))
@settings(max_examples=40)
def test_symmetric_kernel(x, y, sigma, nut):
    k = geo_symmetric_kernel(0.7, x, y, sigma, nut)
    assert k == pytest.approx(geo_symmetric_kernel(0.7, y, x, sigma, nut), rel=1e-12)
    assert geo_transition_general(0.7, y, x, sigma, nut) == pytest.approx(
        k * speed_measure_density(y, sigma, nut), rel=1e-12)


def test_noncolliding_geo():
    spec1 = MultitimeSpec((0.6,), ((1.7,),))
    assert noncolliding_geo_density(spec1, [1.1], 0.8) == pytest.approx(geo_transition(0.6, 1.7, 1.1, 0.8))
    sg = 0.8
    x0 = np.array([-0.4, 0.6])
    xs = [np.array([-0.2, 0.9]), np.array([0.1, 0.5])]
    spec_x = MultitimeSpec((0.5, 1.0), xs)
    spec_y = MultitimeSpec((0.5, 1.0), [np.exp(sg * v) for v in xs])
    jac = np.prod(sg * np.exp(sg * xs[0])) * np.prod(sg * np.exp(sg * xs[1]))
    lhs = noncolliding_geo_density(spec_y, np.exp(sg * x0), sg) * jac
    # y = e^{sigma x} maps the driftless motion of x with variance sigma^2 t
    scaled = MultitimeSpec((0.5 * sg ** 2, 1.0 * sg ** 2), [sg * v for v in xs])
    rhs = zero_drift_multitime_density(scaled, sg * x0) * sg ** 4
    assert lhs == pytest.approx(rhs, rel=1e-10)
    p = ModelParams(2, 1.0, sg, 1.0)
    y = np.exp(sg * xs[0])
    assert not math.isclose(noncolliding_geo_density(MultitimeSpec((1.0,), (y,)), np.exp(sg * x0), sg),
                            transformed_density_y(MultitimeSpec((1.0,), (y,)), p), rel_tol=1e-3)
