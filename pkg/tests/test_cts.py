import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedts.cts import (
    CtsParams,
    char_exponent_derivatives,
    cts_characteristic_exponent,
    cts_cumulant,
    cts_cumulant_d1,
    cts_cumulant_d2,
    cts_higher_cumulants,
    cts_levy_values,
    cts_sample,
    stable_variates,
)
from mixedts.errors import DomainError, UnsupportedParameterError

from conftest import batch_moments

P = CtsParams(1.25, 1.2, 1.9)

alphas = st.one_of(st.floats(0.1, 0.95), st.floats(1.05, 1.95))
rates = st.floats(0.2, 5.0)


def cts_strategy():
    return st.builds(CtsParams, alphas, rates, rates)


def test_cumulant_at_origin_is_zero():
    assert cts_cumulant(P, 0.0) == 0.0


def test_cumulant_matches_high_precision_value():
    # 40-digit evaluation of the closed form (mpmath), frozen
    expected = 0.1313792065903870184895387259491191384401
    assert cts_cumulant(P, 0.5) == pytest.approx(expected, rel=1e-13)


def test_cumulant_swap_symmetry():
    sym = CtsParams(1.25, 1.9, 1.9)
    u = np.linspace(-1.8, 1.8, 25)
    np.testing.assert_allclose(cts_cumulant(sym, u), cts_cumulant(sym, -u), rtol=1e-12, atol=1e-15)


def test_cumulant_domain_and_parameter_errors():
    with pytest.raises(DomainError):
        cts_cumulant(P, 1.3)
    with pytest.raises(DomainError):
        cts_cumulant(P, -2.0 + 1j)
    with pytest.raises(UnsupportedParameterError):
        cts_cumulant(CtsParams(1.0, 1.0, 1.0), 0.1)
    with pytest.raises(UnsupportedParameterError):
        cts_cumulant(CtsParams(2.0, 1.0, 1.0), 0.1)


def test_cumulant_finite_at_strip_endpoints():
    assert math.isfinite(cts_cumulant(P, 1.2))
    assert math.isfinite(cts_cumulant(P, -1.9))


@pytest.mark.parametrize("bad", [(0.0, 1, 1), (2.5, 1, 1), (1.5, 0, 1), (1.5, 1, -1), (float("nan"), 1, 1)])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ValueError):
        CtsParams(*bad)


def test_characteristic_exponent_values():
    assert cts_characteristic_exponent(P, 0.0) == 0.0
    v = cts_characteristic_exponent(P, 0.7)
    assert np.conj(v) == pytest.approx(cts_characteristic_exponent(P, -0.7), rel=1e-14)
    expected = -0.4219020251715826414094182580229343436816
    got = cts_characteristic_exponent(CtsParams(0.8, 1.0, 1.0), 1.0)
    assert got.real == pytest.approx(expected, rel=1e-13)
    assert abs(got.imag) < 1e-15


def test_characteristic_exponent_rejects_alpha_one_and_two():
    for a in (1.0, 2.0):
        with pytest.raises(UnsupportedParameterError):
            cts_characteristic_exponent(CtsParams(a, 1.0, 1.0), 0.3)


def test_derivatives_at_origin():
    assert cts_cumulant_d1(P, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert cts_cumulant_d2(P, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_derivatives_match_finite_differences():
    u = 0.3
    h = 1e-5 * max(1.0, abs(u))
    fd1 = (cts_cumulant(P, u + h) - cts_cumulant(P, u - h)) / (2 * h)
    fd2 = (cts_cumulant(P, u + h) - 2 * cts_cumulant(P, u) + cts_cumulant(P, u - h)) / h**2
    assert cts_cumulant_d1(P, u) == pytest.approx(fd1, rel=1e-6)
    assert cts_cumulant_d2(P, u) == pytest.approx(fd2, rel=1e-4)


def test_derivative_endpoint_rules():
    # Phi'' is singular at both ends; Phi' only when alpha < 1
    with pytest.raises(DomainError):
        cts_cumulant_d2(P, 1.2)
    assert math.isfinite(cts_cumulant_d1(P, 1.2))
    low = CtsParams(0.6, 1.2, 1.9)
    with pytest.raises(DomainError):
        cts_cumulant_d1(low, 1.2)


def test_higher_cumulants_match_derivatives():
    h = 1e-3
    d2 = lambda u: cts_cumulant_d2(P, u)  # noqa: E731
    k3_fd = (d2(h) - d2(-h)) / (2 * h)
    k4_fd = (d2(h) - 2 * d2(0.0) + d2(-h)) / h**2
    k3, k4 = cts_higher_cumulants(P)
    assert k3 == pytest.approx(k3_fd, rel=1e-5)
    assert k4 == pytest.approx(k4_fd, rel=1e-4)


@settings(max_examples=60, deadline=None)
@given(cts_strategy())
def test_standardisation_identities(p):
    assert cts_cumulant(p, 0.0) == 0.0
    assert cts_cumulant_d1(p, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert cts_cumulant_d2(p, 0.0) == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(cts_strategy())
def test_convexity_on_open_strip(p):
    u = np.linspace(-p.lambda_minus, p.lambda_plus, 52)[1:-1]
    assert np.all(cts_cumulant_d2(p, u) > 0.0)


@settings(max_examples=60, deadline=None)
@given(cts_strategy(), st.floats(-30.0, 30.0))
def test_exponent_is_cumulant_on_imaginary_axis(p, u):
    np.testing.assert_allclose(cts_characteristic_exponent(p, u), cts_cumulant(p, 1j * u),
                               rtol=1e-10, atol=1e-12)
    assert cts_characteristic_exponent(p, -u) == pytest.approx(np.conj(cts_characteristic_exponent(p, u)),
                                                               rel=1e-12, abs=1e-14)
    assert cts_characteristic_exponent(p, u).real <= 1e-12


def test_exponent_derivatives_helper_consistent():
    u = np.array([-2.0, -0.4, 0.3, 1.7])
    lexp, d1, d2 = char_exponent_derivatives(P, u)
    h = 1e-5
    fd1 = (cts_characteristic_exponent(P, u + h) - cts_characteristic_exponent(P, u - h)) / (2 * h)
    np.testing.assert_allclose(lexp, cts_characteristic_exponent(P, u), rtol=1e-14)
    np.testing.assert_allclose(d1, fd1, rtol=1e-6)
    fd2 = (char_exponent_derivatives(P, u + h)[1] - char_exponent_derivatives(P, u - h)[1]) / (2 * h)
    np.testing.assert_allclose(d2, fd2, rtol=1e-6)


def test_gaussian_route_of_exponent_helper():
    g = CtsParams(2.0, 1.0, 3.0)
    lexp, d1, d2 = char_exponent_derivatives(g, np.array([0.5, 2.0]))
    np.testing.assert_allclose(lexp, [-0.125, -2.0])
    np.testing.assert_allclose(d1, [-0.5, -2.0])
    np.testing.assert_allclose(d2, [-1.0, -1.0])


# ---------------------------------------------------------------- sampling

@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_stable_base_characteristic_function(alpha):
    rng = np.random.default_rng(11)
    x = stable_variates(alpha, 200_000, rng)
    for u in (0.3, 1.0):
        emp = np.exp(1j * u * x).mean()
        th = np.exp(-abs(u) ** alpha * (1 - 1j * np.sign(u) * math.tan(math.pi * alpha / 2)))
        assert abs(emp - th) < 5 / math.sqrt(x.size)
    if alpha < 1:
        assert np.all(x > 0)


def test_gaussian_sampler():
    rng = np.random.default_rng(1)
    n = 100_000
    x = cts_sample(CtsParams(2.0, 0.7, 3.0), 2.5, n, rng)
    assert abs(x.mean()) < 4 / math.sqrt(n)
    assert abs(x.var() - 1.0) < 5 * math.sqrt(2.0 / n)


def test_symmetric_sampler_has_no_skew():
    rng = np.random.default_rng(2)
    x = cts_sample(CtsParams(1.25, 1.9, 1.9), 1.0, 200_000, rng)
    full, se = batch_moments(x)
    assert abs(full[2]) < 5 * se[2]


@pytest.mark.parametrize("params,v", [(CtsParams(0.8, 1.2, 1.9), 1.0), (CtsParams(1.25, 1.2, 1.9), 1.0),
                                      (CtsParams(1.7, 0.6, 2.5), 3.0)])
def test_sampler_moments(params, v):
    rng = np.random.default_rng(3)
    x = cts_sample(params, v, 400_000, rng)
    k3, k4 = cts_higher_cumulants(params.rescaled(v))
    expected = np.array([0.0, 1.0, k3, k4 + 3.0])
    full, se = batch_moments(x)
    assert np.all(np.abs(full - expected) < 5 * se), (full, expected, se)


def test_sampler_characteristic_function():
    rng = np.random.default_rng(4)
    n = 100_000
    for p in (CtsParams(0.8, 1.2, 1.9), CtsParams(1.25, 1.2, 1.9)):
        x = cts_sample(p, 1.0, n, rng)
        for u in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
            emp = np.exp(1j * u * x).mean()
            assert abs(emp - np.exp(cts_characteristic_exponent(p, u))) < 5 / math.sqrt(n)


def test_sampler_rescales_tempering():
    rng = np.random.default_rng(5)
    p = CtsParams(1.4, 1.0, 2.0)
    x = cts_sample(p, 4.0, 100_000, rng)
    q = p.rescaled(4.0)
    for u in (0.5, 1.5):
        assert abs(np.exp(1j * u * x).mean() - np.exp(cts_characteristic_exponent(q, u))) < 5 / math.sqrt(x.size)


def test_sampler_accepts_one_scale_per_draw():
    rng = np.random.default_rng(6)
    v = rng.gamma(2.0, 0.5, 50_000)
    x = cts_sample(CtsParams(1.3, 1.0, 1.5), v, v.size, rng)
    assert x.shape == v.shape
    assert abs(x.var() - 1.0) < 0.05


def test_levy_values_cumulants_scale_with_time():
    rng = np.random.default_rng(7)
    p = CtsParams(0.7, 1.5, 1.0)
    t = np.full(200_000, 2.0)
    x = cts_levy_values(p, t, rng)
    k3, k4 = cts_higher_cumulants(p)
    full, se = batch_moments(x)
    expected = np.array([0.0, 2.0, 2.0 * k3, 2.0 * k4 + 3 * 4.0])
    assert np.all(np.abs(full - expected) < 5 * se)


def test_levy_values_zero_time_is_zero():
    rng = np.random.default_rng(0)
    out = cts_levy_values(P, np.array([0.0, 0.0]), rng)
    np.testing.assert_allclose(out, 0.0, atol=1e-300)


def test_fft_fallback_matches_distribution():
    rng = np.random.default_rng(8)
    p = CtsParams(1.25, 1.2, 1.9)
    x = cts_sample(p, 1.0, 100_000, rng, method="fft")
    for u in (-1.0, 0.5, 2.0):
        assert abs(np.exp(1j * u * x).mean() - np.exp(cts_characteristic_exponent(p, u))) < 5 / math.sqrt(x.size)
    with pytest.raises(ValueError):
        cts_sample(p, np.ones(3), 3, rng, method="fft")


def test_sampler_is_reproducible():
    a = cts_sample(P, 1.0, 1000, np.random.default_rng(42))
    b = cts_sample(P, 1.0, 1000, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_sampler_argument_checks():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        cts_sample(P, 1.0, 0, rng)
    with pytest.raises(ValueError):
        cts_sample(P, -1.0, 10, rng)
    with pytest.raises(ValueError):
        cts_sample(P, 1.0, 10, rng, method="other")
