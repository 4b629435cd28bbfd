#!/usr/bin/env python3
"""
Tests for the numerical primitives: Gaussian quantile, quadrature and step functions
"""

import math

import numpy as np
import pytest

from src.utils.exceptions import IntegrationError, InvalidParameterError
from src.utils.numerics import StepFunction, integrate, normal_cdf, normal_quantile, step_eval


def test_normal_quantile_known_values():
    assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
    assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)
    assert normal_quantile(0.85) == pytest.approx(1.036433, abs=1e-6)


def test_normal_quantile_inverts_the_erf_cdf():
    # past x = 5 the upper tail loses digits in p itself
    for x in np.linspace(-6.0, 5.0, 45):
        p = 0.5 * math.erfc(-x / math.sqrt(2.0))
        assert normal_quantile(p) == pytest.approx(x, abs=1e-8)


def test_normal_quantile_symmetry():
    for p in (1e-6, 0.01, 0.2, 0.4999):
        assert normal_quantile(p) == pytest.approx(-normal_quantile(1.0 - p), abs=1e-9)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_normal_quantile_domain(p):
    with pytest.raises(InvalidParameterError):
        normal_quantile(p)


def test_normal_cdf_scalar_and_array():
    assert isinstance(normal_cdf(0.0), float)
    assert normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-7)
    out = normal_cdf(np.array([-1.0, 0.0, 1.0]))
    assert out.shape == (3,)
    assert out[0] + out[2] == pytest.approx(1.0)


def test_integrate_constant():
    assert integrate(lambda u: 1.0, 0.0, 1.0, 1e-10) == pytest.approx(1.0, abs=1e-10)


def test_integrate_exponential():
    expected = 1.0 - math.exp(-7.5)
    assert integrate(lambda u: math.exp(-u), 0.0, 7.5, 1e-10) == pytest.approx(expected, abs=1e-10)


def test_integrate_endpoint_singularity():
    def f(u):
        return 0.5 * u ** -0.5 * math.exp(-math.sqrt(u))

    assert integrate(f, 0.0, 4.0, 1e-8) == pytest.approx(1.0 - math.exp(-2.0), abs=1e-8)


def test_integrate_is_additive():
    def f(u):
        return math.exp(-0.3 * u) * (1.0 + math.sin(u))

    tol = 1e-10
    whole = integrate(f, 0.0, 5.0, tol)
    split = integrate(f, 0.0, 2.2, tol) + integrate(f, 2.2, 5.0, tol)
    assert abs(whole - split) <= 2 * tol + 1e-14


def test_integrate_empty_interval_and_bad_limits():
    assert integrate(lambda u: 1.0, 2.0, 2.0) == 0.0
    with pytest.raises(InvalidParameterError):
        integrate(lambda u: 1.0, 2.0, 1.0)


def test_integrate_reports_unreachable_tolerance():
    # 1/u is not integrable at 0; quadrature gives up
    with pytest.raises(IntegrationError):
        integrate(lambda u: 1.0 / u if u > 0 else np.inf, 0.0, 1.0, 1e-10)


def test_step_eval_right_continuous():
    s = StepFunction(breakpoints=[1.0, 2.0], values=[0.5, 0.25], initial=1.0)
    assert step_eval(s, 0.5) == 1.0
    assert step_eval(s, 1.0) == 0.5
    assert step_eval(s, 3.0) == 0.25


def test_step_function_left_limit():
    s = StepFunction(breakpoints=[1.0, 2.0], values=[0.5, 0.25])
    assert s.left_limit(1.0) == 1.0
    assert s.left_limit(2.0) == 0.5
    assert s.left_limit(2.5) == 0.25


def test_step_function_flat_between_breakpoints():
    s = StepFunction(breakpoints=[0.3, 1.1, 4.0], values=[0.9, 0.6, 0.1])
    grid = np.linspace(1.1, 3.999, 50)
    assert np.all(s(grid) == 0.6)


def test_step_function_vectorised_lookup():
    s = StepFunction(breakpoints=[1.0, 2.0], values=[0.5, 0.25])
    np.testing.assert_array_equal(s(np.array([0.0, 1.0, 1.5, 2.0, 9.0])), [1.0, 0.5, 0.5, 0.25, 0.25])


def test_step_function_rejects_unsorted_breakpoints():
    with pytest.raises(InvalidParameterError):
        StepFunction(breakpoints=[2.0, 1.0], values=[0.5, 0.25])
    with pytest.raises(InvalidParameterError):
        StepFunction(breakpoints=[1.0, 2.0], values=[0.5])


def test_empty_step_function_is_constant():
    s = StepFunction(breakpoints=[], values=[], initial=1.0)
    assert s(10.0) == 1.0


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
