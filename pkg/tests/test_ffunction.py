import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergospin.config import InputError
from ergospin.ffunction import (
    FFunction,
    convolution_constant,
    convolution_ratio,
    evaluate,
    pair_sum,
    uniform_norm,
)
from ergospin.lattice import chain


def exact_norm_1d(eps):
    # 1 + 2 sum_{r>=1} (1+r)^-(2+eps) = 2 zeta(2+eps) - 1
    return float(2 * mpmath.zeta(2 + eps) - 1)


def test_evaluate():
    F = FFunction(1, 1.0)
    assert F(0) == 1.0
    assert F(1) == pytest.approx(1 / 8)
    np.testing.assert_allclose(F(np.array([0, 1, 3])), [1, 1 / 8, 1 / 64])
    with pytest.raises(InputError):
        F(-1)


@pytest.mark.parametrize("eps", [0.5, 1.0, 2.0])
def test_uniform_norm_brackets_zeta(eps):
    F = FFunction(1, eps)
    est = uniform_norm(F, 100)
    exact = exact_norm_1d(eps)
    assert est.value <= exact <= est.upper


def test_uniform_norm_nu1_eps1_value():
    est = uniform_norm(FFunction(1, 1.0), 100)
    assert abs(est.value - (2 * 1.2020569031595942 - 1)) < 1e-4


def test_uniform_norm_2d_against_enumeration():
    F = FFunction(2, 1.0)
    R = 12
    pts = np.array([(i, j) for i in range(-R, R + 1) for j in range(-R, R + 1)])
    brute = float(np.sum(evaluate(F, np.max(np.abs(pts), axis=1))))
    assert uniform_norm(F, R).value == pytest.approx(brute, rel=1e-13)


def test_tail_bound_is_valid_in_2d():
    F = FFunction(2, 1.0)
    far = uniform_norm(F, 3000).value
    assert uniform_norm(F, 20).upper >= far


def test_convolution_witness_matches_brute_force():
    F = FFunction(1, 1.0)
    c = convolution_constant(F, 20)
    brute = convolution_ratio(F, np.array([0]), np.array([c.witness_pair_distance]), 20 * 20 + 200)
    assert c.witness == pytest.approx(brute, rel=1e-12)
    assert c.witness == pytest.approx(2.9124, abs=1e-3)
    assert c.witness <= c.bound


@settings(max_examples=25, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6))
def test_convolution_ratio_below_bound(x, y):
    F = FFunction(1, 1.0)
    c = convolution_constant(F, 20)
    assert convolution_ratio(F, np.array([x]), np.array([y]), 400) <= c.bound


def test_convolution_constant_2d_lower_witness():
    F = FFunction(2, 1.0)
    c = convolution_constant(F, 3)
    assert 1.0 < c.witness <= c.bound


def test_pair_sum():
    F = FFunction(1, 1.0)
    assert pair_sum(F, chain(1), chain(1)) == 1.0
    assert pair_sum(F, chain(1), chain(2, start=1)) == pytest.approx(1 / 8 + 1 / 27)


def test_json_requires_epsilon():
    assert FFunction.from_json({"epsilon": 0.5}, 1) == FFunction(1, 0.5)
    with pytest.raises(InputError):
        FFunction.from_json({"family": "power_law"}, 1)
    with pytest.raises(InputError):
        FFunction(1, 1.0, family="exponential")
    with pytest.raises(InputError):
        FFunction(1, 0.0)
    assert math.isclose(FFunction(3, 1.0).exponent, 5.0)
