import numpy as np
import pytest
from hypothesis import given, strategies as st

from tflab.weights import (ModerateReport, constant_weight,
                           moderate_constant_estimate, polynomial_weight,
                           tabulated_weight, weight_eval)

coords = st.floats(min_value=-50, max_value=50, allow_nan=False)


def test_polynomial_values():
    v2 = polynomial_weight(2.0)
    assert weight_eval(v2, [0.0, 0.0]) == 1.0
    assert weight_eval(v2, [1.0, 0.0]) == pytest.approx(2.0)
    v1 = polynomial_weight(1.0)
    assert weight_eval(v1, [3.0, 4.0]) == pytest.approx(np.sqrt(26.0))


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        polynomial_weight(-1.0)


@given(s=st.floats(min_value=0.0, max_value=6.0),
       r1=coords, r2=coords, k1=coords, k2=coords)
def test_submultiplicative_with_peetre_constant(s, r1, r2, k1, k2):
    # v_s(r+k) <= 2^(s/2) v_s(r) v_s(k); the constant is sharp (r = k)
    v = polynomial_weight(s)
    r = np.array([r1, r2])
    k = np.array([k1, k2])
    assert v(r + k) <= 2 ** (s / 2) * v(r) * v(k) * (1 + 1e-12)


def test_plain_submultiplicativity_fails():
    # the reason the Peetre constant is needed at all
    v = polynomial_weight(1.0)
    r = np.array([1.0, 0.0])
    assert v(r + r) > v(r) * v(r)


@given(r1=coords, r2=coords)
def test_symmetric(r1, r2):
    v = polynomial_weight(1.5)
    r = np.array([r1, r2])
    assert v(r) == pytest.approx(v(-r))


def test_moderate_constant_for_self():
    # v_s is v_s-moderate with the Peetre constant 2^(s/2)
    v = polynomial_weight(2.0)
    rng = np.random.default_rng(1)
    sample = rng.uniform(-5, 5, size=(40, 2))
    sample = np.vstack([sample, [[1.0, 0.0]], [[0.9, 0.1]]])
    rep = moderate_constant_estimate(v, v, sample)
    assert 1.0 <= rep.estimate <= 2.0 + 1e-12
    assert rep.stable


def test_moderate_constant_for_constant_weight():
    one = constant_weight()
    v = polynomial_weight(1.0)
    sample = np.linspace(-3, 3, 11)[:, None]
    rep = moderate_constant_estimate(one, v, sample)
    assert rep.estimate == pytest.approx(1.0)


def test_moderate_of_sheared_weight_finite():
    # v_s composed with a bilipschitz shear stays v_s-moderate on samples
    v = polynomial_weight(1.0)
    shear = tabulated_weight(
        lambda pts: (1.0 + (pts[:, 0] + pts[:, 1]) ** 2 + pts[:, 1] ** 2) ** 0.5)
    rng = np.random.default_rng(2)
    sample = rng.uniform(-4, 4, size=(30, 2))
    rep = moderate_constant_estimate(shear, v, sample)
    assert np.isfinite(rep.estimate)


def test_empty_sample_rejected():
    v = polynomial_weight(1.0)
    with pytest.raises(ValueError):
        moderate_constant_estimate(v, v, np.empty((0, 2)))


def test_nonpositive_weight_rejected():
    v = polynomial_weight(1.0)
    bad = tabulated_weight(lambda pts: pts[:, 0])
    sample = np.array([[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(ValueError):
        moderate_constant_estimate(bad, v, sample)
