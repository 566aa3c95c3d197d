import math

import numpy as np
import pytest

from quadobs.errors import ConfigurationError, SignalOrderError
from quadobs.signals import (
    Polynomial,
    PrimitiveSignal,
    Sinusoid,
    constant_signal,
    cosine,
    primitive_from_dict,
    zero_signal,
)


def central_diff(f, t, h=1e-4):
    return (f(t + h) - f(t - h)) / (2 * h)


def test_sinusoid_derivatives_against_finite_differences():
    s = Sinusoid(3.0, 2.5, 0.4)
    t = np.array([0.3, 1.7])
    for order in range(4):
        fd = central_diff(lambda x: s.derivative(x, order), t)
        assert np.allclose(fd, s.derivative(t, order + 1), rtol=1e-6, atol=1e-6)


def test_polynomial_derivatives():
    p = Polynomial((1.0, -2.0, 0.5, 3.0))
    t = np.array([2.0])
    assert p.derivative(t, 0)[0] == pytest.approx(1 - 4 + 2 + 24)
    assert p.derivative(t, 1)[0] == pytest.approx(-2 + 2.0 + 36)
    assert p.derivative(t, 3)[0] == pytest.approx(18)
    assert p.derivative(t, 4)[0] == 0


def test_cosine_is_phase_shifted_sine():
    c = cosine(2.0, 3.0)
    t = np.linspace(0, 2, 7)
    assert np.allclose(c.derivative(t, 0), 2 * np.cos(3 * t))
    assert np.allclose(c.derivative(t, 1), -6 * np.sin(3 * t))


def test_vector_signal_shapes(vsig):
    assert vsig(0.0).shape == (3,)
    assert vsig(np.linspace(0, 1, 5), 2).shape == (5, 3)
    assert np.allclose(vsig(0.0), [-20, 0, 64])
    assert np.allclose(vsig(0.0, 1), [0, -80, 0])


def test_order_limit():
    sig = zero_signal(2, max_order=2)
    sig(0.0, 2)
    with pytest.raises(SignalOrderError) as info:
        sig(0.0, 3)
    assert info.value.required == 3


def test_constant_signal():
    sig = constant_signal([1.0, -1.0])
    assert np.array_equal(sig(5.0), [1.0, -1.0])
    assert np.array_equal(sig(5.0, 1), [0.0, 0.0])


def test_bounded_on_interval(vsig):
    t = np.linspace(0, 20, 2001)
    for order in range(vsig.max_order + 1):
        assert np.all(np.isfinite(vsig(t, order)))
        assert np.abs(vsig(t, order)).max() <= 64 * 4**order + 1e-9


def test_dict_round_trip(vsig):
    again = PrimitiveSignal.from_dict(vsig.to_dict())
    t = np.linspace(0, 3, 11)
    for order in range(3):
        assert np.allclose(again(t, order), vsig(t, order), atol=1e-12)


@pytest.mark.parametrize("doc", [
    {"kind": "tan", "amplitude": 1},
    {"kind": "sin", "amplitude": 1, "freq": 1, "extra": 2},
    {"kind": "poly"},
])
def test_bad_primitives(doc):
    with pytest.raises(ConfigurationError):
        primitive_from_dict(doc)


def test_const_primitive():
    p = primitive_from_dict({"kind": "const", "value": 2.5})
    assert p.derivative(np.array([math.pi]), 0)[0] == 2.5
