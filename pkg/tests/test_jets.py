import numpy as np
import pytest

from ffchain import jets


@pytest.fixture
def a():
    return jets.from_derivatives([2.0, 0.3, -0.7, 1.1, 0.4, -0.2, 0.05])


@pytest.fixture
def b():
    return jets.from_derivatives([1.5, -0.4, 0.9, 0.2, -1.0, 0.6, 0.1])


def test_round_trip(a):
    vals = [jets.derivative(a, k) for k in range(jets.ORDERS)]
    assert vals == pytest.approx([2.0, 0.3, -0.7, 1.1, 0.4, -0.2, 0.05])


def test_mul_div(a, b):
    prod = jets.mul(a, b)
    back = jets.div(prod, b)
    assert back == pytest.approx(a, rel=1e-12)
    # product rule at first order
    assert jets.derivative(prod, 1) == pytest.approx(
        jets.derivative(a, 1) * jets.value(b) + jets.value(a) * jets.derivative(b, 1))


def test_sqrt(a):
    r = jets.sqrt(a)
    assert jets.mul(r, r) == pytest.approx(a, rel=1e-12)
    with pytest.raises(ValueError):
        jets.sqrt(jets.const(-1.0))


def test_log(a):
    la = jets.log(a)
    # d/dt log(a) == a'/a as jets (top order of the derivative is lost)
    lhs = jets.d_dt(la)
    rhs = jets.div(jets.d_dt(a), a)
    assert lhs[:-1] == pytest.approx(rhs[:-1], rel=1e-12)
    with pytest.raises(ValueError):
        jets.log(jets.const(0.0))


def test_d_dt_shifts(a):
    da = jets.d_dt(a)
    for k in range(jets.ORDERS - 1):
        assert jets.derivative(da, k) == pytest.approx(jets.derivative(a, k + 1))


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        jets.div(jets.const(1.0), jets.const(0.0))
