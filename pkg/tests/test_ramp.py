import json

import numpy as np
import pytest

from ffchain import build_schedule, lambda_derivatives, system_frequency
from ffchain.errors import (
    ConfigError,
    InconsistentDirection,
    OrderTooHigh,
    OutOfRange,
    RampWidthTooLarge,
    UnstableFrequency,
    ZeroSpeed,
)
from ffchain.ramp import RampSchedule


@pytest.fixture(params=["smoothstep", "plateau"])
def schedule(request):
    return build_schedule(-0.67, 0.67, 0.067, 0.12, request.param)


def test_boundary_values(schedule):
    assert schedule(0.0) == pytest.approx(-0.67, abs=1e-14)
    assert schedule(schedule.duration) == pytest.approx(0.67, abs=1e-12)


def test_duration_formula(schedule):
    span, dl, v = 1.34, 0.067, 0.12
    assert schedule.duration == pytest.approx((span - 2 * dl) / v + 2 * (2 * dl / v))


def test_monotone(schedule):
    ts = np.linspace(0.0, schedule.duration, 400)
    vals = [schedule(t) for t in ts]
    assert np.all(np.diff(vals) >= -1e-14)


def test_boundary_derivatives_vanish(schedule):
    # scale of the k-th derivative on the edge strips (width ~ 0.15 tau_r)
    width = 0.15 * schedule.ramp_time
    for k in range(1, 7):
        scale = abs(schedule.speed) / width ** (k - 1)
        assert abs(schedule.derivative(0.0, k)) <= 1e-9 * scale
        assert abs(schedule.derivative(schedule.duration, k)) <= 1e-7 * scale


def test_linear_piece_speed(schedule):
    t_mid = schedule.duration / 2
    assert schedule.derivative(t_mid, 1) == pytest.approx(0.12, rel=1e-14)
    assert schedule(t_mid) == pytest.approx(0.0, abs=1e-12)
    # resonance lies inside the linear piece
    assert schedule.ramp_time < t_mid < schedule.duration - schedule.ramp_time


def test_finite_difference_consistency(schedule):
    tp = schedule.duration
    for t in [0.31 * tp, 0.52 * tp, 0.87 * tp]:
        for k in range(1, 7):
            h = 1e-4 * tp
            fd = (schedule.derivative(t + h, k - 1)
                  - schedule.derivative(t - h, k - 1)) / (2 * h)
            an = schedule.derivative(t, k)
            scale = max(abs(an), abs(schedule.speed) / schedule.ramp_time ** (k - 1))
            assert abs(fd - an) <= 1e-6 * scale


def test_reversal(schedule):
    rev = schedule.reversed()
    assert rev.duration == pytest.approx(schedule.duration, rel=1e-15)
    for t in np.linspace(0.0, schedule.duration, 37):
        assert rev(t) == pytest.approx(schedule(schedule.duration - t), abs=1e-12)


def test_jet_matches_derivatives(schedule):
    from ffchain import jets

    t = 0.4 * schedule.duration
    jet = schedule.jet(t)
    for k in range(7):
        assert jets.derivative(jet, k) == pytest.approx(
            schedule.derivative(t, k), rel=1e-12, abs=1e-12)


def test_speed_cut_times(schedule):
    t_in, t_out = schedule.speed_cut_times(1e-6)
    assert abs(schedule.derivative(t_in, 1)) == pytest.approx(
        1e-6 * abs(schedule.speed), rel=1e-6)
    assert t_out == pytest.approx(schedule.duration - t_in, rel=1e-12)


def test_errors():
    with pytest.raises(ZeroSpeed):
        build_schedule(-1.0, 1.0, 0.1, 0.0)
    with pytest.raises(InconsistentDirection):
        build_schedule(-1.0, 1.0, 0.1, -0.5)
    with pytest.raises(RampWidthTooLarge):
        build_schedule(-1.0, 1.0, 0.5, 0.5)
    with pytest.raises(ConfigError):
        build_schedule(-1.0, 1.0, -0.1, 0.5)
    s = build_schedule(-1.0, 1.0, 0.1, 0.5)
    with pytest.raises(OutOfRange):
        s(-0.5)
    with pytest.raises(OutOfRange):
        s(s.duration + 1.0)
    with pytest.raises(OrderTooHigh):
        s.derivative(0.1, 7)


def test_lambda_derivatives_function():
    s = build_schedule(-1.0, 1.0, 0.1, 0.5)
    assert lambda_derivatives(s, s.duration / 2, 1) == pytest.approx(0.5)


def test_json_round_trip():
    s = build_schedule(-0.67, 0.67, 0.067, 0.12)
    s2 = RampSchedule.from_json(s.to_json())
    assert s2.lambda_i == s.lambda_i and s2.speed == s.speed
    assert json.loads(s.to_json()) == {"lambda_i": -0.67, "lambda_f": 0.67,
                                       "delta_lambda": 0.067, "speed": 0.12}
    p = build_schedule(-0.67, 0.67, 0.067, 0.12, "plateau")
    assert RampSchedule.from_json(p.to_json()).profile == "plateau"


def test_system_frequency():
    assert system_frequency(0.0, 3.0) == pytest.approx(9.0)
    assert system_frequency(0.67, 3.0) == pytest.approx(15.03)
    with pytest.raises(UnstableFrequency):
        system_frequency(-1.0, 3.0)


def test_backward_schedule_direction():
    s = build_schedule(0.67, -0.67, 0.067, -0.12)
    assert s(0.0) == pytest.approx(0.67)
    assert s(s.duration) == pytest.approx(-0.67, abs=1e-12)
    assert s.derivative(s.duration / 2, 1) == pytest.approx(-0.12)
