"""Detuning schedules: piecewise-polynomial lambda(t) with closed-form derivatives.

A schedule ramps the dimensionless detuning from ``lambda_i`` to ``lambda_f``
in three stages: a smooth speed ramp-up over a detuning width
``delta_lambda``, a linear sweep at the peak rate, and a mirrored ramp-down.
Two speed profiles are available for the boundary stages:

``smoothstep``
    The minimal polynomial with five vanishing derivatives at both ends,

        S(u) = 462 u^6 - 1980 u^7 + 3465 u^8 - 3080 u^9 + 1386 u^10 - 252 u^11.

``plateau``
    A stretched profile whose slope holds a low constant value over most of
    the stage, with smoothstep-shaped edge strips.  It satisfies the same
    boundary conditions and the same integral (1/2), but its peak
    acceleration is 2.3x smaller, which keeps the fast-forward
    transformation chain regular at high ramp speeds.

In both cases lambda(t) is polynomial on each piece and every derivative up
to order six vanishes at the ends of the schedule; all derivatives are exact
polynomial evaluations, nothing is differenced numerically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import jets
from .errors import (
    InconsistentDirection,
    ConfigError,
    OrderTooHigh,
    OutOfRange,
    RampWidthTooLarge,
    UnstableFrequency,
    ZeroSpeed,
)

MAX_ORDER = 6

#: smoothstep S5 coefficients (ascending powers of u)
_S5 = np.array([0, 0, 0, 0, 0, 0, 462.0, -1980.0, 3465.0, -3080.0, 1386.0, -252.0])
#: its antiderivative; the integral over [0, 1] is 1/2
_S5_INT = np.concatenate([[0.0], _S5 / np.arange(1, _S5.size + 1)])
#: edge-strip fraction of the plateau profile
_PLATEAU_EDGE = 0.15

PROFILES = ("smoothstep", "plateau")


def _poly_eval(coef, s: float) -> float:
    out = 0.0
    for c in coef[::-1]:
        out = out * s + c
    return out


def _compose_affine(coef: np.ndarray, a0: float, a1: float) -> np.ndarray:
    """Coefficients of p(a0 + a1 s) from those of p(u)."""
    return npoly.Polynomial(coef)(npoly.Polynomial([a0, a1])).coef


def _speed_profile_pieces(profile: str) -> list[tuple[float, np.ndarray]]:
    """The rise S(u) on [0, 1] as [(piece end in u, coefficients in local u), ...].

    S(0) = 0, S(1) = 1, derivatives 1..5 vanish at both ends, integral 1/2,
    and S(1 - u) = 1 - S(u).
    """
    if profile == "smoothstep":
        return [(1.0, _S5.copy())]
    w = _PLATEAU_EDGE
    c = 1.0 / (1.0 - w)
    # S'(u): c*S5(u/w) on [0,w], c on [w,1-w], c*S5((1-u)/w) on [1-w,1]
    rise = c * w * _S5_INT * (1.0 / w) ** np.arange(_S5_INT.size)
    s_w = c * w * 0.5                       # S at u = w
    plateau = np.array([s_w, c])            # local u in [0, 1-2w]
    s_1w = s_w + c * (1.0 - 2.0 * w)        # S at u = 1 - w
    # falling strip, local u in [0, w]: S = s_1w + c*w*(1/2 - S5_int(1 - u/w))
    inner = _compose_affine(_S5_INT, 1.0, -1.0 / w)
    fall = -c * w * inner
    fall[0] += s_1w + c * w * 0.5
    return [(w, rise), (1.0 - w, plateau), (1.0, fall)]


@dataclass(frozen=True)
class RampSchedule:
    """Immutable piecewise-polynomial detuning schedule starting at t = 0."""

    lambda_i: float
    lambda_f: float
    delta_lambda: float
    speed: float
    profile: str
    #: piece end times, cumulative
    breaks: np.ndarray = field(repr=False)
    #: per piece, rows k = 0..6 hold the coefficients of lambda^(k) in the
    #: piece-local time, ascending powers
    _dcoef: tuple = field(repr=False)

    @property
    def duration(self) -> float:
        return float(self.breaks[-1])

    @property
    def ramp_time(self) -> float:
        """Duration of each smooth boundary stage."""
        return 2.0 * self.delta_lambda / abs(self.speed)

    def _locate(self, t: float) -> tuple[int, float]:
        tp = self.duration
        tol = 1e-12 * tp
        if t < -tol or t > tp + tol:
            raise OutOfRange(f"t={t} outside schedule domain [0, {tp}]")
        t = min(max(t, 0.0), tp)
        start = 0.0
        for i, end in enumerate(self.breaks):
            if t <= end or i == len(self.breaks) - 1:
                return i, t - start
            start = end
        raise AssertionError("unreachable")

    def derivative(self, t: float, k: int = 0) -> float:
        """lambda^(k)(t) for k = 0..6."""
        if not 0 <= k <= MAX_ORDER:
            raise OrderTooHigh(f"derivative order {k} not in 0..{MAX_ORDER}")
        piece, s = self._locate(t)
        return _poly_eval(self._dcoef[piece][k], s)

    def __call__(self, t: float) -> float:
        return self.derivative(t, 0)

    def jet(self, t: float) -> np.ndarray:
        """Taylor jet of lambda at t (orders 0..6)."""
        piece, s = self._locate(t)
        dc = self._dcoef[piece]
        return jets.from_derivatives([_poly_eval(dc[k], s)
                                      for k in range(MAX_ORDER + 1)])

    def reversed(self) -> "RampSchedule":
        """Schedule traversing the same detuning path backwards."""
        return build_schedule(self.lambda_f, self.lambda_i, self.delta_lambda,
                              -self.speed, self.profile)

    def speed_cut_times(self, eps_frac: float) -> tuple[float, float]:
        """Times where |lambda_dot| crosses eps_frac * |peak speed|.

        Used as forced step boundaries where a protocol switches between the
        regularized boundary Hamiltonian and the synthesized one.
        """
        target = eps_frac * abs(self.speed)
        lo, hi = 0.0, self.ramp_time
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if abs(self.derivative(mid, 1)) < target:
                lo = mid
            else:
                hi = mid
        t_in = 0.5 * (lo + hi)
        return t_in, self.duration - t_in

    def to_json(self) -> str:
        d = {"lambda_i": self.lambda_i, "lambda_f": self.lambda_f,
             "delta_lambda": self.delta_lambda, "speed": self.speed}
        if self.profile != "smoothstep":
            d["profile"] = self.profile
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "RampSchedule":
        d = json.loads(text)
        return build_schedule(d["lambda_i"], d["lambda_f"], d["delta_lambda"],
                              d["speed"], d.get("profile", "smoothstep"))


def _derivative_rows(coef: np.ndarray) -> np.ndarray:
    """Stack the coefficient rows of p, p', ..., p^(6) (ascending powers)."""
    rows = np.zeros((MAX_ORDER + 1, coef.size))
    rows[0, : coef.size] = coef
    c = coef
    for k in range(1, MAX_ORDER + 1):
        c = c[1:] * np.arange(1, c.size)
        if c.size == 0:
            break
        rows[k, : c.size] = c
    return rows


def build_schedule(lambda_i: float, lambda_f: float, delta_lambda: float,
                   speed: float, profile: str = "smoothstep") -> RampSchedule:
    """Construct the piecewise schedule.

    Raises
    ------
    ZeroSpeed, InconsistentDirection, RampWidthTooLarge, ConfigError
    """
    span = lambda_f - lambda_i
    if speed == 0.0:
        raise ZeroSpeed("ramp speed must be nonzero")
    if span == 0.0:
        raise ConfigError("lambda_f must differ from lambda_i")
    if math.copysign(1.0, speed) != math.copysign(1.0, span):
        raise InconsistentDirection(
            f"speed {speed} inconsistent with lambda_f - lambda_i = {span}")
    if delta_lambda <= 0.0:
        raise ConfigError("delta_lambda must be positive")
    if delta_lambda > 0.2 * abs(span) * (1.0 + 1e-12):
        raise RampWidthTooLarge(
            f"delta_lambda={delta_lambda} exceeds 0.2*|lambda_f-lambda_i|={0.2*abs(span)}")
    if profile not in PROFILES:
        raise ConfigError(f"unknown ramp profile {profile!r}")

    sgn = math.copysign(1.0, span)
    tau_r = 2.0 * delta_lambda / abs(speed)
    tau_lin = (abs(span) - 2.0 * delta_lambda) / abs(speed)

    rise = _speed_profile_pieces(profile)
    bounds = [0.0] + [end for end, _ in rise]
    widths = [bounds[j + 1] - bounds[j] for j in range(len(rise))]
    # antiderivative of S per sub-piece (local u), and the cumulative
    # integral of S up to each sub-piece start
    ints = [np.concatenate([[0.0], coef / np.arange(1, coef.size + 1)])
            for _, coef in rise]
    cum = [0.0]
    for w, ci in zip(widths, ints):
        cum.append(cum[-1] + _poly_eval(ci, w))

    pieces = []  # (duration, lambda coefficients in piece-local time)

    # ramp-up: lambda(s) = lambda_i + v tau_r [cum_j + I_j(s/tau_r)]
    for j, (w, ci) in enumerate(zip(widths, ints)):
        c_loc = speed * tau_r * ci * (1.0 / tau_r) ** np.arange(ci.size)
        c_loc[0] += lambda_i + speed * tau_r * cum[j]
        pieces.append((w * tau_r, c_loc))

    pieces.append((tau_lin, np.array([lambda_i + sgn * delta_lambda, speed])))

    # ramp-down mirrors the rise in reverse: with u = (t_f - t)/tau_r,
    # lambda = lambda_f - v tau_r int_0^u S.  Rise sub-piece j (u in
    # [bounds_j, bounds_j+1]) maps to forward-local time sigma in
    # [0, w_j tau_r] with (u - bounds_j) = w_j - sigma/tau_r.
    for j in range(len(rise) - 1, -1, -1):
        w, ci = widths[j], ints[j]
        comp = _compose_affine(ci, w, -1.0 / tau_r)
        c_loc = -speed * tau_r * comp
        c_loc[0] += lambda_f - speed * tau_r * cum[j]
        pieces.append((w * tau_r, c_loc))

    breaks = np.cumsum([d for d, _ in pieces])
    dcoef = tuple(_derivative_rows(np.asarray(c)) for _, c in pieces)
    return RampSchedule(lambda_i, lambda_f, delta_lambda, speed, profile,
                        breaks, dcoef)


def lambda_derivatives(schedule: RampSchedule, t: float, k: int) -> float:
    """Exact k-th time derivative of the schedule at t (k = 0..6)."""
    return schedule.derivative(t, k)


def system_frequency(lam: float, omega_B: float) -> float:
    """Squared system frequency omega_S^2 = omega_B^2 (1 + lambda)."""
    if 1.0 + lam <= 0.0:
        raise UnstableFrequency(f"1 + lambda = {1.0 + lam} <= 0")
    return omega_B ** 2 * (1.0 + lam)
