"""Embedded Dormand-Prince 5(4) driver for dense array ODEs.

One generic adaptive stepper serves the matrix propagator fallback and the
truncated Fock-space reference solver, so discrepancies between the two
pipelines cannot come from different stepping logic.  The compiled kernel
implements the same tableau and controller for the structured chain RHS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepSizeUnderflow

# Dormand-Prince 5(4) tableau
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass
class StepStats:
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs: int = 0


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol, stats):
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((np.abs(y0) / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((np.abs(f0) / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = rhs(t0 + h0 * direction, y1)
    stats.n_rhs += 1
    d2 = float(np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1)


def dp45(rhs, t0: float, t1: float, y0: np.ndarray, *, rtol: float = 1e-9,
         atol: float = 1e-12, max_step: float = math.inf,
         fixed_step: float | None = None, must_hit=(),
         on_sample=None) -> tuple[np.ndarray, StepStats]:
    """Integrate y' = rhs(t, y) from t0 to t1 (t1 > t0).

    ``must_hit`` times are landed on exactly by step clipping;
    ``on_sample(t, y)`` is called at every accepted step end and at each
    must-hit point (in order).
    """
    if not t1 > t0:
        raise ValueError("dp45 requires t1 > t0")
    stats = StepStats()
    y = np.array(y0, copy=True)
    t = t0
    events = sorted({float(s) for s in must_hit if t0 < s < t1} | {float(t1)})
    f = rhs(t, y)
    stats.n_rhs += 1
    if fixed_step is not None:
        h_next = float(fixed_step)
    else:
        h_next = min(_initial_step(rhs, t0, y, f, 1.0, rtol, atol, stats), max_step)
    K = [None] * 7
    for iev, t_stop in enumerate(events):
        if iev:
            # the RHS may switch branches exactly at an event; don't carry
            # the FSAL stage across it
            f = rhs(t, y)
            stats.n_rhs += 1
        while t < t_stop:
            span = t_stop - t
            h = min(h_next, max_step, span)
            if h <= abs(t) * 1e-15 + 1e-300:
                raise StepSizeUnderflow(f"step size {h} underflowed at t={t}")
            K[0] = f
            for i in range(1, 7):
                yi = y + h * sum(a * K[j] for j, a in enumerate(DP_A[i - 1]) if a)
                K[i] = rhs(t + DP_C[i] * h, yi)
            stats.n_rhs += 6
            y_new = y + h * sum(b * K[j] for j, b in enumerate(DP_B) if b)
            if fixed_step is not None:
                t = t + h if h < span else t_stop
                y = y_new
                f = K[6]  # FSAL
                stats.n_steps += 1
                if on_sample is not None and t < t_stop:
                    on_sample(t, y)
                continue
            err = h * sum(e * K[j] for j, e in enumerate(DP_E) if e)
            enorm = _error_norm(err, y, y_new, rtol, atol)
            if enorm <= 1.0:
                t = t + h if h < span else t_stop
                y = y_new
                f = K[6]  # FSAL
                stats.n_steps += 1
                factor = MAX_FACTOR if enorm == 0.0 else min(
                    MAX_FACTOR, SAFETY * enorm ** -0.2)
                h_next = h * max(MIN_FACTOR, factor)
                if on_sample is not None and t < t_stop:
                    on_sample(t, y)
            else:
                stats.n_rejected += 1
                h_next = h * max(MIN_FACTOR, SAFETY * enorm ** -0.2)
        if on_sample is not None:
            on_sample(t, y)
    return y, stats
