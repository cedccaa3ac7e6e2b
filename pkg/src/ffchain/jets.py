"""Truncated Taylor-series ("jet") arithmetic in the time variable.

Every time-dependent scalar entering protocol synthesis is represented by its
Taylor coefficients up to order 6 at the evaluation time.  Products, quotients,
square roots and logarithms then propagate exact derivatives by the usual
recurrences, so no numerical differentiation appears anywhere in the protocol
chain.  Jets are plain float64 arrays of length ``ORDERS``; ``d_dt`` shifts
coefficients to differentiate.
"""

from __future__ import annotations

import math

import numpy as np

#: number of stored Taylor coefficients (orders 0..6)
ORDERS = 7

_FACT = np.array([math.factorial(k) for k in range(ORDERS)], dtype=float)


def const(value: float) -> np.ndarray:
    out = np.zeros(ORDERS)
    out[0] = value
    return out


def from_derivatives(derivs) -> np.ndarray:
    """Jet from derivative values f, f', f'', ... (missing orders are zero)."""
    out = np.zeros(ORDERS)
    m = min(len(derivs), ORDERS)
    out[:m] = np.asarray(derivs[:m], dtype=float) / _FACT[:m]
    return out


def derivative(jet: np.ndarray, k: int) -> float:
    """Value of the k-th time derivative encoded in ``jet``."""
    return float(jet[k] * _FACT[k])


def value(jet: np.ndarray) -> float:
    return float(jet[0])


def d_dt(jet: np.ndarray) -> np.ndarray:
    """Jet of the time derivative (top order is lost)."""
    out = np.zeros(ORDERS)
    out[:-1] = jet[1:] * np.arange(1, ORDERS)
    return out


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(ORDERS)
    for k in range(ORDERS):
        out[k] = np.dot(a[: k + 1], b[k::-1])
    return out


def div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if b[0] == 0.0:
        raise ZeroDivisionError("jet division by zero constant term")
    out = np.zeros(ORDERS)
    out[0] = a[0] / b[0]
    for k in range(1, ORDERS):
        out[k] = (a[k] - np.dot(out[:k], b[k:0:-1])) / b[0]
    return out


def sqrt(a: np.ndarray) -> np.ndarray:
    if a[0] <= 0.0:
        raise ValueError("jet sqrt requires a positive constant term")
    out = np.zeros(ORDERS)
    out[0] = math.sqrt(a[0])
    for k in range(1, ORDERS):
        s = a[k] - np.dot(out[1:k], out[k - 1 : 0 : -1])
        out[k] = s / (2.0 * out[0])
    return out


def log(a: np.ndarray) -> np.ndarray:
    """Jet of ln(a); the constant term must be positive."""
    if a[0] <= 0.0:
        raise ValueError("jet log requires a positive constant term")
    q = div(d_dt(a), a)
    out = np.zeros(ORDERS)
    out[0] = math.log(a[0])
    out[1:] = q[:-1] / np.arange(1, ORDERS)
    return out
