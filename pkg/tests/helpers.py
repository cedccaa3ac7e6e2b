"""Shared constructions for the test suite."""

import numpy as np

from ffchain import ChainParams, QuadraticForm
from ffchain.states import symplectic_unit


def gauge_form(a1, a2, a3, a4):
    """Two-mode quadratic-form matrix of the gauge potential terms."""
    C = np.array([[a1, a2], [a3, a4]])
    A = np.zeros((4, 4))
    A[:2, 2:] = C
    A[2:, :2] = C.T
    return A


def h0_form(lam, gamma_SB, omega_B):
    H = np.zeros((4, 4))
    H[:2, :2] = omega_B ** 2 * np.array([[1.0 + lam, -gamma_SB],
                                         [-gamma_SB, 1.0]])
    H[2:, 2:] = np.eye(2)
    return H


def form_bracket(P, Q):
    """Quadratic-form matrix of the (rescaled) commutator of two forms."""
    J = symplectic_unit(P.shape[0] // 2)
    return P @ J @ Q - Q @ J @ P


def build_rwcd(params: ChainParams, schedule, t) -> QuadraticForm:
    """Number-conserving counter-diabatic form in bath-referenced ladder ops."""
    lam = schedule(t)
    ld = schedule.derivative(t, 1)
    w, g = params.omega_B, params.gamma_SB
    q = lam ** 2 + 4.0 * g * g
    H = np.zeros((4, 4))
    cS, cB = w * (1.0 + lam / 2.0), w
    H[0, 0] = cS * w
    H[2, 2] = cS / w
    H[1, 1] = cB * w
    H[3, 3] = cB / w
    hop = -w * g / 2.0
    H[0, 1] = H[1, 0] = hop * w
    H[2, 3] = H[3, 2] = hop / w
    cur = ld * g / q
    H[0, 3] = H[3, 0] = cur
    H[1, 2] = H[2, 1] = -cur
    return QuadraticForm(H, 2)


def total_quanta_form(omega_B: float) -> QuadraticForm:
    """n_S + n_B with bath-referenced ladder operators (additive 1 dropped)."""
    H = np.zeros((4, 4))
    H[0, 0] = H[1, 1] = omega_B
    H[2, 2] = H[3, 3] = 1.0 / omega_B
    return QuadraticForm(H, 2)
