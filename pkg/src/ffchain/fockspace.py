"""Truncated Fock-space Schroedinger reference solver for two modes.

Independent brute-force validator: builds dense-sparse ladder operators on a
product Fock basis, integrates i d|psi>/dt = H(t)|psi> with the same adaptive
driver as the symplectic pipeline, and measures occupations, energy, and
energy variance directly from operator expectation values.  Only the
two-oscillator subsystem is supported; the dimension grows as (n_max + 1)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import NormDrift, TruncationLeakage, ConfigError
from .integrate import dp45
from .protocols import ChainParams, QuadraticForm
from .states import FockSpec, ModeBasis, two_mode_basis


def _ladder(n_max: int) -> sp.csr_matrix:
    d = n_max + 1
    return sp.diags(np.sqrt(np.arange(1, d)), 1, format="csr")


@dataclass
class FockSpace:
    """Two-mode truncated Fock space with site-coordinate quadrature operators.

    Quadratures use a fixed reference frequency (the bath frequency), so the
    operator matrices are time independent; only the form coefficients vary.
    """

    n_max: int
    omega_ref: float

    def __post_init__(self):
        a = _ladder(self.n_max)
        d = self.n_max + 1
        eye = sp.identity(d, format="csr")
        w = self.omega_ref
        x1 = (a + a.T) / math.sqrt(2.0 * w)
        p1 = 1j * (a.T - a) * math.sqrt(w / 2.0)
        self.dim = d * d
        self.x = [sp.kron(x1, eye, format="csr"), sp.kron(eye, x1, format="csr")]
        self.p = [sp.kron(p1, eye, format="csr"), sp.kron(eye, p1, format="csr")]
        self.z = self.x + self.p
        # shell masks for truncation-leakage checks (top two shells per mode)
        occ1 = np.arange(d)
        occ_a = np.repeat(occ1, d)
        occ_b = np.tile(occ1, d)
        self.top_shell = (occ_a >= self.n_max - 1) | (occ_b >= self.n_max - 1)

    def operator(self, form: QuadraticForm) -> sp.csr_matrix:
        """Dense quadratic form -> sparse Fock-space operator (symmetrized)."""
        if form.n != 2:
            raise ConfigError("Fock-space oracle supports exactly two modes")
        H = form.matrix
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for a in range(4):
            for b in range(4):
                if H[a, b] != 0.0:
                    out = out + 0.5 * H[a, b] * (self.z[a] @ self.z[b])
        return out

    def mode_annihilators(self, basis: ModeBasis):
        """Annihilation operators of the basis normal modes."""
        R = basis.rotation()
        ops = []
        for alpha in range(2):
            w = basis.frequencies[alpha]
            x_m = R[alpha, 0] * self.x[0] + R[alpha, 1] * self.x[1]
            p_m = R[alpha, 0] * self.p[0] + R[alpha, 1] * self.p[1]
            ops.append(math.sqrt(w / 2.0) * (x_m + 1j * p_m / w))
        return ops

    def eigenstate(self, form: QuadraticForm, fock: FockSpec) -> np.ndarray:
        """|n_-, n_+> of the coupled form, built from the exact ground state."""
        H = self.operator(form).real
        _, vecs = eigsh(H, k=1, which="SA")
        psi = vecs[:, 0].astype(complex)
        K = np.asarray(form.potential_block())
        w2, R = np.linalg.eigh(K)
        basis = ModeBasis(np.sqrt(np.sort(w2)),
                          _block_transform(R[:, np.argsort(w2)].T))
        for alpha, nq in enumerate(fock.occupations):
            adag = self.mode_annihilators(basis)[alpha].conj().T
            for k in range(int(nq)):
                psi = adag @ psi
                psi /= math.sqrt(k + 1.0)
        psi /= np.linalg.norm(psi)
        return psi


def _block_transform(RT: np.ndarray) -> np.ndarray:
    T = np.zeros((4, 4))
    T[:2, :2] = RT
    T[2:, 2:] = RT
    return T


@dataclass
class FockResult:
    occupations: np.ndarray
    energy: float
    energy_var: float
    norm_drift: float
    leakage: float
    psi: np.ndarray


def evolve_fock(builder, params: ChainParams, schedule, fock_init: FockSpec,
                n_max: int = 32, *, rtol: float = 1e-9, atol: float = 1e-11,
                max_step: float = math.inf, t_span=None) -> FockResult:
    """Integrate the two-mode Schroedinger equation and measure at the end.

    ``builder(params, schedule, t)`` must return a two-mode QuadraticForm.
    """
    if params.n_bath != 1:
        raise ConfigError("oracle requires N = 1 (two modes)")
    need = 4 * max(fock_init.occupations) + 8
    if n_max < need:
        raise ConfigError(f"n_max={n_max} below the resolution floor {need}")
    space = FockSpace(n_max, params.omega_B)
    t0, t1 = t_span if t_span is not None else (0.0, schedule.duration)

    psi0 = space.eigenstate(builder(params, schedule, t0), fock_init)

    # cache the ten operator products once; coefficients vary per call
    pairs = [(a, b) for a in range(4) for b in range(a, 4)]
    prods = {(a, b): (space.z[a] @ space.z[b]) if a == b else
             (space.z[a] @ space.z[b] + space.z[b] @ space.z[a]) for a, b in pairs}

    def rhs(t, psi):
        H = builder(params, schedule, t).matrix
        out = np.zeros_like(psi)
        for (a, b), op in prods.items():
            coef = H[a, b]
            if coef != 0.0:
                out += (0.5 if a == b else 0.5) * coef * (op @ psi)
        return -1j * out

    psi, _ = dp45(rhs, t0, t1, psi0, rtol=rtol, atol=atol, max_step=max_step)

    norm = np.linalg.norm(psi)
    drift = abs(norm - 1.0)
    if drift > 1e-8:
        raise NormDrift(f"norm drift {drift}")
    leak = float(np.sum(np.abs(psi[space.top_shell]) ** 2))
    if leak > 1e-6:
        raise TruncationLeakage(f"top-shell population {leak}")

    lam_f = schedule(t1)
    basis_f = two_mode_basis(lam_f, params.gamma_SB, params.omega_B)
    h_ops = space.mode_annihilators(basis_f)
    occ = np.array([np.real(np.vdot(b @ psi, b @ psi)) for b in h_ops])
    w = basis_f.frequencies
    Hf = sum(w[k] * ((h_ops[k].conj().T @ h_ops[k])) for k in range(2)) \
        + 0.5 * float(np.sum(w)) * sp.identity(space.dim, format="csr")
    Hpsi = Hf @ psi
    E = float(np.real(np.vdot(psi, Hpsi)))
    E2 = float(np.real(np.vdot(Hpsi, Hpsi)))
    return FockResult(occ, E, E2 - E * E, drift, leak, psi)
