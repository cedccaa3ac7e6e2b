"""Normal-mode analysis, state initialization, and quadratic observables.

Mode bases diagonalize the potential block of a unit-kinetic quadratic form;
the change of basis is the block-diagonal orthogonal rotation acting
identically on positions and momenta, which is symplectic.  Gaussian states
carry a mean vector and a symmetrized covariance matrix; Fock inputs are
handled exactly through Bogoliubov coefficients with product-Fock fourth
moments (Wick pairings plus same-mode corrections).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BasisMismatch,
    DimensionMismatch,
    InvalidMap,
    NegativeVariance,
    NonPositiveTemperature,
    NonPSDInput,
    UnstableMode,
)
from .protocols import ChainParams, QuadraticForm


@dataclass(frozen=True)
class ModeBasis:
    """Normal modes of a unit-kinetic quadratic form.

    ``transform`` maps site phase-space coordinates to normal-mode
    coordinates, z_mode = transform @ z_site, and is symplectic.
    """

    frequencies: np.ndarray
    transform: np.ndarray

    @property
    def n(self) -> int:
        return self.frequencies.size

    def rotation(self) -> np.ndarray:
        """The n x n orthogonal block acting on positions (and momenta)."""
        return self.transform[: self.n, : self.n]


@dataclass(frozen=True)
class GaussianState:
    """First and second moments; covariance is the symmetrized one."""

    mean: np.ndarray
    cov: np.ndarray
    statistics: str = "quantum"  # or "classical"

    @property
    def n(self) -> int:
        return self.mean.size // 2

    def __post_init__(self):
        if self.statistics not in ("quantum", "classical"):
            raise ValueError(f"unknown statistics {self.statistics!r}")
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise DimensionMismatch("covariance shape does not match mean")


@dataclass(frozen=True)
class FockSpec:
    """Normal-mode occupations (sorted-ascending mode order) at lambda_i."""

    occupations: tuple

    def __post_init__(self):
        if any(int(nk) != nk or nk < 0 for nk in self.occupations):
            raise ValueError("occupations must be nonnegative integers")


@dataclass(frozen=True)
class BogoliubovMap:
    """b_alpha = sum_k U[alpha,k] a_k + V[alpha,k] a_k^+ ."""

    U: np.ndarray
    V: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0]

    def defect(self) -> float:
        eye = np.eye(self.n)
        return float(np.linalg.norm(self.U @ self.U.conj().T
                                    - self.V @ self.V.conj().T - eye))


def symplectic_unit(n: int) -> np.ndarray:
    """J in (x, p) ordering: J = [[0, I], [-I, 0]]."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


# --------------------------------------------------------------------------
# bases
# --------------------------------------------------------------------------

def _basis_from_potential(K: np.ndarray) -> ModeBasis:
    w2, vecs = np.linalg.eigh(K)
    if w2[0] <= 0.0:
        raise UnstableMode(f"squared mode frequency {w2[0]} <= 0")
    order = np.argsort(w2)
    w2 = w2[order]
    R = vecs[:, order]
    n = K.shape[0]
    T = np.zeros((2 * n, 2 * n))
    T[:n, :n] = R.T
    T[n:, n:] = R.T
    return ModeBasis(np.sqrt(w2), T)


def two_mode_basis(lam: float, gamma_SB: float, omega_B: float) -> ModeBasis:
    """Hybridized S-B normal modes; frequencies sorted ascending."""
    disc = math.sqrt((lam / 2.0) ** 2 + gamma_SB ** 2)
    if 1.0 + lam / 2.0 - disc <= 0.0:
        raise UnstableMode("lower hybridized mode is unstable here")
    K = omega_B ** 2 * np.array([[1.0 + lam, -gamma_SB], [-gamma_SB, 1.0]])
    return _basis_from_potential(K)


def two_mode_frequencies(lam: float, gamma_SB: float, omega_B: float
                         ) -> tuple[float, float]:
    """(omega_minus, omega_plus) from the closed-form dispersion."""
    disc = math.sqrt((lam / 2.0) ** 2 + gamma_SB ** 2)
    lo = omega_B ** 2 * (1.0 + lam / 2.0 - disc)
    hi = omega_B ** 2 * (1.0 + lam / 2.0 + disc)
    if lo <= 0.0:
        raise UnstableMode("lower hybridized mode is unstable here")
    return math.sqrt(lo), math.sqrt(hi)


def bath_basis(n_bath: int, omega_B: float, gamma_BB: float) -> ModeBasis:
    """Open-chain sine modes, omega_k^2 = omega_B^2 (1 - 2 gamma_BB cos(pi k/(N+1)))."""
    N = n_bath
    if 2.0 * gamma_BB * math.cos(math.pi / (N + 1)) >= 1.0:
        raise UnstableMode("bath band touches zero frequency")
    k = np.arange(1, N + 1)
    w2 = omega_B ** 2 * (1.0 - 2.0 * gamma_BB * np.cos(math.pi * k / (N + 1)))
    j = np.arange(1, N + 1)
    R = math.sqrt(2.0 / (N + 1)) * np.sin(math.pi * np.outer(k, j) / (N + 1))
    order = np.argsort(w2)
    w2 = w2[order]
    R = R[order]
    T = np.zeros((2 * N, 2 * N))
    T[:N, :N] = R
    T[N:, N:] = R
    return ModeBasis(np.sqrt(w2), T)


def chain_mode_basis(params: ChainParams, lam: float) -> ModeBasis:
    """Instantaneous normal modes of the full S + chain at detuning lambda."""
    from .protocols import assemble_chain_form
    from .ramp import system_frequency

    form = assemble_chain_form(params, system_frequency(lam, params.omega_B),
                               params.gamma_SB * params.omega_B ** 2)
    return _basis_from_potential(form.potential_block())


# --------------------------------------------------------------------------
# states
# --------------------------------------------------------------------------

def thermal_state(T: float, basis: ModeBasis, statistics: str = "classical"
                  ) -> GaussianState:
    """Zero-mean thermal Gaussian in site coordinates.

    Classical statistics use equipartition <x_k^2> = T / omega_k^2,
    <p_k^2> = T; quantum statistics use the Bose occupation.
    """
    if T <= 0.0:
        raise NonPositiveTemperature(f"T = {T}")
    w = basis.frequencies
    if statistics == "classical":
        xx = T / w ** 2
        pp = np.full_like(w, T)
    else:
        nbar = 1.0 / np.expm1(w / T)
        xx = (nbar + 0.5) / w
        pp = (nbar + 0.5) * w
    n = basis.n
    cov_mode = np.diag(np.concatenate([xx, pp]))
    Tm = basis.transform
    cov = Tm.T @ cov_mode @ Tm
    return GaussianState(np.zeros(2 * n), cov, statistics)


def oscillator_state(occupation: float, omega: float,
                     statistics: str = "classical") -> GaussianState:
    """Single-mode Gaussian with the given mean occupation."""
    n_eff = occupation if statistics == "classical" else occupation + 0.5
    cov = np.diag([n_eff / omega, n_eff * omega])
    return GaussianState(np.zeros(2), cov, statistics)


def product_state(*parts: GaussianState) -> GaussianState:
    """Uncorrelated product of Gaussian states, ordered (x..., p...)."""
    stats = parts[0].statistics
    ns = [p.n for p in parts]
    n = sum(ns)
    mean = np.zeros(2 * n)
    cov = np.zeros((2 * n, 2 * n))
    off = 0
    for p in parts:
        ix = slice(off, off + p.n)
        ip = slice(n + off, n + off + p.n)
        mean[ix] = p.mean[: p.n]
        mean[ip] = p.mean[p.n :]
        cov[ix, ix] = p.cov[: p.n, : p.n]
        cov[ip, ip] = p.cov[p.n :, p.n :]
        cov[ix, ip] = p.cov[: p.n, p.n :]
        cov[ip, ix] = p.cov[p.n :, : p.n]
        off += p.n
    return GaussianState(mean, cov, stats)


def fock_gaussian_moments(fock: FockSpec, basis: ModeBasis) -> GaussianState:
    """Second-moment embedding of a product Fock state (quantum statistics)."""
    n = basis.n
    if len(fock.occupations) != n:
        raise DimensionMismatch("Fock spec does not match basis size")
    w = basis.frequencies
    occ = np.asarray(fock.occupations, dtype=float)
    xx = (occ + 0.5) / w
    pp = (occ + 0.5) * w
    cov_mode = np.diag(np.concatenate([xx, pp]))
    Tm = basis.transform
    return GaussianState(np.zeros(2 * n), Tm.T @ cov_mode @ Tm, "quantum")


# --------------------------------------------------------------------------
# observables
# --------------------------------------------------------------------------

def _check_psd(cov: np.ndarray, tol: float = 1e-10) -> None:
    evals = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    if evals[0] < -tol * max(1.0, evals[-1]):
        raise NonPSDInput(f"covariance has eigenvalue {evals[0]}")


def mean_occupations(state: GaussianState, basis: ModeBasis) -> np.ndarray:
    """Per-mode <n_k>, second moments folded in with the means."""
    if basis.transform.shape[0] != state.mean.size:
        raise DimensionMismatch("basis does not match state dimension")
    n = basis.n
    Tm = basis.transform
    cov = Tm @ state.cov @ Tm.T
    mean = Tm @ state.mean
    w = basis.frequencies
    xx = np.diag(cov[:n, :n]) + mean[:n] ** 2
    pp = np.diag(cov[n:, n:]) + mean[n:] ** 2
    occ = 0.5 * (w * xx + pp / w)
    if state.statistics == "quantum":
        occ = occ - 0.5
    return occ


def form_expectation(form: QuadraticForm, state: GaussianState) -> float:
    """< (1/2) z^T H z > over the state."""
    H = form.matrix
    if H.shape[0] != state.mean.size:
        raise DimensionMismatch("form does not match state dimension")
    return float(0.5 * np.trace(H @ state.cov)
                 + 0.5 * state.mean @ H @ state.mean)


def gaussian_energy_stats(form: QuadraticForm, state: GaussianState
                          ) -> tuple[float, float]:
    """Mean and variance of a quadratic observable over a Gaussian state."""
    H = form.matrix
    _check_psd(state.cov)
    E = form_expectation(form, state)
    HS = H @ state.cov
    var = 0.5 * np.trace(HS @ HS) + state.mean @ H @ state.cov @ H @ state.mean
    if state.statistics == "quantum":
        HJ = H @ symplectic_unit(form.n)
        var += 0.125 * np.trace(HJ @ HJ)
    return E, float(var)


def bath_energy(state: GaussianState, params: ChainParams) -> float:
    """Expectation of the bare bath-chain Hamiltonian over the chain block.

    The state is over S + chain in site ordering (S first).
    """
    n = params.n_modes
    if state.mean.size != 2 * n:
        raise DimensionMismatch("state does not match chain size")
    w2b = params.omega_B ** 2
    H = np.zeros((2 * n, 2 * n))
    for j in range(1, n):
        H[j, j] = w2b
        H[n + j, n + j] = 1.0
    for j in range(1, n - 1):
        H[j, j + 1] = H[j + 1, j] = -params.gamma_BB * w2b
    return float(0.5 * np.trace(H @ state.cov) + 0.5 * state.mean @ H @ state.mean)


def heat(bath_energy_before: float, bath_energy_after: float) -> float:
    """Unsigned heat |Delta <H_bath>| across a stroke."""
    return abs(bath_energy_after - bath_energy_before)


# --------------------------------------------------------------------------
# Fock energy statistics through a Bogoliubov map
# --------------------------------------------------------------------------

def fock_occupations(fock: FockSpec, bmap: BogoliubovMap) -> np.ndarray:
    """<n_alpha> of the final modes for a product Fock input."""
    occ = np.asarray(fock.occupations, dtype=float)
    return (np.abs(bmap.U) ** 2 @ occ + np.abs(bmap.V) ** 2 @ (occ + 1.0)).real


def _number_covariance(fock: FockSpec, bmap: BogoliubovMap,
                       moments: str = "fock") -> np.ndarray:
    """Cov(N_alpha, N_beta) for the final-mode number operators.

    The quartic product-state expectation factorizes over modes: cross-mode
    contributions are the two Wick pairings that balance mode numbers, and
    same-mode quadruples use the exact single-mode quartic moments, i.e.

        Cov = P Pb + R Rb - sum_k (P_k Pb_k + R_k Rb_k + mu_k mu_k)
              + sum_k quartic_k,

    with per-mode pairing factors defined below.  ``moments`` selects the
    same-mode quartic table: sharp Fock occupations or thermal (geometric)
    occupations with the same means; the latter reproduces the Gaussian
    Wick variance and serves as a cross-check.
    """
    U, V = bmap.U, bmap.V
    occ = np.asarray(fock.occupations, dtype=float)
    np1 = occ + 1.0
    nmodes = U.shape[0]

    # slots (1,3)(2,4):  P_k[a,b] = U*_ak V*_bk n_k + V*_ak U*_bk (n_k + 1)
    Pk = (U.conj()[:, None, :] * V.conj()[None, :, :] * occ
          + V.conj()[:, None, :] * U.conj()[None, :, :] * np1)
    Pbk = (U[:, None, :] * V[None, :, :] * np1
           + V[:, None, :] * U[None, :, :] * occ)
    # slots (1,4)(2,3):  R_k[a,b] = U*_ak U_bk n_k + V*_ak V_bk (n_k + 1)
    Rk = (U.conj()[:, None, :] * U[None, :, :] * occ
          + V.conj()[:, None, :] * V[None, :, :] * np1)
    Rbk = (U[:, None, :] * U.conj()[None, :, :] * np1
           + V[:, None, :] * V.conj()[None, :, :] * occ)
    mu_k = np.abs(U) ** 2 * occ + np.abs(V) ** 2 * np1  # <n contribution>(a, k)

    cross = Pk.sum(axis=2) * Pbk.sum(axis=2) + Rk.sum(axis=2) * Rbk.sum(axis=2)
    same = np.sum(Pk * Pbk + Rk * Rbk, axis=2) + mu_k @ mu_k.T

    # exact same-mode quartic moments, all six number-balanced orderings
    uu = np.abs(U) ** 2
    vv = np.abs(V) ** 2
    if moments == "fock":
        n2 = occ ** 2                      # <a+ a a+ a>
        nnm1 = occ * (occ - 1.0)           # <a+ a+ a a>
        nnp1 = occ * np1                   # mixed orderings
        np1sq = np1 ** 2                   # <a a+ a a+>
        np1np2 = np1 * (occ + 2.0)         # <a a a+ a+>
    else:  # thermal: <n^2> = 2 nbar^2 + nbar, <a+^2 a^2> = 2 nbar^2
        n2 = 2.0 * occ ** 2 + occ
        nnm1 = 2.0 * occ ** 2
        nnp1 = 2.0 * occ ** 2 + 2.0 * occ
        np1sq = 2.0 * occ ** 2 + 3.0 * occ + 1.0
        np1np2 = 2.0 * occ ** 2 + 4.0 * occ + 2.0
    quart = np.zeros((nmodes, nmodes), dtype=complex)
    for a in range(nmodes):
        for b in range(nmodes):
            quart[a, b] = np.sum(
                uu[a] * uu[b] * n2
                + uu[a] * vv[b] * nnp1
                + U.conj()[a] * V[a] * V.conj()[b] * U[b] * nnm1
                + vv[a] * uu[b] * nnp1
                + vv[a] * vv[b] * np1sq
                + V.conj()[a] * U[a] * U.conj()[b] * V[b] * np1np2)
    return (cross - same + quart).real


def number_variance(fock: FockSpec, bmap: BogoliubovMap) -> np.ndarray:
    """Per-mode Var(N_alpha) of the final modes for a product Fock input."""
    return np.diag(_number_covariance(fock, bmap)).copy()


def fock_energy_stats(fock: FockSpec, bmap: BogoliubovMap,
                      final_frequencies: np.ndarray) -> tuple[float, float]:
    """(E, sigma_E^2) of H0(lambda_f) for a product Fock input state."""
    if bmap.defect() > 1e-6:
        raise InvalidMap(f"Bogoliubov defect {bmap.defect()}")
    w = np.asarray(final_frequencies, dtype=float)
    occ_f = fock_occupations(fock, bmap)
    E = float(np.sum(w * (occ_f + 0.5)))
    cov = _number_covariance(fock, bmap)
    var = float(w @ cov @ w)
    return E, var


def thermal_energy_stats(occupations, bmap: BogoliubovMap,
                         final_frequencies: np.ndarray) -> tuple[float, float]:
    """(E, sigma_E^2) for a product of thermal modes with the given means.

    Same pairing machinery as ``fock_energy_stats`` with thermal same-mode
    moments; must agree with the Gaussian Wick formula.
    """
    fock = FockSpec.__new__(FockSpec)
    object.__setattr__(fock, "occupations", tuple(float(n) for n in occupations))
    w = np.asarray(final_frequencies, dtype=float)
    occ_f = (np.abs(bmap.U) ** 2 @ np.asarray(occupations, dtype=float)
             + np.abs(bmap.V) ** 2 @ (np.asarray(occupations, dtype=float) + 1.0))
    E = float(np.sum(w * (occ_f + 0.5)))
    cov = _number_covariance(fock, bmap, moments="thermal")
    return E, float(w @ cov @ w)


def adiabatic_energy(fock: FockSpec, final_frequencies: np.ndarray) -> float:
    """Target energy of the adiabatically connected eigenstate at lambda_f."""
    w = np.asarray(final_frequencies, dtype=float)
    occ = np.asarray(fock.occupations, dtype=float)
    return float(np.sum(w * (occ + 0.5)))


def energy_infidelity(E: float, sigma_E2: float, E_ad: float,
                      omega_B: float) -> float:
    """W = ((E - E_ad)^2 + sigma_E^2) / omega_B^2."""
    if sigma_E2 < -1e-12 * max(1.0, abs(E)) ** 2:
        raise NegativeVariance(f"sigma_E^2 = {sigma_E2}")
    return ((E - E_ad) ** 2 + max(sigma_E2, 0.0)) / omega_B ** 2
