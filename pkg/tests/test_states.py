import math

import numpy as np
import pytest

import ffchain as fc
from ffchain import (
    BogoliubovMap,
    ProtocolSpec,
    ChainParams,
    FockSpec,
    GaussianState,
    adiabatic_energy,
    bath_basis,
    bath_energy,
    energy_infidelity,
    fock_energy_stats,
    fock_occupations,
    gaussian_energy_stats,
    heat,
    mean_occupations,
    thermal_state,
    two_mode_basis,
    two_mode_frequencies,
)
from ffchain.errors import (
    DimensionMismatch,
    NegativeVariance,
    NonPositiveTemperature,
    UnstableMode,
)
from ffchain.fockspace import FockSpace
from ffchain.states import (
    fock_gaussian_moments,
    number_variance,
    oscillator_state,
    product_state,
    symplectic_unit,
    thermal_energy_stats,
)


def sdefect(T):
    n = T.shape[0] // 2
    J = symplectic_unit(n)
    return np.linalg.norm(T @ J @ T.T - J)


# --------------------------------------------------------------------------
# bases
# --------------------------------------------------------------------------

def test_two_mode_frequencies_example():
    lo, hi = two_mode_frequencies(0.0, 0.02, 3.0)
    assert lo ** 2 == pytest.approx(8.82)
    assert hi ** 2 == pytest.approx(9.18)


def test_two_mode_basis_symplectic_and_sorted():
    b = two_mode_basis(0.31, 0.05, 2.0)
    assert sdefect(b.transform) < 1e-10
    assert b.frequencies[0] < b.frequencies[1]


def test_two_mode_basis_decoupled_limit():
    b = two_mode_basis(0.4, 1e-12, 2.0)
    assert b.frequencies ** 2 == pytest.approx([4.0, 4.0 * 1.4])
    assert np.abs(np.abs(b.rotation()) - np.eye(2)[::-1]).max() < 1e-6 or \
        np.abs(np.abs(b.rotation()) - np.eye(2)).max() < 1e-6


def test_two_mode_basis_unhybridized_far_from_resonance():
    b = two_mode_basis(0.8, 0.01, 3.0)
    R = np.abs(b.rotation())
    assert R.max() > 0.999  # rotation angle near 0 or pi/2


def test_two_mode_trace_det_identities():
    for lam in np.linspace(-0.7, 0.9, 9):
        for g in (0.005, 0.02, 0.08):
            lo, hi = two_mode_frequencies(lam, g, 2.5)
            w4 = 2.5 ** 4
            assert lo ** 2 + hi ** 2 == pytest.approx(2.5 ** 2 * (2 + lam),
                                                      rel=1e-12)
            assert lo ** 2 * hi ** 2 == pytest.approx(
                w4 * ((1 + lam) - g ** 2), rel=1e-12)


def test_two_mode_unstable():
    with pytest.raises(UnstableMode):
        two_mode_basis(-0.999, 0.2, 1.0)


def test_bath_basis_small_cases():
    b1 = bath_basis(1, 2.0, 0.3)
    assert b1.frequencies[0] ** 2 == pytest.approx(4.0)
    b2 = bath_basis(2, 1.0, 0.03)
    assert b2.frequencies ** 2 == pytest.approx([0.97, 1.03])


def test_bath_basis_band_edges():
    N, g = 100, 0.05
    b = bath_basis(N, 1.0, g)
    edge = 2 * g * math.cos(math.pi / (N + 1))
    assert b.frequencies[0] ** 2 == pytest.approx(1 - edge, rel=1e-12)
    assert b.frequencies[-1] ** 2 == pytest.approx(1 + edge, rel=1e-12)
    # first order in gamma_BB the band is omega_B (1 -+ gamma_BB)
    assert b.frequencies[0] == pytest.approx(1 - g, abs=g * g * 2.1)
    assert b.frequencies[-1] == pytest.approx(1 + g, abs=g * g * 2.1)


def test_bath_basis_orthogonal_symplectic():
    b = bath_basis(17, 1.3, 0.1)
    R = b.rotation()
    assert np.allclose(R @ R.T, np.eye(17), atol=1e-10)
    assert sdefect(b.transform) < 1e-10


def test_bath_basis_unstable():
    # for N=3 the band touches zero at 2 gamma cos(pi/4) = 1
    with pytest.raises(UnstableMode):
        bath_basis(3, 1.0, 0.72)


# --------------------------------------------------------------------------
# thermal states and occupations
# --------------------------------------------------------------------------

def test_thermal_classical_occupations():
    b = bath_basis(5, 1.7, 0.2)
    st = thermal_state(2.3, b, "classical")
    occ = mean_occupations(st, b)
    assert occ == pytest.approx(2.3 / b.frequencies, rel=1e-12)


def test_thermal_quantum_occupations():
    b = two_mode_basis(0.1, 0.03, 2.0)
    st = thermal_state(1.1, b, "quantum")
    occ = mean_occupations(st, b)
    assert occ == pytest.approx(1.0 / np.expm1(b.frequencies / 1.1), rel=1e-10)


def test_thermal_zero_temperature_limit():
    b = two_mode_basis(0.0, 0.02, 3.0)
    st = thermal_state(1e-9, b, "classical")
    assert np.abs(st.cov).max() < 1e-9


def test_thermal_errors():
    b = two_mode_basis(0.0, 0.02, 3.0)
    with pytest.raises(NonPositiveTemperature):
        thermal_state(0.0, b)


def test_thermal_stationarity():
    # criterion 9: thermal states do not drift under the static chain
    params = ChainParams(8, math.sqrt(2.0), 0.025, 0.1)
    s = fc.build_schedule(-0.3, 0.3, 0.05, 0.05)
    form = fc.build_ua(params, s, 0.0)
    basis = fc.chain_mode_basis(params, -0.3)
    st = thermal_state(1.0, basis, "classical")
    prop = fc.static_propagator(form, 1000.0 / params.omega_B)
    out = fc.evolve_gaussian(prop, st)
    occ0 = mean_occupations(st, basis)
    occ1 = mean_occupations(out, basis)
    assert np.abs(occ1 / occ0 - 1.0).max() < 1e-8


def test_mean_occupations_fock_round_trip():
    b = two_mode_basis(-0.67, 0.02, 3.0)
    st = fock_gaussian_moments(FockSpec((3, 1)), b)
    assert mean_occupations(st, b) == pytest.approx([3.0, 1.0], abs=1e-12)


def test_mean_occupations_dimension_mismatch():
    b = two_mode_basis(0.0, 0.02, 3.0)
    st = thermal_state(1.0, bath_basis(3, 1.0, 0.1))
    with pytest.raises(DimensionMismatch):
        mean_occupations(st, b)


def test_adiabatic_occupation_switch():
    # slow two-oscillator ramp exchanges the S and B populations
    params = ChainParams(1, 3.0, 0.05)
    schedule = fc.build_schedule(-0.5, 0.5, 0.05, 0.5 * 3.0 * 0.05 ** 2)
    prop = fc.propagate(ProtocolSpec("ua"), params, schedule,
                        fc.IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13))
    # bare-site occupations before and after
    wS_i = math.sqrt(fc.system_frequency(-0.5, 3.0))
    wS_f = math.sqrt(fc.system_frequency(0.5, 3.0))
    sys0 = oscillator_state(2.0, wS_i, "classical")
    b0 = oscillator_state(0.5, 3.0, "classical")
    st = product_state(sys0, b0)
    fin = fc.evolve_gaussian(prop, st)
    n_S = 0.5 * (fin.cov[2, 2] + wS_f ** 2 * fin.cov[0, 0]) / wS_f
    n_B = 0.5 * (fin.cov[3, 3] + 9.0 * fin.cov[1, 1]) / 3.0
    assert n_S == pytest.approx(0.5, rel=0.01)
    assert n_B == pytest.approx(2.0, rel=0.01)


# --------------------------------------------------------------------------
# energy statistics
# --------------------------------------------------------------------------

def test_fock_energy_stats_identity_map():
    b = two_mode_basis(0.2, 0.02, 3.0)
    bmap = BogoliubovMap(np.eye(2, dtype=complex), np.zeros((2, 2), complex))
    E, var = fock_energy_stats(FockSpec((3, 1)), bmap, b.frequencies)
    w = b.frequencies
    assert E == pytest.approx(3.5 * w[0] + 1.5 * w[1], rel=1e-12)
    assert abs(var) < 1e-12


def test_fock_quartic_table_against_fock_space():
    """Exhaustive n <= 4 validation of the pairing + correction table.

    The Bogoliubov map of a basis quench (identity propagator between two
    different normal bases) is compared against direct operator
    expectations in the truncated Fock space.
    """
    g, wb = 0.2, 2.0
    lam_i, lam_f = -0.35, 0.5
    bi = two_mode_basis(lam_i, g, wb)
    bf = two_mode_basis(lam_f, g, wb)
    prop = fc.SymplecticPropagator(np.eye(4), 0.0, 0.0, 2)
    bmap = fc.bogoliubov_map(prop, bi, bf)

    space = FockSpace(26, wb)
    from ffchain.protocols import assemble_chain_form
    from ffchain.ramp import system_frequency

    params = ChainParams(1, wb, g)
    form_i = assemble_chain_form(params, system_frequency(lam_i, wb), g * wb ** 2)
    b_ops = space.mode_annihilators(bf)
    w = bf.frequencies
    N0 = b_ops[0].conj().T @ b_ops[0]
    N1 = b_ops[1].conj().T @ b_ops[1]
    H = w[0] * N0 + w[1] * N1

    for n0 in range(5):
        for n1 in range(5):
            if n0 + n1 > 5:
                continue
            fock = FockSpec((n0, n1))
            psi = space.eigenstate(form_i, fock)
            occ_direct = np.array([np.vdot(psi, N0 @ psi).real,
                                   np.vdot(psi, N1 @ psi).real])
            Hpsi = H @ psi
            e_direct = np.vdot(psi, Hpsi).real
            var_direct = np.vdot(Hpsi, Hpsi).real - e_direct ** 2
            occ = fock_occupations(fock, bmap)
            E, var = fock_energy_stats(fock, bmap, w)
            E -= 0.5 * w.sum()  # H above is normal ordered
            assert occ == pytest.approx(occ_direct, abs=2e-8), (n0, n1)
            assert E == pytest.approx(e_direct, abs=2e-8), (n0, n1)
            assert var == pytest.approx(var_direct, abs=5e-7), (n0, n1)


def test_thermal_moments_reduce_to_gaussian_wick():
    # the pairing machinery with thermal same-mode moments must match the
    # Gaussian Wick formula on a shared instance
    g, wb = 0.05, 2.0
    params = ChainParams(1, wb, g)
    schedule = fc.build_schedule(-0.4, 0.4, 0.05, 20 * wb * g * g)
    prop = fc.propagate(ProtocolSpec("ua"), params, schedule,
                        fc.IntegratorConfig(rel_tol=1e-11, abs_tol=1e-14))
    bi = two_mode_basis(-0.4, g, wb)
    bf = two_mode_basis(0.4, g, wb)
    bmap = fc.bogoliubov_map(prop, bi, bf)
    nbars = (1.7, 0.4)
    E_f, var_f = thermal_energy_stats(nbars, bmap, bf.frequencies)

    # Gaussian route: quantum thermal covariance evolved exactly
    w = bi.frequencies
    xx = (np.array(nbars) + 0.5) / w
    pp = (np.array(nbars) + 0.5) * w
    cov_mode = np.diag(np.concatenate([xx, pp]))
    cov = bi.transform.T @ cov_mode @ bi.transform
    st = GaussianState(np.zeros(4), cov, "quantum")
    out = fc.evolve_gaussian(prop, st)
    from ffchain.protocols import assemble_chain_form
    from ffchain.ramp import system_frequency

    form_f = assemble_chain_form(params, system_frequency(0.4, wb), g * wb ** 2)
    E_g, var_g = gaussian_energy_stats(form_f, out)
    assert E_f == pytest.approx(E_g, rel=1e-9)
    assert var_f == pytest.approx(var_g, rel=1e-8)


def test_number_variance_eigenstate_zero():
    bmap = BogoliubovMap(np.eye(2, dtype=complex), np.zeros((2, 2), complex))
    assert number_variance(FockSpec((3, 1)), bmap) == pytest.approx([0.0, 0.0],
                                                                    abs=1e-12)


def test_energy_infidelity():
    assert energy_infidelity(5.0, 0.0, 5.0, 3.0) == 0.0
    assert energy_infidelity(5.0, 0.3, 4.0, 2.0) == pytest.approx((1 + 0.3) / 4)
    with pytest.raises(NegativeVariance):
        energy_infidelity(5.0, -1.0, 4.0, 2.0)


def test_gaussian_energy_stats_ground_state_variance():
    # quantum ground state of a single oscillator has zero energy variance
    w = 1.7
    form = fc.QuadraticForm(np.diag([w * w, 1.0]), 1)
    st = GaussianState(np.zeros(2), np.diag([0.5 / w, 0.5 * w]), "quantum")
    E, var = gaussian_energy_stats(form, st)
    assert E == pytest.approx(w / 2)
    assert abs(var) < 1e-14


# --------------------------------------------------------------------------
# bath energy and heat
# --------------------------------------------------------------------------

def test_bath_energy_static_conservation():
    params = ChainParams(6, 1.2, 0.02, 0.15)
    s = fc.build_schedule(-0.4, 0.4, 0.08, 0.1)
    form = fc.build_ua(params, s, 0.0)
    basis = fc.chain_mode_basis(params, -0.4)
    st = thermal_state(1.0, basis, "classical")
    e0 = bath_energy(st, params)
    out = fc.evolve_gaussian(fc.static_propagator(form, 200.0), st)
    e1 = bath_energy(out, params)
    assert heat(e0, e1) < 1e-8 * abs(e0)


def test_heat_is_unsigned():
    assert heat(3.0, 1.0) == 2.0
    assert heat(1.0, 3.0) == 2.0
