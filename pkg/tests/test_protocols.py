import math
import warnings

import numpy as np
import pytest

import ffchain as fc
from ffchain import (
    ChainParams,
    ProtocolSpec,
    build_cd,
    build_feff,
    build_rwff,
    build_ua,
    chain_coefficients,
    feff_couplings,
    feff_intermediates,
    gauge_coefficients_exact,
    gauge_coefficients_weak,
    rwff_couplings,
    speed_scales,
)
from ffchain.errors import (
    ConfigError,
    OmegaTooSmall,
    SingularDenominator,
    SingularEta,
    StrongCoupling,
)
from helpers import form_bracket, gauge_form, h0_form


# --------------------------------------------------------------------------
# gauge coefficients
# --------------------------------------------------------------------------

def commutator_residual(lam, gamma, omega_B, coeffs):
    H = h0_form(lam, gamma, omega_B)
    G = np.zeros((4, 4))
    G[0, 0] = omega_B ** 2  # dH0/dlambda
    A = gauge_form(coeffs.a1, coeffs.a2, coeffs.a3, coeffs.a4)
    R = form_bracket(H, G + form_bracket(H, A))
    return np.linalg.norm(R) / np.linalg.norm(H) ** 2


def test_exact_gauge_commutator_grid():
    worst = 0.0
    for lam in np.linspace(-0.9, 1.0, 20):
        for gamma in np.geomspace(1e-3, 0.1, 20):
            res = commutator_residual(lam, gamma, 2.2,
                                      gauge_coefficients_exact(lam, gamma))
            worst = max(worst, res)
    assert worst < 1e-9


def test_exact_gauge_least_squares_oracle():
    # solve the commutator condition in the 4-term gauge subspace directly
    lam, gamma, wb = 0.37, 0.03, 1.9
    H = h0_form(lam, gamma, wb)
    G = np.zeros((4, 4))
    G[0, 0] = wb ** 2
    basis = [gauge_form(*(np.eye(4)[i])) for i in range(4)]
    M = np.stack([form_bracket(H, form_bracket(H, b)).ravel() for b in basis],
                 axis=1)
    sol, *_ = np.linalg.lstsq(M, -form_bracket(H, G).ravel(), rcond=None)
    ex = gauge_coefficients_exact(lam, gamma)
    assert sol == pytest.approx([ex.a1, ex.a2, ex.a3, ex.a4], rel=1e-10)


def test_weak_gauge_values():
    c = gauge_coefficients_weak(0.0, 0.02)
    assert c.a2 == pytest.approx(12.5)
    assert c.a3 == pytest.approx(-12.5)
    assert c.a4 == 0.0
    assert c.a1 == pytest.approx(-0.25)
    # far from resonance the swap term falls off as gamma / lambda^2
    far = gauge_coefficients_weak(0.5, 0.02)
    assert far.a2 == pytest.approx(0.02 / 0.5 ** 2, rel=0.01)


def test_exact_gauge_limits():
    # weak-coupling check at resonance
    ex = gauge_coefficients_exact(0.0, 0.02)
    assert ex.a2 == pytest.approx(12.5, rel=0.05)
    # vanishing coupling: dilated-oscillator result survives
    ex0 = gauge_coefficients_exact(0.3, 1e-9)
    assert ex0.a1 == pytest.approx(-1.0 / (4.0 * 1.3), rel=1e-6)
    assert abs(ex0.a2) < 1e-6 and abs(ex0.a3) < 1e-6 and abs(ex0.a4) < 1e-12
    with pytest.raises(SingularDenominator):
        gauge_coefficients_exact(-1.0, 0.02)


def test_weak_antisymmetry_at_resonance():
    c = gauge_coefficients_weak(0.0, 0.013)
    assert c.a2 == pytest.approx(-c.a3, rel=1e-12)


# --------------------------------------------------------------------------
# rotating-wave couplings
# --------------------------------------------------------------------------

def test_rwff_boundary():
    w2, g = rwff_couplings(0.25, 0.0, 0.0, 3.0, 0.02)
    assert w2 == pytest.approx(9.0 * 1.25)
    assert g == pytest.approx(0.02)


def test_rwff_benchmark_point():
    _, g = rwff_couplings(0.0, 2.0 * 3.0 * 0.02 ** 2, 0.0, 3.0, 0.02)
    assert g == pytest.approx(0.02 * math.sqrt(2.0), rel=1e-12)


def test_rwff_coupling_never_below_bare():
    rng = np.random.default_rng(7)
    for _ in range(50):
        lam = rng.uniform(-0.8, 0.8)
        ld = rng.uniform(-1.0, 1.0)
        ldd = rng.uniform(-3.0, 3.0)
        _, g = rwff_couplings(lam, ld, ldd, 3.0, 0.02)
        assert g >= 0.02


def test_rwff_rescaling_invariance():
    # gamma_eff / gamma depends on (lam, ld) only through ld / (w q)
    w, g = 3.0, 0.02
    lam1, ld1 = 0.1, 0.004
    q1 = lam1 ** 2 + 4 * g * g
    lam2 = 0.23
    q2 = lam2 ** 2 + 4 * g * g
    ld2 = ld1 * q2 / q1
    _, g1 = rwff_couplings(lam1, ld1, 0.0, w, g)
    _, g2 = rwff_couplings(lam2, ld2, 0.0, w, g)
    assert g1 == pytest.approx(g2, rel=1e-12)


# --------------------------------------------------------------------------
# chain forms
# --------------------------------------------------------------------------

@pytest.fixture
def fig3():
    params = ChainParams(1, 3.0, 0.02)
    schedule = fc.build_schedule(-0.67, 0.67, 0.067, 0.12)
    return params, schedule


def test_ua_form_structure(fig3):
    params, schedule = fig3
    f = build_ua(params, schedule, 0.3)
    H = f.matrix
    assert np.allclose(H, H.T)
    assert np.allclose(f.kinetic_block(), np.eye(2))
    lam = schedule(0.3)
    assert H[0, 0] == pytest.approx(9.0 * (1 + lam))
    assert H[0, 1] == pytest.approx(-0.02 * 9.0)


def test_ua_boundary_coupling(fig3):
    params, schedule = fig3
    f = build_ua(params, schedule, 0.0)
    assert f.matrix[0, 1] == pytest.approx(-params.gamma_SB * 9.0)


def test_ua_decoupled_block_diagonal():
    params = ChainParams(2, 3.0, 1e-14, 0.0)
    schedule = fc.build_schedule(-0.5, 0.5, 0.05, 0.1)
    f = build_ua(params, schedule, 0.2)
    K = f.potential_block()
    assert abs(K[0, 1]) < 1e-12 and abs(K[1, 2]) < 1e-20


def test_ua_eigenfrequencies_match_dispersion(fig3):
    params, schedule = fig3
    t_mid = schedule.duration / 2  # resonance
    f = build_ua(params, schedule, t_mid)
    w2 = np.linalg.eigvalsh(f.potential_block())
    lo, hi = fc.two_mode_frequencies(0.0, 0.02, 3.0)
    assert np.sqrt(w2) == pytest.approx([lo, hi], rel=1e-9)


def test_cd_reduces_to_ua_where_static(fig3):
    params, schedule = fig3
    f_cd = build_cd(params, schedule, 0.0)
    f_ua = build_ua(params, schedule, 0.0)
    assert np.allclose(f_cd.matrix, f_ua.matrix, atol=1e-15)
    # mid-ramp the gauge couplings are present
    f_mid = build_cd(params, schedule, schedule.duration / 2)
    assert np.any(f_mid.cross_block() != 0.0)


def test_protocols_coincide_at_boundaries(fig3):
    params, schedule = fig3
    for t in (0.0, schedule.duration):
        f_ua = build_ua(params, schedule, t).matrix
        f_rw = build_rwff(params, schedule, t).matrix
        f_fe = build_feff(params, schedule, t, 480.0).matrix
        assert np.allclose(f_rw, f_ua, atol=1e-12)
        assert np.allclose(f_fe, f_ua, atol=1e-12)


def test_feff_intermediates_consistency(fig3):
    params, schedule = fig3
    t = 0.4 * schedule.duration
    inter = feff_intermediates(params, schedule, t)
    assert inter.K_prime - params.omega_B ** 2 - inter.z2 == pytest.approx(0.0)
    assert inter.C_prime * math.sqrt(inter.M_mass) == pytest.approx(
        params.gamma_SB * params.omega_B ** 2, rel=1e-12)
    with pytest.raises(SingularEta):
        feff_intermediates(params, schedule, 0.0)


def test_feff_weak_z2_nonnegative(fig3):
    params, schedule = fig3
    for frac in np.linspace(0.02, 0.98, 31):
        try:
            inter = feff_intermediates(params, schedule, frac * schedule.duration)
        except SingularEta:
            continue
        assert inter.z2 >= 0.0


def test_feff_couplings_boundary_identity(fig3):
    params, schedule = fig3
    t = 0.5 * schedule.duration
    inter = feff_intermediates(params, schedule, t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, g_a = feff_couplings(inter, t, 2000.0, params.omega_B)
        _, g_b = feff_couplings(inter, t, 4000.0, params.omega_B)
    # oscillatory amplitude grows linearly with the drive frequency
    amp_a = abs(g_a - inter.C_prime / params.omega_B ** 2)
    amp_b = abs(g_b - inter.C_prime / params.omega_B ** 2)
    assert amp_b > amp_a


def test_feff_omega_warning(fig3):
    params, schedule = fig3
    t = 0.5 * schedule.duration
    inter = feff_intermediates(params, schedule, t)
    with pytest.warns(OmegaTooSmall):
        feff_couplings(inter, t, 10.0, params.omega_B)


def test_feff_single_oscillator_limit():
    # gamma -> 0 with the ramp kept away from resonance: the synthesized
    # drive acts as the fast-forward of a lone dilated oscillator, so the
    # system occupation is preserved like in perfect adiabatic driving
    wb = 2.0
    params = ChainParams(1, wb, 1e-6)
    schedule = fc.build_schedule(0.2, 0.8, 0.1, 0.2, "plateau")
    prop = fc.propagate(ProtocolSpec("feff", omega_floquet=2000.0), params,
                        schedule,
                        fc.IntegratorConfig(rel_tol=1e-11, abs_tol=1e-14))
    bi = fc.two_mode_basis(0.2, params.gamma_SB, wb)
    bf = fc.two_mode_basis(0.8, params.gamma_SB, wb)
    bmap = fc.bogoliubov_map(prop, bi, bf)
    occ = fc.fock_occupations(fc.FockSpec((2, 0)), bmap)
    assert occ == pytest.approx([2.0, 0.0], abs=5e-3)


def test_speed_scales():
    assert speed_scales(ChainParams(1, 3.0, 0.02)) == pytest.approx((1.2e-3, 3.0))
    s1, s2 = speed_scales(ChainParams(1, math.sqrt(2.0), 0.025))
    assert s1 == pytest.approx(8.8388e-4, rel=1e-4)
    assert s1 / s2 == pytest.approx(0.025 ** 2)


def test_chain_params_validation():
    with pytest.raises(ConfigError):
        ChainParams(0, 3.0, 0.02)
    with pytest.raises(ConfigError):
        ChainParams(1, 3.0, -0.1)
    with pytest.raises(ConfigError):
        ChainParams(1, 3.0, 0.02, 0.6)
    with pytest.warns(StrongCoupling):
        ChainParams(1, 3.0, 0.3)
    assert ChainParams(100, 1.0, 0.02).attach_site == 50
    assert ChainParams(1, 1.0, 0.02).attach_site == 1


def test_protocol_spec_validation():
    with pytest.raises(ConfigError):
        ProtocolSpec("bogus")
    with pytest.raises(ConfigError):
        ProtocolSpec("feff", chain_signs="other")
    assert ProtocolSpec("cd-exact").coeff_mode == "exact"
    assert ProtocolSpec("feff").coeff_mode == "weak"
    assert ProtocolSpec("feff", ff_coeff_mode="exact").coeff_mode == "exact"


def test_chain_coefficients_dispatch(fig3):
    params, schedule = fig3
    t = 0.37 * schedule.duration
    for kind in ("ua", "cd-exact", "cd-weak", "rwff", "feff"):
        w2, csb, gauge = chain_coefficients(ProtocolSpec(kind), params,
                                            schedule, t)
        assert np.isfinite(w2) and np.isfinite(csb)
        if kind.startswith("cd"):
            assert gauge is not None and len(gauge) == 4
        else:
            assert gauge is None
