"""Time-dependent quadratic Hamiltonians for the four driving protocols.

Phase-space convention: z = (x_0 .. x_n-1, p_0 .. p_n-1) with mode 0 the
system oscillator S and modes 1..N the bath chain sites.  A Hamiltonian is
represented by the symmetric matrix H of the form (1/2) z^T H z; every
protocol built here has an identity kinetic block.

The counter-diabatic gauge potential uses the closed-form coefficients
a1..a4 (exact rational functions of lambda and gamma_SB, or their
weak-coupling limits).  The fast-forward synthesis eliminates the gauge
couplings through a chain of four time-dependent canonical transformations;
the resulting coupling formulas are evaluated with exact Taylor-jet
arithmetic so that every time derivative in the chain is analytic.

Two derivative-term signs and one dimensional factor in the transformation
chain were fixed against a direct numerical conjugation of the generators
(t -> S^T H S - dG/dt at machine precision); the implementation below is the
self-consistent variant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import (
    NegativeZSquared,
    OmegaTooSmall,
    SingularDenominator,
    SingularEta,
    StrongCoupling,
    ConfigError,
)
from .ramp import RampSchedule, system_frequency

PROTOCOL_KINDS = ("ua", "cd-exact", "cd-weak", "rwff", "feff")


@dataclass(frozen=True)
class ChainParams:
    """Static parameters of the system + optical-phonon chain."""

    n_bath: int
    omega_B: float
    gamma_SB: float
    gamma_BB: float = 0.0
    attach_site: int = 0  # 1-based bath site carrying the S coupling; 0 = ceil(N/2)

    def __post_init__(self):
        if self.n_bath < 1:
            raise ConfigError("n_bath must be >= 1")
        if self.omega_B <= 0:
            raise ConfigError("omega_B must be positive")
        if not 0.0 < self.gamma_SB:
            raise ConfigError("gamma_SB must be positive")
        if self.gamma_SB > 0.2:
            warnings.warn(f"gamma_SB={self.gamma_SB} outside the weak-coupling regime",
                          StrongCoupling, stacklevel=2)
        if not 0.0 <= self.gamma_BB < 0.5:
            raise ConfigError("gamma_BB must lie in [0, 0.5)")
        if self.attach_site == 0:
            object.__setattr__(self, "attach_site", (self.n_bath + 1) // 2)
        if not 1 <= self.attach_site <= self.n_bath:
            raise ConfigError("attach_site must lie in 1..n_bath")

    @property
    def n_modes(self) -> int:
        return self.n_bath + 1


@dataclass(frozen=True)
class QuadraticForm:
    """Symmetric coefficient matrix of (1/2) z^T H z over z = (x, p)."""

    matrix: np.ndarray
    n: int

    def potential_block(self) -> np.ndarray:
        return self.matrix[: self.n, : self.n]

    def kinetic_block(self) -> np.ndarray:
        return self.matrix[self.n :, self.n :]

    def cross_block(self) -> np.ndarray:
        """x-p coupling block C; C[i, j] multiplies x_i p_j."""
        return self.matrix[: self.n, self.n :]


@dataclass(frozen=True)
class GaugeCoefficients:
    a1: float
    a2: float
    a3: float
    a4: float


@dataclass(frozen=True)
class FEIntermediates:
    """Scalars of the fast-forward transformation chain at one instant."""

    eta: float
    mu: float
    M_mass: float
    Lambda_bar: float
    K_prime: float
    z2: float
    xi: float
    Lambda_prime: float
    C_prime: float


@dataclass(frozen=True)
class ProtocolSpec:
    """Selects a protocol kind plus its synthesis options."""

    kind: str = "ua"
    omega_floquet: float = 480.0
    eps_reg: float = 1e-6
    floquet_phase: float = 0.0
    #: gauge-coefficient mode feeding the Floquet fast-forward synthesis
    ff_coeff_mode: str = "weak"
    #: derivative-term sign set of the transformation chain (see _ff_chain_jets)
    chain_signs: str = "conjugate"

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ConfigError(f"unknown protocol kind {self.kind!r}; "
                              f"expected one of {PROTOCOL_KINDS}")
        if self.ff_coeff_mode not in ("weak", "exact"):
            raise ConfigError("ff_coeff_mode must be 'weak' or 'exact'")
        if self.chain_signs not in ("published", "conjugate"):
            raise ConfigError("chain_signs must be 'published' or 'conjugate'")

    @property
    def coeff_mode(self) -> str:
        if self.kind == "cd-exact":
            return "exact"
        if self.kind == "feff":
            return self.ff_coeff_mode
        return "weak"


# --------------------------------------------------------------------------
# gauge coefficients
# --------------------------------------------------------------------------

def _check_gauge_domain(lam: float, gamma_SB: float) -> None:
    if 1.0 + lam - gamma_SB ** 2 <= 0.0 or lam ** 2 + 4.0 * gamma_SB ** 2 == 0.0:
        raise SingularDenominator(
            f"gauge coefficients singular at lambda={lam}, gamma_SB={gamma_SB}")


def gauge_coefficients_exact(lam: float, gamma_SB: float) -> GaugeCoefficients:
    """Exact closed-form gauge coefficients of the two-oscillator drive."""
    _check_gauge_domain(lam, gamma_SB)
    g = gamma_SB
    den = 4.0 * (1.0 + lam - g ** 2) * (lam ** 2 + 4.0 * g ** 2)
    a1 = -(lam ** 2 + g ** 2 * (2.0 - lam)) / den
    a2 = +g * (4.0 * (1.0 + lam) + lam - 6.0 * g ** 2) / den
    a3 = -g * (4.0 * (1.0 + lam) - lam - 2.0 * g ** 2) / den
    a4 = -(g ** 2) * (2.0 + lam) / den
    return GaugeCoefficients(a1, a2, a3, a4)


def gauge_coefficients_weak(lam: float, gamma_SB: float) -> GaugeCoefficients:
    """Leading-order coefficients: dilation term plus the resonant swap term."""
    _check_gauge_domain(lam, gamma_SB)
    q = lam ** 2 + 4.0 * gamma_SB ** 2
    a2 = gamma_SB / q
    return GaugeCoefficients(-0.25 / (1.0 + lam), a2, -a2, 0.0)


def _gauge_jets(lam_jet: np.ndarray, gamma_SB: float, mode: str):
    """Gauge coefficients as Taylor jets of the lambda jet."""
    g = gamma_SB
    _check_gauge_domain(float(lam_jet[0]), g)
    one_plus = lam_jet.copy()
    one_plus[0] += 1.0
    q = jets.mul(lam_jet, lam_jet)
    q[0] += 4.0 * g * g
    if mode == "weak":
        a2 = jets.div(jets.const(g), q)
        a1 = jets.div(jets.const(-0.25), one_plus)
        return a1, a2, -a2, jets.const(0.0)
    dd = one_plus.copy()
    dd[0] -= g * g
    den = 4.0 * jets.mul(dd, q)
    num1 = -(jets.mul(lam_jet, lam_jet) + g * g * (jets.const(2.0) - lam_jet))
    a1 = jets.div(num1, den)
    a2 = jets.div(g * (4.0 * one_plus + lam_jet - jets.const(6.0 * g * g)), den)
    a3 = jets.div(-g * (4.0 * one_plus - lam_jet - jets.const(2.0 * g * g)), den)
    a4 = jets.div(-(g * g) * (lam_jet + jets.const(2.0)), den)
    return a1, a2, a3, a4


# --------------------------------------------------------------------------
# fast-forward synthesis chain
# --------------------------------------------------------------------------

def _ff_chain_jets(lam_jet: np.ndarray, gamma_SB: float, omega_B: float,
                   mode: str, signs: str = "published") -> dict:
    """All transformation-chain scalars as jets; requires lambda_dot != 0.

    Two sign sets are supported for the first-derivative terms of the chain
    (the chain is quadratic in the generators, so only those terms differ):

    * ``published`` follows the printed intermediate formulas (with the
      dimensionally forced reading d/dt(lambda_dot a1)); the effective mass
      stays bounded at all ramp speeds because the d/dt(eta) and d/dt(mu)
      contributions cancel at leading order.
    * ``conjugate`` is the variant that satisfies the operator-conjugation
      identity exactly (verified against a direct numerical transformation
      of the generators), making the synthesized drive equal to the
      counter-diabatic one up to the boundary regularization.  Its effective
      mass crosses zero during strong ramp-down deceleration, which limits
      it to 4 |lambda_ddot| < omega_B^2 (lambda^2 + 4 gamma_SB^2).
    """
    a1, a2, a3, a4 = _gauge_jets(lam_jet, gamma_SB, mode)
    ld = jets.d_dt(lam_jet)
    if ld[0] == 0.0:
        raise SingularEta("fast-forward intermediates undefined at lambda_dot = 0")
    b1, b2, b3, b4 = (jets.mul(ld, a) for a in (a1, a2, a3, a4))
    ws2 = omega_B ** 2 * lam_jet
    ws2[0] += omega_B ** 2
    ld2 = jets.mul(ld, ld)
    num = jets.d_dt(b2) + jets.mul(ld2, jets.mul(a1, a3) + jets.mul(a2, a4))
    eta = jets.div(num, jets.mul(ld, a2 - a3))
    mu = jets.mul(ld, a2 - a3) / (gamma_SB * omega_B ** 2)
    sg = 1.0 if signs == "conjugate" else -1.0
    lam_bar = (ws2 - jets.mul(b1, b1) - jets.mul(b2, b2) + jets.mul(eta, eta)
               - sg * jets.d_dt(eta) - jets.d_dt(b1))
    minv = (jets.const(1.0) + 2.0 * jets.mul(eta, mu)
            + jets.mul(lam_bar, jets.mul(mu, mu)) + sg * jets.d_dt(mu))
    z2 = jets.mul(b2, b2 - 2.0 * b3) - jets.mul(b4, b4) - jets.d_dt(b4)
    if minv[0] <= 0.0:
        raise SingularEta(f"effective mass diverged (1/M = {minv[0]})")
    ln_minv = jets.log(minv)
    xi = -sg * (eta + jets.mul(mu, lam_bar)) - 0.5 * jets.d_dt(ln_minv)
    lam_p = jets.mul(lam_bar, minv) - jets.mul(xi, xi) - jets.d_dt(xi)
    c_p = gamma_SB * omega_B ** 2 * jets.sqrt(minv)
    return dict(eta=eta, mu=mu, minv=minv, lam_bar=lam_bar, z2=z2,
                xi=xi, lam_p=lam_p, c_p=c_p)


def _clamp_z2(z2: float, omega_B: float) -> float:
    tol_z = 1e-12 * omega_B ** 2
    if z2 < -tol_z:
        raise NegativeZSquared(f"z^2 = {z2} < -{tol_z}")
    return max(z2, 0.0)


def feff_intermediates(params: ChainParams, schedule: RampSchedule, t: float,
                       coeff_mode: str = "weak", eps_reg: float = 1e-6,
                       chain_signs: str = "conjugate") -> FEIntermediates:
    """Transformation-chain scalars at time t.

    Raises ``SingularEta`` inside the regularized boundary layer where
    |lambda_dot| < eps_reg * |peak speed|.
    """
    lj = schedule.jet(t)
    if abs(jets.derivative(lj, 1)) < eps_reg * abs(schedule.speed):
        raise SingularEta(
            f"|lambda_dot| below eps_reg*speed at t={t}; protocol uses H0 here")
    ch = _ff_chain_jets(lj, params.gamma_SB, params.omega_B, coeff_mode,
                        chain_signs)
    z2 = _clamp_z2(float(ch["z2"][0]), params.omega_B)
    return FEIntermediates(
        eta=float(ch["eta"][0]),
        mu=float(ch["mu"][0]),
        M_mass=1.0 / float(ch["minv"][0]),
        Lambda_bar=float(ch["lam_bar"][0]),
        K_prime=params.omega_B ** 2 + z2,
        z2=z2,
        xi=float(ch["xi"][0]),
        Lambda_prime=float(ch["lam_p"][0]),
        C_prime=float(ch["c_p"][0]),
    )


def feff_couplings(inter: FEIntermediates, t: float, omega: float,
                   omega_B: float, phase: float = 0.0) -> tuple[float, float]:
    """Physical couplings (omega_S^2, gamma_SB) of the Floquet-engineered drive."""
    w2 = inter.Lambda_prime - inter.z2
    amp = math.sqrt(2.0 * inter.z2)
    c = inter.C_prime - amp * omega * math.cos(omega * t + phase)
    gamma_eff = c / omega_B ** 2
    w_scale = max(math.sqrt(abs(w2)), omega_B)
    if omega < 20.0 * w_scale:
        warnings.warn(f"Floquet frequency {omega} < 20x largest slow scale {w_scale}",
                      OmegaTooSmall, stacklevel=2)
    return w2, gamma_eff


def rwff_couplings(lam: float, lam_dot: float, lam_ddot: float,
                   omega_B: float, gamma_SB: float) -> tuple[float, float]:
    """Rotating-wave fast-forward couplings (omega_S^2, gamma_SB).

    The system frequency picks up 2 omega_B d/dt arctan(theta-argument),
    expanded in closed form, so the caller provides lambda, lambda_dot and
    lambda_ddot.  The rotation angle satisfies
    tan(theta) = 2 lambda_dot / (omega_B (lambda^2 + 4 gamma_SB^2)): the
    factor 2 (the ratio of the swap-current coefficient to the hopping
    coefficient omega_B gamma_SB / 2) is required for the rotated coupling
    to be real, and matches the argument inside the modulated coupling.
    """
    q = lam ** 2 + 4.0 * gamma_SB ** 2
    if q == 0.0:
        raise SingularDenominator("lambda^2 + 4 gamma_SB^2 vanished")
    w2 = omega_B ** 2 * (1.0 + lam)
    w2 += (4.0 * omega_B ** 2 * (lam_ddot * q - 2.0 * lam * lam_dot ** 2)
           / (omega_B ** 2 * q ** 2 + 4.0 * lam_dot ** 2))
    gamma_eff = gamma_SB * math.sqrt(1.0 + (2.0 * lam_dot / (omega_B * q)) ** 2)
    return w2, gamma_eff


# --------------------------------------------------------------------------
# chain assembly
# --------------------------------------------------------------------------

def assemble_chain_form(params: ChainParams, omega_S2: float, sb_coupling: float,
                        gauge: tuple[float, float, float, float] | None = None
                        ) -> QuadraticForm:
    """Dense symmetric form for the S + chain Hamiltonian.

    ``sb_coupling`` is the full coefficient multiplying -x_B X (that is,
    gamma_eff * omega_B^2); ``gauge`` holds the cross-block couplings
    (XP, X p_B, x_B P, x_B p_B) of a counter-diabatic drive.
    """
    n = params.n_modes
    b = params.attach_site
    w2b = params.omega_B ** 2
    H = np.zeros((2 * n, 2 * n))
    K = H[:n, :n]
    K[0, 0] = omega_S2
    for j in range(1, n):
        K[j, j] = w2b
    for j in range(1, n - 1):
        K[j, j + 1] = K[j + 1, j] = -params.gamma_BB * w2b
    K[0, b] = K[b, 0] = -sb_coupling
    for j in range(n, 2 * n):
        H[j, j] = 1.0
    if gauge is not None:
        g1, g2, g3, g4 = gauge
        C = H[:n, n:]
        C[0, 0] = g1
        C[0, b] = g2
        C[b, 0] = g3
        C[b, b] = g4
        H[n:, :n] = C.T
    return QuadraticForm(H, n)


def chain_coefficients(spec: ProtocolSpec, params: ChainParams,
                       schedule: RampSchedule, t: float
                       ) -> tuple[float, float, tuple[float, float, float, float] | None]:
    """Instantaneous (omega_S^2, S-B coupling, gauge terms) for any protocol."""
    kind = spec.kind
    lam = schedule(t)
    w2b = params.omega_B ** 2
    if kind == "ua":
        return system_frequency(lam, params.omega_B), params.gamma_SB * w2b, None
    if kind in ("cd-exact", "cd-weak"):
        ld = schedule.derivative(t, 1)
        coeff = (gauge_coefficients_exact if kind == "cd-exact"
                 else gauge_coefficients_weak)(lam, params.gamma_SB)
        gauge = (ld * coeff.a1, ld * coeff.a2, ld * coeff.a3, ld * coeff.a4)
        return system_frequency(lam, params.omega_B), params.gamma_SB * w2b, gauge
    if kind == "rwff":
        w2, gamma_eff = rwff_couplings(lam, schedule.derivative(t, 1),
                                       schedule.derivative(t, 2),
                                       params.omega_B, params.gamma_SB)
        return w2, gamma_eff * w2b, None
    # feff
    lj = schedule.jet(t)
    if abs(jets.derivative(lj, 1)) < spec.eps_reg * abs(schedule.speed):
        return system_frequency(lam, params.omega_B), params.gamma_SB * w2b, None
    ch = _ff_chain_jets(lj, params.gamma_SB, params.omega_B, spec.coeff_mode,
                        spec.chain_signs)
    z2 = _clamp_z2(float(ch["z2"][0]), params.omega_B)
    w2 = float(ch["lam_p"][0]) - z2
    c = (float(ch["c_p"][0]) - math.sqrt(2.0 * z2) * spec.omega_floquet
         * math.cos(spec.omega_floquet * t + spec.floquet_phase))
    return w2, c, None


def build_ua(params: ChainParams, schedule: RampSchedule, t: float) -> QuadraticForm:
    """Unassisted drive: ramped system frequency, constant S-B coupling."""
    w2, c, _ = chain_coefficients(ProtocolSpec("ua"), params, schedule, t)
    return assemble_chain_form(params, w2, c)


def build_cd(params: ChainParams, schedule: RampSchedule, t: float,
             coeff_mode: str = "exact") -> QuadraticForm:
    """Counter-diabatic drive H0 + lambda_dot * A on the S-B pair."""
    kind = "cd-exact" if coeff_mode == "exact" else "cd-weak"
    w2, c, gauge = chain_coefficients(ProtocolSpec(kind), params, schedule, t)
    return assemble_chain_form(params, w2, c, gauge)


def build_rwff(params: ChainParams, schedule: RampSchedule, t: float) -> QuadraticForm:
    """Rotating-wave fast-forward drive."""
    w2, c, _ = chain_coefficients(ProtocolSpec("rwff"), params, schedule, t)
    return assemble_chain_form(params, w2, c)


def build_feff(params: ChainParams, schedule: RampSchedule, t: float,
               omega: float, eps_reg: float = 1e-6,
               phase: float = 0.0) -> QuadraticForm:
    """Floquet-engineered fast-forward drive."""
    spec = ProtocolSpec("feff", omega_floquet=omega, eps_reg=eps_reg,
                        floquet_phase=phase)
    w2, c, _ = chain_coefficients(spec, params, schedule, t)
    return assemble_chain_form(params, w2, c)


def build_protocol(spec: ProtocolSpec, params: ChainParams,
                   schedule: RampSchedule, t: float) -> QuadraticForm:
    """Uniform entry point used by the generic propagator path."""
    w2, c, gauge = chain_coefficients(spec, params, schedule, t)
    return assemble_chain_form(params, w2, c, gauge)


def speed_scales(params: ChainParams) -> tuple[float, float]:
    """Emergent ramp-speed scales (number-conserving onset, pair-creation onset)."""
    return params.omega_B * params.gamma_SB ** 2, params.omega_B
