"""Fast-forward driving of a tunable oscillator coupled to an optical-phonon chain.

Deterministic simulator for unassisted, counter-diabatic, and fast-forward
(rotating-wave and Floquet-engineered) ramps of a system oscillator across a
phonon band, with exact symplectic propagation of the quadratic dynamics,
energy-infidelity diagnostics, swift-thermalization sweeps, and a two-bath
heat-engine cycle.
"""

from .errors import FFChainError, FFChainWarning
from .kernel import BACKEND
from .ramp import RampSchedule, build_schedule, lambda_derivatives, system_frequency
from .protocols import (
    ChainParams,
    FEIntermediates,
    GaugeCoefficients,
    ProtocolSpec,
    QuadraticForm,
    build_cd,
    build_feff,
    build_protocol,
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
from .states import (
    BogoliubovMap,
    FockSpec,
    GaussianState,
    ModeBasis,
    adiabatic_energy,
    bath_basis,
    bath_energy,
    chain_mode_basis,
    energy_infidelity,
    fock_energy_stats,
    fock_occupations,
    gaussian_energy_stats,
    heat,
    mean_occupations,
    number_variance,
    oscillator_state,
    product_state,
    thermal_state,
    two_mode_basis,
    two_mode_frequencies,
)
from .engine import (
    CycleResult,
    EngineConfig,
    eta_carnot,
    eta_fast,
    eta_gap,
    eta_slow,
    power,
    q_fast,
    q_slow,
    r_0,
    r_min,
    run_cycle,
)
from .dynamics import (
    IntegratorConfig,
    SymplecticPropagator,
    bogoliubov_map,
    evolve_gaussian,
    generator,
    propagate,
    static_propagator,
    symplectic_defect,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
