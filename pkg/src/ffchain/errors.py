"""Exception and warning types used across the package."""


class FFChainError(Exception):
    """Base class for all package errors."""


class ConfigError(FFChainError):
    """Invalid or inconsistent experiment configuration."""


# ramp construction / evaluation
class ZeroSpeed(FFChainError):
    """Ramp speed must be nonzero."""


class InconsistentDirection(FFChainError):
    """Sign of the ramp speed contradicts sign(lambda_f - lambda_i)."""


class RampWidthTooLarge(FFChainError):
    """Smooth ramp-up/down width exceeds 20% of the total detuning span."""


class OutOfRange(FFChainError):
    """Time outside the schedule's domain."""


class OrderTooHigh(FFChainError):
    """Derivative order above the supported maximum (6)."""


class UnstableFrequency(FFChainError):
    """1 + lambda <= 0: the oscillator potential is not confining."""


# protocol synthesis
class SingularDenominator(FFChainError):
    """Gauge-coefficient denominator vanished (1+lambda-gamma^2 or lambda^2+4gamma^2)."""


class NegativeZSquared(FFChainError):
    """Floquet amplitude z^2 fell below -tol_z; the FE protocol is undefined here."""


class SingularEta(FFChainError):
    """FF intermediates requested in the regularized boundary region."""


# dynamics
class AsymmetricForm(FFChainError):
    """Quadratic-form matrix is not symmetric."""


class StepSizeUnderflow(FFChainError):
    """Adaptive integrator step collapsed below the representable minimum."""


class SymplecticDefectExceeded(FFChainError):
    """||M^T J M - J|| exceeded the configured tolerance."""


class NonPSDInput(FFChainError):
    """Covariance matrix is not positive semidefinite."""


class BasisMismatch(FFChainError):
    """Mode basis dimensions do not match the propagator or state."""


# states / observables
class UnstableMode(FFChainError):
    """A squared normal-mode frequency is not positive."""


class NonPositiveTemperature(FFChainError):
    """Thermal states require T > 0."""


class DimensionMismatch(FFChainError):
    """State, basis, or form dimensions disagree."""


class NegativeVariance(FFChainError):
    """Energy variance input must be nonnegative."""


class InvalidMap(FFChainError):
    """Bogoliubov map violates U U^+ - V V^+ = 1."""


# Fock-space reference solver
class TruncationLeakage(FFChainError):
    """Population leaked into the top Fock shells beyond tolerance."""


class NormDrift(FFChainError):
    """State norm drifted beyond tolerance during unitary integration."""


# engine
class SwitchTooCloseToResonance(FFChainError):
    """Coupling switch requested at |lambda| < 3 max(gamma_SB, gamma_BB)."""


class BeyondBreakdown(FFChainError):
    """r >= r_0: the fast engine extracts no work here."""


# warnings
class FFChainWarning(UserWarning):
    """Base class for package warnings."""


class OmegaTooSmall(FFChainWarning):
    """Floquet frequency is not well separated from the other scales."""


class SpeedBoundViolated(FFChainWarning):
    """Ramp speed exceeds the bath-relaxation bound for repeated cycles."""


class StrongCoupling(FFChainWarning):
    """gamma_SB above the weak-coupling regime the formulas assume."""
