"""Exception types raised across the toolkit."""


class BalphaError(Exception):
    """Base class for all toolkit errors."""


class NonUnitaryInput(BalphaError, ValueError):
    """A matrix expected to be unitary failed the unitarity check."""


class GateParseError(BalphaError, ValueError):
    """Gate JSON could not be parsed into a matrix."""


class ChamberViolation(BalphaError, ValueError):
    """Cartan coordinates lie outside the required Weyl chamber."""


class InvalidAlpha(BalphaError, ValueError):
    """B^alpha exponent outside [0, 1]."""


class ConfigError(BalphaError, ValueError):
    """Trap or simulation configuration is invalid."""


class SingularDenominator(ConfigError):
    """Detunings hit a singular denominator of the closed-form coefficients."""


class ResidualTooLarge(BalphaError):
    """Spin-motion or cross-coupling residuals exceed the closure tolerance."""


class QuadratureFailure(BalphaError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class IntegratorFailure(BalphaError, RuntimeError):
    """ODE integration failed or lost unitarity beyond tolerance."""
