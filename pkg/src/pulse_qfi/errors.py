"""Exception hierarchy shared by all modules."""


class PulseQFIError(Exception):
    """Base class for every error raised by the package."""


class DomainError(PulseQFIError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class OutOfSupportError(DomainError):
    """A sampled pulse was queried outside its time grid."""


class ResolutionError(PulseQFIError):
    """A numerical integration failed to converge to the requested accuracy."""


class NormalizationError(PulseQFIError):
    """A state or pulse lost normalization beyond tolerance."""


class IllConditionedError(PulseQFIError):
    """A Gram or density matrix is too close to singular for the closed form."""


class RegimeError(PulseQFIError):
    """A short-pulse or weak-coupling approximation was used outside its regime."""


class TruncationError(PulseQFIError):
    """Fock-space truncation left too much population in the top level."""


class IntegrationError(PulseQFIError):
    """The master-equation integrator drifted or failed its step-halving check."""


class PositivityError(PulseQFIError):
    """A propagated density matrix acquired a significantly negative eigenvalue."""


class InvalidJSAError(DomainError):
    """Joint spectral amplitude coefficients do not define a normalizable Gaussian."""


class ConfigError(PulseQFIError):
    """A configuration value is missing or malformed.

    ``field`` names the offending key so the CLI can report it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
