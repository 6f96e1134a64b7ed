class DomainError(ValueError):
    """Input outside the domain of an operation."""


class CertificationError(RuntimeError):
    """An impedance profile failed its stability certificate.

    ``time`` and ``eigenvalue`` point at the first violating sample when known.
    """

    def __init__(self, message, time=None, eigenvalue=None):
        super().__init__(message)
        self.time = time
        self.eigenvalue = eigenvalue


class SimulationError(RuntimeError):
    """The closed-loop integration diverged (non-finite values or a state
    outside the model domain)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConfigError(ValueError):
    """Malformed or inconsistent scenario / profile configuration."""


class SingularityWarning(UserWarning):
    """A map was evaluated at a singular (straight-segment) configuration."""
