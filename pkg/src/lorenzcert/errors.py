"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class LorenzError(Exception):
    exit_code = 1


class ConfigError(LorenzError, ValueError):
    exit_code = 2


class PreconditionError(LorenzError, ValueError):
    exit_code = 3


class ResourceError(LorenzError, RuntimeError):
    exit_code = 4


class CertificateError(LorenzError, RuntimeError):
    exit_code = 5


class EscapeError(PreconditionError):
    """Trajectory enclosure left the field's declared validity region."""


class BoundViolationError(CertificateError):
    """Observed speeds contradict the declared bounds of a vector field."""


class SingularLineError(PreconditionError):
    """An iterate's enclosure touches the singular line x = 0."""
