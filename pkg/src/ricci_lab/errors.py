"""Exception hierarchy shared by every module of the lab."""


class RicciLabError(Exception):
    """Base class for all errors raised by ricci_lab."""


class InvalidProfile(RicciLabError):
    """A warped profile violates its structural invariants."""


class SingularData(RicciLabError):
    """The warp factor fell below the pinch floor, or no curvature scale exists."""


class OutOfRange(RicciLabError):
    """An argument lies outside the domain where the operation is defined."""


class ConfigError(RicciLabError):
    """Invalid parameters or configuration.

    ``path`` names the offending configuration field when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if path:
            prefix += f"{path}: "
        super().__init__(prefix + message)


class NotConverged(RicciLabError):
    """A numerical procedure did not reach its tolerance.

    ``result`` carries the best available answer so callers can still report it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class StepUnderflow(RicciLabError):
    """The admissible time step dropped below the configured minimum."""
