"""Exception hierarchy shared by every ctrlcap module."""


class CtrlCapError(Exception):
    """Base class for all library errors."""


class SpecError(CtrlCapError, ValueError):
    """A system description or argument violates a structural constraint."""


class DefinitenessError(CtrlCapError, ValueError):
    """A matrix required to be positive (semi)definite is not."""


class SolvabilityError(CtrlCapError, ArithmeticError):
    """A linear operator required to be invertible is (numerically) singular."""


class RegimeError(CtrlCapError, ValueError):
    """The spectrum of the drift matrix does not fit the requested regime."""


class ConvergenceError(CtrlCapError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The best iterate and its KKT residual are attached so callers can decide
    whether the partial answer is usable.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class SimulationError(CtrlCapError, ValueError):
    """Monte-Carlo configuration or estimation failure."""


class ConfigError(CtrlCapError, ValueError):
    """Parse error in a system configuration file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
