"""Exception types raised by parafrac."""


class ParafracError(Exception):
    """Base class for all library errors."""


class CapacityError(ParafracError):
    """An enumeration would exceed the configured word budget."""


class DomainError(ParafracError, ValueError):
    """A map was evaluated outside [0, 1]."""


class ConvergenceError(ParafracError):
    """An iterative solver did not converge."""


class BracketError(ParafracError):
    """A pressure root could not be bracketed."""


class ConfigError(ParafracError, ValueError):
    """A system configuration could not be parsed or is inconsistent."""
