"""Exception hierarchy shared by every module."""


class DscError(Exception):
    """Base class for all errors raised by the package."""


class InputError(DscError, ValueError):
    """Invalid user input: malformed samples, panels, configs or files."""


class DomainError(InputError):
    """A probability argument outside (0, 1]."""


class ComputationError(DscError, RuntimeError):
    """A numerical routine could not produce a meaningful answer."""
