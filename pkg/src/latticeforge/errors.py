"""Exception hierarchy shared by every module."""


class LatticeForgeError(Exception):
    """Base class; `code` is the CLI exit status for this failure."""

    code = 1


class DomainError(LatticeForgeError, ValueError):
    code = 2


class DegenerateBasisError(DomainError):
    pass


class CapacityError(LatticeForgeError):
    code = 3


class NonConvergenceError(LatticeForgeError):
    code = 3


class DivergenceError(DomainError):
    pass


class BracketingError(NonConvergenceError):
    pass


class TieError(LatticeForgeError):
    """Two energies agree within their combined truncation bounds."""

    code = 3
