"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command-line interface.
"""


class LameError(Exception):
    exit_code = 3


class DomainError(LameError, ValueError):
    """Input outside the supported parameter range."""

    exit_code = 2


class SpecError(DomainError):
    """A SUSY transformation request violates an energy-placement rule."""


class NodeError(SpecError):
    """A seed solution (or seed Wronskian) has a zero on the real line."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class DegenerateEnergyError(DomainError):
    """The energy sits at a point where the construction breaks down
    (band edge, vanishing minor, repeated polynomial root)."""


class NumericError(LameError, ArithmeticError):
    """An iterative procedure failed to converge."""

    exit_code = 3

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class PoleError(NumericError):
    """Evaluation requested at (or within the exclusion radius of) a pole."""

    def __init__(self, message, location=None):
        super().__init__(message, last_iterate=location)
        self.location = location


class ConsistencyError(NumericError):
    """An internal cross-check that should hold identically failed."""


class VerificationError(LameError):
    exit_code = 4
