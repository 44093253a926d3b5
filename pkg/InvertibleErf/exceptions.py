class InvertibleErfError(Exception):
    """Base class for all errors raised by InvertibleErf."""


class DomainError(InvertibleErfError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class OracleError(InvertibleErfError, RuntimeError):
    """The reference series or continued fraction did not converge."""


class BracketingError(InvertibleErfError, ValueError):
    """A root-finding bracket does not enclose a sign change."""


class InversionError(InvertibleErfError, ArithmeticError):
    """The quadratic in u = x^2 has no unique admissible root."""
