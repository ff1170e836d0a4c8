"""Exception hierarchy shared by the engine and the CLI."""


class UltradiffError(Exception):
    """Base class for all engine errors."""


class FieldError(UltradiffError, ValueError):
    """Invalid field configuration (non-prime modulus, mixed fields)."""


class PrecisionError(UltradiffError, ArithmeticError):
    """A result cannot be certified at the available precision."""


class ZeroDivisorToPrecision(PrecisionError, ZeroDivisionError):
    """Division by a series with no known nonzero coefficient."""


class UndecidableAtPrecision(PrecisionError):
    """A comparison or distinctness test cannot be decided."""


class InsufficientPrecision(PrecisionError):
    """The computation ran out of informative coefficients."""


class SamplerExhausted(PrecisionError):
    """Rejection sampling could not produce a certified point."""


class DomainError(UltradiffError, ValueError):
    """An argument lies outside the domain of a map."""


class ShapeError(UltradiffError, ValueError):
    """Multi-index or point shapes are inconsistent."""


class ArityError(UltradiffError, ValueError):
    """An expression refers to a variable beyond its declared arity."""


class ExprSyntaxError(UltradiffError, ValueError):
    """Malformed series literal or expression."""

    def __init__(self, position, expected, message=None):
        self.position = position
        self.expected = tuple(sorted(set(expected)))
        if message is None:
            message = f"expected one of {', '.join(self.expected)}"
        super().__init__(f"at position {position}: {message}")
