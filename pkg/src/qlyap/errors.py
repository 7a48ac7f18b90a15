"""Exception types shared across the package."""


class QlyapError(Exception):
    """Base class for all package-specific errors."""


class InvalidOperator(QlyapError):
    """Input is not a finite square complex matrix."""


class NotHermitian(QlyapError):
    """Matrix deviates from its adjoint beyond tolerance."""


class InvalidParam(QlyapError):
    """Model or estimator parameter outside its admissible range."""


class InvalidState(QlyapError):
    """State fails model-specific validation."""


class DegenerateState(QlyapError):
    """State is admissible for the algebra but degenerate for the map."""


class NumericalOverflow(QlyapError):
    """Propagation left the representable floating-point range.

    ``last_finite_n`` is the last step index with a finite result.
    """

    def __init__(self, message: str, last_finite_n: int | None = None):
        super().__init__(message)
        self.last_finite_n = last_finite_n


class NotLinear(QlyapError):
    """Map failed a random linearity probe."""


class DegreeExceeded(QlyapError):
    """Polynomial structure extends past the requested maximum degree."""


class InvalidCharacter(QlyapError):
    """Point index or point-set structure is inconsistent."""


class DomainEscape(QlyapError):
    """Classical orbit left the map's domain."""
