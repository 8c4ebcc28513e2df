"""Exception hierarchy.

The CLI maps these onto exit codes: validation -> 2, domain -> 3,
numerical -> 4.
"""

from __future__ import annotations


class ExergyModelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ExergyModelError, ValueError):
    """Malformed input: bad file, inconsistent grid, invalid parameter."""


class MapParseError(ValidationError):
    """A map CSV could not be parsed."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DomainError(ExergyModelError, ValueError):
    """A query lies outside the region where the model is defined."""


class ThermoRangeError(DomainError):
    """Temperature outside the validity range of a property curve."""

    def __init__(self, species: str, T, t_low: float, t_high: float):
        super().__init__(
            f"{species}: temperature {T} K outside validity range "
            f"[{t_low}, {t_high}] K"
        )
        self.species = species
        self.t_low = t_low
        self.t_high = t_high


class RichMixtureError(DomainError):
    """Air-fuel equivalence ratio below one; complete combustion impossible."""


class NumericalError(ExergyModelError, RuntimeError):
    """Integration or iteration failed."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations
