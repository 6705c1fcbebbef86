"""
Exception family for evans-ep.

Every error carries a human message, a short machine tag and a details dict,
so the CLI can surface diagnostics verbatim in its JSON summary.
"""
from typing import Any, Dict, Optional


class EvansEPError(Exception):
    """Base class for all evans-ep errors"""

    # Numerical diagnostics map to exit status 2, usage/domain errors to 1
    is_diagnostic = True

    def __init__(self, message: str, tag: str = "error", details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.tag = tag
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "tag": self.tag,
            "message": self.message,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


class DomainError(EvansEPError, ValueError):
    """An input lies outside the domain of an operation"""
    is_diagnostic = False


class ExistenceError(EvansEPError):
    """No smooth solitary wave exists for the requested amplitude"""


class BracketError(EvansEPError):
    """A root could not be bracketed on the scanned interval"""


class IntegrationError(EvansEPError):
    """The ODE integrator failed (step underflow, blow-up)"""


class SplittingError(EvansEPError):
    """The far-field roots do not split as required"""


class NonSemisimpleError(EvansEPError):
    """A far-field root is not semi-simple (pi·v vanishes)"""


class QuadratureError(EvansEPError):
    """Adaptive quadrature did not converge"""


class RefinementError(EvansEPError):
    """Two resolutions of the same quantity disagree"""


def _jsonable(value: Any) -> Any:
    """Convert complex numbers and numpy scalars for JSON output"""
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    return value
