"""
This module contains the exceptions raised by the certification toolkit.

Library code raises them; only the command-line front-end turns them
into exit codes and JSON diagnostics.
"""

from typing import Any, Dict, Optional


class ReifenbergError(Exception):
    """Base class for every error raised by the toolkit."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}

    def diagnostic(self) -> Dict[str, Any]:
        """
        Machine-readable description of the error.

        Returns:
            A JSON-serializable dictionary with the error name, the message
            and the error-specific details under "diagnostic".
        """
        return {
            "error": type(self).__name__,
            "message": str(self),
            "diagnostic": self.details,
        }


class ContractViolationError(ReifenbergError, ValueError):
    """A precondition of an operation does not hold."""


class ConfigError(ReifenbergError, ValueError):
    """A run configuration is malformed or contains unknown keys."""


class DegenerateFitError(ReifenbergError):
    """
    A ball holds fewer than k+1 points, so no plane is determined.

    The least-squares fallback plane is attached as `plane`.
    """

    def __init__(self, message: str, plane: Any, points: int = 0):
        super().__init__(
            message,
            {"points": points, "k": plane.k, "fallback_plane": plane.to_json()},
        )
        self.plane = plane


class ResolutionError(ReifenbergError):
    """The sampling resolution is too coarse for a requested scale."""


class GluingError(ReifenbergError):
    """A cover plane is too far from the surface it should be glued onto."""

    def __init__(self, message: str, ball_index: int, distance: float):
        super().__init__(
            message, {"ball_index": ball_index, "grassmann_distance": distance}
        )
        self.ball_index = ball_index
        self.distance = distance
